//! Full-batch training: gradient descent with momentum and Levenberg-Marquardt.
//!
//! Both trainers report the mean squared error after every epoch. A
//! non-finite parameter, activation or loss ends training with a stall event
//! in the history; the returned model is the last finite one.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{backward, forward, jacobian, ForwardCache, MlpModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdmConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
}

impl Default for GdmConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 500,
        }
    }
}

impl GdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParam(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParam(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParam("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub mu0: f64,
    pub mu_inc: f64,
    pub mu_dec: f64,
    pub mu_max: f64,
    pub epochs: usize,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            mu0: 1e-3,
            mu_inc: 10.0,
            mu_dec: 0.1,
            mu_max: 1e10,
            epochs: 500,
        }
    }
}

impl LmConfig {
    /// Damping increases allowed within one epoch.
    pub const MAX_RETRIES: usize = 20;
    /// Floor for the damping factor so repeated decreases cannot reach zero.
    pub const MU_MIN: f64 = 1e-20;
    /// Training stops once `|J^T e|` falls below this.
    pub const MIN_GRADIENT: f64 = 1e-12;

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0) {
            return Err(Error::InvalidParam(format!("mu0 must be > 0, got {}", self.mu0)));
        }
        if !(self.mu_inc > 1.0) {
            return Err(Error::InvalidParam(format!(
                "mu_inc must be > 1, got {}",
                self.mu_inc
            )));
        }
        if !(self.mu_dec > 0.0 && self.mu_dec < 1.0) {
            return Err(Error::InvalidParam(format!(
                "mu_dec must be in (0, 1), got {}",
                self.mu_dec
            )));
        }
        if !(self.mu_max > self.mu0) {
            return Err(Error::InvalidParam("mu_max must exceed mu0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParam("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EpochLimit,
    /// Damping exceeded `mu_max` without finding a decreasing step.
    MuLimit,
    SmallGradient,
    /// `MAX_RETRIES` damping increases in one epoch without improvement.
    RetryLimit,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub initial_loss: f64,
    /// MSE after each completed epoch.
    pub losses: Vec<f64>,
    pub epoch_times: Vec<f64>,
    pub stall_events: Vec<(usize, String)>,
    pub stop_reason: StopReason,
}

impl TrainHistory {
    fn new(initial_loss: f64) -> Self {
        Self {
            initial_loss,
            losses: Vec::new(),
            epoch_times: Vec::new(),
            stall_events: Vec::new(),
            stop_reason: StopReason::EpochLimit,
        }
    }

    fn stall(&mut self, epoch: usize, reason: String) {
        self.stall_events.push((epoch, reason));
        self.stop_reason = StopReason::Stalled;
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(self.initial_loss)
    }

    pub fn stalled(&self) -> Option<&(usize, String)> {
        self.stall_events.first()
    }

    /// Converts a stalled history into [`Error::Stall`].
    pub fn check(&self) -> Result<()> {
        match self.stalled() {
            Some((epoch, reason)) => Err(Error::Stall {
                epoch: *epoch,
                reason: reason.clone(),
            }),
            None => Ok(()),
        }
    }

    /// `epoch,loss,epoch_time_s`, epochs numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss,epoch_time_s\n");
        for (i, (loss, t)) in self.losses.iter().zip(&self.epoch_times).enumerate() {
            let _ = writeln!(s, "{},{},{}", i + 1, loss, t);
        }
        s
    }
}

pub fn mse(y: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    assert_eq!(y.shape(), t.shape(), "mse shape mismatch");
    if y.is_empty() {
        return 0.0;
    }
    (y - t).norm_squared() / y.len() as f64
}

fn mean_square(e: &DVector<f64>) -> f64 {
    if e.is_empty() {
        0.0
    } else {
        e.norm_squared() / e.len() as f64
    }
}

/// Percentage of scores on the right side of 0.5.
pub fn classification_accuracy(y: &[f64], labels: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Domain("accuracy of an empty set".into()));
    }
    if y.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores vs {} labels",
            y.len(),
            labels.len()
        )));
    }
    let mut correct = 0usize;
    for (&score, &label) in y.iter().zip(labels) {
        if label != 0.0 && label != 1.0 {
            return Err(Error::Domain(format!("label {label} is not 0 or 1")));
        }
        let predicted = if score >= 0.5 { 1.0 } else { 0.0 };
        if predicted == label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / y.len() as f64)
}

/// Describes the first non-finite value found in the model or a forward cache.
pub fn detect_stall(model: &MlpModel, cache: Option<&ForwardCache>) -> Option<String> {
    if let Some(name) = model.first_non_finite() {
        return Some(format!("non-finite value in parameter {name}"));
    }
    let cache = cache?;
    let tensors = [
        ("hidden pre-activation", &cache.pre),
        ("hidden activation", &cache.hidden),
        ("hidden gradient", &cache.hidden_grad),
        ("output", &cache.outputs),
    ];
    for (name, m) in tensors {
        if let Some(v) = m.iter().find(|v| !v.is_finite()) {
            return Some(format!("non-finite {name} ({v})"));
        }
    }
    None
}

fn check_shapes(model: &MlpModel, x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<()> {
    model.validate()?;
    if x.ncols() != model.n_in() || t.ncols() != model.n_out() || x.nrows() != t.nrows() {
        return Err(Error::Shape(format!(
            "data {}x{} -> {}x{} does not fit a {}-{}-{} model",
            x.nrows(),
            x.ncols(),
            t.nrows(),
            t.ncols(),
            model.n_in(),
            model.n_hidden(),
            model.n_out()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Shape("empty training set".into()));
    }
    Ok(())
}

/// Forward pass that folds errors and non-finite values into a stall description.
fn checked_forward(
    model: &MlpModel,
    x: &DMatrix<f64>,
    t: &DMatrix<f64>,
) -> std::result::Result<(f64, ForwardCache), String> {
    let (y, cache) = forward(model, x).map_err(|e| e.to_string())?;
    if let Some(reason) = detect_stall(model, Some(&cache)) {
        return Err(reason);
    }
    let loss = mse(&y, t);
    if !loss.is_finite() {
        return Err(format!("non-finite loss {loss}"));
    }
    Ok((loss, cache))
}

/// Gradient descent with momentum: `v <- momentum * v - lr * grad`, `theta <- theta + v`.
pub fn train_gdm(
    model: &MlpModel,
    x: &DMatrix<f64>,
    t: &DMatrix<f64>,
    cfg: &GdmConfig,
) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    check_shapes(model, x, t)?;

    let mut current = model.clone();
    let (loss0, mut cache) = match checked_forward(&current, x, t) {
        Ok(v) => v,
        Err(reason) => {
            let mut h = TrainHistory::new(f64::NAN);
            h.stall(0, reason);
            return Ok((current, h));
        }
    };
    let mut history = TrainHistory::new(loss0);
    let mut velocity = DVector::zeros(current.n_params());

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let grad = backward(&current, x, t, &cache)?.flatten();
        velocity = &velocity * cfg.momentum - &grad * cfg.learning_rate;
        let next = current.with_params(&(current.params() + &velocity));
        if let Some(reason) = detect_stall(&next, None) {
            history.stall(epoch, reason);
            break;
        }
        match checked_forward(&next, x, t) {
            Ok((loss, c)) => {
                current = next;
                cache = c;
                history.losses.push(loss);
                history.epoch_times.push(start.elapsed().as_secs_f64());
            }
            Err(reason) => {
                history.stall(epoch, reason);
                break;
            }
        }
    }
    Ok((current, history))
}

/// Solves `(J^T J + mu I) step = -J^T e` by Cholesky factorization.
pub fn lm_step(jtj: &DMatrix<f64>, jte: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let n = jtj.nrows();
    let damped = jtj + DMatrix::identity(n, n) * mu;
    let step = damped.cholesky()?.solve(&(-jte));
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// Residuals, and the Jacobian when requested, at a parameter vector.
pub type ResidualEval<'a> =
    dyn FnMut(&DVector<f64>, bool) -> std::result::Result<(DVector<f64>, Option<DMatrix<f64>>), String> + 'a;

/// Levenberg-Marquardt over an arbitrary residual function.
///
/// Each epoch tries damped Gauss-Newton steps, multiplying `mu` by
/// `mu_inc` after every rejected step (at most [`LmConfig::MAX_RETRIES`]
/// times) and by `mu_dec` after an accepted one. A step is accepted only if
/// it strictly lowers the mean squared residual.
pub fn levenberg_marquardt(
    theta0: &DVector<f64>,
    cfg: &LmConfig,
    eval: &mut ResidualEval<'_>,
) -> Result<(DVector<f64>, TrainHistory, Vec<f64>)> {
    cfg.validate()?;
    let mut theta = theta0.clone();
    let (mut e, jac) = match eval(&theta, true) {
        Ok(v) => v,
        Err(reason) => {
            let mut h = TrainHistory::new(f64::NAN);
            h.stall(0, reason);
            return Ok((theta, h, Vec::new()));
        }
    };
    let mut jac = jac.expect("jacobian requested");
    let mut loss = mean_square(&e);
    let mut history = TrainHistory::new(loss);
    let mut mu = cfg.mu0;
    let mut mus = Vec::new();

    'epochs: for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let jte = jac.transpose() * &e;
        if jte.norm() < LmConfig::MIN_GRADIENT {
            history.stop_reason = StopReason::SmallGradient;
            break;
        }
        let jtj = jac.transpose() * &jac;

        let mut singular_only = true;
        let mut retries = 0;
        loop {
            if let Some(step) = lm_step(&jtj, &jte, mu) {
                singular_only = false;
                let trial = &theta + &step;
                // a trial point that blows up is just a rejected step
                if let Ok((e_trial, _)) = eval(&trial, false) {
                    let trial_loss = mean_square(&e_trial);
                    if trial_loss.is_finite() && trial_loss < loss {
                        theta = trial;
                        loss = trial_loss;
                        mu = (mu * cfg.mu_dec).max(LmConfig::MU_MIN);
                        break;
                    }
                }
            }
            if retries == LmConfig::MAX_RETRIES {
                if singular_only {
                    return Err(Error::Singular { retries });
                }
                history.stop_reason = StopReason::RetryLimit;
                break 'epochs;
            }
            retries += 1;
            mu *= cfg.mu_inc;
            if mu > cfg.mu_max {
                if singular_only {
                    return Err(Error::Singular { retries });
                }
                history.stop_reason = StopReason::MuLimit;
                break 'epochs;
            }
        }

        match eval(&theta, true) {
            Ok((e_new, j_new)) => {
                e = e_new;
                jac = j_new.expect("jacobian requested");
            }
            Err(reason) => {
                history.stall(epoch, reason);
                break;
            }
        }
        mus.push(mu);
        history.losses.push(loss);
        history.epoch_times.push(start.elapsed().as_secs_f64());
    }
    Ok((theta, history, mus))
}

/// Levenberg-Marquardt on the network residuals `y - t`.
///
/// The normal matrix is dense, `n_params x n_params`; networks up to a few
/// thousand parameters are practical.
pub fn train_lm(
    model: &MlpModel,
    x: &DMatrix<f64>,
    t: &DMatrix<f64>,
    cfg: &LmConfig,
) -> Result<(MlpModel, TrainHistory)> {
    check_shapes(model, x, t)?;
    let template = model.clone();
    let mut eval = |theta: &DVector<f64>, want_jac: bool| {
        let candidate = template.with_params(theta);
        if let Some(reason) = detect_stall(&candidate, None) {
            return Err(reason);
        }
        let (_, cache) = checked_forward(&candidate, x, t)?;
        if want_jac {
            let (j, e) = jacobian(&candidate, x, t, &cache).map_err(|e| e.to_string())?;
            Ok((e, Some(j)))
        } else {
            let e = DVector::from_iterator(
                t.len(),
                (0..t.nrows()).flat_map(|s| {
                    let cache = &cache;
                    (0..t.ncols()).map(move |o| cache.outputs[(s, o)] - t[(s, o)])
                }),
            );
            Ok((e, None))
        }
    };
    let (theta, history, _) = levenberg_marquardt(&model.params(), cfg, &mut eval)?;
    Ok((model.with_params(&theta), history))
}
