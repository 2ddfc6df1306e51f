//! One-hidden-layer perceptron with a linear output layer.
//!
//! Samples are rows: inputs are `samples x n_in`, outputs `samples x n_out`.
//! The training loss is `L = 1/(2N) * sum (y - t)^2` over all `N` samples and
//! outputs, so `J^T e / N` equals the gradient returned by [`backward`].
//!
//! Flat parameter order, used by the Jacobian and by Levenberg-Marquardt:
//! `W1` row-major, `b1`, `W2` row-major, `b2`.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::{
    activate, ActivationKind, EluParams, EulerMode, ModHtanParams, OffsetMode,
};
use crate::error::{Error, Result};
use crate::exp_approx::RnfParams;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub hidden_kind: ActivationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `samples x n_hidden`
    pub pre: DMatrix<f64>,
    pub hidden: DMatrix<f64>,
    pub hidden_grad: DMatrix<f64>,
    /// `samples x n_out`
    pub outputs: DMatrix<f64>,
    /// MODHTAN `offset_1` per hidden unit, empty for other kinds.
    pub offsets: Vec<f64>,
}

/// Gradients laid out like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl Gradients {
    pub fn flatten(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        push_row_major(&mut v, &self.w1);
        v.extend(self.b1.iter());
        push_row_major(&mut v, &self.w2);
        v.extend(self.b2.iter());
        DVector::from_vec(v)
    }
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        out.extend(m.row(r).iter());
    }
}

impl MlpModel {
    pub fn zeros(n_in: usize, n_hidden: usize, n_out: usize, hidden_kind: ActivationKind) -> Self {
        Self {
            w1: DMatrix::zeros(n_hidden, n_in),
            b1: DVector::zeros(n_hidden),
            w2: DMatrix::zeros(n_out, n_hidden),
            b2: DVector::zeros(n_out),
            hidden_kind,
        }
    }

    pub fn n_in(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n_out(&self) -> usize {
        self.w2.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, i, o) = (self.n_hidden(), self.n_in(), self.n_out());
        if h == 0 || i == 0 || o == 0 {
            return Err(Error::Shape("all layer sizes must be >= 1".into()));
        }
        if self.b1.len() != h || self.w2.ncols() != h || self.b2.len() != o {
            return Err(Error::Shape(format!(
                "inconsistent layer shapes: w1 {h}x{i}, b1 {}, w2 {}x{}, b2 {}",
                self.b1.len(),
                self.w2.nrows(),
                self.w2.ncols(),
                self.b2.len()
            )));
        }
        self.hidden_kind.validate()
    }

    pub fn params(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        push_row_major(&mut v, &self.w1);
        v.extend(self.b1.iter());
        push_row_major(&mut v, &self.w2);
        v.extend(self.b2.iter());
        DVector::from_vec(v)
    }

    pub fn set_params(&mut self, theta: &DVector<f64>) {
        assert_eq!(theta.len(), self.n_params(), "parameter vector length");
        let mut it = theta.iter().copied();
        for r in 0..self.w1.nrows() {
            for c in 0..self.w1.ncols() {
                self.w1[(r, c)] = it.next().unwrap();
            }
        }
        for b in self.b1.iter_mut() {
            *b = it.next().unwrap();
        }
        for r in 0..self.w2.nrows() {
            for c in 0..self.w2.ncols() {
                self.w2[(r, c)] = it.next().unwrap();
            }
        }
        for b in self.b2.iter_mut() {
            *b = it.next().unwrap();
        }
    }

    /// Returns a copy with parameters replaced by `theta`.
    pub fn with_params(&self, theta: &DVector<f64>) -> Self {
        let mut m = self.clone();
        m.set_params(theta);
        m
    }

    /// Name of the first tensor holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        if self.w1.iter().any(|v| !v.is_finite()) {
            Some("w1")
        } else if self.b1.iter().any(|v| !v.is_finite()) {
            Some("b1")
        } else if self.w2.iter().any(|v| !v.is_finite()) {
            Some("w2")
        } else if self.b2.iter().any(|v| !v.is_finite()) {
            Some("b2")
        } else {
            None
        }
    }
}

/// Nguyen-Widrow initialization.
///
/// Hidden rows are drawn from `U[-1, 1]` and rescaled to norm
/// `beta = 0.7 * n_hidden^(1/n_in)`, hidden biases from `U[-beta, beta]`,
/// and the output layer from `U[-0.5, 0.5]`.
pub fn nguyen_widrow_init(
    n_in: usize,
    n_hidden: usize,
    n_out: usize,
    hidden_kind: ActivationKind,
    seed: u64,
) -> MlpModel {
    assert!(n_in >= 1 && n_hidden >= 1 && n_out >= 1, "layer sizes must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = 0.7 * (n_hidden as f64).powf(1.0 / n_in as f64);

    let mut model = MlpModel::zeros(n_in, n_hidden, n_out, hidden_kind);
    for r in 0..n_hidden {
        for c in 0..n_in {
            model.w1[(r, c)] = rng.gen_range(-1.0..=1.0);
        }
        let norm = model.w1.row(r).norm();
        if norm > 0.0 {
            let mut row = model.w1.row_mut(r);
            row *= beta / norm;
        } else {
            model.w1[(r, 0)] = beta;
        }
    }
    for b in model.b1.iter_mut() {
        *b = rng.gen_range(-beta..=beta);
    }
    for v in model.w2.iter_mut() {
        *v = rng.gen_range(-0.5..=0.5);
    }
    for b in model.b2.iter_mut() {
        *b = rng.gen_range(-0.5..=0.5);
    }
    model
}

pub fn forward(model: &MlpModel, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, ForwardCache)> {
    if x.ncols() != model.n_in() {
        return Err(Error::Shape(format!(
            "input has {} columns, model expects {}",
            x.ncols(),
            model.n_in()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite input sample".into()));
    }
    let n = x.nrows();
    let mut pre = x * model.w1.transpose();
    for mut row in pre.row_iter_mut() {
        row += model.b1.transpose();
    }

    let mut hidden = DMatrix::zeros(n, model.n_hidden());
    let mut hidden_grad = DMatrix::zeros(n, model.n_hidden());
    let mut offsets = Vec::new();
    for j in 0..model.n_hidden() {
        let column: Vec<f64> = pre.column(j).iter().copied().collect();
        let act = activate(&model.hidden_kind, &column).map_err(|e| {
            Error::Domain(format!("hidden unit {j} pre-activation: {e}"))
        })?;
        hidden.set_column(j, &DVector::from_vec(act.values));
        hidden_grad.set_column(j, &DVector::from_vec(act.gradients));
        if let Some(o) = act.offset {
            offsets.push(o);
        }
    }

    let mut outputs = &hidden * model.w2.transpose();
    for mut row in outputs.row_iter_mut() {
        row += model.b2.transpose();
    }
    let cache = ForwardCache {
        pre,
        hidden,
        hidden_grad,
        outputs: outputs.clone(),
        offsets,
    };
    Ok((outputs, cache))
}

/// Gradient of `1/(2N) * sum (y - t)^2`.
pub fn backward(
    model: &MlpModel,
    x: &DMatrix<f64>,
    t: &DMatrix<f64>,
    cache: &ForwardCache,
) -> Result<Gradients> {
    check_targets(model, x, t)?;
    let n = x.nrows() as f64;
    let err = &cache.outputs - t;

    let w2 = err.transpose() * &cache.hidden / n;
    let b2 = DVector::from_iterator(model.n_out(), err.column_iter().map(|c| c.sum() / n));

    let delta = (&err * &model.w2).component_mul(&cache.hidden_grad);
    let w1 = delta.transpose() * x / n;
    let b1 = DVector::from_iterator(model.n_hidden(), delta.column_iter().map(|c| c.sum() / n));
    Ok(Gradients { w1, b1, w2, b2 })
}

/// Residual Jacobian. Row `s * n_out + o` is the derivative of
/// `e = y[s, o] - t[s, o]` with respect to the flat parameter vector.
pub fn jacobian(
    model: &MlpModel,
    x: &DMatrix<f64>,
    t: &DMatrix<f64>,
    cache: &ForwardCache,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_targets(model, x, t)?;
    let (n, n_in, n_hid, n_out) = (x.nrows(), model.n_in(), model.n_hidden(), model.n_out());
    let b1_at = n_hid * n_in;
    let w2_at = b1_at + n_hid;
    let b2_at = w2_at + n_out * n_hid;

    let mut jac = DMatrix::zeros(n * n_out, model.n_params());
    let mut e = DVector::zeros(n * n_out);
    for s in 0..n {
        for o in 0..n_out {
            let row = s * n_out + o;
            e[row] = cache.outputs[(s, o)] - t[(s, o)];
            for j in 0..n_hid {
                let back = model.w2[(o, j)] * cache.hidden_grad[(s, j)];
                for i in 0..n_in {
                    jac[(row, j * n_in + i)] = back * x[(s, i)];
                }
                jac[(row, b1_at + j)] = back;
                jac[(row, w2_at + o * n_hid + j)] = cache.hidden[(s, j)];
            }
            jac[(row, b2_at + o)] = 1.0;
        }
    }
    Ok((jac, e))
}

fn check_targets(model: &MlpModel, x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<()> {
    if t.nrows() != x.nrows() || t.ncols() != model.n_out() {
        return Err(Error::Shape(format!(
            "targets are {}x{}, expected {}x{}",
            t.nrows(),
            t.ncols(),
            x.nrows(),
            model.n_out()
        )));
    }
    Ok(())
}

fn fmt_floats<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

impl MlpModel {
    /// Plain-text `key = value` form. Floats use shortest round-trip
    /// exponent notation, so [`MlpModel::from_text`] restores the model bit for bit.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_in = {}", self.n_in());
        let _ = writeln!(s, "n_hidden = {}", self.n_hidden());
        let _ = writeln!(s, "n_out = {}", self.n_out());
        let _ = writeln!(s, "activation = {}", self.hidden_kind.name());
        match &self.hidden_kind {
            ActivationKind::Elu(p) => {
                let _ = writeln!(s, "elu.alpha = {:e}", p.alpha());
            }
            ActivationKind::ModHtan(p) => {
                let _ = writeln!(s, "modhtan.k_o = {:e}", p.k_o);
                let _ = writeln!(s, "modhtan.x_cutoff = {:e}", p.x_cutoff);
                match p.offset_mode {
                    OffsetMode::Fixed(o) => {
                        let _ = writeln!(s, "modhtan.offset_mode = fixed");
                        let _ = writeln!(s, "modhtan.offset = {o:e}");
                    }
                    OffsetMode::Adaptive { delta, kappa } => {
                        let _ = writeln!(s, "modhtan.offset_mode = adaptive");
                        let _ = writeln!(s, "modhtan.delta = {delta:e}");
                        let _ = writeln!(s, "modhtan.kappa = {kappa:e}");
                    }
                }
                let _ = writeln!(s, "modhtan.x_norm_clamp = {:e}", p.x_norm_clamp);
                let _ = writeln!(s, "modhtan.center_normalize = {}", p.center_normalize);
                let mode = match p.euler_mode {
                    EulerMode::Constant => "constant",
                    EulerMode::Direct => "direct",
                };
                let _ = writeln!(s, "modhtan.euler_mode = {mode}");
                let _ = writeln!(s, "modhtan.rnf_a = {}", p.rnf.a());
                let _ = writeln!(s, "modhtan.rnf_n = {:e}", p.rnf.n());
                let _ = writeln!(s, "modhtan.rnf_m = {:e}", p.rnf.m());
            }
            _ => {}
        }
        let mut w1 = Vec::new();
        push_row_major(&mut w1, &self.w1);
        let mut w2 = Vec::new();
        push_row_major(&mut w2, &self.w2);
        let _ = writeln!(s, "w1 = {}", fmt_floats(w1.iter()));
        let _ = writeln!(s, "b1 = {}", fmt_floats(self.b1.iter()));
        let _ = writeln!(s, "w2 = {}", fmt_floats(w2.iter()));
        let _ = writeln!(s, "b2 = {}", fmt_floats(self.b2.iter()));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv: HashMap<&str, (usize, &str)> = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: "expected 'key = value'".into(),
            })?;
            kv.insert(k.trim(), (idx + 1, v.trim()));
        }
        let get = |key: &str| -> Result<(usize, &str)> {
            kv.get(key).copied().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing key '{key}'"),
            })
        };
        let num = |key: &str| -> Result<f64> {
            let (line, v) = get(key)?;
            v.parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("{key}: {e}"),
            })
        };
        let int = |key: &str| -> Result<u64> {
            let (line, v) = get(key)?;
            v.parse::<u64>().map_err(|e| Error::Parse {
                line,
                msg: format!("{key}: {e}"),
            })
        };
        let floats = |key: &str, len: usize| -> Result<Vec<f64>> {
            let (line, v) = get(key)?;
            let vals = v
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line,
                    msg: format!("{key}: {e}"),
                })?;
            if vals.len() != len {
                return Err(Error::Parse {
                    line,
                    msg: format!("{key}: expected {len} values, found {}", vals.len()),
                });
            }
            Ok(vals)
        };

        let n_in = int("n_in")? as usize;
        let n_hidden = int("n_hidden")? as usize;
        let n_out = int("n_out")? as usize;
        let (line, name) = get("activation")?;
        let hidden_kind = match name {
            "softstep" => ActivationKind::SoftStep,
            "htan" => ActivationKind::Htan,
            "elu" => ActivationKind::Elu(EluParams::new(num("elu.alpha")?)?),
            "modhtan" => {
                let offset_mode = match get("modhtan.offset_mode")? {
                    (_, "fixed") => OffsetMode::Fixed(num("modhtan.offset")?),
                    (_, "adaptive") => OffsetMode::Adaptive {
                        delta: num("modhtan.delta")?,
                        kappa: num("modhtan.kappa")?,
                    },
                    (line, other) => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown offset mode '{other}'"),
                        })
                    }
                };
                let euler_mode = match get("modhtan.euler_mode")? {
                    (_, "constant") => EulerMode::Constant,
                    (_, "direct") => EulerMode::Direct,
                    (line, other) => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown euler mode '{other}'"),
                        })
                    }
                };
                let center_normalize = match get("modhtan.center_normalize")? {
                    (_, "true") => true,
                    (_, "false") => false,
                    (line, other) => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("expected true/false, found '{other}'"),
                        })
                    }
                };
                ActivationKind::ModHtan(ModHtanParams {
                    k_o: num("modhtan.k_o")?,
                    x_cutoff: num("modhtan.x_cutoff")?,
                    offset_mode,
                    rnf: RnfParams::new(
                        int("modhtan.rnf_a")?,
                        num("modhtan.rnf_n")?,
                        num("modhtan.rnf_m")?,
                    )?,
                    x_norm_clamp: num("modhtan.x_norm_clamp")?,
                    center_normalize,
                    euler_mode,
                })
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown activation '{other}'"),
                })
            }
        };
        let model = MlpModel {
            w1: DMatrix::from_row_slice(n_hidden, n_in, &floats("w1", n_hidden * n_in)?),
            b1: DVector::from_vec(floats("b1", n_hidden)?),
            w2: DMatrix::from_row_slice(n_out, n_hidden, &floats("w2", n_out * n_hidden)?),
            b2: DVector::from_vec(floats("b2", n_out)?),
            hidden_kind,
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_one_one(kind: ActivationKind) -> MlpModel {
        let mut m = MlpModel::zeros(1, 1, 1, kind);
        m.w1[(0, 0)] = 1.0;
        m.w2[(0, 0)] = 1.0;
        m
    }

    #[test]
    fn init_is_deterministic() {
        let a = nguyen_widrow_init(1, 2, 1, ActivationKind::Htan, 42);
        let b = nguyen_widrow_init(1, 2, 1, ActivationKind::Htan, 42);
        assert_eq!(a, b);
        let c = nguyen_widrow_init(1, 2, 1, ActivationKind::Htan, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn init_row_norms() {
        let m = nguyen_widrow_init(1, 2, 1, ActivationKind::Htan, 7);
        for r in 0..2 {
            assert_abs_diff_eq!(m.w1.row(r).norm(), 1.4, epsilon = 1e-12);
        }
        let m = nguyen_widrow_init(13, 2, 1, ActivationKind::Htan, 7);
        let beta = 0.7 * 2f64.powf(1.0 / 13.0);
        assert_abs_diff_eq!(beta, 0.7383, epsilon = 1e-4);
        for r in 0..2 {
            assert_abs_diff_eq!(m.w1.row(r).norm(), beta, epsilon = 1e-12);
            assert!(m.b1[r].abs() <= beta);
        }
        assert!(m.w2.iter().chain(m.b2.iter()).all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn zero_model_outputs_zero() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 3.0, -7.0, 1e3]);
        for kind in [ActivationKind::Htan, ActivationKind::ModHtan(Default::default())] {
            let m = MlpModel::zeros(2, 2, 1, kind);
            let (y, _) = forward(&m, &x).unwrap();
            assert!(y.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hand_built_forward_and_gradient() {
        let m = one_one_one(ActivationKind::Htan);
        let x = DMatrix::from_element(1, 1, 1.0);
        let t = DMatrix::from_element(1, 1, 0.0);
        let (y, cache) = forward(&m, &x).unwrap();
        let h = 1f64.tanh();
        assert_abs_diff_eq!(y[(0, 0)], 0.7615942, epsilon = 1e-7);

        let g = backward(&m, &x, &t, &cache).unwrap();
        // dL/dw2 = e * h with e = y = h
        assert_abs_diff_eq!(g.w2[(0, 0)], h * h, epsilon = 1e-15);
        assert_abs_diff_eq!(g.w2[(0, 0)], 0.58002, epsilon = 1e-5);
        assert_abs_diff_eq!(g.b2[0], h, epsilon = 1e-15);
        // dL/dw1 = e * w2 * (1 - h^2) * x
        assert_abs_diff_eq!(g.w1[(0, 0)], h * (1.0 - h * h), epsilon = 1e-15);
        assert_abs_diff_eq!(g.b1[0], h * (1.0 - h * h), epsilon = 1e-15);

        let (jac, e) = jacobian(&m, &x, &t, &cache).unwrap();
        assert_abs_diff_eq!(e[0], h, epsilon = 1e-15);
        let expected = [1.0 - h * h, 1.0 - h * h, h, 1.0];
        for (k, want) in expected.iter().enumerate() {
            assert_abs_diff_eq!(jac[(0, k)], *want, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let m = nguyen_widrow_init(2, 2, 1, ActivationKind::Htan, 3);
        let x = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, -0.3, 0.4]);
        let (y, cache) = forward(&m, &x).unwrap();
        let g = backward(&m, &x, &y, &cache).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
        let (_, e) = jacobian(&m, &x, &y, &cache).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn params_round_trip_order() {
        let m = nguyen_widrow_init(3, 2, 2, ActivationKind::SoftStep, 9);
        let theta = m.params();
        assert_eq!(theta.len(), 3 * 2 + 2 + 2 * 2 + 2);
        assert_eq!(theta[1], m.w1[(0, 1)]);
        assert_eq!(theta[3], m.w1[(1, 0)]);
        assert_eq!(theta[6], m.b1[0]);
        assert_eq!(theta[9], m.w2[(0, 1)]);
        assert_eq!(theta[12], m.b2[0]);
        let mut z = MlpModel::zeros(3, 2, 2, ActivationKind::SoftStep);
        z.set_params(&theta);
        assert_eq!(z, m);
    }

    #[test]
    fn shape_errors() {
        let m = MlpModel::zeros(2, 2, 1, ActivationKind::Htan);
        let x = DMatrix::zeros(3, 3);
        assert!(matches!(forward(&m, &x), Err(Error::Shape(_))));
        let x = DMatrix::zeros(3, 2);
        let (_, cache) = forward(&m, &x).unwrap();
        assert!(backward(&m, &x, &DMatrix::zeros(2, 1), &cache).is_err());
    }

    #[test]
    fn non_finite_input_is_reported() {
        let m = MlpModel::zeros(1, 2, 1, ActivationKind::Htan);
        let x = DMatrix::from_element(1, 1, f64::NAN);
        assert!(forward(&m, &x).is_err());
        let mut bad = nguyen_widrow_init(1, 2, 1, ActivationKind::Htan, 1);
        bad.w1[(0, 0)] = f64::INFINITY;
        assert!(forward(&bad, &DMatrix::from_element(1, 1, 1.0)).is_err());
        assert_eq!(bad.first_non_finite(), Some("w1"));
    }

    #[test]
    fn modhtan_forward_records_offsets() {
        let m = nguyen_widrow_init(1, 2, 1, ActivationKind::ModHtan(Default::default()), 5);
        let x = DMatrix::from_row_slice(3, 1, &[-1.0, 0.0, 1.0]);
        let (_, cache) = forward(&m, &x).unwrap();
        assert_eq!(cache.offsets.len(), 2);
        assert!(cache.offsets.iter().all(|o| *o > 0.0));
        assert!(cache.hidden.iter().all(|f| f.abs() < 1.0));
    }

    #[test]
    fn text_round_trip() {
        let kinds = [
            ActivationKind::SoftStep,
            ActivationKind::Htan,
            ActivationKind::Elu(EluParams::new(0.5).unwrap()),
            ActivationKind::ModHtan(ModHtanParams::default()),
            ActivationKind::ModHtan(ModHtanParams {
                offset_mode: OffsetMode::Fixed(10.0),
                euler_mode: EulerMode::Direct,
                center_normalize: false,
                ..Default::default()
            }),
        ];
        for kind in kinds {
            let m = nguyen_widrow_init(3, 2, 1, kind, 11);
            let text = m.to_text();
            let back = MlpModel::from_text(&text).unwrap();
            assert_eq!(back, m, "{text}");
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn text_parse_errors() {
        let m = nguyen_widrow_init(1, 2, 1, ActivationKind::Htan, 1);
        let text = m.to_text().replace("w2 = ", "w2 = 1.0 ");
        assert!(matches!(MlpModel::from_text(&text), Err(Error::Parse { .. })));
        assert!(MlpModel::from_text("n_in = 1\nnot a pair\n").is_err());
        let text = m.to_text().replace("htan", "relu");
        assert!(MlpModel::from_text(&text).is_err());
    }
}
