//! Saturating activations and their gradients.
//!
//! Gradients of Soft-Step, HTAN and MODHTAN are expressed in terms of the
//! activation output `f`, which is what a backward pass has at hand.
//! MODHTAN reuses the HTAN derivative `1 - f^2`; this is a surrogate and
//! does not include the derivative of the input normalization.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exp_approx::{euler_constant, rnf_exp, RnfParams};

pub fn soft_step(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn soft_step_grad(f: f64) -> f64 {
    (1.0 - f) * f
}

pub fn htan(x: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * x).exp()) - 1.0
}

pub fn htan_grad(f: f64) -> f64 {
    1.0 - f * f
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EluParams {
    alpha: f64,
}

impl EluParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParam(format!("elu alpha must be > 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for EluParams {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

/// `x` for `x > 0`, `alpha * (e^x - 1)` otherwise.
pub fn elu(x: f64, p: EluParams) -> f64 {
    if x > 0.0 {
        x
    } else {
        p.alpha * x.exp_m1()
    }
}

pub fn elu_grad(x: f64, f: f64, p: EluParams) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        f + p.alpha
    }
}

/// How MODHTAN chooses `offset_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetMode {
    Fixed(f64),
    /// `offset_1 = (1 + delta) * max|x| + kappa` over the current batch.
    Adaptive { delta: f64, kappa: f64 },
}

impl Default for OffsetMode {
    fn default() -> Self {
        OffsetMode::Adaptive {
            delta: 0.1,
            kappa: 1e-6,
        }
    }
}

/// Source of `E^(-2 x_norm)` in MODHTAN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EulerMode {
    /// Cached calibrated Euler number raised to a real power.
    #[default]
    Constant,
    /// Evaluate the integer-calibrated exponential at `-2 x_norm` directly.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModHtanParams {
    pub k_o: f64,
    pub x_cutoff: f64,
    pub offset_mode: OffsetMode,
    pub rnf: RnfParams,
    pub x_norm_clamp: f64,
    /// When false, inputs inside `[-x_cutoff, x_cutoff]` bypass normalization.
    pub center_normalize: bool,
    pub euler_mode: EulerMode,
}

impl Default for ModHtanParams {
    fn default() -> Self {
        Self {
            k_o: 2.0,
            x_cutoff: 10.0,
            offset_mode: OffsetMode::default(),
            rnf: RnfParams::default(),
            x_norm_clamp: 50.0,
            center_normalize: true,
            euler_mode: EulerMode::Constant,
        }
    }
}

impl ModHtanParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.k_o) {
            return Err(Error::InvalidParam(format!("k_o must be > 0, got {}", self.k_o)));
        }
        if !positive(self.x_cutoff) {
            return Err(Error::InvalidParam(format!(
                "x_cutoff must be > 0, got {}",
                self.x_cutoff
            )));
        }
        if !positive(self.x_norm_clamp) {
            return Err(Error::InvalidParam(format!(
                "x_norm_clamp must be > 0, got {}",
                self.x_norm_clamp
            )));
        }
        match self.offset_mode {
            OffsetMode::Fixed(o) if o == 0.0 || !o.is_finite() => {
                return Err(Error::InvalidParam(format!(
                    "fixed offset must be finite and non-zero, got {o}"
                )))
            }
            OffsetMode::Adaptive { delta, kappa } if !(delta >= 0.0) || !positive(kappa) => {
                return Err(Error::InvalidParam(format!(
                    "adaptive offset needs delta >= 0 and kappa > 0, got {delta}, {kappa}"
                )))
            }
            _ => {}
        }
        match self.euler_mode {
            EulerMode::Constant => {
                let e = euler_constant(self.rnf)?;
                if !(e > 1.0) {
                    return Err(Error::InvalidParam(format!(
                        "calibrated Euler number {e} must exceed 1"
                    )));
                }
            }
            EulerMode::Direct => {
                let span = 2.0 * self.x_norm_clamp;
                rnf_exp(span, self.rnf)?;
                rnf_exp(-span, self.rnf)?;
            }
        }
        Ok(())
    }
}

/// `(1 + delta) * max|x| + kappa`, which keeps `x + offset > 0` across the batch.
pub fn adaptive_offset(batch: &[f64], delta: f64, kappa: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Domain("adaptive offset of an empty batch".into()));
    }
    let mut max_abs = 0.0f64;
    for &x in batch {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite batch entry {x}")));
        }
        max_abs = max_abs.max(x.abs());
    }
    let offset = (1.0 + delta) * max_abs + kappa;
    if !offset.is_finite() {
        return Err(Error::Overflow(format!(
            "adaptive offset overflows for max|x| = {max_abs}"
        )));
    }
    Ok(offset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `x > x_cutoff`
    Positive,
    /// `x < -x_cutoff`
    Negative,
    Center,
}

/// Classifies `x` against the cutoff and computes `x / (x + offset_1)`,
/// clamped to `[-clamp, clamp]`.
///
/// A zero or subnormal denominator yields `sign(x) * clamp`.
pub fn modhtan_normalize(x: f64, offset_1: f64, x_cutoff: f64, clamp: f64) -> (Region, f64) {
    let region = if x > x_cutoff {
        Region::Positive
    } else if x < -x_cutoff {
        Region::Negative
    } else {
        Region::Center
    };

    // Divide through by the larger magnitude so x + offset_1 cannot overflow.
    let scale = x.abs().max(offset_1.abs());
    let x_norm = if scale == 0.0 {
        0.0
    } else {
        let num = x / scale;
        let den = num + offset_1 / scale;
        if den == 0.0 || (den.abs() * scale) < f64::MIN_POSITIVE {
            x.signum() * clamp
        } else {
            num / den
        }
    };
    (region, x_norm.clamp(-clamp, clamp))
}

/// Modified hyperbolic tangent for a single input with a given `offset_1`.
///
/// Exactly one of the three region branches is active; the inactive two each
/// contribute `k_o / 2 - 1`, which vanishes for the default `k_o = 2`.
pub fn modhtan(x: f64, p: &ModHtanParams, offset_1: f64) -> f64 {
    let (region, mut x_norm) = modhtan_normalize(x, offset_1, p.x_cutoff, p.x_norm_clamp);
    if !p.center_normalize && region == Region::Center {
        x_norm = x.clamp(-p.x_norm_clamp, p.x_norm_clamp);
    }
    let decay = match p.euler_mode {
        EulerMode::Constant => {
            let e = euler_constant(p.rnf).expect("ModHtanParams validated");
            e.powf(-2.0 * x_norm)
        }
        EulerMode::Direct => rnf_exp(-2.0 * x_norm, p.rnf).expect("ModHtanParams validated"),
    };
    let active = p.k_o / (1.0 + decay) - 1.0;
    active + 2.0 * (p.k_o / 2.0 - 1.0)
}

pub fn modhtan_grad(f: f64) -> f64 {
    1.0 - f * f
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    SoftStep,
    Htan,
    Elu(EluParams),
    ModHtan(ModHtanParams),
}

impl ActivationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::SoftStep => "softstep",
            ActivationKind::Htan => "htan",
            ActivationKind::Elu(_) => "elu",
            ActivationKind::ModHtan(_) => "modhtan",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ActivationKind::ModHtan(p) => p.validate(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a bare activation name; parameterized kinds get their defaults.
impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "softstep" | "soft-step" | "sigmoid" | "logistic" => Ok(ActivationKind::SoftStep),
            "htan" | "tanh" => Ok(ActivationKind::Htan),
            "elu" => Ok(ActivationKind::Elu(EluParams::default())),
            "modhtan" => Ok(ActivationKind::ModHtan(ModHtanParams::default())),
            other => Err(Error::InvalidParam(format!("unknown activation '{other}'"))),
        }
    }
}

/// Values and gradients of one activated batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Activated {
    pub values: Vec<f64>,
    pub gradients: Vec<f64>,
    /// `offset_1` used by MODHTAN for this batch.
    pub offset: Option<f64>,
}

/// Applies `kind` element-wise. MODHTAN in adaptive mode derives
/// `offset_1` once from this batch.
pub fn activate(kind: &ActivationKind, batch: &[f64]) -> Result<Activated> {
    if let Some(bad) = batch.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("non-finite activation input {bad}")));
    }
    let (values, gradients, offset): (Vec<f64>, Vec<f64>, Option<f64>) = match kind {
        ActivationKind::SoftStep => {
            let v: Vec<f64> = batch.iter().map(|&x| soft_step(x)).collect();
            let g = v.iter().map(|&f| soft_step_grad(f)).collect();
            (v, g, None)
        }
        ActivationKind::Htan => {
            let v: Vec<f64> = batch.iter().map(|&x| htan(x)).collect();
            let g = v.iter().map(|&f| htan_grad(f)).collect();
            (v, g, None)
        }
        ActivationKind::Elu(p) => {
            let v: Vec<f64> = batch.iter().map(|&x| elu(x, *p)).collect();
            let g = batch
                .iter()
                .zip(&v)
                .map(|(&x, &f)| elu_grad(x, f, *p))
                .collect();
            (v, g, None)
        }
        ActivationKind::ModHtan(p) => {
            p.validate()?;
            let offset = match p.offset_mode {
                OffsetMode::Fixed(o) => o,
                OffsetMode::Adaptive { delta, kappa } => adaptive_offset(batch, delta, kappa)?,
            };
            let v: Vec<f64> = batch.iter().map(|&x| modhtan(x, p, offset)).collect();
            let g = v.iter().map(|&f| modhtan_grad(f)).collect();
            (v, g, Some(offset))
        }
    };
    Ok(Activated {
        values,
        gradients,
        offset,
    })
}
