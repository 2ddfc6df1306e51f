//! Integer-calibrated approximation of `e^x`.
//!
//! The approximation is
//!
//! ```text
//! ((a - n) / (a - (m + x)))^a  ~  e^x
//! ```
//!
//! with an integer exponent `a`. The power is taken by binary exponentiation,
//! so one evaluation costs one division plus about `2 * log2(a)`
//! multiplications. For the default `a = 10^7, n = m = 1` the relative error
//! is roughly `(x^2 + 2x) / (2a)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Calibration constants of the approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnfParams {
    a: u64,
    n: f64,
    m: f64,
}

impl RnfParams {
    pub const DEFAULT_A: u64 = 10_000_000;

    pub fn new(a: u64, n: f64, m: f64) -> Result<Self> {
        if a < 2 {
            return Err(Error::InvalidParam(format!("rnf a must be >= 2, got {a}")));
        }
        if !n.is_finite() || !m.is_finite() {
            return Err(Error::InvalidParam("rnf n and m must be finite".into()));
        }
        Ok(Self { a, n, m })
    }

    /// Same as [`RnfParams::new`] with `n = m = 1`.
    pub fn with_a(a: u64) -> Result<Self> {
        Self::new(a, 1.0, 1.0)
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Largest `x` (exclusive) accepted by [`rnf_exp`].
    pub fn upper_bound(&self) -> f64 {
        self.a as f64 - self.m
    }
}

impl Default for RnfParams {
    fn default() -> Self {
        Self {
            a: Self::DEFAULT_A,
            n: 1.0,
            m: 1.0,
        }
    }
}

/// `base^exp` by repeated squaring.
pub fn powi_u64(mut base: f64, mut exp: u64) -> f64 {
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        exp >>= 1;
        // skip the final square, it would only risk a spurious overflow
        if exp > 0 {
            base *= base;
        }
    }
    acc
}

/// Approximates `e^x` as `((a - n) / (a - (m + x)))^a`.
pub fn rnf_exp(x: f64, params: RnfParams) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("rnf_exp input must be finite, got {x}")));
    }
    let a = params.a as f64;
    let denom = a - (params.m + x);
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "rnf_exp requires m + x < a (m + x = {}, a = {})",
            params.m + x,
            params.a
        )));
    }
    let base = (a - params.n) / denom;
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::Domain(format!("rnf_exp base {base} is not positive")));
    }
    let value = powi_u64(base, params.a);
    if !value.is_finite() {
        return Err(Error::Overflow(format!("rnf_exp({x}) exceeds f64 range")));
    }
    Ok(value)
}

fn euler_cache() -> &'static Mutex<HashMap<(u64, u64, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The approximation evaluated at `x = 1`, i.e. the calibrated Euler number.
///
/// Results are memoized per parameter set; the default parameters hit a
/// dedicated `OnceLock`.
pub fn euler_constant(params: RnfParams) -> Result<f64> {
    static DEFAULT: OnceLock<f64> = OnceLock::new();
    if params == RnfParams::default() {
        if let Some(&e) = DEFAULT.get() {
            return Ok(e);
        }
        let e = rnf_exp(1.0, params)?;
        return Ok(*DEFAULT.get_or_init(|| e));
    }

    let key = (params.a, params.n.to_bits(), params.m.to_bits());
    if let Some(&e) = euler_cache().lock().expect("euler cache poisoned").get(&key) {
        return Ok(e);
    }
    let e = rnf_exp(1.0, params)?;
    euler_cache()
        .lock()
        .expect("euler cache poisoned")
        .insert(key, e);
    Ok(e)
}

/// One row of an accuracy profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxRow {
    pub x: f64,
    pub rnf_value: Result<f64>,
    pub reference_value: f64,
    /// `|rnf - ref| / |ref|`, `None` when `rnf_value` is an error.
    pub relative_error: Option<f64>,
}

/// Compares [`rnf_exp`] with `f64::exp` at each input, preserving order.
/// Domain errors are kept in their row.
pub fn approx_error_profile(xs: &[f64], params: RnfParams) -> Vec<ApproxRow> {
    xs.iter()
        .map(|&x| {
            let reference_value = x.exp();
            let rnf_value = rnf_exp(x, params);
            let relative_error = rnf_value
                .as_ref()
                .ok()
                .map(|v| ((v - reference_value) / reference_value).abs());
            ApproxRow {
                x,
                rnf_value,
                reference_value,
                relative_error,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zero_is_exactly_one() {
        assert_eq!(rnf_exp(0.0, RnfParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn close_to_exp_at_one_and_minus_two() {
        let p = RnfParams::default();
        assert!(rel(rnf_exp(1.0, p).unwrap(), 1f64.exp()) <= 2e-7);
        assert!(rel(rnf_exp(-2.0, p).unwrap(), (-2f64).exp()) <= 1e-6);
    }

    #[test]
    fn euler_constant_defaults() {
        let e = euler_constant(RnfParams::default()).unwrap();
        assert!(rel(e, std::f64::consts::E) <= 2e-7);
        // memoized value is stable
        assert_eq!(e, euler_constant(RnfParams::default()).unwrap());
    }

    #[test]
    fn euler_constant_small_a_matches_direct_product() {
        let p = RnfParams::with_a(100).unwrap();
        let mut oracle = 1.0;
        for _ in 0..100 {
            oracle *= 99.0 / 98.0;
        }
        let e = euler_constant(p).unwrap();
        assert!(rel(e, oracle) < 1e-13);
        // exact rational power (99/98)^100
        assert!((e - 2.760017848074477).abs() < 1e-12, "{e}");
    }

    #[test]
    fn euler_constant_a2_is_domain_error() {
        let p = RnfParams::with_a(2).unwrap();
        assert!(matches!(euler_constant(p), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_a_below_two() {
        assert!(RnfParams::new(1, 1.0, 1.0).is_err());
        assert!(RnfParams::new(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn precondition_violations() {
        let p = RnfParams::default();
        assert!(matches!(rnf_exp(1e8, p), Err(Error::Domain(_))));
        assert!(matches!(rnf_exp(f64::NAN, p), Err(Error::Domain(_))));
        // n >= a makes the base non-positive
        let q = RnfParams::new(10, 20.0, 1.0).unwrap();
        assert!(matches!(rnf_exp(0.5, q), Err(Error::Domain(_))));
    }

    #[test]
    fn overflow_is_reported() {
        let p = RnfParams::default();
        assert!(matches!(rnf_exp(720.0, p), Err(Error::Overflow(_))));
    }

    #[test]
    fn finite_and_positive_up_to_700() {
        let p = RnfParams::default();
        for x in [-700.0, -350.5, 0.25, 350.0, 700.0] {
            let v = rnf_exp(x, p).unwrap();
            assert!(v.is_finite() && v > 0.0, "x={x} v={v}");
        }
    }

    #[test]
    fn profile_rows() {
        let p = RnfParams::default();
        let rows = approx_error_profile(&[0.0, 20.0, -20.0, 1e9], p);
        assert_eq!(rows[0].relative_error, Some(0.0));
        assert!(rows[1].relative_error.unwrap() <= 5e-5);
        assert!(rows[2].relative_error.unwrap() <= 5e-5);
        assert!(rows[3].rnf_value.is_err());
        assert_eq!(rows[3].relative_error, None);
        let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
        assert_eq!(xs, vec![0.0, 20.0, -20.0, 1e9]);
    }

    #[test]
    fn strictly_increasing_on_grid() {
        let p = RnfParams::default();
        let mut prev = 0.0;
        for i in 0..=4000 {
            let x = -20.0 + i as f64 * 0.01;
            let v = rnf_exp(x, p).unwrap();
            assert!(v > prev, "not increasing at x={x}");
            prev = v;
        }
    }

    fn naive_pow(base: f64, a: u64) -> f64 {
        let mut acc = 1.0;
        for _ in 0..a {
            acc *= base;
        }
        acc
    }

    proptest! {
        #[test]
        fn binary_power_matches_naive_loop(a in 2u64..=1024, x in -3.0f64..3.0) {
            let p = RnfParams::with_a(a).unwrap();
            prop_assume!(x < p.upper_bound() - 0.5);
            let base = (a as f64 - 1.0) / (a as f64 - (1.0 + x));
            let fast = rnf_exp(x, p).unwrap();
            let slow = naive_pow(base, a);
            prop_assert!(rel(fast, slow) <= 1e-12, "a={} x={} {} vs {}", a, x, fast, slow);
        }

        #[test]
        fn error_bound_holds(x in -20.0f64..20.0) {
            let v = rnf_exp(x, RnfParams::default()).unwrap();
            prop_assert!(rel(v, x.exp()) <= 5e-5);
            if x.abs() <= 2.0 {
                prop_assert!(rel(v, x.exp()) <= 2e-6);
            }
        }
    }
}
