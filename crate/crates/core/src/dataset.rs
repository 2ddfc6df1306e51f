//! Synthetic `x^2 - 2` regression data, the Statlog Heart benchmark, min-max
//! scaling and seeded train/test splits.

use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const HEART_SAMPLES: usize = 270;
pub const HEART_FEATURES: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Regression,
    BinaryClassification,
}

/// Affine map of `[min, max]` onto `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub min: f64,
    pub max: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ScaleParams {
    pub fn apply(&self, v: f64) -> f64 {
        if self.max == self.min {
            (self.lo + self.hi) / 2.0
        } else {
            self.lo + (v - self.min) * (self.hi - self.lo) / (self.max - self.min)
        }
    }

    pub fn invert(&self, v: f64) -> f64 {
        if self.max == self.min {
            self.min
        } else {
            self.min + (v - self.lo) * (self.max - self.min) / (self.hi - self.lo)
        }
    }
}

/// Scales a column linearly onto `[lo, hi]`. Constant columns map to the midpoint.
pub fn linear_scale(column: &[f64], lo: f64, hi: f64) -> Result<(Vec<f64>, ScaleParams)> {
    if column.is_empty() {
        return Err(Error::Domain("cannot scale an empty column".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParam(format!("scale range [{lo}, {hi}] is empty")));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in column {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value {v} in column")));
        }
        min = min.min(v);
        max = max.max(v);
    }
    let params = ScaleParams { min, max, lo, hi };
    Ok((column.iter().map(|&v| params.apply(v)).collect(), params))
}

pub fn unscale(scaled: &[f64], params: &ScaleParams) -> Vec<f64> {
    scaled.iter().map(|&v| params.invert(v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `samples x features`
    pub x: DMatrix<f64>,
    /// `samples x outputs`
    pub t: DMatrix<f64>,
    pub kind: DatasetKind,
    /// Per-feature scaling, `None` while features are still raw.
    pub feature_scale: Option<Vec<ScaleParams>>,
    pub target_scale: Option<Vec<ScaleParams>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.t.ncols()
    }

    /// First target column as a flat vector.
    pub fn labels(&self) -> Vec<f64> {
        self.t.column(0).iter().copied().collect()
    }

    fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            t: self.t.select_rows(rows),
            kind: self.kind,
            feature_scale: self.feature_scale.clone(),
            target_scale: self.target_scale.clone(),
        }
    }

    /// CSV with header `x0,..,t0,..`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = (0..self.n_features())
            .map(|i| format!("x{i}"))
            .chain((0..self.n_outputs()).map(|i| format!("t{i}")))
            .collect();
        let _ = writeln!(s, "{}", header.join(","));
        for r in 0..self.len() {
            let row: Vec<String> = self
                .x
                .row(r)
                .iter()
                .chain(self.t.row(r).iter())
                .map(|v| v.to_string())
                .collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

fn quadratic_from_inputs(xs: Vec<f64>) -> Result<Dataset> {
    let raw: Vec<f64> = xs.iter().map(|x| x * x - 2.0).collect();
    let (xs, x_scale) = linear_scale(&xs, -1.0, 1.0)?;
    let (ts, t_scale) = linear_scale(&raw, -1.0, 1.0)?;
    let n = xs.len();
    Ok(Dataset {
        x: DMatrix::from_vec(n, 1, xs),
        t: DMatrix::from_vec(n, 1, ts),
        kind: DatasetKind::Regression,
        feature_scale: Some(vec![x_scale]),
        target_scale: Some(vec![t_scale]),
    })
}

/// `n` evenly spaced points on `[-1, 1]` with target `x^2 - 2`, both columns
/// scaled to `[-1, 1]`.
pub fn gen_quadratic(n: usize) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 points, got {n}")));
    }
    let step = 2.0 / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { 1.0 } else { -1.0 + i as f64 * step })
        .collect();
    quadratic_from_inputs(xs)
}

/// Like [`gen_quadratic`] with inputs drawn uniformly from `[-1, 1]`.
pub fn gen_quadratic_random(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    quadratic_from_inputs((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
}

/// Parses Statlog Heart rows: 13 numeric features and a label in `{1, 2}`,
/// separated by whitespace or commas. Labels map to `1 -> 0`, `2 -> 1`.
/// Features are left unscaled; [`split`] fits the scaling on the training part.
pub fn parse_heart(text: &str) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('@') {
            continue;
        }
        let fields: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() != HEART_FEATURES + 1 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {} fields, found {}", HEART_FEATURES + 1, fields.len()),
            });
        }
        for f in &fields[..HEART_FEATURES] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("'{f}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite feature '{f}'"),
                });
            }
            features.push(v);
        }
        let label_text = fields[HEART_FEATURES];
        let label: f64 = label_text.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("label '{label_text}' is not a number"),
        })?;
        let mapped = if label == 1.0 {
            0.0
        } else if label == 2.0 {
            1.0
        } else {
            return Err(Error::LabelDomain {
                line: line_no,
                value: label_text.to_string(),
            });
        };
        labels.push(mapped);
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "no samples found".into(),
        });
    }
    if n != HEART_SAMPLES {
        warn!("heart data has {n} samples, expected {HEART_SAMPLES}");
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(n, HEART_FEATURES, &features),
        t: DMatrix::from_vec(n, 1, labels),
        kind: DatasetKind::BinaryClassification,
        feature_scale: None,
        target_scale: None,
    })
}

pub fn load_heart(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_heart(&text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "test fraction must be in (0, 1), got {test_fraction}"
            )));
        }
        Ok(Self { test_fraction, seed })
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Seeded shuffle, then the first `ceil((1 - f) * n)` rows train.
///
/// Raw features are scaled to `[-1, 1]` with training statistics; test
/// features may land slightly outside that range.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    SplitSpec::new(spec.test_fraction, spec.seed)?;
    let n = ds.len();
    // the small slack absorbs rounding in (1 - f) * n, e.g. 0.8 * 270
    let n_train = ((1.0 - spec.test_fraction) * n as f64 - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidParam(format!(
            "split of {n} rows at test fraction {} leaves an empty side",
            spec.test_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut train = ds.select(&order[..n_train]);
    let mut test = ds.select(&order[n_train..]);

    if ds.feature_scale.is_none() {
        let mut params = Vec::with_capacity(ds.n_features());
        for c in 0..ds.n_features() {
            let col: Vec<f64> = train.x.column(c).iter().copied().collect();
            let (scaled, p) = linear_scale(&col, -1.0, 1.0)?;
            for (r, v) in scaled.into_iter().enumerate() {
                train.x[(r, c)] = v;
            }
            for r in 0..test.len() {
                test.x[(r, c)] = p.apply(test.x[(r, c)]);
            }
            params.push(p);
        }
        train.feature_scale = Some(params.clone());
        test.feature_scale = Some(params);
    }
    Ok((train, test))
}
