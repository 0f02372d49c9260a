//! Statistical features of a bispectrum: mean, variance, skewness and
//! excess kurtosis of both the magnitude and the biphase.
//!
//! All moments are population moments over the flattened principal domain.
//! Skewness is `m3 / m2^1.5` and excess kurtosis `m4 / m2^2 - 3`; both are
//! reported as zero when `m2 < 1e-12`. Biphase values are treated as plain
//! reals in `(-pi, pi]`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bispectrum::BispectrumGrid;
use crate::numfmt::fmt_sig;

pub const FEATURE_DIM: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "mag_mean",
    "mag_var",
    "mag_skew",
    "mag_kurt",
    "phase_mean",
    "phase_var",
    "phase_skew",
    "phase_kurt",
];

pub const FEATURE_CSV_HEADER: &str =
    "sample_id,label,mag_mean,mag_var,mag_skew,mag_kurt,phase_mean,phase_var,phase_skew,phase_kurt";

/// Lower bound of the scatter axes, so log-scale plots stay finite.
pub const SCATTER_EPS: f64 = 1e-6;

const DEGENERATE_M2: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("need at least 2 cells, got {0}")]
    GridTooSmall(usize),
    #[error("need at least 2 feature vectors, got {0}")]
    TooFewVectors(usize),
    #[error("magnitude and phase cell counts differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("feature {0} is not finite")]
    NonFinite(&'static str),
    #[error("feature csv: {0}")]
    Csv(String),
}

/// Population mean, variance, skewness and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Result<Self, FeatureError> {
        if values.len() < 2 {
            return Err(FeatureError::GridTooSmall(values.len()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let (skewness, kurtosis) = if m2 < DEGENERATE_M2 {
            (0.0, 0.0)
        } else {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        };
        Ok(Self {
            mean,
            variance: m2,
            skewness,
            kurtosis,
        })
    }
}

/// The eight bispectral moments used for profiling and detection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mag_mean: f64,
    pub mag_var: f64,
    pub mag_skew: f64,
    pub mag_kurt: f64,
    pub phase_mean: f64,
    pub phase_var: f64,
    pub phase_skew: f64,
    pub phase_kurt: f64,
}

impl FeatureVector {
    pub fn from_moments(magnitude: Moments, phase: Moments) -> Self {
        Self {
            mag_mean: magnitude.mean,
            mag_var: magnitude.variance,
            mag_skew: magnitude.skewness,
            mag_kurt: magnitude.kurtosis,
            phase_mean: phase.mean,
            phase_var: phase.variance,
            phase_skew: phase.skewness,
            phase_kurt: phase.kurtosis,
        }
    }

    /// Features from parallel slices of magnitude and biphase cell values.
    pub fn from_cells(magnitudes: &[f64], phases: &[f64]) -> Result<Self, FeatureError> {
        if magnitudes.len() != phases.len() {
            return Err(FeatureError::LengthMismatch(magnitudes.len(), phases.len()));
        }
        let v = Self::from_moments(Moments::of(magnitudes)?, Moments::of(phases)?);
        v.check_finite()?;
        Ok(v)
    }

    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.mag_mean,
            self.mag_var,
            self.mag_skew,
            self.mag_kurt,
            self.phase_mean,
            self.phase_var,
            self.phase_skew,
            self.phase_kurt,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        Self {
            mag_mean: a[0],
            mag_var: a[1],
            mag_skew: a[2],
            mag_kurt: a[3],
            phase_mean: a[4],
            phase_var: a[5],
            phase_skew: a[6],
            phase_kurt: a[7],
        }
    }

    pub fn check_finite(&self) -> Result<(), FeatureError> {
        match self.to_array().iter().position(|v| !v.is_finite()) {
            Some(i) => Err(FeatureError::NonFinite(FEATURE_NAMES[i])),
            None => Ok(()),
        }
    }
}

pub fn extract_features(grid: &BispectrumGrid) -> Result<FeatureVector, FeatureError> {
    let magnitudes = grid.magnitude_grid().valid_values();
    let phases = grid.biphase_grid().valid_values();
    FeatureVector::from_cells(&magnitudes, &phases)
}

/// Per-dimension z-score parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl StandardizationParams {
    /// Population mean and standard deviation of each dimension.
    pub fn fit(vectors: &[FeatureVector]) -> Result<Self, FeatureError> {
        if vectors.len() < 2 {
            return Err(FeatureError::TooFewVectors(vectors.len()));
        }
        let n = vectors.len() as f64;
        let mut mean = [0.0; FEATURE_DIM];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v.to_array()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; FEATURE_DIM];
        for v in vectors {
            for ((s, x), m) in var.iter_mut().zip(v.to_array()).zip(mean) {
                *s += (x - m) * (x - m);
            }
        }
        let std = var.map(|s| (s / n).sqrt());
        Ok(Self { mean, std })
    }

    /// Maps each dimension to `(x - mean) / std`; zero-spread dimensions map to 0.
    pub fn apply(&self, vector: &FeatureVector) -> FeatureVector {
        let x = vector.to_array();
        let mut out = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            out[d] = if is_zero_spread(self.std[d], self.mean[d]) {
                0.0
            } else {
                (x[d] - self.mean[d]) / self.std[d]
            };
        }
        FeatureVector::from_array(out)
    }
}

// Summing identical values need not reproduce them exactly, so a spread at
// rounding level counts as zero.
fn is_zero_spread(std: f64, mean: f64) -> bool {
    std == 0.0 || std <= 1e-12 * mean.abs()
}

/// A feature vector with its sample identifier and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub sample_id: String,
    pub label: String,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub sample_id: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// Min-max normalizes `mag_mean` (x) and `phase_mean` (y) into `(eps, 1]`.
/// An axis without spread puts every point at 1.
pub fn scatter_points(samples: &[LabeledFeatures]) -> Result<Vec<ScatterPoint>, FeatureError> {
    if samples.len() < 2 {
        return Err(FeatureError::TooFewVectors(samples.len()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.features.mag_mean).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.features.phase_mean).collect();
    let xs = min_max_to_unit(&xs);
    let ys = min_max_to_unit(&ys);
    Ok(samples
        .iter()
        .zip(xs.into_iter().zip(ys))
        .map(|(s, (x, y))| ScatterPoint {
            sample_id: s.sample_id.clone(),
            label: s.label.clone(),
            x,
            y,
        })
        .collect())
}

fn min_max_to_unit(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| {
            if span <= 0.0 || v == hi {
                1.0
            } else {
                SCATTER_EPS + (1.0 - SCATTER_EPS) * (v - lo) / span
            }
        })
        .collect()
}

pub fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut out = String::from("sample_id,label,x,y\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.sample_id, p.label, fmt_sig(p.x), fmt_sig(p.y));
    }
    out
}

pub fn write_feature_csv(rows: &[LabeledFeatures]) -> String {
    let mut out = String::from(FEATURE_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.sample_id);
        out.push(',');
        out.push_str(&row.label);
        for v in row.features.to_array() {
            out.push(',');
            out.push_str(&fmt_sig(v));
        }
        out.push('\n');
    }
    out
}

pub fn read_feature_csv(data: &[u8]) -> Result<Vec<LabeledFeatures>, FeatureError> {
    let mut reader = csv::Reader::from_reader(data);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| FeatureError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != FEATURE_CSV_HEADER {
        return Err(FeatureError::Csv(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| FeatureError::Csv(e.to_string()))?;
        let mut values = [0.0; FEATURE_DIM];
        for (d, v) in values.iter_mut().enumerate() {
            *v = record[d + 2].trim().parse().map_err(|_| {
                FeatureError::Csv(format!("row {}: bad {} value", i + 1, FEATURE_NAMES[d]))
            })?;
        }
        let features = FeatureVector::from_array(values);
        features.check_finite()?;
        rows.push(LabeledFeatures {
            sample_id: record[0].to_string(),
            label: record[1].to_string(),
            features,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bispectrum::{estimate_bispectrum, BispectrumParams};
    use proptest::prelude::*;

    fn vec_of(x: f64) -> FeatureVector {
        FeatureVector::from_array([x; FEATURE_DIM])
    }

    #[test]
    fn one_to_four() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((m.mean - 2.5).abs() < 1e-15);
        assert!((m.variance - 1.25).abs() < 1e-15);
        assert!(m.skewness.abs() < 1e-15);
        assert!((m.kurtosis + 1.36).abs() < 1e-12);
    }

    #[test]
    fn constant_cells_use_zero_convention() {
        let v = FeatureVector::from_cells(&[2.0; 10], &[0.5; 10]).unwrap();
        assert_eq!(v, FeatureVector::from_array([2.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            FeatureVector::from_cells(&[1.0], &[1.0]),
            Err(FeatureError::GridTooSmall(1))
        ));
    }

    #[test]
    fn grid_features_use_all_valid_cells() {
        let mut signal = vec![0.0; 8];
        signal[0] = 1.0;
        let grid = estimate_bispectrum(
            &signal,
            &BispectrumParams::new(8, 0.0, crate::bispectrum::Window::Rectangular).unwrap(),
        )
        .unwrap();
        let v = extract_features(&grid).unwrap();
        assert_eq!(v, FeatureVector::from_array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn two_point_standardization() {
        let a = FeatureVector::from_array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let b = FeatureVector::from_array([3.0, 2.0, -3.0, 0.0, 5.5, 6.0, 0.0, -8.0]);
        let params = StandardizationParams::fit(&[a, b]).unwrap();
        let (sa, sb) = (params.apply(&a).to_array(), params.apply(&b).to_array());
        for d in 0..FEATURE_DIM {
            if a.to_array()[d] == b.to_array()[d] {
                assert_eq!((sa[d], sb[d]), (0.0, 0.0));
            } else {
                assert!((sa[d].abs() - 1.0).abs() < 1e-12);
                assert!((sa[d] + sb[d]).abs() < 1e-12);
            }
        }
        assert!(matches!(
            StandardizationParams::fit(&[a]),
            Err(FeatureError::TooFewVectors(1))
        ));
    }

    #[test]
    fn constant_dimension_standardizes_to_zero() {
        let vs: Vec<FeatureVector> = (0..7)
            .map(|i| FeatureVector {
                mag_mean: 0.1,
                phase_var: f64::from(i),
                ..Default::default()
            })
            .collect();
        let params = StandardizationParams::fit(&vs).unwrap();
        for v in &vs {
            assert_eq!(params.apply(v).mag_mean, 0.0);
        }
    }

    #[test]
    fn scatter_endpoints() {
        let samples: Vec<LabeledFeatures> = [0.5, 2.0]
            .iter()
            .enumerate()
            .map(|(i, &m)| LabeledFeatures {
                sample_id: format!("s{i}"),
                label: "real".into(),
                features: FeatureVector {
                    mag_mean: m,
                    phase_mean: -m,
                    ..Default::default()
                },
            })
            .collect();
        let pts = scatter_points(&samples).unwrap();
        assert_eq!((pts[0].x, pts[1].x), (SCATTER_EPS, 1.0));
        assert_eq!((pts[0].y, pts[1].y), (1.0, SCATTER_EPS));
        assert!(scatter_points(&samples[..1]).is_err());

        let flat: Vec<LabeledFeatures> = (0..3)
            .map(|i| LabeledFeatures {
                sample_id: i.to_string(),
                label: "fake".into(),
                features: vec_of(0.3),
            })
            .collect();
        for p in scatter_points(&flat).unwrap() {
            assert_eq!((p.x, p.y), (1.0, 1.0));
        }
        let csv = scatter_csv(&pts);
        assert_eq!(csv, "sample_id,label,x,y\ns0,real,1e-6,1\ns1,real,1,1e-6\n");
    }

    #[test]
    fn feature_csv_round_trip() {
        let rows = vec![LabeledFeatures {
            sample_id: "a".into(),
            label: "real".into(),
            features: FeatureVector::from_array([0.1, 0.2, -0.3, 1.5, 2.0, 0.0, 1e-7, 123456.789]),
        }];
        let text = write_feature_csv(&rows);
        assert!(text.starts_with(FEATURE_CSV_HEADER));
        assert_eq!(read_feature_csv(text.as_bytes()).unwrap(), rows);
        assert!(read_feature_csv(b"sample_id,label\n").is_err());
    }

    proptest! {
        #[test]
        fn scale_covariance(cells in proptest::collection::vec(0.0f64..10.0, 3..60), s in 0.1f64..50.0) {
            let phases = vec![0.0; cells.len()];
            let base = FeatureVector::from_cells(&cells, &phases).unwrap();
            prop_assume!(base.mag_var > 1e-6);
            let scaled: Vec<f64> = cells.iter().map(|c| c * s).collect();
            let v = FeatureVector::from_cells(&scaled, &phases).unwrap();
            prop_assert!((v.mag_mean - s * base.mag_mean).abs() <= 1e-9 * v.mag_mean.abs().max(1.0));
            prop_assert!((v.mag_var - s * s * base.mag_var).abs() <= 1e-9 * v.mag_var.max(1.0));
            prop_assert!((v.mag_skew - base.mag_skew).abs() <= 1e-9);
            prop_assert!((v.mag_kurt - base.mag_kurt).abs() <= 1e-9);
        }

        #[test]
        fn permutation_invariance(cells in proptest::collection::vec((0.0f64..10.0, -3.1f64..3.1), 2..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = cells.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |c: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { c.iter().copied().unzip() };
            let (m1, p1) = split(&cells);
            let (m2, p2) = split(&shuffled);
            let a = FeatureVector::from_cells(&m1, &p1).unwrap().to_array();
            let b = FeatureVector::from_cells(&m2, &p2).unwrap().to_array();
            for d in 0..FEATURE_DIM {
                prop_assert!((a[d] - b[d]).abs() <= 1e-9 * a[d].abs().max(1.0));
            }
        }

        #[test]
        fn standardizing_twice_is_idempotent(rows in proptest::collection::vec(proptest::array::uniform8(-100.0f64..100.0), 2..30)) {
            let vs: Vec<FeatureVector> = rows.into_iter().map(FeatureVector::from_array).collect();
            let p = StandardizationParams::fit(&vs).unwrap();
            let z: Vec<FeatureVector> = vs.iter().map(|v| p.apply(v)).collect();
            let q = StandardizationParams::fit(&z).unwrap();
            for d in 0..FEATURE_DIM {
                if p.std[d] > 0.0 {
                    prop_assert!(q.mean[d].abs() <= 1e-9);
                    prop_assert!((q.std[d] - 1.0).abs() <= 1e-9);
                }
            }
        }
    }
}
