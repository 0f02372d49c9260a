//! Cluster-based detection of synthetic samples against a known-real profile.
//!
//! Reference and query vectors are standardized together, clustered with
//! [`dbscan`], and each cluster is called real when enough of its members
//! come from the reference set. Queries in other clusters, or in noise, are
//! called fake.

mod dbscan;
mod report;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, FeatureVector, StandardizationParams};

pub use dbscan::{dbscan, k_distance_curve, k_distance_csv, ClusterLabel, DbscanError, DbscanParams};
pub use report::{parse_truth_csv, ProfileDocument, ProfileParams, ReferenceEntry, PROFILE_VERSION};

pub const DEFAULT_REAL_FRACTION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("no query samples to classify")]
    EmptyQuerySet,
    #[error("voice profile has no reference samples")]
    EmptyProfile,
    #[error("duplicate sample id `{0}`")]
    DuplicateSample(String),
    #[error("no ground truth for sample `{0}`")]
    MissingGroundTruth(String),
    #[error("real fraction threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("unknown verdict `{0}` (expected real or fake)")]
    UnknownVerdict(String),
    #[error("malformed document: {0}")]
    Format(String),
    #[error(transparent)]
    Dbscan(#[from] DbscanError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Real,
    Fake,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Real => "real",
            Verdict::Fake => "fake",
        })
    }
}

impl FromStr for Verdict {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(Verdict::Real),
            "fake" => Ok(Verdict::Fake),
            _ => Err(DetectError::UnknownVerdict(s.to_string())),
        }
    }
}

/// Which vectors the standardizer is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StandardizeOn {
    #[default]
    Union,
    Reference,
}

impl FromStr for StandardizeOn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "union" => Ok(StandardizeOn::Union),
            "reference" => Ok(StandardizeOn::Reference),
            other => Err(format!("expected `union` or `reference`, got `{other}`")),
        }
    }
}

impl fmt::Display for StandardizeOn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StandardizeOn::Union => "union",
            StandardizeOn::Reference => "reference",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub dbscan: DbscanParams,
    pub real_fraction_threshold: f64,
    pub standardize_on: StandardizeOn,
}

impl ClassifyParams {
    pub fn new(dbscan: DbscanParams) -> Self {
        Self {
            dbscan,
            real_fraction_threshold: DEFAULT_REAL_FRACTION,
            standardize_on: StandardizeOn::Union,
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        self.dbscan.validate()?;
        if !(0.0..=1.0).contains(&self.real_fraction_threshold) {
            return Err(DetectError::InvalidThreshold(self.real_fraction_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoiceProfile {
    subject_id: String,
    reference: Vec<(String, FeatureVector)>,
    standardizer: Option<StandardizationParams>,
}

impl VoiceProfile {
    pub fn new(
        subject_id: impl Into<String>,
        reference: Vec<(String, FeatureVector)>,
        standardizer: Option<StandardizationParams>,
    ) -> Result<Self, DetectError> {
        if reference.is_empty() {
            return Err(DetectError::EmptyProfile);
        }
        check_unique(reference.iter().map(|(id, _)| id.as_str()))?;
        for (_, v) in &reference {
            v.check_finite()?;
        }
        Ok(Self {
            subject_id: subject_id.into(),
            reference,
            standardizer,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn reference(&self) -> &[(String, FeatureVector)] {
        &self.reference
    }

    pub fn standardizer(&self) -> Option<&StandardizationParams> {
        self.standardizer.as_ref()
    }
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), DetectError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(DetectError::DuplicateSample(id.to_string()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryVerdict {
    pub sample_id: String,
    /// `None` for DBSCAN noise.
    pub cluster: Option<usize>,
    pub verdict: Verdict,
}

/// Counts indexed as `[actual][predicted]`, real before fake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub real_as_real: usize,
    pub real_as_fake: usize,
    pub fake_as_real: usize,
    pub fake_as_fake: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, actual: Verdict, predicted: Verdict) {
        match (actual, predicted) {
            (Verdict::Real, Verdict::Real) => self.real_as_real += 1,
            (Verdict::Real, Verdict::Fake) => self.real_as_fake += 1,
            (Verdict::Fake, Verdict::Real) => self.fake_as_real += 1,
            (Verdict::Fake, Verdict::Fake) => self.fake_as_fake += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.real_as_real + self.real_as_fake + self.fake_as_real + self.fake_as_fake
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (precision_fake, precision_undefined) =
            ratio(self.fake_as_fake, self.fake_as_fake + self.real_as_fake);
        let (recall_fake, recall_undefined) =
            ratio(self.fake_as_fake, self.fake_as_fake + self.fake_as_real);
        Metrics {
            precision_fake,
            recall_fake,
            precision_undefined,
            recall_undefined,
        }
    }

    /// `actual,predicted_real,predicted_fake` rows.
    pub fn to_csv(&self) -> String {
        format!(
            "actual,predicted_real,predicted_fake\nreal,{},{}\nfake,{},{}\n",
            self.real_as_real, self.real_as_fake, self.fake_as_real, self.fake_as_fake
        )
    }
}

/// Fake-class metrics. A zero denominator yields 0 with the matching flag set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision_fake: f64,
    pub recall_fake: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub subject_id: String,
    pub params: ClassifyParams,
    pub cluster_count: usize,
    pub queries: Vec<QueryVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
}

impl DetectionReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.queries.iter().filter(|q| q.verdict == verdict).count()
    }
}

pub fn classify(
    profile: &VoiceProfile,
    queries: &[(String, FeatureVector)],
    params: &ClassifyParams,
) -> Result<DetectionReport, DetectError> {
    params.validate()?;
    if queries.is_empty() {
        return Err(DetectError::EmptyQuerySet);
    }
    check_unique(queries.iter().map(|(id, _)| id.as_str()))?;
    for (_, v) in queries {
        v.check_finite()?;
    }

    let all: Vec<FeatureVector> = profile
        .reference
        .iter()
        .chain(queries)
        .map(|(_, v)| *v)
        .collect();
    let standardizer = match params.standardize_on {
        StandardizeOn::Union => StandardizationParams::fit(&all)?,
        StandardizeOn::Reference => match profile.standardizer {
            Some(s) => s,
            None => {
                let refs: Vec<FeatureVector> = profile.reference.iter().map(|(_, v)| *v).collect();
                StandardizationParams::fit(&refs)?
            }
        },
    };
    let points: Vec<[f64; crate::features::FEATURE_DIM]> =
        all.iter().map(|v| standardizer.apply(v).to_array()).collect();
    let labels = dbscan(&points, &params.dbscan)?;

    let n_ref = profile.reference.len();
    // cluster id -> (reference members, total members)
    let mut membership: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        if let Some(id) = label.cluster_id() {
            let entry = membership.entry(id).or_default();
            entry.1 += 1;
            if i < n_ref {
                entry.0 += 1;
            }
        }
    }
    let is_real = |id: usize| {
        let (refs, total) = membership[&id];
        refs as f64 / total as f64 >= params.real_fraction_threshold
    };

    let verdicts = queries
        .iter()
        .zip(&labels[n_ref..])
        .map(|((sample_id, _), label)| {
            let cluster = label.cluster_id();
            let verdict = match cluster {
                Some(id) if is_real(id) => Verdict::Real,
                _ => Verdict::Fake,
            };
            QueryVerdict {
                sample_id: sample_id.clone(),
                cluster,
                verdict,
            }
        })
        .collect();
    Ok(DetectionReport {
        subject_id: profile.subject_id.clone(),
        params: *params,
        cluster_count: membership.len(),
        queries: verdicts,
        evaluation: None,
    })
}

/// Attaches a confusion matrix and fake-class metrics to `report`.
pub fn evaluate(
    report: &DetectionReport,
    truth: &BTreeMap<String, Verdict>,
) -> Result<DetectionReport, DetectError> {
    let mut confusion = ConfusionMatrix::default();
    for q in &report.queries {
        let actual = truth
            .get(&q.sample_id)
            .ok_or_else(|| DetectError::MissingGroundTruth(q.sample_id.clone()))?;
        confusion.record(*actual, q.verdict);
    }
    let mut out = report.clone();
    out.evaluation = Some(Evaluation {
        confusion,
        metrics: confusion.metrics(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(x: f64, y: f64) -> FeatureVector {
        FeatureVector::from_array([x, y, 0.5 * x, 1.0, -y, x * y, 2.0, 3.0])
    }

    fn grid_profile() -> VoiceProfile {
        let reference = (0..12)
            .map(|i| (format!("ref{i:02}"), fv((i % 4) as f64 * 0.1, (i / 4) as f64 * 0.1)))
            .collect();
        VoiceProfile::new("subject", reference, None).unwrap()
    }

    fn params(eps: f64) -> ClassifyParams {
        ClassifyParams::new(DbscanParams::new(eps, 4).unwrap())
    }

    #[test]
    fn duplicated_reference_queries_are_real() {
        let profile = grid_profile();
        let queries: Vec<_> = profile
            .reference()
            .iter()
            .map(|(id, v)| (format!("q_{id}"), *v))
            .collect();
        let report = classify(&profile, &queries, &params(3.0)).unwrap();
        assert_eq!(report.count(Verdict::Real), queries.len());
        assert_eq!(report.cluster_count, 1);
    }

    #[test]
    fn distant_queries_are_noise_and_fake() {
        let profile = grid_profile();
        let eps = 0.5;
        // Reference-only standardization keeps the reference blob at its own scale.
        let p = ClassifyParams {
            standardize_on: StandardizeOn::Reference,
            ..params(eps)
        };
        let std = StandardizationParams::fit(
            &profile.reference().iter().map(|(_, v)| *v).collect::<Vec<_>>(),
        )
        .unwrap();
        let queries: Vec<_> = (0..3)
            .map(|i| {
                let mut a = profile.reference()[i].1.to_array();
                // Offsets are spaced so the queries cannot form a cluster among themselves.
                a[0] += 1000.0 * eps * std.std[0] * (i + 1) as f64;
                (format!("far{i}"), FeatureVector::from_array(a))
            })
            .collect();
        let report = classify(&profile, &queries, &p).unwrap();
        for q in &report.queries {
            assert_eq!(q.cluster, None);
            assert_eq!(q.verdict, Verdict::Fake);
        }
    }

    #[test]
    fn classify_errors() {
        let profile = grid_profile();
        assert!(matches!(
            classify(&profile, &[], &params(1.0)),
            Err(DetectError::EmptyQuerySet)
        ));
        let dup = vec![("a".to_string(), fv(0.0, 0.0)), ("a".to_string(), fv(0.0, 0.0))];
        assert!(matches!(
            classify(&profile, &dup, &params(1.0)),
            Err(DetectError::DuplicateSample(_))
        ));
        assert!(matches!(
            VoiceProfile::new("s", vec![], None),
            Err(DetectError::EmptyProfile)
        ));
        let bad = ClassifyParams {
            real_fraction_threshold: 1.5,
            ..params(1.0)
        };
        assert!(matches!(
            classify(&profile, &dup[..1], &bad),
            Err(DetectError::InvalidThreshold(_))
        ));
    }

    fn report_with(predicted: &[(&str, Verdict)]) -> DetectionReport {
        DetectionReport {
            subject_id: "s".into(),
            params: params(1.0),
            cluster_count: 0,
            queries: predicted
                .iter()
                .map(|&(id, verdict)| QueryVerdict {
                    sample_id: id.into(),
                    cluster: None,
                    verdict,
                })
                .collect(),
            evaluation: None,
        }
    }

    fn truth(pairs: &[(&str, Verdict)]) -> BTreeMap<String, Verdict> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn evaluate_examples() {
        use Verdict::*;
        let perfect = report_with(&[("a", Fake), ("b", Real)]);
        let m = evaluate(&perfect, &truth(&[("a", Fake), ("b", Real)]))
            .unwrap()
            .evaluation
            .unwrap()
            .metrics;
        assert_eq!((m.precision_fake, m.recall_fake), (1.0, 1.0));

        let half = report_with(&[("a", Fake), ("b", Fake), ("c", Real)]);
        let e = evaluate(&half, &truth(&[("a", Fake), ("b", Real), ("c", Real)]))
            .unwrap()
            .evaluation
            .unwrap();
        assert_eq!(e.metrics.precision_fake, 0.5);
        assert_eq!(e.metrics.recall_fake, 1.0);
        assert_eq!(e.confusion.total(), 3);

        let none = report_with(&[("a", Real)]);
        let m = evaluate(&none, &truth(&[("a", Fake)])).unwrap().evaluation.unwrap().metrics;
        assert_eq!(m.precision_fake, 0.0);
        assert!(m.precision_undefined);
        assert!(!m.recall_undefined);

        assert!(matches!(
            evaluate(&none, &truth(&[])),
            Err(DetectError::MissingGroundTruth(id)) if id == "a"
        ));
    }

    #[test]
    fn confusion_csv_layout() {
        let c = ConfusionMatrix {
            real_as_real: 20,
            real_as_fake: 1,
            fake_as_real: 3,
            fake_as_fake: 22,
        };
        assert_eq!(
            c.to_csv(),
            "actual,predicted_real,predicted_fake\nreal,20,1\nfake,3,22\n"
        );
        let m = c.metrics();
        assert_eq!(m.precision_fake, 22.0 / 23.0);
        assert_eq!(m.recall_fake, 22.0 / 25.0);
    }

    #[test]
    fn verdict_parsing() {
        assert_eq!("Real".parse::<Verdict>().unwrap(), Verdict::Real);
        assert_eq!(" fake ".parse::<Verdict>().unwrap(), Verdict::Fake);
        assert!("maybe".parse::<Verdict>().is_err());
    }
}
