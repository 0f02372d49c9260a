//! On-disk forms of profiles, reports and ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DetectError, DetectionReport, Verdict, VoiceProfile};
use crate::bispectrum::BispectrumParams;
use crate::features::{FeatureVector, StandardizationParams, FEATURE_DIM};
use crate::numfmt::{fmt_sig, round_sig};

pub const PROFILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub sample_id: String,
    pub features: [f64; FEATURE_DIM],
}

/// Feature-extraction settings a profile was built with. Queries must be
/// extracted the same way to be comparable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub canonical_rate_hz: u32,
    pub bispectrum: BispectrumParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub version: u32,
    pub subject_id: String,
    pub created_at: String,
    pub params: ProfileParams,
    pub reference: Vec<ReferenceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<StandardizationParams>,
}

impl ProfileDocument {
    pub fn from_profile(profile: &VoiceProfile, created_at: String, params: ProfileParams) -> Self {
        Self {
            version: PROFILE_VERSION,
            subject_id: profile.subject_id().to_string(),
            created_at,
            params,
            reference: profile
                .reference()
                .iter()
                .map(|(id, v)| ReferenceEntry {
                    sample_id: id.clone(),
                    features: v.to_array().map(round_sig),
                })
                .collect(),
            standardizer: profile.standardizer().map(|s| StandardizationParams {
                mean: s.mean.map(round_sig),
                std: s.std.map(round_sig),
            }),
        }
    }

    pub fn to_profile(&self) -> Result<VoiceProfile, DetectError> {
        if self.version != PROFILE_VERSION {
            return Err(DetectError::Format(format!(
                "unsupported profile version {}",
                self.version
            )));
        }
        let reference = self
            .reference
            .iter()
            .map(|e| (e.sample_id.clone(), FeatureVector::from_array(e.features)))
            .collect();
        VoiceProfile::new(self.subject_id.clone(), reference, self.standardizer)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }

    pub fn from_json(data: &str) -> Result<Self, DetectError> {
        serde_json::from_str(data).map_err(|e| DetectError::Format(e.to_string()))
    }
}

impl DetectionReport {
    /// Pretty JSON with metrics rounded to the shared significant-digit budget.
    pub fn to_json(&self) -> String {
        let mut copy = self.clone();
        if let Some(e) = copy.evaluation.as_mut() {
            e.metrics.precision_fake = round_sig(e.metrics.precision_fake);
            e.metrics.recall_fake = round_sig(e.metrics.recall_fake);
        }
        let mut s = serde_json::to_string_pretty(&copy).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(data: &str) -> Result<Self, DetectError> {
        serde_json::from_str(data).map_err(|e| DetectError::Format(e.to_string()))
    }

    /// Fixed-width text table of verdicts followed by the evaluation, if any.
    pub fn to_table(&self) -> String {
        let width = self
            .queries
            .iter()
            .map(|q| q.sample_id.len())
            .max()
            .unwrap_or(0)
            .max("sample_id".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "subject {}  eps {}  min_pts {}  clusters {}",
            self.subject_id,
            fmt_sig(self.params.dbscan.eps),
            self.params.dbscan.min_pts,
            self.cluster_count
        );
        let _ = writeln!(out, "{:<width$}  {:>7}  verdict", "sample_id", "cluster");
        for q in &self.queries {
            let cluster = q.cluster.map_or_else(|| "noise".to_string(), |c| c.to_string());
            let _ = writeln!(out, "{:<width$}  {:>7}  {}", q.sample_id, cluster, q.verdict);
        }
        let _ = writeln!(
            out,
            "real {}  fake {}",
            self.count(Verdict::Real),
            self.count(Verdict::Fake)
        );
        if let Some(e) = &self.evaluation {
            let c = &e.confusion;
            let _ = writeln!(out, "actual\\predicted   real   fake");
            let _ = writeln!(out, "real             {:>6} {:>6}", c.real_as_real, c.real_as_fake);
            let _ = writeln!(out, "fake             {:>6} {:>6}", c.fake_as_real, c.fake_as_fake);
            let flag = |undefined: bool| if undefined { " (undefined)" } else { "" };
            let _ = writeln!(
                out,
                "precision_fake {}{}  recall_fake {}{}",
                fmt_sig(e.metrics.precision_fake),
                flag(e.metrics.precision_undefined),
                fmt_sig(e.metrics.recall_fake),
                flag(e.metrics.recall_undefined)
            );
        }
        out
    }
}

/// Reads a `sample_id,label` CSV into a verdict map.
pub fn parse_truth_csv(data: &[u8]) -> Result<BTreeMap<String, Verdict>, DetectError> {
    let mut reader = csv::Reader::from_reader(data);
    let headers = reader
        .headers()
        .map_err(|e| DetectError::Format(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["sample_id", "label"] {
        return Err(DetectError::Format(
            "ground truth header must be `sample_id,label`".into(),
        ));
    }
    let mut truth = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| DetectError::Format(e.to_string()))?;
        let id = record[0].to_string();
        let verdict: Verdict = record[1].parse()?;
        if truth.insert(id.clone(), verdict).is_some() {
            return Err(DetectError::DuplicateSample(id));
        }
    }
    Ok(truth)
}
