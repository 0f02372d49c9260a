use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Charset, CorpusError};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub audio_path: String,
    pub transcript: String,
    pub duration_s: f64,
}

impl CorpusEntry {
    pub fn new(
        audio_path: impl Into<String>,
        transcript: impl Into<String>,
        duration_s: f64,
    ) -> Result<Self, CorpusError> {
        if !(duration_s >= 0.0 && duration_s.is_finite()) {
            return Err(CorpusError::InvalidDuration(duration_s));
        }
        Ok(Self {
            audio_path: audio_path.into(),
            transcript: transcript.into(),
            duration_s,
        })
    }
}

/// Ordered clip list with unique paths and charset-clean transcripts.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    entries: Vec<CorpusEntry>,
    charset: Charset,
}

impl CorpusManifest {
    pub fn new(entries: Vec<CorpusEntry>, charset: Charset) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(entries.len());
        for entry in &entries {
            if !seen.insert(entry.audio_path.as_str()) {
                return Err(CorpusError::DuplicatePath(entry.audio_path.clone()));
            }
            if !charset.admits(&entry.transcript) || entry.transcript.contains('|') {
                return Err(CorpusError::CharsetViolation(entry.transcript.clone()));
            }
        }
        Ok(Self { entries, charset })
    }

    pub fn empty(charset: Charset) -> Self {
        Self {
            entries: Vec::new(),
            charset,
        }
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn charset(&self) -> &Charset {
        &self.charset
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_duration_s(&self) -> f64 {
        self.entries.iter().map(|e| e.duration_s).sum()
    }

    /// Fills in durations, e.g. from the audio files after [`parse_manifest`].
    pub fn resolve_durations<F, E>(&mut self, mut duration_of: F) -> Result<(), E>
    where
        F: FnMut(&str) -> Result<f64, E>,
        E: From<CorpusError>,
    {
        for entry in &mut self.entries {
            let d = duration_of(&entry.audio_path)?;
            if !(d >= 0.0 && d.is_finite()) {
                return Err(CorpusError::InvalidDuration(d).into());
            }
            entry.duration_s = d;
        }
        Ok(())
    }

    fn subset(&self, entries: Vec<CorpusEntry>) -> Self {
        Self {
            entries,
            charset: self.charset.clone(),
        }
    }
}

/// Splits into `(kept, dropped)` where kept holds `min_s <= duration <= max_s`.
pub fn filter_by_duration(
    manifest: &CorpusManifest,
    min_s: f64,
    max_s: f64,
) -> Result<(CorpusManifest, CorpusManifest), CorpusError> {
    if !(min_s >= 0.0 && min_s < max_s) {
        return Err(CorpusError::InvalidBounds { min_s, max_s });
    }
    let (kept, dropped): (Vec<_>, Vec<_>) = manifest
        .entries
        .iter()
        .cloned()
        .partition(|e| (min_s..=max_s).contains(&e.duration_s));
    Ok((manifest.subset(kept), manifest.subset(dropped)))
}

/// How many entries go to validation and how they are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPolicy {
    pub val_ratio: f64,
    /// Minimum validation size, applied when the ratio yields fewer.
    pub val_floor: Option<usize>,
    /// Overrides ratio and floor entirely.
    pub explicit_val_count: Option<usize>,
    pub seed: u64,
}

impl SplitPolicy {
    pub fn ratio(val_ratio: f64, seed: u64) -> Self {
        Self {
            val_ratio,
            val_floor: None,
            explicit_val_count: None,
            seed,
        }
    }

    pub fn val_count(&self, total: usize) -> Result<usize, CorpusError> {
        if total == 0 {
            return Err(CorpusError::EmptyManifest);
        }
        if !(self.val_ratio > 0.0 && self.val_ratio < 1.0) {
            return Err(CorpusError::InvalidRatio(self.val_ratio));
        }
        if let Some(count) = self.explicit_val_count {
            if count >= total {
                return Err(CorpusError::ValCountTooLarge { count, total });
            }
            return Ok(count);
        }
        let by_ratio = (self.val_ratio * total as f64).round() as usize;
        let floored = by_ratio.max(self.val_floor.unwrap_or(0));
        Ok(floored.min(total - 1))
    }
}

/// Seeded shuffle followed by a prefix split; both halves keep manifest order.
pub fn split_train_val(
    manifest: &CorpusManifest,
    policy: &SplitPolicy,
) -> Result<(CorpusManifest, CorpusManifest), CorpusError> {
    let total = manifest.len();
    let val_count = policy.val_count(total)?;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(policy.seed));
    let mut is_val = vec![false; total];
    for &i in &order[..val_count] {
        is_val[i] = true;
    }
    let (val, train): (Vec<_>, Vec<_>) = manifest
        .entries
        .iter()
        .zip(&is_val)
        .map(|(e, &v)| (e.clone(), v))
        .partition(|(_, v)| *v);
    Ok((
        manifest.subset(train.into_iter().map(|(e, _)| e).collect()),
        manifest.subset(val.into_iter().map(|(e, _)| e).collect()),
    ))
}

/// Serializes as `audio_path|transcript` lines (LF terminated).
pub fn write_manifest(manifest: &CorpusManifest) -> Vec<u8> {
    let mut out = String::new();
    for e in &manifest.entries {
        out.push_str(&e.audio_path);
        out.push('|');
        out.push_str(&e.transcript);
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses `path|text` lines without any charset check.
pub fn parse_manifest_rows(data: &[u8]) -> Result<Vec<(String, String)>, CorpusError> {
    let text = String::from_utf8_lossy(data);
    let body = text.strip_suffix('\n').unwrap_or(&text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let mut fields = line.split('|');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(path), Some(transcript), None) if !path.is_empty() => {
                    Ok((path.to_string(), transcript.to_string()))
                }
                _ => Err(CorpusError::MalformedLine { line: i + 1 }),
            }
        })
        .collect()
}

/// Inverse of [`write_manifest`]. Durations are left at zero; see
/// [`CorpusManifest::resolve_durations`].
pub fn parse_manifest(data: &[u8], charset: Charset) -> Result<CorpusManifest, CorpusError> {
    let entries = parse_manifest_rows(data)?
        .into_iter()
        .map(|(path, transcript)| CorpusEntry::new(path, transcript, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    CorpusManifest::new(entries, charset)
}
