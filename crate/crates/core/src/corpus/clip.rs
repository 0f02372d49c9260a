use serde::Deserialize;

use super::{CorpusEntry, CorpusError, TextNormalizer};
use crate::audio::AudioBuffer;

/// One aligned sentence of a long recording.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSpan {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

impl AlignmentSpan {
    pub fn new(start_s: f64, end_s: f64, text: impl Into<String>) -> Self {
        Self {
            start_s,
            end_s,
            text: text.into(),
        }
    }
}

#[derive(Deserialize)]
struct SpanRow {
    start_s: f64,
    end_s: f64,
    text: String,
}

/// Reads alignment spans from CSV with header `start_s,end_s,text`.
pub fn parse_alignment_csv(data: &[u8]) -> Result<Vec<AlignmentSpan>, CorpusError> {
    let mut reader = csv::Reader::from_reader(data);
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Csv(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["start_s", "end_s", "text"] {
        return Err(CorpusError::Csv(format!(
            "alignment header must be `start_s,end_s,text`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize::<SpanRow>()
        .map(|row| {
            row.map(|r| AlignmentSpan::new(r.start_s, r.end_s, r.text))
                .map_err(|e| CorpusError::Csv(e.to_string()))
        })
        .collect()
}

fn frame_len(rate: u32, frame_ms: f64) -> Result<usize, CorpusError> {
    if frame_ms.is_nan() || frame_ms <= 0.0 || frame_ms.is_infinite() {
        return Err(CorpusError::InvalidFrame);
    }
    Ok(((frame_ms * f64::from(rate) / 1000.0).round() as usize).max(1))
}

fn frame_dbfs(frame: &[f32]) -> f64 {
    let energy: f64 = frame.iter().map(|&s| f64::from(s) * f64::from(s)).sum();
    let rms = (energy / frame.len() as f64).sqrt();
    if rms > 0.0 {
        20.0 * rms.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Drops leading and trailing frames whose RMS level is below
/// `threshold_dbfs`. The final partial frame counts as a frame.
pub fn trim_silence(
    buffer: &AudioBuffer,
    threshold_dbfs: f64,
    frame_ms: f64,
) -> Result<AudioBuffer, CorpusError> {
    let len = frame_len(buffer.sample_rate_hz(), frame_ms)?;
    let samples = buffer.samples();
    let loud: Vec<bool> = samples
        .chunks(len)
        .map(|frame| frame_dbfs(frame) >= threshold_dbfs)
        .collect();
    let first = loud.iter().position(|&l| l).ok_or(CorpusError::AllSilent)?;
    let last = loud.iter().rposition(|&l| l).expect("a loud frame exists");
    let start = first * len;
    let end = ((last + 1) * len).min(samples.len());
    Ok(buffer.slice(start, end))
}

/// Appends `round(pad_s * rate)` zero samples; `pad_s` must lie in `[0.3, 0.5]`.
pub fn pad_tail_silence(buffer: &AudioBuffer, pad_s: f64) -> Result<AudioBuffer, CorpusError> {
    if !(0.3..=0.5).contains(&pad_s) {
        return Err(CorpusError::PadOutOfRange(pad_s));
    }
    let pad = (pad_s * f64::from(buffer.sample_rate_hz())).round() as usize;
    let mut samples = buffer.samples().to_vec();
    samples.resize(samples.len() + pad, 0.0);
    Ok(AudioBuffer::new(samples, buffer.sample_rate_hz())?)
}

/// Cuts one clip per span. Clips are named `{stem}_{index:04}.wav` (1-based)
/// and their transcripts pass through `normalizer`.
pub fn cut_by_alignment(
    buffer: &AudioBuffer,
    spans: &[AlignmentSpan],
    normalizer: &TextNormalizer,
    stem: &str,
) -> Result<Vec<(AudioBuffer, CorpusEntry)>, CorpusError> {
    let rate = f64::from(buffer.sample_rate_hz());
    let duration_s = buffer.duration_s();
    let mut prev_end = f64::NEG_INFINITY;
    let mut bounds = Vec::with_capacity(spans.len());
    for (index, span) in spans.iter().enumerate() {
        if !(span.start_s >= 0.0 && span.start_s < span.end_s && span.end_s.is_finite()) {
            return Err(CorpusError::InvalidSpan {
                index,
                start_s: span.start_s,
                end_s: span.end_s,
            });
        }
        if span.start_s < prev_end {
            return Err(CorpusError::OverlappingSpans { index });
        }
        prev_end = span.end_s;
        let start = (span.start_s * rate).round() as usize;
        let end = (span.end_s * rate).round() as usize;
        if end > buffer.len() {
            return Err(CorpusError::SpanOutOfRange {
                index,
                start_s: span.start_s,
                end_s: span.end_s,
                duration_s,
            });
        }
        bounds.push((start, end));
    }

    spans
        .iter()
        .zip(bounds)
        .enumerate()
        .map(|(i, (span, (start, end)))| {
            let clip = buffer.slice(start, end);
            let entry = CorpusEntry::new(
                format!("{stem}_{:04}.wav", i + 1),
                normalizer.normalize(&span.text)?,
                clip.duration_s(),
            )?;
            Ok((clip, entry))
        })
        .collect()
}
