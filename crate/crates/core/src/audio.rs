//! WAV decoding/encoding and band-limited resampling.
//!
//! Everything downstream works on [`AudioBuffer`]: mono `f32` samples in
//! `[-1, 1]` plus a sample rate. Decoding accepts 16-bit PCM and 32-bit IEEE
//! float RIFF/WAVE files with any channel count and averages the channels.
//! Encoding always emits mono 16-bit PCM.

use std::f64::consts::PI;
use std::io::Cursor;

use thiserror::Error;

/// Canonical corpus sample rate in Hz.
pub const DEFAULT_RATE_HZ: u32 = 22_050;

const PCM_SCALE: f64 = 32_768.0;
const PCM_MAX: f64 = 32_767.0;

const KAISER_BETA: f64 = 8.6;
const TAPS_PER_PHASE: usize = 64;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed RIFF/WAVE container: {0}")]
    MalformedContainer(String),
    #[error("unsupported sample format: {0}")]
    UnsupportedFormat(String),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("sample {index} = {value} lies outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f32 },
    #[error("wav encoding failed: {0}")]
    Encode(String),
}

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        for (index, &value) in samples.iter().enumerate() {
            if !value.is_finite() {
                return Err(AudioError::NonFiniteSample { index });
            }
            if !(-1.0..=1.0).contains(&value) {
                return Err(AudioError::SampleOutOfRange { index, value });
            }
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a buffer from arbitrary finite values, clamping into `[-1, 1]`.
    pub fn from_clamped(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Result<Self, AudioError> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| f64::from(s)).collect()
    }

    /// Copies `[start, end)` into a new buffer at the same rate.
    pub fn slice(&self, start: usize, end: usize) -> AudioBuffer {
        AudioBuffer {
            samples: self.samples[start..end].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Decodes a RIFF/WAVE byte stream into a mono buffer.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_read_error)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(AudioError::MalformedContainer("zero channels".into()));
    }

    let mono: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => {
            let raw = reader
                .into_samples::<i16>()
                .collect::<Result<Vec<_>, _>>()
                .map_err(map_read_error)?;
            check_whole_frames(raw.len(), channels)?;
            // Integer sums keep identical-channel downmixes exact.
            raw.chunks_exact(channels)
                .map(|frame| {
                    let sum: i64 = frame.iter().map(|&s| i64::from(s)).sum();
                    (sum as f64 / (channels as f64 * PCM_SCALE)) as f32
                })
                .collect()
        }
        (hound::SampleFormat::Float, 32) => {
            let raw = reader
                .into_samples::<f32>()
                .collect::<Result<Vec<_>, _>>()
                .map_err(map_read_error)?;
            check_whole_frames(raw.len(), channels)?;
            raw.chunks_exact(channels)
                .map(|frame| {
                    let sum: f64 = frame.iter().map(|&s| f64::from(s)).sum();
                    (sum / channels as f64) as f32
                })
                .collect()
        }
        (format, bits) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "{bits}-bit {format:?}; expected 16-bit PCM or 32-bit float"
            )))
        }
    };

    for (index, value) in mono.iter().enumerate() {
        if !value.is_finite() {
            return Err(AudioError::NonFiniteSample { index });
        }
    }
    AudioBuffer::from_clamped(mono, spec.sample_rate)
}

fn check_whole_frames(len: usize, channels: usize) -> Result<(), AudioError> {
    if !len.is_multiple_of(channels) {
        return Err(AudioError::MalformedContainer(format!(
            "{len} samples do not form whole {channels}-channel frames"
        )));
    }
    Ok(())
}

fn map_read_error(err: hound::Error) -> AudioError {
    match err {
        hound::Error::Unsupported => AudioError::UnsupportedFormat("unsupported wav encoding".into()),
        hound::Error::UnfinishedSample => {
            AudioError::MalformedContainer("truncated sample data".into())
        }
        other => AudioError::MalformedContainer(other.to_string()),
    }
}

/// Quantizes one sample to a 16-bit PCM code.
///
/// The code range is the symmetric `[-32767, 32767]`, so `-1.0` and `1.0`
/// both saturate, while every other `q / 32768` quantum maps back to `q`.
pub fn quantize_pcm16(sample: f32) -> i16 {
    let scaled = (f64::from(sample).clamp(-1.0, 1.0) * PCM_SCALE).round();
    scaled.clamp(-PCM_MAX, PCM_MAX) as i16
}

/// Encodes a buffer as mono 16-bit little-endian PCM WAV.
pub fn encode_wav(buffer: &AudioBuffer) -> Result<Vec<u8>, AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::with_capacity(44 + buffer.len() * 2));
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec)
            .map_err(|e| AudioError::Encode(e.to_string()))?;
        let mut samples = writer.get_i16_writer(buffer.len() as u32);
        for &s in &buffer.samples {
            samples.write_sample(quantize_pcm16(s));
        }
        samples.flush().map_err(|e| AudioError::Encode(e.to_string()))?;
        writer
            .finalize()
            .map_err(|e| AudioError::Encode(e.to_string()))?;
    }
    Ok(cursor.into_inner())
}

/// Resamples with a Kaiser-windowed sinc kernel.
///
/// The kernel cutoff is the lower of the two Nyquist frequencies and each
/// output sample's weights are renormalized to sum to one, so DC passes
/// through unchanged even at the edges.
pub fn resample(buffer: &AudioBuffer, target_rate_hz: u32) -> Result<AudioBuffer, AudioError> {
    if target_rate_hz == 0 {
        return Err(AudioError::ZeroSampleRate);
    }
    let source_rate = buffer.sample_rate_hz;
    if source_rate == target_rate_hz || buffer.is_empty() {
        return Ok(AudioBuffer {
            samples: buffer.samples.clone(),
            sample_rate_hz: target_rate_hz,
        });
    }

    let ratio = f64::from(target_rate_hz) / f64::from(source_rate);
    let out_len = (buffer.len() as f64 * ratio).round() as usize;
    let cutoff = ratio.min(1.0);
    let half_width = (TAPS_PER_PHASE / 2) as f64 / cutoff;
    let norm = bessel_i0(KAISER_BETA);
    let input = &buffer.samples;
    let last = input.len() as i64 - 1;

    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let center = i as f64 / ratio;
        let lo = ((center - half_width).ceil() as i64).max(0);
        let hi = ((center + half_width).floor() as i64).min(last);
        let mut acc = 0.0;
        let mut weight_sum = 0.0;
        for n in lo..=hi {
            let offset = center - n as f64;
            let x = offset / half_width;
            let taper = bessel_i0(KAISER_BETA * (1.0 - x * x).max(0.0).sqrt()) / norm;
            let w = cutoff * sinc(cutoff * offset) * taper;
            acc += w * f64::from(input[n as usize]);
            weight_sum += w;
        }
        let value = if weight_sum.abs() > f64::EPSILON {
            acc / weight_sum
        } else {
            0.0
        };
        out.push(value.clamp(-1.0, 1.0) as f32);
    }
    AudioBuffer::new(out, target_rate_hz)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half_sq = (x / 2.0) * (x / 2.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= half_sq / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
