//! Seeded test signals with known bispectral structure.
//!
//! A triad is the sum of three cosines at bins `f1`, `f2` and `f1 + f2` of
//! the analysis segment. Phases are redrawn for every block of
//! `segment_len` samples. With `coupled` the third phase is `phi1 + phi2`
//! (quadratic phase coupling), which survives segment averaging as a peak
//! at `(f1, f2)`; otherwise it is drawn independently and averages out.
//!
//! Randomness comes from ChaCha8 (a counter-based generator), with phases
//! and noise on separate streams of the same seed.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

const PHASE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("bins {f1}+{f2} must be >= 1 each and sum to at most {max}")]
    BinOutOfRange { f1: usize, f2: usize, max: usize },
    #[error("length {length} is shorter than one segment ({segment_len})")]
    TooShort { length: usize, segment_len: usize },
    #[error("segment length must be positive")]
    ZeroSegment,
    #[error("{0} must be finite and non-negative")]
    InvalidScale(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriadSpec {
    pub f1_bin: usize,
    pub f2_bin: usize,
    pub coupled: bool,
    pub amplitude: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl TriadSpec {
    pub fn validate(&self, segment_len: usize) -> Result<(), SynthError> {
        if segment_len == 0 {
            return Err(SynthError::ZeroSegment);
        }
        let max = segment_len / 2;
        if self.f1_bin < 1 || self.f2_bin < 1 || self.f1_bin + self.f2_bin > max {
            return Err(SynthError::BinOutOfRange {
                f1: self.f1_bin,
                f2: self.f2_bin,
                max,
            });
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(SynthError::InvalidScale("amplitude"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidScale("noise_sigma"));
        }
        Ok(())
    }
}

pub fn gen_triad(spec: &TriadSpec, length: usize, segment_len: usize) -> Result<Vec<f64>, SynthError> {
    spec.validate(segment_len)?;
    if length < segment_len {
        return Err(SynthError::TooShort {
            length,
            segment_len,
        });
    }
    let mut phases = ChaCha8Rng::seed_from_u64(spec.seed);
    phases.set_stream(PHASE_STREAM);
    let noise = gen_noise(length, spec.noise_sigma, spec.seed)?;

    let n = segment_len as f64;
    let w1 = TAU * spec.f1_bin as f64 / n;
    let w2 = TAU * spec.f2_bin as f64 / n;
    let w3 = TAU * (spec.f1_bin + spec.f2_bin) as f64 / n;
    let mut out = Vec::with_capacity(length);
    for block_start in (0..length).step_by(segment_len) {
        let phi1: f64 = phases.random_range(0.0..TAU);
        let phi2: f64 = phases.random_range(0.0..TAU);
        let independent: f64 = phases.random_range(0.0..TAU);
        let phi3 = if spec.coupled { phi1 + phi2 } else { independent };
        let block_end = (block_start + segment_len).min(length);
        for (i, e) in noise[block_start..block_end].iter().enumerate() {
            let local = i as f64;
            let tone = (w1 * local + phi1).cos() + (w2 * local + phi2).cos() + (w3 * local + phi3).cos();
            out.push(spec.amplitude * tone + e);
        }
    }
    Ok(out)
}

/// Seeded Gaussian white noise with standard deviation `sigma`.
pub fn gen_noise(length: usize, sigma: f64, seed: u64) -> Result<Vec<f64>, SynthError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(SynthError::InvalidScale("sigma"));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; length]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    Ok((0..length)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Role of a generated sample in a detection experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SampleRole {
    /// Uncoupled triad used to build the known-real profile.
    Reference,
    /// Held-out uncoupled triad; ground truth "real".
    RealQuery,
    /// Coupled triad; ground truth "fake".
    FakeQuery,
}

impl SampleRole {
    pub fn is_fake(self) -> bool {
        self == SampleRole::FakeQuery
    }

    fn prefix(self) -> &'static str {
        match self {
            SampleRole::Reference => "ref",
            SampleRole::RealQuery => "real",
            SampleRole::FakeQuery => "fake",
        }
    }
}

/// Layout of a synthetic reference/query corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSpec {
    pub f1_bin: usize,
    pub f2_bin: usize,
    pub amplitude: f64,
    pub noise_sigma: f64,
    pub segment_len: usize,
    /// Signal length in blocks of `segment_len`.
    pub blocks: usize,
    pub n_reference: usize,
    pub n_real_queries: usize,
    pub n_fake_queries: usize,
    /// Sample `i` (counting across all roles in order) uses seed `seed + i`.
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            f1_bin: 20,
            f2_bin: 35,
            amplitude: 0.25,
            noise_sigma: 0.025,
            segment_len: 256,
            blocks: 64,
            n_reference: 50,
            n_real_queries: 25,
            n_fake_queries: 25,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub sample_id: String,
    pub role: SampleRole,
    pub samples: Vec<f64>,
}

/// Generates every sample of `spec`: references first, then real and fake queries.
pub fn gen_corpus(spec: &CorpusSpec) -> Result<Vec<SynthSample>, SynthError> {
    let roles = std::iter::repeat_n(SampleRole::Reference, spec.n_reference)
        .chain(std::iter::repeat_n(SampleRole::RealQuery, spec.n_real_queries))
        .chain(std::iter::repeat_n(SampleRole::FakeQuery, spec.n_fake_queries));
    let mut counters = [0usize; 3];
    roles
        .enumerate()
        .map(|(i, role)| {
            let triad = TriadSpec {
                f1_bin: spec.f1_bin,
                f2_bin: spec.f2_bin,
                coupled: role.is_fake(),
                amplitude: spec.amplitude,
                noise_sigma: spec.noise_sigma,
                seed: spec.seed.wrapping_add(i as u64),
            };
            let n = &mut counters[role as usize];
            let sample_id = format!("{}_{:03}", role.prefix(), *n);
            *n += 1;
            Ok(SynthSample {
                sample_id,
                role,
                samples: gen_triad(&triad, spec.blocks * spec.segment_len, spec.segment_len)?,
            })
        })
        .collect()
}
