//! Direct (FFT triple-product) bispectrum estimation.
//!
//! The signal is cut into windowed segments; for each segment with DFT `X`
//! the estimator accumulates
//!
//! ```text
//! B(j, k) = X(j) * X(k) * conj(X(j + k))
//! ```
//!
//! over the principal domain `0 <= j, k` with `j + k <= N/2`, then averages
//! over segments. Only `j <= k` is computed; the mirror half is copied, so
//! `B(j, k) == B(k, j)` holds bit for bit.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::fmt_sig;

pub const DEFAULT_SEGMENT_LEN: usize = 256;
pub const DEFAULT_OVERLAP: f64 = 0.5;

/// Segments summed sequentially before the pairwise reduction.
const BLOCK_SEGMENTS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum BispectrumError {
    #[error("segment length {0} must be a power of two >= 8")]
    InvalidSegmentLen(usize),
    #[error("overlap fraction {0} must lie in [0, 1)")]
    InvalidOverlap(f64),
    #[error("signal has {len} samples but a segment needs {segment_len}")]
    SignalTooShort { len: usize, segment_len: usize },
    #[error("sample {0} is not finite")]
    NonFiniteSample(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            // Periodic Hann.
            Window::Hann => (0..len)
                .map(|t| 0.5 - 0.5 * (2.0 * PI * t as f64 / len as f64).cos())
                .collect(),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rectangular" | "rect" | "boxcar" => Ok(Window::Rectangular),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(format!("unknown window {other:?} (expected rectangular or hann)")),
        }
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BispectrumParams {
    pub segment_len: usize,
    pub overlap_fraction: f64,
    pub window: Window,
}

impl Default for BispectrumParams {
    fn default() -> Self {
        Self {
            segment_len: DEFAULT_SEGMENT_LEN,
            overlap_fraction: DEFAULT_OVERLAP,
            window: Window::Hann,
        }
    }
}

impl BispectrumParams {
    pub fn new(
        segment_len: usize,
        overlap_fraction: f64,
        window: Window,
    ) -> Result<Self, BispectrumError> {
        let params = Self {
            segment_len,
            overlap_fraction,
            window,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), BispectrumError> {
        if self.segment_len < 8 || !self.segment_len.is_power_of_two() {
            return Err(BispectrumError::InvalidSegmentLen(self.segment_len));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(BispectrumError::InvalidOverlap(self.overlap_fraction));
        }
        Ok(())
    }

    pub fn hop(&self) -> usize {
        ((self.segment_len as f64 * (1.0 - self.overlap_fraction)).floor() as usize).max(1)
    }

    /// Number of complete segments that fit into `len` samples.
    pub fn segment_count(&self, len: usize) -> usize {
        if len < self.segment_len {
            0
        } else {
            (len - self.segment_len) / self.hop() + 1
        }
    }
}

/// Principal-domain geometry shared by complex and real grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Domain {
    half: usize,
}

impl Domain {
    fn n_bins(self) -> usize {
        self.half + 1
    }

    fn is_valid(self, j: usize, k: usize) -> bool {
        j + k <= self.half
    }

    fn index(self, j: usize, k: usize) -> usize {
        j * self.n_bins() + k
    }

    /// Row-major walk over every valid `(j, k)`, both orders included.
    fn pairs(self) -> impl Iterator<Item = (usize, usize)> {
        let half = self.half;
        (0..=half).flat_map(move |j| (0..=half - j).map(move |k| (j, k)))
    }

    fn pair_count(self) -> usize {
        (self.half + 1) * (self.half + 2) / 2
    }
}

/// Averaged bispectrum over the principal domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BispectrumGrid {
    segment_len: usize,
    domain: Domain,
    values: Vec<Complex64>,
    segment_count: usize,
}

impl BispectrumGrid {
    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    /// `segment_len / 2 + 1`.
    pub fn n_bins(&self) -> usize {
        self.domain.n_bins()
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    pub fn is_valid(&self, j: usize, k: usize) -> bool {
        self.domain.is_valid(j, k)
    }

    pub fn value(&self, j: usize, k: usize) -> Option<Complex64> {
        self.domain
            .is_valid(j, k)
            .then(|| self.values[self.domain.index(j, k)])
    }

    /// Number of valid `(j, k)` cells.
    pub fn cell_count(&self) -> usize {
        self.domain.pair_count()
    }

    /// Every valid cell in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.domain
            .pairs()
            .map(move |(j, k)| (j, k, self.values[self.domain.index(j, k)]))
    }

    pub fn magnitude_grid(&self) -> RealGrid {
        self.map_real(|v| v.norm())
    }

    pub fn biphase_grid(&self) -> RealGrid {
        self.map_real(biphase)
    }

    fn map_real(&self, f: impl Fn(Complex64) -> f64) -> RealGrid {
        RealGrid {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// CSV with header `j,k,real,imag,magnitude,biphase`, one row per valid cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,k,real,imag,magnitude,biphase\n");
        for (j, k, v) in self.cells() {
            let _ = writeln!(
                out,
                "{j},{k},{},{},{},{}",
                fmt_sig(v.re),
                fmt_sig(v.im),
                fmt_sig(v.norm()),
                fmt_sig(biphase(v))
            );
        }
        out
    }
}

/// Principal argument in `(-pi, pi]`, with `arg(0) = 0`.
pub fn biphase(v: Complex64) -> f64 {
    if v.re == 0.0 && v.im == 0.0 {
        return 0.0;
    }
    let a = v.im.atan2(v.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Real-valued view (magnitude or biphase) over the principal domain.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    domain: Domain,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn n_bins(&self) -> usize {
        self.domain.n_bins()
    }

    pub fn get(&self, j: usize, k: usize) -> Option<f64> {
        self.domain
            .is_valid(j, k)
            .then(|| self.values[self.domain.index(j, k)])
    }

    /// Values of every valid cell in row-major order.
    pub fn valid_values(&self) -> Vec<f64> {
        self.domain
            .pairs()
            .map(|(j, k)| self.values[self.domain.index(j, k)])
            .collect()
    }
}

/// Estimates the bispectrum of `signal`. A trailing partial segment is
/// discarded.
pub fn estimate_bispectrum(
    signal: &[f64],
    params: &BispectrumParams,
) -> Result<BispectrumGrid, BispectrumError> {
    params.validate()?;
    if let Some(i) = signal.iter().position(|s| !s.is_finite()) {
        return Err(BispectrumError::NonFiniteSample(i));
    }
    let n = params.segment_len;
    if signal.len() < n {
        return Err(BispectrumError::SignalTooShort {
            len: signal.len(),
            segment_len: n,
        });
    }

    let domain = Domain { half: n / 2 };
    // Upper triangle j <= k of the principal domain.
    let upper: Vec<(usize, usize)> = domain.pairs().filter(|&(j, k)| j <= k).collect();
    let hop = params.hop();
    let segment_count = params.segment_count(signal.len());
    let starts: Vec<usize> = (0..segment_count).map(|s| s * hop).collect();
    let window = params.window.coefficients(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let block_sums: Vec<Vec<Complex64>> = starts
        .par_chunks(BLOCK_SEGMENTS)
        .map(|block| accumulate_block(signal, block, &window, &fft, &upper))
        .collect();
    let total = pairwise_sum(block_sums);

    let scale = 1.0 / segment_count as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); domain.n_bins() * domain.n_bins()];
    for (&(j, k), &sum) in upper.iter().zip(&total) {
        let v = sum * scale;
        values[domain.index(j, k)] = v;
        values[domain.index(k, j)] = v;
    }
    Ok(BispectrumGrid {
        segment_len: n,
        domain,
        values,
        segment_count,
    })
}

fn accumulate_block(
    signal: &[f64],
    starts: &[usize],
    window: &[f64],
    fft: &Arc<dyn Fft<f64>>,
    upper: &[(usize, usize)],
) -> Vec<Complex64> {
    let n = window.len();
    let mut acc = vec![Complex64::new(0.0, 0.0); upper.len()];
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for &start in starts {
        for ((slot, &x), &w) in spectrum.iter_mut().zip(&signal[start..start + n]).zip(window) {
            *slot = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut spectrum, &mut scratch);
        for (a, &(j, k)) in acc.iter_mut().zip(upper) {
            *a += spectrum[j] * spectrum[k] * spectrum[j + k].conj();
        }
    }
    acc
}

/// Sums equally sized vectors along a fixed binary tree, so the result
/// depends only on the number of inputs.
fn pairwise_sum(mut level: Vec<Vec<Complex64>>) -> Vec<Complex64> {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut iter = level.into_iter();
        while let Some(mut left) = iter.next() {
            if let Some(right) = iter.next() {
                for (l, r) in left.iter_mut().zip(right) {
                    *l += r;
                }
            }
            next.push(left);
        }
        level = next;
    }
    level.pop().unwrap_or_default()
}
