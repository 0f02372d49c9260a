// Encode a tone as 16-bit WAV, decode it again and resample it to the
// canonical analysis rate.
//
// Run with `cargo run --example wav_roundtrip`.

use std::error::Error;
use std::f32::consts::TAU;

use voxforensics::audio::{decode_wav, encode_wav, resample, AudioBuffer, DEFAULT_RATE_HZ};

pub struct Roundtrip {
    pub encoded_bytes: usize,
    pub exact: bool,
    pub resampled_len: usize,
    pub peak_bin_hz: f64,
}

pub fn run_example() -> Result<Roundtrip, Box<dyn Error>> {
    let rate = 16_000;
    // Samples on the 16-bit grid survive the round trip bit for bit.
    let samples: Vec<f32> = (0..rate)
        .map(|i| {
            let x = 0.5 * (TAU * 440.0 * i as f32 / rate as f32).sin();
            (x * 32768.0).round() / 32768.0
        })
        .collect();
    let original = AudioBuffer::new(samples, rate)?;
    let bytes = encode_wav(&original)?;
    let decoded = decode_wav(&bytes)?;
    let canonical = resample(&decoded, DEFAULT_RATE_HZ)?;

    // Cheap peak search over a 1 Hz grid near the tone.
    let x = canonical.to_f64();
    let fs = f64::from(canonical.sample_rate_hz());
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, v) in x.iter().enumerate() {
            let w = std::f64::consts::TAU * f * n as f64 / fs;
            re += v * w.cos();
            im -= v * w.sin();
        }
        re * re + im * im
    };
    let peak_bin_hz = (400..480)
        .map(f64::from)
        .max_by(|a, b| power(*a).total_cmp(&power(*b)))
        .unwrap_or(0.0);

    Ok(Roundtrip {
        encoded_bytes: bytes.len(),
        exact: decoded == original,
        resampled_len: canonical.len(),
        peak_bin_hz,
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    let r = run_example()?;
    println!("encoded {} bytes, lossless round trip: {}", r.encoded_bytes, r.exact);
    println!("resampled to {} Hz: {} samples, peak at {} Hz", DEFAULT_RATE_HZ, r.resampled_len, r.peak_bin_hz);
    Ok(())
}
