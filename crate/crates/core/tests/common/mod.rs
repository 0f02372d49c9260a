#![allow(dead_code)]

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub const BIN: &str = env!("CARGO_BIN_EXE_voxforensics");

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Outcome {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn run_ok(args: &[&str]) -> Outcome {
    let out = run(args);
    assert_eq!(out.code, 0, "{args:?} failed: {}", out.stderr);
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub fn write_wav(path: &Path, samples: &[f32], rate: u32) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &s in samples {
        w.write_sample((s * 32767.0).round() as i16).unwrap();
    }
    w.finalize().unwrap();
}

pub fn tone(freq_hz: f64, seconds: f64, rate: u32, amplitude: f64) -> Vec<f32> {
    let n = (seconds * f64::from(rate)).round() as usize;
    (0..n)
        .map(|i| (amplitude * (TAU * freq_hz * i as f64 / f64::from(rate)).sin()) as f32)
        .collect()
}

pub fn silence(seconds: f64, rate: u32) -> Vec<f32> {
    vec![0.0; (seconds * f64::from(rate)).round() as usize]
}

pub const FIXTURE_RATE: u32 = 16_000;

/// Long recording with four aligned sentences: two speech-like tones, one
/// silent span and one span too short to keep.
pub fn alignment_fixture(dir: &Path) -> PathBuf {
    let input = dir.join("recordings");
    let r = FIXTURE_RATE;
    let mut audio = silence(0.3, r);
    audio.extend(tone(220.0, 1.2, r, 0.5)); // 0.3 .. 1.5
    audio.extend(silence(1.1, r)); // 1.5 .. 2.6
    audio.extend(tone(330.0, 0.05, r, 0.5)); // 2.6 .. 2.65
    audio.extend(silence(0.45, r)); // 2.65 .. 3.1
    audio.extend(tone(440.0, 1.5, r, 0.4)); // 3.1 .. 4.6
    audio.extend(silence(0.4, r)); // 4.6 .. 5.0
    write_wav(&input.join("rede.wav"), &audio, r);
    fs::write(
        input.join("rede.csv"),
        "start_s,end_s,text\n\
         0.0,2.0,\"Wir haben 21 Punkte, sagte Dr. Müller!\"\n\
         2.0,2.5,Stille\n\
         2.5,3.0,kurz\n\
         3.0,5.0,Am 3. Mai kamen 1.500 Gäste.\n",
    )
    .unwrap();
    let lexicon = dir.join("lexicon.csv");
    fs::write(&lexicon, "from,to\nDr.,Doktor\n").unwrap();
    input
}

/// Writes a synthetic corpus and runs features, profile and detect on it.
/// Returns the output folder.
pub fn detection_pipeline(dir: &Path, jobs: &str) -> PathBuf {
    let syn = dir.join("syn");
    let out = dir.join("out");
    run_ok(&["--jobs", jobs, "synth", "--out", p(&syn)]);
    run_ok(&[
        "--jobs", jobs, "features", "--input", p(&syn.join("reference")), "--out", p(&out.join("ref.csv")),
    ]);
    run_ok(&[
        "--jobs", jobs, "features", "--input", p(&syn.join("queries")), "--out", p(&out.join("queries.csv")),
        "--labels", p(&syn.join("truth.csv")),
    ]);
    run_ok(&[
        "--jobs", jobs, "profile", "--features", p(&out.join("ref.csv")), "--out", p(&out.join("profile.json")),
        "--created-at", "2024-05-01T12:00:00Z", "--k-distance", p(&out.join("kdist.csv")),
    ]);
    run_ok(&[
        "--jobs", jobs, "detect", "--profile", p(&out.join("profile.json")), "--features",
        p(&out.join("queries.csv")), "--out", p(&out.join("report.json")), "--eps", "2.0", "--truth",
        p(&syn.join("truth.csv")),
    ]);
    run_ok(&[
        "--jobs", jobs, "report", "--report", p(&out.join("report.json")), "--features",
        p(&out.join("ref.csv")), "--features", p(&out.join("queries.csv")), "--out", p(&out.join("figures")),
    ]);
    out
}

/// Every file below `root`, relative path → contents, in sorted order.
pub fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

pub struct ClipCheck {
    pub path: PathBuf,
    pub problems: Vec<String>,
}

/// Checks every clip listed in `metadata.csv` for format, duration,
/// transcript charset and tail padding.
pub fn check_prepared(out: &Path, rate: u32, pad_s: f64, threshold_dbfs: f64) -> Vec<ClipCheck> {
    let charset = voxforensics::corpus::Charset::german();
    let metadata = fs::read_to_string(out.join("metadata.csv")).unwrap();
    let pad = (pad_s * f64::from(rate)).round() as usize;
    let frame = (0.01 * f64::from(rate)).round() as usize;
    let mut checks = Vec::new();
    for line in metadata.lines() {
        let (rel, text) = line.split_once('|').unwrap();
        let path = out.join(rel);
        let mut problems = Vec::new();
        let reader = hound::WavReader::open(&path).unwrap();
        let spec = reader.spec();
        if spec.channels != 1 {
            problems.push(format!("{} channels", spec.channels));
        }
        if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
            problems.push("not 16-bit PCM".into());
        }
        if spec.sample_rate != rate {
            problems.push(format!("rate {}", spec.sample_rate));
        }
        let samples: Vec<i16> = reader.into_samples().map(Result::unwrap).collect();
        let duration = samples.len() as f64 / f64::from(rate);
        if !(0.5..=30.0).contains(&duration) {
            problems.push(format!("duration {duration}"));
        }
        if !charset.admits(text) || text.is_empty() {
            problems.push(format!("transcript {text:?}"));
        }
        if samples.len() < pad + frame || samples[samples.len() - pad..].iter().any(|&s| s != 0) {
            problems.push("tail is not zero padded".into());
        } else {
            // The frame right before the pad must still be above the silence
            // threshold, otherwise the pad would not start where the audio ends.
            let body = &samples[samples.len() - pad - frame..samples.len() - pad];
            let energy: f64 = body.iter().map(|&s| (f64::from(s) / 32768.0).powi(2)).sum();
            let dbfs = 10.0 * (energy / body.len() as f64).log10();
            if dbfs < threshold_dbfs {
                problems.push(format!("last audio frame at {dbfs:.1} dBFS before the pad"));
            }
        }
        checks.push(ClipCheck { path, problems });
    }
    checks
}
