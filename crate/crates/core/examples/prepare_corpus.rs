// Library-level corpus preparation: cut a long recording at aligned
// sentence boundaries, trim and pad each clip, filter by duration and
// split into training and validation sets.
//
// Run with `cargo run --example prepare_corpus`.

use std::error::Error;
use std::f32::consts::TAU;

use voxforensics::audio::{AudioBuffer, DEFAULT_RATE_HZ};
use voxforensics::corpus::{
    cut_by_alignment, filter_by_duration, pad_tail_silence, split_train_val, trim_silence, AlignmentSpan,
    Charset, CorpusEntry, CorpusManifest, SplitPolicy, TextNormalizer, DEFAULT_FRAME_MS, DEFAULT_MAX_DURATION_S,
    DEFAULT_MIN_DURATION_S, DEFAULT_PAD_S, DEFAULT_SILENCE_DBFS, DEFAULT_VAL_RATIO,
};

pub struct Prepared {
    pub kept: Vec<(String, String, f64)>,
    pub dropped: usize,
    /// Train/validation sizes for a 10071-clip manifest at the default ratio.
    pub large_split: (usize, usize),
}

fn recording(rate: u32) -> AudioBuffer {
    // Sentence, pause, short blip, pause, sentence.
    let plan = [(0.25, 0.0), (1.5, 0.4), (0.5, 0.0), (0.05, 0.4), (0.6, 0.0), (2.0, 0.3), (0.25, 0.0)];
    let mut samples = Vec::new();
    for (seconds, amp) in plan {
        let n = (seconds * f64::from(rate)) as usize;
        samples.extend((0..n).map(|i| amp * (TAU * 180.0 * i as f32 / rate as f32).sin()));
    }
    AudioBuffer::new(samples, rate).expect("amplitudes below full scale")
}

pub fn run_example() -> Result<Prepared, Box<dyn Error>> {
    let rate = DEFAULT_RATE_HZ;
    let spans = [
        AlignmentSpan::new(0.0, 2.0, "Guten Abend, meine Damen und Herren."),
        AlignmentSpan::new(2.0, 2.7, "Äh."),
        AlignmentSpan::new(2.7, 5.1, "Heute sprechen wir über 3 Themen."),
    ];
    let normalizer = TextNormalizer::new(std::iter::empty::<(&str, &str)>());
    let clips = cut_by_alignment(&recording(rate), &spans, &normalizer, "abend")?;

    let mut entries = Vec::new();
    for (audio, entry) in clips {
        let trimmed = trim_silence(&audio, DEFAULT_SILENCE_DBFS, DEFAULT_FRAME_MS)?;
        let padded = pad_tail_silence(&trimmed, DEFAULT_PAD_S)?;
        entries.push(CorpusEntry::new(entry.audio_path, entry.transcript, padded.duration_s())?);
    }
    let manifest = CorpusManifest::new(entries, Charset::german())?;
    let (kept, dropped) = filter_by_duration(&manifest, DEFAULT_MIN_DURATION_S, DEFAULT_MAX_DURATION_S)?;

    let large = CorpusManifest::new(
        (0..10071)
            .map(|i| CorpusEntry::new(format!("wavs/{i:05}.wav"), "satz", 3.0))
            .collect::<Result<_, _>>()?,
        Charset::german(),
    )?;
    let (train, val) = split_train_val(&large, &SplitPolicy::ratio(DEFAULT_VAL_RATIO, 0))?;

    Ok(Prepared {
        kept: kept
            .entries()
            .iter()
            .map(|e| (e.audio_path.clone(), e.transcript.clone(), e.duration_s))
            .collect(),
        dropped: dropped.len(),
        large_split: (train.len(), val.len()),
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    let p = run_example()?;
    for (path, text, seconds) in &p.kept {
        println!("{path}|{text}  ({seconds:.3} s)");
    }
    println!("dropped {} clip(s) outside the duration window", p.dropped);
    println!("10071 clips at ratio {DEFAULT_VAL_RATIO}: {} train / {} val", p.large_split.0, p.large_split.1);
    Ok(())
}
