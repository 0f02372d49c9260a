use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use log::warn;
use rayon::prelude::*;

use super::{create_dir, file_stem, list_wavs, read_file, write_file, CliError};
use crate::audio::{decode_wav, encode_wav, resample, AudioBuffer, DEFAULT_RATE_HZ};
use crate::corpus::{
    cut_by_alignment, filter_by_duration, pad_tail_silence, parse_alignment_csv, parse_manifest_rows,
    split_train_val, trim_silence, write_manifest, CorpusEntry, CorpusError, CorpusManifest, SplitPolicy,
    TextNormalizer, DEFAULT_FRAME_MS, DEFAULT_MAX_DURATION_S, DEFAULT_MIN_DURATION_S, DEFAULT_PAD_S,
    DEFAULT_SILENCE_DBFS, DEFAULT_VAL_RATIO,
};
use crate::numfmt::fmt_sig;

#[derive(Debug, Clone, Args)]
pub struct PrepareArgs {
    /// Folder with recordings. Without --manifest every `NAME.wav` needs an
    /// alignment file `NAME.csv` (`start_s,end_s,text`).
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// `file|transcript` list of whole-file clips, paths relative to --input.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Abbreviation lexicon CSV with header `from,to`.
    #[arg(long, value_name = "CSV")]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RATE_HZ)]
    pub rate: u32,
    #[arg(long, default_value_t = DEFAULT_SILENCE_DBFS, allow_negative_numbers = true)]
    pub silence_dbfs: f64,
    #[arg(long, default_value_t = DEFAULT_FRAME_MS)]
    pub frame_ms: f64,
    #[arg(long, default_value_t = DEFAULT_PAD_S)]
    pub pad_s: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_DURATION_S)]
    pub min_duration: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DURATION_S)]
    pub max_duration: f64,
    #[arg(long, default_value_t = DEFAULT_VAL_RATIO)]
    pub val_ratio: f64,
    /// Minimum validation size when the ratio yields fewer clips.
    #[arg(long)]
    pub val_floor: Option<usize>,
    /// Exact validation size; overrides --val-ratio and --val-floor.
    #[arg(long)]
    pub val_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

struct Clip {
    name: String,
    audio: AudioBuffer,
    transcript: String,
}

#[derive(Default)]
struct Dropped {
    silent: usize,
    empty_text: usize,
}

fn corpus_err(context: impl Into<String>) -> impl FnOnce(CorpusError) -> CliError {
    let context = context.into();
    move |source| CliError::Corpus { context, source }
}

fn load(path: &Path, rate: u32) -> Result<AudioBuffer, CliError> {
    let audio_err = |source| CliError::Audio {
        path: path.to_path_buf(),
        source,
    };
    let buffer = decode_wav(&read_file(path)?).map_err(audio_err)?;
    resample(&buffer, rate).map_err(audio_err)
}

/// Recordings with their transcripts, one clip per file.
fn clips_from_manifest(args: &PrepareArgs, manifest: &Path, normalizer: &TextNormalizer) -> Result<Vec<Clip>, CliError> {
    let rows = parse_manifest_rows(&read_file(manifest)?)
        .map_err(corpus_err(manifest.display().to_string()))?;
    rows.par_iter()
        .map(|(file, text)| {
            let path = args.input.join(file);
            let audio = load(&path, args.rate)?;
            let transcript = normalizer
                .normalize(text)
                .map_err(corpus_err(format!("{} transcript", path.display())))?;
            Ok(Clip {
                name: file_stem(Path::new(file)),
                audio,
                transcript,
            })
        })
        .collect()
}

/// Long recordings cut into sentences by their alignment CSVs.
fn clips_from_alignments(args: &PrepareArgs, normalizer: &TextNormalizer) -> Result<Vec<Clip>, CliError> {
    let recordings = list_wavs(&args.input)?;
    for wav in &recordings {
        let csv = wav.with_extension("csv");
        if !csv.is_file() {
            return Err(CliError::Failed(format!(
                "missing alignment transcript {}",
                csv.display()
            )));
        }
    }
    let per_file: Vec<Vec<Clip>> = recordings
        .par_iter()
        .map(|wav| {
            let csv = wav.with_extension("csv");
            let spans = parse_alignment_csv(&read_file(&csv)?).map_err(corpus_err(csv.display().to_string()))?;
            let audio = load(wav, args.rate)?;
            let stem = file_stem(wav);
            let cut = cut_by_alignment(&audio, &spans, normalizer, &stem)
                .map_err(corpus_err(wav.display().to_string()))?;
            Ok(cut
                .into_iter()
                .map(|(audio, entry)| Clip {
                    name: file_stem(Path::new(&entry.audio_path)),
                    audio,
                    transcript: entry.transcript,
                })
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    Ok(per_file.into_iter().flatten().collect())
}

pub fn run(args: &PrepareArgs) -> Result<(), CliError> {
    if args.rate == 0 {
        return Err(CliError::usage("--rate must be positive"));
    }
    if !args.input.is_dir() {
        return Err(CliError::Failed(format!(
            "input folder {} does not exist",
            args.input.display()
        )));
    }
    let normalizer = match &args.lexicon {
        Some(path) => TextNormalizer::from_lexicon_csv(&read_file(path)?)
            .map_err(corpus_err(path.display().to_string()))?,
        None => TextNormalizer::new(std::iter::empty::<(String, String)>()),
    };
    let clips = match &args.manifest {
        Some(manifest) => clips_from_manifest(args, manifest, &normalizer)?,
        None => clips_from_alignments(args, &normalizer)?,
    };

    let processed: Vec<Result<Clip, CorpusError>> = clips
        .into_par_iter()
        .map(|clip| {
            let trimmed = trim_silence(&clip.audio, args.silence_dbfs, args.frame_ms)?;
            let audio = pad_tail_silence(&trimmed, args.pad_s)?;
            Ok(Clip { audio, ..clip })
        })
        .collect();

    let mut dropped = Dropped::default();
    let mut kept_clips = Vec::new();
    for clip in processed {
        match clip {
            Ok(c) if c.transcript.is_empty() => {
                warn!("dropping {}: transcript is empty after normalization", c.name);
                dropped.empty_text += 1;
            }
            Ok(c) => kept_clips.push(c),
            Err(CorpusError::AllSilent) => dropped.silent += 1,
            Err(e) => return Err(CliError::Corpus { context: "clip processing".into(), source: e }),
        }
    }

    let charset = normalizer.charset().clone();
    let entries = kept_clips
        .iter()
        .map(|c| CorpusEntry::new(format!("wavs/{}.wav", c.name), c.transcript.clone(), c.audio.duration_s()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(corpus_err("manifest"))?;
    let all = CorpusManifest::new(entries, charset).map_err(corpus_err("manifest"))?;
    let (kept, rejected) =
        filter_by_duration(&all, args.min_duration, args.max_duration).map_err(|e| match e {
            CorpusError::InvalidBounds { .. } => CliError::usage(e.to_string()),
            other => CliError::Corpus { context: "duration filter".into(), source: other },
        })?;
    let too_short = rejected
        .entries()
        .iter()
        .filter(|e| e.duration_s < args.min_duration)
        .count();
    let too_long = rejected.len() - too_short;
    let policy = SplitPolicy {
        val_ratio: args.val_ratio,
        val_floor: args.val_floor,
        explicit_val_count: args.val_count,
        seed: args.seed,
    };
    let (train, val) = split_train_val(&kept, &policy).map_err(corpus_err("train/val split"))?;

    let wav_dir = args.out.join("wavs");
    create_dir(&wav_dir)?;
    let kept_paths: std::collections::HashSet<&str> =
        kept.entries().iter().map(|e| e.audio_path.as_str()).collect();
    kept_clips
        .par_iter()
        .filter(|c| kept_paths.contains(format!("wavs/{}.wav", c.name).as_str()))
        .map(|c| {
            let path = wav_dir.join(format!("{}.wav", c.name));
            let bytes = encode_wav(&c.audio).map_err(|source| CliError::Audio {
                path: path.clone(),
                source,
            })?;
            write_file(&path, bytes)
        })
        .collect::<Result<(), _>>()?;
    write_file(&args.out.join("metadata.csv"), write_manifest(&kept))?;
    write_file(&args.out.join("train.csv"), write_manifest(&train))?;
    write_file(&args.out.join("val.csv"), write_manifest(&val))?;

    let summary = summary_table(&[
        ("total", &kept),
        ("train", &train),
        ("val", &val),
        ("dropped", &rejected),
    ]);
    let mut summary = summary;
    let _ = writeln!(
        summary,
        "dropped: {too_short} shorter than {} s, {too_long} longer than {} s, {} silent, {} without text",
        fmt_sig(args.min_duration),
        fmt_sig(args.max_duration),
        dropped.silent,
        dropped.empty_text
    );
    write_file(&args.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

/// Clip counts and durations per subset.
pub fn summary_table(rows: &[(&str, &CorpusManifest)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<8} {:>8} {:>12} {:>10}", "set", "clips", "duration_s", "hours");
    for (name, manifest) in rows {
        let seconds = manifest.total_duration_s();
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>12} {:>10.2}",
            name,
            manifest.len(),
            fmt_sig(seconds),
            seconds / 3600.0
        );
    }
    out
}
