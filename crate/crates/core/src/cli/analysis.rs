use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use clap::Args;
use rayon::prelude::*;

use super::{file_stem, list_wavs, parse_standardize, read_file, write_file, CliError, SpectralArgs};
use crate::audio::{decode_wav, encode_wav, resample, AudioBuffer, DEFAULT_RATE_HZ};
use crate::bispectrum::{estimate_bispectrum, BispectrumParams};
use crate::detect::{
    classify, evaluate, k_distance_csv, k_distance_curve, parse_truth_csv, ClassifyParams, DbscanParams,
    DetectError, DetectionReport, ProfileDocument, ProfileParams, StandardizeOn, VoiceProfile, DEFAULT_REAL_FRACTION,
};
use crate::features::{
    extract_features, read_feature_csv, scatter_csv, scatter_points, write_feature_csv, FeatureError,
    FeatureVector, LabeledFeatures, StandardizationParams,
};
use crate::synth::{gen_corpus, CorpusSpec, SampleRole};

pub const UNKNOWN_LABEL: &str = "unknown";

fn feature_err(context: &Path) -> impl FnOnce(FeatureError) -> CliError + '_ {
    move |source| CliError::Feature {
        context: context.display().to_string(),
        source,
    }
}

fn detect_err(context: impl Into<String>) -> impl FnOnce(DetectError) -> CliError {
    let context = context.into();
    move |source| CliError::Detect { context, source }
}

fn load_features(path: &Path) -> Result<Vec<LabeledFeatures>, CliError> {
    read_feature_csv(&read_file(path)?).map_err(feature_err(path))
}

fn pairs(rows: &[LabeledFeatures]) -> Vec<(String, FeatureVector)> {
    rows.iter().map(|r| (r.sample_id.clone(), r.features)).collect()
}

#[derive(Debug, Clone, Args)]
pub struct FeaturesArgs {
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    /// `sample_id,label` CSV; samples not listed are labelled `unknown`.
    #[arg(long, value_name = "CSV")]
    pub labels: Option<PathBuf>,
    /// Skip unreadable files instead of aborting.
    #[arg(long)]
    pub keep_going: bool,
    #[command(flatten)]
    pub spectral: SpectralArgs,
}

/// Feature vector of one WAV file after resampling to `rate`.
pub fn features_of_file(path: &Path, rate: u32, params: &BispectrumParams) -> Result<FeatureVector, CliError> {
    let audio_err = |source| CliError::Audio {
        path: path.to_path_buf(),
        source,
    };
    let buffer = decode_wav(&read_file(path)?).map_err(audio_err)?;
    let buffer = resample(&buffer, rate).map_err(audio_err)?;
    let grid = estimate_bispectrum(&buffer.to_f64(), params).map_err(|e| {
        CliError::Failed(format!("{}: {e}", path.display()))
    })?;
    extract_features(&grid).map_err(feature_err(path))
}

fn read_labels(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let data = read_file(path)?;
    let mut reader = csv::Reader::from_reader(data.as_slice());
    let malformed = |e: csv::Error| CliError::Failed(format!("{}: {e}", path.display()));
    let headers = reader.headers().map_err(malformed)?;
    if headers.iter().collect::<Vec<_>>() != ["sample_id", "label"] {
        return Err(CliError::Failed(format!(
            "{}: header must be `sample_id,label`",
            path.display()
        )));
    }
    reader
        .records()
        .map(|r| {
            let r = r.map_err(malformed)?;
            Ok((r[0].to_string(), r[1].to_string()))
        })
        .collect()
}

pub fn features(args: &FeaturesArgs) -> Result<(), CliError> {
    let params = args.spectral.params()?;
    let files = list_wavs(&args.input)?;
    if files.is_empty() {
        return Err(CliError::Detect {
            context: args.input.display().to_string(),
            source: DetectError::EmptyQuerySet,
        });
    }
    let labels = match &args.labels {
        Some(path) => read_labels(path)?,
        None => BTreeMap::new(),
    };
    let results: Vec<Result<FeatureVector, CliError>> = files
        .par_iter()
        .map(|f| features_of_file(f, args.spectral.rate, &params))
        .collect();

    let mut rows = Vec::with_capacity(files.len());
    let mut failures = Vec::new();
    for (file, result) in files.iter().zip(results) {
        match result {
            Ok(features) => {
                let sample_id = file_stem(file);
                let label = labels
                    .get(&sample_id)
                    .cloned()
                    .unwrap_or_else(|| UNKNOWN_LABEL.to_string());
                rows.push(LabeledFeatures {
                    sample_id,
                    label,
                    features,
                });
            }
            Err(e) if args.keep_going => failures.push(e),
            Err(e) => return Err(e),
        }
    }
    for f in &failures {
        eprintln!("skipped: {f}");
    }
    if rows.is_empty() {
        return Err(CliError::Failed(format!(
            "no readable WAV files in {}",
            args.input.display()
        )));
    }
    write_file(&args.out, write_feature_csv(&rows))?;
    eprintln!("{} rows written to {}", rows.len(), args.out.display());
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Feature CSV of known-real reference recordings.
    #[arg(long, value_name = "CSV")]
    pub features: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
    #[arg(long, default_value = "subject")]
    pub subject: String,
    /// Timestamp recorded in the profile; defaults to the feature file's
    /// modification time so reruns are reproducible.
    #[arg(long)]
    pub created_at: Option<String>,
    /// Store a standardizer fitted on the reference vectors.
    #[arg(long)]
    pub store_standardizer: bool,
    /// Write the sorted k-distance curve of the standardized references.
    #[arg(long, value_name = "CSV")]
    pub k_distance: Option<PathBuf>,
    #[arg(long, default_value_t = DbscanParams::DEFAULT_MIN_PTS - 1)]
    pub k: usize,
    #[command(flatten)]
    pub spectral: SpectralArgs,
}

fn modified_at(path: &Path) -> Result<String, CliError> {
    let meta = std::fs::metadata(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let time = meta.modified().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(DateTime::<Utc>::from(time).to_rfc3339_opts(SecondsFormat::Secs, true))
}

pub fn profile(args: &ProfileArgs) -> Result<(), CliError> {
    let bispectrum = args.spectral.params()?;
    let rows = load_features(&args.features)?;
    let reference = pairs(&rows);
    let vectors: Vec<FeatureVector> = reference.iter().map(|(_, v)| *v).collect();
    let needs_fit = args.store_standardizer || args.k_distance.is_some();
    let fitted = if needs_fit {
        Some(StandardizationParams::fit(&vectors).map_err(feature_err(&args.features))?)
    } else {
        None
    };
    let standardizer = if args.store_standardizer { fitted } else { None };
    let profile = VoiceProfile::new(args.subject.clone(), reference, standardizer)
        .map_err(detect_err(args.features.display().to_string()))?;

    if let (Some(path), Some(std)) = (&args.k_distance, fitted) {
        let points: Vec<_> = vectors.iter().map(|v| std.apply(v).to_array()).collect();
        let curve = k_distance_curve(&points, args.k)
            .map_err(|e| CliError::usage(format!("--k: {e}")))?;
        write_file(path, k_distance_csv(&curve))?;
    }

    let created_at = match &args.created_at {
        Some(t) => t.clone(),
        None => modified_at(&args.features)?,
    };
    let params = ProfileParams {
        canonical_rate_hz: args.spectral.rate,
        bispectrum,
    };
    let doc = ProfileDocument::from_profile(&profile, created_at, params);
    write_file(&args.out, doc.to_json())?;
    eprintln!(
        "profile `{}` with {} reference samples written to {}",
        args.subject,
        profile.reference().len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long, value_name = "JSON")]
    pub profile: PathBuf,
    /// Feature CSV of the samples under test.
    #[arg(long, value_name = "CSV")]
    pub features: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
    /// DBSCAN radius in standardized feature space.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = DbscanParams::DEFAULT_MIN_PTS)]
    pub min_pts: usize,
    /// Minimum share of reference members for a cluster to count as real.
    #[arg(long, default_value_t = DEFAULT_REAL_FRACTION)]
    pub threshold: f64,
    /// Fit the standardizer on `union` (reference and queries) or `reference`.
    #[arg(long, default_value_t = StandardizeOn::Union, value_parser = parse_standardize)]
    pub standardize: StandardizeOn,
    /// Ground-truth CSV `sample_id,label` for the confusion matrix.
    #[arg(long, value_name = "CSV")]
    pub truth: Option<PathBuf>,
}

pub fn detect(args: &DetectArgs) -> Result<(), CliError> {
    let dbscan = DbscanParams::new(args.eps, args.min_pts).map_err(|e| CliError::usage(e.to_string()))?;
    let params = ClassifyParams {
        dbscan,
        real_fraction_threshold: args.threshold,
        standardize_on: args.standardize,
    };
    if let Err(e) = params.validate() {
        return Err(CliError::usage(e.to_string()));
    }
    let profile_text = String::from_utf8(read_file(&args.profile)?)
        .map_err(|_| CliError::Failed(format!("{}: not UTF-8", args.profile.display())))?;
    let profile_ctx = args.profile.display().to_string();
    let profile = ProfileDocument::from_json(&profile_text)
        .and_then(|d| d.to_profile())
        .map_err(detect_err(profile_ctx))?;
    let queries = pairs(&load_features(&args.features)?);
    let mut report = classify(&profile, &queries, &params)
        .map_err(detect_err(args.features.display().to_string()))?;
    if let Some(path) = &args.truth {
        let truth = parse_truth_csv(&read_file(path)?).map_err(detect_err(path.display().to_string()))?;
        report = evaluate(&report, &truth).map_err(detect_err(path.display().to_string()))?;
    }
    write_file(&args.out, report.to_json())?;
    print!("{}", report.to_table());
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long, value_name = "JSON")]
    pub report: PathBuf,
    /// Feature CSVs whose rows go into the scatter plot. Unlabelled rows take
    /// their predicted verdict, or `reference` when they were not queried.
    #[arg(long = "features", value_name = "CSV", required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let text = String::from_utf8(read_file(&args.report)?)
        .map_err(|_| CliError::Failed(format!("{}: not UTF-8", args.report.display())))?;
    let report = DetectionReport::from_json(&text).map_err(detect_err(args.report.display().to_string()))?;
    let verdicts: BTreeMap<&str, String> = report
        .queries
        .iter()
        .map(|q| (q.sample_id.as_str(), q.verdict.to_string()))
        .collect();

    let mut rows = Vec::new();
    for path in &args.features {
        for mut row in load_features(path)? {
            if row.label == UNKNOWN_LABEL {
                row.label = match verdicts.get(row.sample_id.as_str()) {
                    Some(v) => format!("predicted_{v}"),
                    None => "reference".to_string(),
                };
            }
            rows.push(row);
        }
    }
    let points = scatter_points(&rows).map_err(feature_err(&args.features[0]))?;
    write_file(&args.out.join("scatter.csv"), scatter_csv(&points))?;
    write_file(&args.out.join("report.txt"), report.to_table())?;
    match &report.evaluation {
        Some(e) => write_file(&args.out.join("confusion.csv"), e.confusion.to_csv())?,
        None => {
            let stale = args.out.join("confusion.csv");
            if stale.exists() {
                std::fs::remove_file(&stale).map_err(|source| CliError::Io { path: stale, source })?;
            }
            eprintln!("notice: report has no ground truth; confusion matrix omitted");
        }
    }
    print!("{}", report.to_table());
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub f1: usize,
    #[arg(long, default_value_t = 35)]
    pub f2: usize,
    #[arg(long, default_value_t = 0.25)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.025)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 256)]
    pub segment_len: usize,
    /// Signal length in segments.
    #[arg(long, default_value_t = 64)]
    pub blocks: usize,
    #[arg(long, default_value_t = 50)]
    pub n_reference: usize,
    #[arg(long, default_value_t = 25)]
    pub n_real: usize,
    #[arg(long, default_value_t = 25)]
    pub n_fake: usize,
    #[arg(long, default_value_t = DEFAULT_RATE_HZ)]
    pub rate: u32,
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.rate == 0 {
        return Err(CliError::usage("--rate must be positive"));
    }
    let spec = CorpusSpec {
        f1_bin: args.f1,
        f2_bin: args.f2,
        amplitude: args.amplitude,
        noise_sigma: args.noise_sigma,
        segment_len: args.segment_len,
        blocks: args.blocks,
        n_reference: args.n_reference,
        n_real_queries: args.n_real,
        n_fake_queries: args.n_fake,
        seed: args.seed,
    };
    let corpus = gen_corpus(&spec)?;
    corpus
        .par_iter()
        .map(|sample| {
            let dir = match sample.role {
                SampleRole::Reference => "reference",
                _ => "queries",
            };
            let path = args.out.join(dir).join(format!("{}.wav", sample.sample_id));
            let audio_err = |source| CliError::Audio {
                path: path.clone(),
                source,
            };
            let samples: Vec<f32> = sample.samples.iter().map(|&x| x as f32).collect();
            let buffer = AudioBuffer::new(samples, args.rate).map_err(|e| {
                CliError::Failed(format!(
                    "{}: {e}; lower --amplitude or --noise-sigma",
                    path.display()
                ))
            })?;
            write_file(&path, encode_wav(&buffer).map_err(audio_err)?)
        })
        .collect::<Result<(), _>>()?;

    let mut truth = String::from("sample_id,label\n");
    for s in corpus.iter().filter(|s| s.role != SampleRole::Reference) {
        let label = if s.role.is_fake() { "fake" } else { "real" };
        truth.push_str(&format!("{},{label}\n", s.sample_id));
    }
    write_file(&args.out.join("truth.csv"), truth)?;
    eprintln!(
        "{} reference and {} query signals written to {}",
        spec.n_reference,
        spec.n_real_queries + spec.n_fake_queries,
        args.out.display()
    );
    Ok(())
}
