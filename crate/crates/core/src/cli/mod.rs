//! Command-line front end.
//!
//! Every long flag can also be given in a TOML file passed with `--config`:
//! top-level keys apply to any subcommand that accepts them, keys inside a
//! table named after the subcommand apply to that subcommand only. Flags on
//! the command line take precedence.

mod analysis;
mod prepare;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use thiserror::Error;

use crate::audio::{AudioError, DEFAULT_RATE_HZ};
use crate::bispectrum::{BispectrumError, BispectrumParams, Window};
use crate::corpus::CorpusError;
use crate::detect::{DetectError, StandardizeOn};
use crate::features::FeatureError;
use crate::synth::SynthError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Usage { message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Audio { path: PathBuf, source: AudioError },
    #[error("{context}: {source}")]
    Corpus { context: String, source: CorpusError },
    #[error(transparent)]
    Bispectrum(#[from] BispectrumError),
    #[error("{context}: {source}")]
    Feature { context: String, source: FeatureError },
    #[error("{context}: {source}")]
    Detect { context: String, source: DetectError },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        CliError::Usage {
            message: message.into(),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, data: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, data).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `*.wav` files directly inside `dir`, sorted by file name.
pub(crate) fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io_err = |source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_wav = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Parser)]
#[command(name = "voxforensics", version, about = "Bispectral voice-deepfake forensics and TTS corpus preparation")]
pub struct Cli {
    /// TOML file with default values for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (0 picks one per core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn recordings and transcripts into a filtered, split TTS corpus.
    Prepare(prepare::PrepareArgs),
    /// Extract bispectral feature vectors from a folder of WAV files.
    Features(analysis::FeaturesArgs),
    /// Build a voice profile from reference feature vectors.
    Profile(analysis::ProfileArgs),
    /// Classify query feature vectors against a voice profile.
    Detect(analysis::DetectArgs),
    /// Emit scatter and confusion-matrix CSVs for a detection report.
    Report(analysis::ReportArgs),
    /// Write a synthetic reference/query corpus with ground truth.
    Synth(analysis::SynthArgs),
}

/// Bispectrum settings shared by feature extraction and profiles.
#[derive(Debug, Clone, Args)]
pub struct SpectralArgs {
    /// Sample rate every input is resampled to before analysis.
    #[arg(long, default_value_t = DEFAULT_RATE_HZ)]
    pub rate: u32,
    #[arg(long, default_value_t = 256)]
    pub segment_len: usize,
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    #[arg(long, default_value_t = Window::Hann)]
    pub window: Window,
}

impl SpectralArgs {
    pub fn params(&self) -> Result<BispectrumParams, CliError> {
        if self.rate == 0 {
            return Err(CliError::usage("--rate must be positive"));
        }
        BispectrumParams::new(self.segment_len, self.overlap, self.window)
            .map_err(|e| CliError::usage(e.to_string()))
    }
}

pub(crate) fn parse_standardize(s: &str) -> Result<StandardizeOn, String> {
    s.parse()
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse_with_config(&args) {
        Ok(cli) => cli,
        Err(ParseOutcome::Clap(e)) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
        Err(ParseOutcome::Cli(e)) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Prepare(a) => prepare::run(&a),
        Command::Features(a) => analysis::features(&a),
        Command::Profile(a) => analysis::profile(&a),
        Command::Detect(a) => analysis::detect(&a),
        Command::Report(a) => analysis::report(&a),
        Command::Synth(a) => analysis::synth(&a),
    })
}

enum ParseOutcome {
    Clap(clap::Error),
    Cli(CliError),
}

fn parse_with_config(args: &[OsString]) -> Result<Cli, ParseOutcome> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut full = args.to_vec();
    if let Some(path) = config_path(&strings) {
        let text = fs::read_to_string(&path)
            .map_err(|source| ParseOutcome::Cli(CliError::Io { path: path.clone(), source }))?;
        let subcommand = find_subcommand(&strings);
        let extra = config_args(&text, subcommand.as_deref(), &strings).map_err(ParseOutcome::Cli)?;
        full.extend(extra.into_iter().map(OsString::from));
    }
    let matches = Cli::command()
        .try_get_matches_from(full)
        .map_err(ParseOutcome::Clap)?;
    Cli::from_arg_matches(&matches).map_err(ParseOutcome::Clap)
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn find_subcommand(args: &[String]) -> Option<String> {
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        if a == "--config" || a == "--jobs" {
            iter.next();
            continue;
        }
        if names.contains(a) {
            return Some(a.clone());
        }
    }
    None
}

fn flag_given(args: &[String], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefixed = format!("{flag}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefixed))
}

/// Translates config entries into extra command-line arguments for flags
/// that were not given explicitly.
fn config_args(text: &str, subcommand: Option<&str>, given: &[String]) -> Result<Vec<String>, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::usage(format!("config: {e}")))?;
    let root = Cli::command();
    let all_longs: Vec<String> = root
        .get_subcommands()
        .flat_map(|c| c.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect::<Vec<_>>())
        .collect();
    let sub_cmd = subcommand.and_then(|name| root.find_subcommand(name));
    let accepts = |key: &str| -> Option<bool> {
        let arg = sub_cmd?.get_arguments().find(|a| a.get_long() == Some(key))?;
        Some(matches!(arg.get_action(), clap::ArgAction::SetTrue))
    };

    let mut entries: Vec<(String, toml::Value, bool)> = Vec::new();
    for (key, value) in &table {
        match value {
            toml::Value::Table(inner) => {
                if root.find_subcommand(key).is_none() {
                    return Err(CliError::usage(format!("config: unknown section [{key}]")));
                }
                if Some(key.as_str()) == subcommand {
                    entries.extend(inner.iter().map(|(k, v)| (k.clone(), v.clone(), true)));
                }
            }
            other => entries.push((key.clone(), other.clone(), false)),
        }
    }

    let mut extra = Vec::new();
    for (key, value, scoped) in entries {
        if key == "config" {
            return Err(CliError::usage("config: `config` cannot be set from a config file"));
        }
        let is_switch = if key == "jobs" {
            false
        } else if let Some(is_switch) = accepts(&key) {
            is_switch
        } else {
            if scoped || !all_longs.contains(&key) {
                return Err(CliError::usage(format!("config: unknown key `{key}`")));
            }
            continue;
        };
        if flag_given(given, &key) {
            continue;
        }
        if is_switch {
            match value {
                toml::Value::Boolean(true) => extra.push(format!("--{key}")),
                toml::Value::Boolean(false) => {}
                _ => return Err(CliError::usage(format!("config: `{key}` must be true or false"))),
            }
            continue;
        }
        match &value {
            toml::Value::Array(items) => {
                for item in items {
                    extra.push(format!("--{key}"));
                    extra.push(scalar(&key, item)?);
                }
            }
            v => {
                extra.push(format!("--{key}"));
                extra.push(scalar(&key, v)?);
            }
        }
    }
    Ok(extra)
}

fn scalar(key: &str, value: &toml::Value) -> Result<String, CliError> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::usage(format!("config: `{key}` must be a scalar"))),
    }
}
