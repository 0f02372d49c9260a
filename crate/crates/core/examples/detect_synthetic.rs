// Cluster-based detection on a synthetic corpus: uncoupled triads play the
// known-real voice, coupled triads play the synthesized one.
//
// Run with `cargo run --release --example detect_synthetic`.

use std::collections::BTreeMap;
use std::error::Error;

use rayon::prelude::*;
use voxforensics::bispectrum::{estimate_bispectrum, BispectrumParams};
use voxforensics::detect::{classify, evaluate, ClassifyParams, DbscanParams, DetectionReport, Verdict, VoiceProfile};
use voxforensics::features::{extract_features, FeatureVector};
use voxforensics::synth::{gen_corpus, CorpusSpec, SampleRole};

pub fn run_example() -> Result<DetectionReport, Box<dyn Error>> {
    let params = BispectrumParams::default();
    let corpus = gen_corpus(&CorpusSpec::default())?;
    let features = corpus
        .par_iter()
        .map(|s| {
            let grid = estimate_bispectrum(&s.samples, &params)?;
            Ok((s.sample_id.clone(), s.role, extract_features(&grid)?))
        })
        .collect::<Result<Vec<(String, SampleRole, FeatureVector)>, Box<dyn Error + Send + Sync>>>()
        .map_err(|e| e as Box<dyn Error>)?;

    let reference = features
        .iter()
        .filter(|(_, role, _)| *role == SampleRole::Reference)
        .map(|(id, _, v)| (id.clone(), *v))
        .collect();
    let queries: Vec<_> = features
        .iter()
        .filter(|(_, role, _)| *role != SampleRole::Reference)
        .map(|(id, _, v)| (id.clone(), *v))
        .collect();
    let truth: BTreeMap<String, Verdict> = features
        .iter()
        .filter(|(_, role, _)| *role != SampleRole::Reference)
        .map(|(id, role, _)| (id.clone(), if role.is_fake() { Verdict::Fake } else { Verdict::Real }))
        .collect();

    let profile = VoiceProfile::new("synthetic speaker", reference, None)?;
    let report = classify(&profile, &queries, &ClassifyParams::new(DbscanParams::new(2.0, 4)?))?;
    Ok(evaluate(&report, &truth)?)
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?.to_table());
    Ok(())
}
