#[allow(dead_code)]
mod wav_roundtrip {
    include!("../examples/wav_roundtrip.rs");
}
#[allow(dead_code)]
mod normalize_transcripts {
    include!("../examples/normalize_transcripts.rs");
}
#[allow(dead_code)]
mod prepare_corpus {
    include!("../examples/prepare_corpus.rs");
}
#[allow(dead_code)]
mod bispectrum_qpc {
    include!("../examples/bispectrum_qpc.rs");
}
#[allow(dead_code)]
mod feature_scatter {
    include!("../examples/feature_scatter.rs");
}
#[allow(dead_code)]
mod detect_synthetic {
    include!("../examples/detect_synthetic.rs");
}

#[test]
fn wav_roundtrip_is_lossless_and_keeps_the_tone() {
    let r = wav_roundtrip::run_example().unwrap();
    assert!(r.exact);
    assert_eq!(r.encoded_bytes, 44 + 2 * 16_000);
    assert_eq!(r.resampled_len, 22_050);
    assert_eq!(r.peak_bin_hz, 440.0);
}

#[test]
fn normalize_transcripts_output() {
    let out = normalize_transcripts::run_example().unwrap();
    let clean: Vec<&str> = out.iter().map(|(_, c)| c.as_str()).collect();
    assert_eq!(
        clean,
        [
            "doktor schmidt kam um zehn uhr.",
            "wir brauchen zum beispiel zweitausendfünfhundert euro oder mehr?",
            "am oktober feiern wir.",
            "äpfel, birnen und so weiter alles frisch",
        ]
    );
}

#[test]
fn prepare_corpus_keeps_sentences_and_splits() {
    let p = prepare_corpus::run_example().unwrap();
    let names: Vec<&str> = p.kept.iter().map(|(path, _, _)| path.as_str()).collect();
    assert_eq!(names, ["abend_0001.wav", "abend_0003.wav"]);
    assert_eq!(p.kept[1].1, "heute sprechen wir über drei themen.");
    assert_eq!(p.dropped, 1);
    assert_eq!(p.large_split, (9265, 806));
}

#[test]
fn bispectrum_qpc_separates_coupling() {
    let (coupled, uncoupled) = bispectrum_qpc::run_example().unwrap();
    assert!(coupled > 10.0, "{coupled}");
    assert!(uncoupled < 3.0, "{uncoupled}");
}

#[test]
fn feature_scatter_csv_shape() {
    let (rows, csv) = feature_scatter::run_example().unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(csv.lines().count(), 21);
    let min_coupled = rows.iter().filter(|r| r.label == "coupled").map(|r| r.features.mag_mean).fold(f64::MAX, f64::min);
    let max_uncoupled = rows.iter().filter(|r| r.label == "uncoupled").map(|r| r.features.mag_mean).fold(f64::MIN, f64::max);
    assert!(min_coupled > max_uncoupled);
}

#[test]
fn detect_synthetic_meets_targets() {
    let report = detect_synthetic::run_example().unwrap();
    let m = report.evaluation.unwrap().metrics;
    assert!(m.precision_fake >= 0.9);
    assert!(m.recall_fake >= 0.8);
}
