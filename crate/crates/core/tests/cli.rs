mod common;

use std::fs;

use common::*;
use voxforensics::detect::DetectionReport;

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["detect", "--eps", "1"]).code, 64);
    assert_eq!(run(&["no-such-command"]).code, 64);
    assert_eq!(run(&["synth", "--out", "x", "--seed", "minus"]).code, 64);
    assert_eq!(run(&["--help"]).code, 0);
    let bad_eps = tempfile::tempdir().unwrap();
    let f = bad_eps.path().join("f.csv");
    fs::write(&f, "").unwrap();
    let out = run(&["detect", "--profile", p(&f), "--features", p(&f), "--out", p(&f), "--eps", "-1"]);
    assert_eq!(out.code, 64, "{}", out.stderr);
}

#[test]
fn synthetic_detection_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = detection_pipeline(dir.path(), "0");
    let report = DetectionReport::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let eval = report.evaluation.expect("truth was supplied");
    assert_eq!(eval.confusion.total(), 50);
    assert!(eval.metrics.precision_fake >= 0.9, "{:?}", eval);
    assert!(eval.metrics.recall_fake >= 0.8, "{:?}", eval);

    let confusion = fs::read_to_string(out.join("figures/confusion.csv")).unwrap();
    assert!(confusion.starts_with("actual,predicted_real,predicted_fake\n"));
    let scatter = fs::read_to_string(out.join("figures/scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 101);
    assert!(scatter.contains("ref_000,reference,"));
    assert!(scatter.contains("fake_000,fake,"));
    let kdist = fs::read_to_string(out.join("kdist.csv")).unwrap();
    assert_eq!(kdist.lines().count(), 51);
}

#[test]
fn profile_then_detect_on_itself_is_all_real() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    run_ok(&["synth", "--out", p(&syn), "--n-reference", "12", "--n-real", "0", "--n-fake", "0"]);
    let feats = dir.path().join("ref.csv");
    let profile = dir.path().join("profile.json");
    let report = dir.path().join("report.json");
    run_ok(&["features", "--input", p(&syn.join("reference")), "--out", p(&feats)]);
    let kdist = dir.path().join("kdist.csv");
    run_ok(&[
        "profile", "--features", p(&feats), "--out", p(&profile), "--subject", "probe", "--k-distance",
        p(&kdist), "--k", "1",
    ]);
    // Duplicating every point leaves the standardization unchanged, so the
    // largest nearest-neighbour distance makes every point a core point.
    let curve = fs::read_to_string(&kdist).unwrap();
    let eps = curve.lines().last().unwrap().split(',').nth(1).unwrap().to_string();
    let out = run_ok(&[
        "detect", "--profile", p(&profile), "--features", p(&feats), "--out", p(&report), "--eps", &eps,
    ]);
    assert!(out.stdout.contains("real 12  fake 0"), "{}", out.stdout);

    // No ground truth: the scatter is written, the confusion matrix is not.
    let figures = dir.path().join("figures");
    let out = run_ok(&["report", "--report", p(&report), "--features", p(&feats), "--out", p(&figures)]);
    assert!(out.stderr.contains("confusion matrix omitted"));
    assert!(figures.join("scatter.csv").exists());
    assert!(!figures.join("confusion.csv").exists());
}

#[test]
fn features_failure_modes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let csv = dir.path().join("f.csv");
    let out = run(&["features", "--input", p(&empty), "--out", p(&csv)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("no query samples"), "{}", out.stderr);

    let mixed = dir.path().join("mixed");
    write_wav(&mixed.join("a.wav"), &tone(300.0, 0.5, 16_000, 0.3), 16_000);
    fs::write(mixed.join("b.wav"), b"not a wav").unwrap();
    write_wav(&mixed.join("c.wav"), &tone(500.0, 0.5, 16_000, 0.3), 16_000);
    let out = run(&["features", "--input", p(&mixed), "--out", p(&csv)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("b.wav"));
    let out = run(&["features", "--input", p(&mixed), "--out", p(&csv), "--keep-going"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stderr.contains("skipped"));
    let rows: Vec<String> = fs::read_to_string(&csv).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("a,unknown,"));
    assert!(rows[2].starts_with("c,unknown,"));
}

#[test]
fn prepare_alignment_mode() {
    let dir = tempfile::tempdir().unwrap();
    let input = alignment_fixture(dir.path());
    let out_dir = dir.path().join("corpus");
    let out = run_ok(&[
        "prepare", "--input", p(&input), "--out", p(&out_dir), "--lexicon", p(&dir.path().join("lexicon.csv")),
        "--val-count", "1",
    ]);
    assert!(out.stdout.contains("1 silent"), "{}", out.stdout);
    assert!(out.stdout.contains("1 shorter than 0.5 s"), "{}", out.stdout);
    let metadata = fs::read_to_string(out_dir.join("metadata.csv")).unwrap();
    assert_eq!(
        metadata,
        "wavs/rede_0001.wav|wir haben einundzwanzig punkte, sagte doktor müller!\n\
         wavs/rede_0004.wav|am mai kamen eintausendfünfhundert gäste.\n"
    );
    let train = fs::read_to_string(out_dir.join("train.csv")).unwrap();
    let val = fs::read_to_string(out_dir.join("val.csv")).unwrap();
    assert_eq!(train.lines().count() + val.lines().count(), 2);
    assert_eq!(val.lines().count(), 1);
    for check in check_prepared(&out_dir, 22_050, 0.4, -40.0) {
        assert!(check.problems.is_empty(), "{}: {:?}", check.path.display(), check.problems);
    }
    let mut wavs: Vec<_> = fs::read_dir(out_dir.join("wavs")).unwrap().map(|e| e.unwrap().file_name()).collect();
    wavs.sort();
    assert_eq!(wavs, ["rede_0001.wav", "rede_0004.wav"]);
}

#[test]
fn prepare_manifest_mode() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    for (i, secs) in [1.0, 2.0, 0.05].iter().enumerate() {
        let mut audio = silence(0.2, 8_000);
        audio.extend(tone(200.0, *secs, 8_000, 0.5));
        write_wav(&input.join(format!("clip{i}.wav")), &audio, 8_000);
    }
    let manifest = dir.path().join("list.txt");
    fs::write(&manifest, "clip0.wav|Erster Satz.\nclip1.wav|Zweiter Satz mit 3 Wörtern.\nclip2.wav|Zu kurz.\n").unwrap();
    let out_dir = dir.path().join("corpus");
    run_ok(&[
        "prepare", "--input", p(&input), "--out", p(&out_dir), "--manifest", p(&manifest), "--rate", "16000",
        "--val-count", "1", "--seed", "3",
    ]);
    let metadata = fs::read_to_string(out_dir.join("metadata.csv")).unwrap();
    assert_eq!(
        metadata,
        "wavs/clip0.wav|erster satz.\nwavs/clip1.wav|zweiter satz mit drei wörtern.\n"
    );
    for check in check_prepared(&out_dir, 16_000, 0.4, -40.0) {
        assert!(check.problems.is_empty(), "{}: {:?}", check.path.display(), check.problems);
    }
}

#[test]
fn prepare_missing_alignment_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let input = alignment_fixture(dir.path());
    fs::remove_file(input.join("rede.csv")).unwrap();
    let out = run(&["prepare", "--input", p(&input), "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains(p(&input.join("rede.csv"))), "{}", out.stderr);

    let out = run(&[
        "prepare", "--input", p(&input), "--out", p(&dir.path().join("o")), "--manifest",
        p(&dir.path().join("missing.txt")),
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("missing.txt"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "n-reference = 3\nn-real = 1\n[synth]\nn-fake = 2\nseed = 9\n").unwrap();
    let syn = dir.path().join("syn");
    run_ok(&["--config", p(&cfg), "synth", "--out", p(&syn), "--n-real", "2"]);
    let truth = fs::read_to_string(syn.join("truth.csv")).unwrap();
    assert_eq!(truth, "sample_id,label\nreal_000,real\nreal_001,real\nfake_000,fake\nfake_001,fake\n");
    assert_eq!(fs::read_dir(syn.join("reference")).unwrap().count(), 3);

    fs::write(&cfg, "no-such-option = 1\n").unwrap();
    assert_eq!(run(&["--config", p(&cfg), "synth", "--out", p(&syn)]).code, 64);
}

#[test]
fn synth_rejects_clipping_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--out", p(dir.path()), "--amplitude", "0.5", "--n-real", "1", "--n-fake", "1"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("lower --amplitude"), "{}", out.stderr);
}
