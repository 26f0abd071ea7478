//! End-to-end checks of the command-line surface: exit codes, artifact
//! presence, config overrides, and error messages on bad input.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn citecast(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citecast"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process must not be signal-killed")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad_flag = citecast(dir.path(), &["synth", "--no-such-flag"]);
    assert_eq!(code(&bad_flag), 1);

    let bad_subcommand = citecast(dir.path(), &["transmogrify"]);
    assert_eq!(code(&bad_subcommand), 1);

    let missing_window = citecast(dir.path(), &["fit"]);
    assert_eq!(code(&missing_window), 1);

    let no_args = Command::new(env!("CARGO_BIN_EXE_citecast")).output().unwrap();
    assert_eq!(no_args.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_0() {
    for flag in ["--help", "--version"] {
        let out = Command::new(env!("CARGO_BIN_EXE_citecast"))
            .arg(flag)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{flag}");
    }
}

#[test]
fn config_problems_exit_1() {
    let dir = tempfile::tempdir().unwrap();

    let missing = citecast(dir.path(), &["--config", "/nonexistent/run.toml", "synth"]);
    assert_eq!(code(&missing), 1);
    assert!(stderr(&missing).contains("/nonexistent/run.toml"));

    let bad_toml = dir.path().join("bad.toml");
    fs::write(&bad_toml, "horizon = \"fifty\"").unwrap();
    let unparsable = citecast(dir.path(), &["--config", bad_toml.to_str().unwrap(), "synth"]);
    assert_eq!(code(&unparsable), 1);

    let unknown_key = dir.path().join("unknown.toml");
    fs::write(&unknown_key, "horizn = 50").unwrap();
    let rejected = citecast(dir.path(), &["--config", unknown_key.to_str().unwrap(), "synth"]);
    assert_eq!(code(&rejected), 1);

    let invalid = dir.path().join("invalid.toml");
    fs::write(&invalid, "[filter]\nwindow_years = 99").unwrap();
    let out_of_range = citecast(dir.path(), &["--config", invalid.to_str().unwrap(), "synth"]);
    assert_eq!(code(&out_of_range), 1);

    let bad_noise = citecast(dir.path(), &["synth", "--noise", "cauchy"]);
    assert_eq!(code(&bad_noise), 1);
    assert!(stderr(&bad_noise).contains("cauchy"));
}

#[test]
fn missing_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();

    let no_pairs = citecast(dir.path(), &["ingest"]);
    assert_eq!(code(&no_pairs), 2);
    assert!(stderr(&no_pairs).contains("pairs.csv"));

    let no_sample = citecast(dir.path(), &["cluster"]);
    assert_eq!(code(&no_sample), 2);
    assert!(stderr(&no_sample).contains("ingest"), "should hint at the missing stage");

    let no_fits = citecast(dir.path(), &["predict", "--window", "train"]);
    assert_eq!(code(&no_fits), 2);

    let nothing_to_report = citecast(dir.path(), &["report"]);
    assert_eq!(code(&nothing_to_report), 2);
}

#[test]
fn malformed_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pairs.csv"), "wrong,header,row\na,b,c\n").unwrap();
    fs::write(
        dir.path().join("metadata.csv"),
        "paper_id,publication_date,journal\np1,1960-01-01,J1\n",
    )
    .unwrap();
    let out = citecast(dir.path(), &["ingest"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn smoke_pipeline_produces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    let steps: [&[&str]; 7] = [
        &["--seed", "5", "synth", "--n-papers", "16", "--noise", "none"],
        &["--seed", "5", "ingest"],
        &["--seed", "5", "cluster"],
        &["--seed", "5", "fit", "--window", "train"],
        &["--seed", "5", "predict", "--window", "train"],
        &["--seed", "5", "evaluate"],
        &["--seed", "5", "report"],
    ];
    for step in steps {
        let result = citecast(out, step);
        assert_eq!(code(&result), 0, "step {step:?}: {}", stderr(&result));
    }

    for artifact in [
        "pairs.csv",
        "metadata.csv",
        "truth.csv",
        "histories.json",
        "sample.json",
        "ingest_report.json",
        "assignment.csv",
        "centroids.json",
        "class_stats.csv",
        "class_summary.csv",
        "fits_train.json",
        "fits_train.csv",
        "predictions_train.csv",
        "fig6_scatter.csv",
        "fig6_scatter.dat",
        "fig7_mape.csv",
        "fig7_mape.dat",
        "summary.json",
        "run_report.json",
        "resolved_config.json",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }

    // Without full-window fits evaluate still works but the goodness-of-fit
    // table fig4_pw.csv must not appear.
    assert!(!out.join("fig4_pw.csv").exists());

    let summary: serde_json::Value =
        serde_json::from_reader(fs::File::open(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_sample"], 16);
    assert_eq!(summary["naive_underestimate_fraction"], 1.0);

    let report: serde_json::Value =
        serde_json::from_reader(fs::File::open(out.join("run_report.json")).unwrap()).unwrap();
    assert!(report["fits_train"]["naive"]["n"].as_u64().unwrap() == 16);
}

#[test]
fn evaluate_without_any_fits_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for step in [
        vec!["synth", "--n-papers", "12", "--noise", "none"],
        vec!["ingest"],
        vec!["cluster"],
    ] {
        let result = citecast(out, &step);
        assert_eq!(code(&result), 0, "{}", stderr(&result));
    }
    let eval = citecast(out, &["evaluate"]);
    assert_eq!(code(&eval), 2);
    assert!(stderr(&eval).contains("fit"));
}

#[test]
fn seed_changes_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run = |out: &Path, seed: &str| {
        let result = Command::new(env!("CARGO_BIN_EXE_citecast"))
            .arg("--out-dir")
            .arg(out)
            .args(["--seed", seed, "synth", "--n-papers", "10"])
            .output()
            .unwrap();
        assert!(result.status.success());
        fs::read(out.join("pairs.csv")).unwrap()
    };
    let pairs_a = run(&out_a, "1");
    let pairs_b = run(&out_b, "2");
    assert_ne!(pairs_a, pairs_b, "different seeds must give different corpora");
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("configured");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "out_dir = \"{}\"\nseed = 77\nhorizon = 30\n\n\
             [fit]\nfull_window = [1, 30]\ntrain_window = [1, 8]\n\n\
             [evaluation]\nboxplot_years = [2, 5, 10, 20, 30]\n\n\
             [synth]\nn_papers = 12\nnoise = \"none\"\n",
            out.display()
        ),
    )
    .unwrap();
    let cfg = config.to_str().unwrap();

    for step in [vec!["synth"], vec!["ingest"], vec!["cluster"]] {
        let mut args = vec!["--config", cfg];
        args.extend(step);
        let result = Command::new(env!("CARGO_BIN_EXE_citecast")).args(&args).output().unwrap();
        assert!(result.status.success(), "{args:?}: {}", String::from_utf8_lossy(&result.stderr));
    }

    let histories: serde_json::Value =
        serde_json::from_reader(fs::File::open(out.join("histories.json")).unwrap()).unwrap();
    assert_eq!(histories.as_array().unwrap().len(), 12);
    assert_eq!(
        histories[0]["counts"].as_array().unwrap().len(),
        31,
        "horizon 30 means 31 yearly samples"
    );

    let resolved: serde_json::Value =
        serde_json::from_reader(fs::File::open(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["seed"], 77);
    assert_eq!(resolved["horizon"], 30);
}
