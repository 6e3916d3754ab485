use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn survmine(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_survmine"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = survmine(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn label_on_empty_input_writes_header_and_zero_stats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("records.tsv"), "").unwrap();
    ok(d, &["label", "--in", "records.tsv", "--out", "lab"]);
    let csv = read(d, "lab/labeled.csv");
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.ends_with(",survived,diagnosis_year\n"));
    assert_eq!(
        read(d, "lab/label_stats.tsv"),
        "input\t0\nlabeled\t0\nsurvived\t0\nnot_survived\t0\nremoved\t0\n"
    );
}

#[test]
fn piped_commands_match_the_single_shot_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--out",
            "syn",
            "--seed",
            "3",
            "--records",
            "20000",
            "--set",
            "missing_rate=0.01",
        ],
    );
    ok(
        d,
        &[
            "experiment",
            "--in",
            "syn/cohort.dat",
            "--out",
            "exp",
            "--spec",
            "T93:1988-1992:1993",
        ],
    );

    ok(d, &["preprocess", "--in", "syn/cohort.dat", "--out", "pre"]);
    ok(d, &["label", "--in", "pre/records.tsv", "--out", "lab"]);
    ok(
        d,
        &[
            "stats",
            "--in",
            "pre/records.tsv",
            "--labeled",
            "lab/labeled.csv",
            "--format",
            "tsv",
            "--out",
            "st",
        ],
    );
    for clf in ["naive_bayes", "j48"] {
        ok(
            d,
            &[
                "train",
                "--in",
                "lab/labeled.csv",
                "--classifier",
                clf,
                "--years",
                "1988-1992",
                "--out",
                "tr",
            ],
        );
        let model = format!("tr/{clf}.model");
        ok(
            d,
            &[
                "evaluate",
                "--model",
                &model,
                "--in",
                "lab/labeled.csv",
                "--year",
                "1993",
                "--name",
                "T93",
                "--out",
                "ev",
            ],
        );
        assert_eq!(
            read(d, &model),
            read(d, &format!("exp/models/T93_{clf}.model"))
        );
        assert_eq!(
            read(d, &format!("ev/T93_{clf}.txt")),
            read(d, &format!("exp/reports/T93_{clf}.txt"))
        );
    }
    for f in ["phase_reports.tsv", "issues.tsv", "parse_log.tsv"] {
        assert_eq!(
            read(d, &format!("pre/{f}")),
            read(d, &format!("exp/{f}")),
            "{f}"
        );
    }
    for f in ["labeled.csv", "label_stats.tsv"] {
        assert_eq!(
            read(d, &format!("lab/{f}")),
            read(d, &format!("exp/{f}")),
            "{f}"
        );
    }
    for f in ["class_profile.tsv", "mst.tsv", "frequencies.tsv"] {
        assert_eq!(
            read(d, &format!("st/{f}")),
            read(d, &format!("exp/{f}")),
            "{f}"
        );
    }
    let table = read(d, "exp/table9.txt");
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("T93   1993"));
}

#[test]
fn config_file_supplies_values_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["synth", "--out", "syn", "--seed", "5", "--records", "8000"],
    );
    fs::write(
        d.join("run.conf"),
        "in=syn/cohort.dat\nout=from_config\nspec=A:1988-1990:1991\nalpha=0.5\n",
    )
    .unwrap();
    ok(d, &["experiment", "--config", "run.conf"]);
    assert!(read(d, "from_config/table9.txt").contains("A     1991"));
    ok(
        d,
        &[
            "experiment",
            "--config",
            "run.conf",
            "--out",
            "from_flag",
            "--spec",
            "B:1988-1991:1992",
        ],
    );
    let t = read(d, "from_flag/table9.txt");
    assert!(t.contains("B     1992") && !t.contains("A     1991"));
    assert!(
        read(d, "from_flag/models/B_naive_bayes.model").contains("alpha\t5.0000000000000000e-1")
    );
}

#[test]
fn failures_exit_nonzero_with_one_line_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["synth", "--out", "syn", "--seed", "1", "--records", "3000"],
    );

    let cases: [(&[&str], i32, &str); 4] = [
        (
            &["experiment", "--in", "missing.dat", "--out", "x"],
            2,
            "bad config",
        ),
        (
            &[
                "experiment",
                "--in",
                "syn/cohort.dat",
                "--out",
                "x",
                "--spec",
                "bad",
            ],
            2,
            "bad config",
        ),
        (
            &[
                "experiment",
                "--in",
                "syn/cohort.dat",
                "--out",
                "x",
                "--spec",
                "Z:1970-1975:1976",
            ],
            4,
            "empty partition",
        ),
        (
            &["label", "--in", "syn/cohort.dat", "--out", "x"],
            3,
            "parse failure",
        ),
    ];
    for (args, code, class) in cases {
        let out = survmine(d, args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(&format!("survmine: {class}: ")), "{err}");
        assert!(!d.join("x").exists());
    }
    let leftovers: Vec<_> = fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with(".survmine-"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn synth_is_reproducible_from_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--out",
            "a",
            "--seed",
            "9",
            "--records",
            "5000",
            "--set",
            "malformed_line_rate=0.01",
        ],
    );
    ok(
        d,
        &[
            "synth",
            "--out",
            "b",
            "--seed",
            "9",
            "--records",
            "5000",
            "--set",
            "malformed_line_rate=0.01",
        ],
    );
    ok(
        d,
        &["synth", "--out", "c", "--seed", "10", "--records", "5000"],
    );
    for f in [
        "cohort.dat",
        "manifest.tsv",
        "medians.tsv",
        "defects.tsv",
        "generator.conf",
    ] {
        assert_eq!(
            read(d, &format!("a/{f}")),
            read(d, &format!("b/{f}")),
            "{f}"
        );
    }
    assert_ne!(read(d, "a/cohort.dat"), read(d, "c/cohort.dat"));
    let skipped = read(d, "a/defects.tsv").lines().skip(1).count();
    ok(d, &["preprocess", "--in", "a/cohort.dat", "--out", "pre"]);
    assert_eq!(
        read(d, "pre/parse_log.tsv").lines().skip(1).count(),
        skipped
    );
}
