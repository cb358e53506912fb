use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_detour-choice"))
}

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_survey.csv")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_dataset_exits_with_code_two() {
    let o = run(&["describe", "--dataset", "/no/such/file.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/file.csv"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_rejected() {
    let o = run(&[
        "fit",
        "--dataset",
        bundled().to_str().unwrap(),
        "--model",
        "no-such-model",
    ]);
    assert_ne!(o.status.code(), Some(0));
    let o = run(&["bogus-subcommand"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[optimizer]\nmax_iterations = 10\nwobble = 1\n").unwrap();
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "describe",
        "--dataset",
        bundled().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wobble"), "{}", stderr(&o));
}

#[test]
fn bundled_dataset_regenerates_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&[
        "--seed",
        "1",
        "synth",
        "--spec",
        "cost-time",
        "--n",
        "249",
        "--exact-car-count",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(bundled()).unwrap()
    );
}

#[test]
fn describe_prints_both_genders() {
    let o = run(&["describe", "--dataset", bundled().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("female") || s.contains("Female"), "{s}");
}

#[test]
fn synthesize_writes_attribute_rows() {
    let o = run(&["synthesize", "--dataset", bundled().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    // header plus one row per observation and mode
    assert_eq!(stdout(&o).lines().count(), 1 + 249 * 6);
}

#[test]
fn fit_mpe_report_chain() {
    let dir = tempfile::tempdir().unwrap();
    let data = bundled();
    let data = data.to_str().unwrap();
    for (model, k) in [("cost-time", 20), ("profit-time", 22)] {
        let est = dir.path().join(format!("{model}.csv"));
        let o = run(&[
            "fit",
            "--model",
            model,
            "--dataset",
            data,
            "--out",
            est.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.contains("Adjusted rho-square"), "{text}");
        let rows = std::fs::read_to_string(&est).unwrap();
        assert_eq!(
            rows.lines()
                .filter(|l| l.starts_with("coefficient,"))
                .count(),
            k
        );

        let mpe = dir.path().join(format!("mpe_{model}.csv"));
        let o = run(&[
            "mpe",
            "--model-result",
            est.to_str().unwrap(),
            "--dataset",
            data,
            "--out",
            mpe.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(mpe.exists());

        let report = dir.path().join(format!("report_{model}.txt"));
        let o = run(&[
            "report",
            "--result",
            est.to_str().unwrap(),
            "--mpe",
            mpe.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(std::fs::read_to_string(&report).unwrap().contains(model));
    }
}

#[test]
fn run_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "run",
        "--dataset",
        bundled().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "summary.txt",
        "summary.csv",
        "attributes.csv",
        "report.txt",
        "estimates_cost-time.csv",
        "estimates_profit-time.csv",
        "mpe_cost-time.csv",
        "mpe_profit-time.csv",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
}
