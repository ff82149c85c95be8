//! The `wflr` binary: exit codes, outputs and determinism.

use std::path::Path;
use std::process::{Command, Output};

use wflr::io::{load_dataset, load_model};
use wflr::*;

fn wflr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wflr"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate_small(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "simulate",
        "--out",
        "data.csv",
        "--n-per-class",
        "30",
        "--d",
        "64",
        "--j0",
        "2",
        "--support",
        "9,33",
    ];
    args.extend_from_slice(extra);
    let o = wflr(dir, &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn separable_training_data_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path(), &["--effect", "20", "--noise-sd", "0"]);
    let o = wflr(
        dir.path(),
        &[
            "fit", "--data", "data.csv", "--j0", "2", "--lambda", "1", "--out", "m.toml",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = wflr(
        dir.path(),
        &["evaluate", "--model", "m.toml", "--data", "data.csv"],
    );
    assert_eq!(stdout(&o), "AUC 1.000\nvalidated\n");
}

#[test]
fn lambda_max_fit_exports_scale_only_beta() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path(), &[]);
    let data = load_dataset(&dir.path().join("data.csv")).unwrap();
    let basis = WaveletBasis::new(WaveletFamily::default(), 2, 64).unwrap();
    let lmax = lambda_max(&data.to_coefficients(&basis).unwrap()).unwrap();
    let lambda = format!("{lmax:.17e}");
    let o = wflr(
        dir.path(),
        &[
            "fit", "--data", "data.csv", "--j0", "2", "--lambda", &lambda, "--out", "m.toml",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = load_model(&dir.path().join("m.toml")).unwrap();
    assert!(model.state.omega[4..].iter().all(|&w| w == 0.0));

    let o = wflr(
        dir.path(),
        &["export-beta", "--model", "m.toml", "--out", "beta.csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let beta: Vec<f64> = std::fs::read_to_string(dir.path().join("beta.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    let coefficients = basis.dwt_forward(&beta).unwrap();
    assert!(coefficients.detail().iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn cv_uses_stratified_five_folds() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path(), &["--seed", "4"]);
    let o = wflr(
        dir.path(),
        &[
            "cv", "--data", "data.csv", "--j0", "2", "--folds", "5", "--table", "t.csv", "--seed",
            "4",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("selected lambda="));
    let table = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(table.lines().count(), 21);

    let data = load_dataset(&dir.path().join("data.csv")).unwrap();
    let plan = make_folds(data.labels(), 5, 4).unwrap();
    assert_eq!(plan.k, 5);
    assert_eq!(plan.fold_sizes(), vec![12; 5]);
    for f in 0..5 {
        let ones = plan
            .test_indices(f)
            .iter()
            .filter(|&&i| data.labels()[i] == 1)
            .count();
        assert_eq!(ones, 6);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path(), &[]);
    let p = dir.path();

    let o = wflr(p, &["fit", "--data", "data.csv", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let o = wflr(
        p,
        &[
            "fit",
            "--data",
            "data.csv",
            "--j0",
            "2",
            "--lambda=-1",
            "--out",
            "m.toml",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--lambda"), "{}", stderr(&o));
    let o = wflr(
        p,
        &["fit", "--data", "data.csv", "--j0", "9", "--out", "m.toml"],
    );
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(p.join("ragged.csv"), "label,t1,t2\n0,1,2\n1,1\n").unwrap();
    let o = wflr(p, &["fit", "--data", "ragged.csv", "--out", "m.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ragged.csv:3"), "{}", stderr(&o));
    let o = wflr(
        p,
        &["evaluate", "--model", "missing.toml", "--data", "data.csv"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--model") && stderr(&o).contains("missing.toml"));

    let o = wflr(
        p,
        &[
            "fit",
            "--data",
            "data.csv",
            "--j0",
            "2",
            "--lambda",
            "0.001",
            "--max-iter",
            "2",
            "--out",
            "m.toml",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!p.join("m.toml").exists());

    let o = wflr(p, &["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn predict_writes_one_probability_per_curve() {
    let dir = tempfile::tempdir().unwrap();
    simulate_small(dir.path(), &[]);
    let p = dir.path();
    let o = wflr(
        p,
        &[
            "fit", "--data", "data.csv", "--j0", "2", "--method", "wpcr", "--q", "2", "--lambda",
            "0.5", "--out", "m.toml",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = wflr(p, &["predict", "--model", "m.toml", "--data", "data.csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "probability");
    assert_eq!(lines.len(), 61);
    assert!(lines[1..]
        .iter()
        .all(|l| (0.0..=1.0).contains(&l.parse::<f64>().unwrap())));
}

#[test]
fn identical_invocations_produce_identical_files() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        simulate_small(dir.path(), &["--seed", "9"]);
        let o = wflr(
            dir.path(),
            &[
                "cv",
                "--data",
                "data.csv",
                "--j0",
                "2",
                "--method",
                "wls",
                "--qs",
                "1,2",
                "--seed",
                "9",
                "--out",
                "m.toml",
                "--threads",
                "3",
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            stdout(&o),
            std::fs::read(dir.path().join("data.csv")).unwrap(),
            std::fs::read(dir.path().join("m.toml")).unwrap(),
        )
    };
    assert_eq!(run(), run());
}
