//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Runs without the libtest harness so the report is printed even when the
//! run succeeds.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use wflr::synth::{mass_fraction, planted_time_support};
use wflr::*;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> (bool, String) {
    (
        elapsed.as_secs_f64() <= limit_s as f64,
        format!("{:.1}s of {limit_s}s", elapsed.as_secs_f64()),
    )
}

/// Wavelet round trip and orthonormality over every family, d and j0.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let sizes: Vec<usize> = (3..=10).map(|p| 1usize << p).collect();
    let configs: Vec<(WaveletFamily, usize)> = WaveletFamily::all()
        .into_iter()
        .flat_map(|f| sizes.iter().map(move |&d| (f, d)))
        .collect();
    // (worst reconstruction error, worst |W Wᵀ - I|) per (family, d).
    let worst: Vec<(f64, f64)> = configs
        .par_iter()
        .map(|&(family, d)| {
            let levels = d.trailing_zeros() as usize;
            let bases: Vec<WaveletBasis<f64>> = (0..levels)
                .map(|j0| WaveletBasis::new(family, j0, d).unwrap())
                .collect();
            let mut r = rng(d as u64 * 31 + family.vanishing_moments() as u64);
            let mut recon = 0.0f64;
            for k in 0..1000 {
                let basis = &bases[k % levels];
                let x = gaussian(&mut r, d);
                let back = basis.dwt_inverse(&basis.dwt_forward(&x).unwrap()).unwrap();
                let err: f64 = x
                    .iter()
                    .zip(&back)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                recon = recon.max(err / norm);
            }
            let mut ortho = 0.0f64;
            for basis in &bases {
                ortho = ortho.max(gram_defect(&basis.transform_matrix()));
            }
            (recon, ortho)
        })
        .collect();
    let recon = worst.iter().fold(0.0f64, |m, w| m.max(w.0));
    let ortho = worst.iter().fold(0.0f64, |m, w| m.max(w.1));
    let (fast, time) = within(start.elapsed(), 30);
    outcome(
        recon <= 1e-10 && ortho <= 1e-10 && fast,
        format!(
            "max relative reconstruction error {recon:.2e}, max |W W^T - I| {ortho:.2e}, {time}"
        ),
    )
}

/// `max |W Wᵀ - I|`, accumulated over the nonzeros of each column of `W`.
fn gram_defect(w: &Matrix<f64>) -> f64 {
    let d = w.nrows();
    let mut g = vec![0.0; d * d];
    for t in 0..d {
        let nz: Vec<(usize, f64)> = (0..d)
            .map(|i| (i, w[(i, t)]))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        for &(i, a) in &nz {
            for &(k, b) in &nz {
                g[i * d + k] += a * b;
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..d {
        for k in 0..d {
            let target = if i == k { 1.0 } else { 0.0 };
            worst = worst.max((g[i * d + k] - target).abs());
        }
    }
    worst
}

/// Analytic gradient against central differences of an independent NLL.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut r = rng(1000 + seed);
        let (n, d) = (20 + (seed as usize % 30), [4, 8, 16][seed as usize % 3]);
        let data = logistic_instance(n, d, 1, seed);
        let omega: Vec<f64> = gaussian(&mut r, d).iter().map(|v| 0.5 * v).collect();
        let b = 0.3 * gaussian(&mut r, 1)[0];
        let state = LinearModelState {
            omega: omega.clone(),
            intercept: b,
        };
        let (g, g0) = nll_gradient(&state, &data).unwrap();
        let f = |w: &[f64], b: f64| nll_oracle(data.theta(), data.labels(), w, b);
        let h = 1e-5;
        let rel =
            |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(1.0);
        for j in 0..d {
            let (mut up, mut down) = (omega.clone(), omega.clone());
            up[j] += h;
            down[j] -= h;
            worst = worst.max(rel(g[j], (f(&up, b) - f(&down, b)) / (2.0 * h)));
        }
        worst = worst.max(rel(g0, (f(&omega, b + h) - f(&omega, b - h)) / (2.0 * h)));
    }
    let (fast, time) = within(start.elapsed(), 10);
    outcome(
        worst <= 1e-5 && fast,
        format!("max relative error {worst:.2e} over 100 instances, {time}"),
    )
}

/// WNET at λ = 0 against IRLS.
fn criterion_3() -> Outcome {
    let start = Instant::now();
    let diffs: Vec<Result<f64>> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let data = logistic_instance(200, 32, 2, 500 + seed);
            let reference = irls_fit(&data, 100, 1e-12)?;
            let sol = fit_wnet(
                &data,
                &FitConfig::new(Estimator::Wnet).with_max_iter(100_000),
            )?;
            let coef = sol
                .omega
                .iter()
                .zip(&reference.omega)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            Ok(coef.max((sol.intercept - reference.intercept).abs()))
        })
        .collect();
    let failures = diffs.iter().filter(|d| d.is_err()).count();
    let worst = diffs.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    let (fast, time) = within(start.elapsed(), 60);
    outcome(
        failures == 0 && worst <= 1e-4 && fast,
        format!("max coordinate difference {worst:.2e}, {failures} failed fits, {time}"),
    )
}

/// KKT certificate on a battery of ℓ¹ fits, and exact zeros at λ ≥ λ_max.
fn criterion_4() -> Outcome {
    let mut fits = 0;
    let mut worst = 0.0f64;
    let mut nonzero_at_max = 0;
    for seed in 0..12u64 {
        let data = if seed % 2 == 0 {
            logistic_instance(120, 32, 2, 900 + seed)
        } else {
            let spec = SynthSpec {
                n_per_class: 60,
                d: 64,
                j0: 2,
                true_support: vec![9, 20, 21],
                effect_sizes: vec![0.8; 3],
                ..SynthSpec::default()
            }
            .with_seed(seed);
            generate_dataset(&spec)
                .unwrap()
                .to_coefficients(&spec.basis().unwrap())
                .unwrap()
        };
        let lmax = lambda_max(&data).unwrap();
        for frac in [0.02, 0.1, 0.3, 0.7] {
            let cfg = FitConfig::new(Estimator::Wnet).with_lambda(frac * lmax);
            if let Ok(sol) = fit_wnet(&data, &cfg) {
                fits += 1;
                worst = worst.max(kkt_oracle(&data, &sol.state(), cfg.lambda));
            }
        }
        for mult in [1.0, 2.0] {
            let sol = fit_wnet(
                &data,
                &FitConfig::new(Estimator::Wnet).with_lambda(mult * lmax),
            )
            .unwrap();
            fits += 1;
            worst = worst.max(kkt_oracle(&data, &sol.state(), mult * lmax));
            nonzero_at_max += sol.omega[data.n_scale()..]
                .iter()
                .filter(|&&v| v != 0.0)
                .count();
        }
    }
    outcome(
        worst <= 1e-5 && nonzero_at_max == 0 && fits == 72,
        format!(
            "{fits}/72 fits converged, max KKT residual {worst:.2e}, {nonzero_at_max} nonzero detail coefficients at lambda >= lambda_max"
        ),
    )
}

/// Sort-based AUC against pairwise counting.
fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut r = rng(55);
    let mut done = 0;
    while done < 1000 {
        let m = 2 + (r.random::<u32>() % 49) as usize;
        let levels = 1 + (r.random::<u32>() % 6);
        let labels: Vec<u8> = (0..m).map(|_| u8::from(r.random::<bool>())).collect();
        if labels.iter().all(|&y| y == labels[0]) {
            continue;
        }
        // Few distinct values, so most instances are heavily tied.
        let scores: Vec<f64> = (0..m)
            .map(|_| f64::from(r.random::<u32>() % levels) / 4.0)
            .collect();
        let fast = auc(&scores, &labels).unwrap();
        let area = roc_curve(&scores, &labels).unwrap().area();
        let oracle = pairwise_auc(&scores, &labels);
        worst = worst.max((fast - oracle).abs()).max((area - oracle).abs());
        done += 1;
    }
    let (fast, time) = within(start.elapsed(), 5);
    outcome(
        worst <= 1e-12 && fast,
        format!("max difference {worst:.2e} over 1000 instances, {time}"),
    )
}

struct Replicate {
    wnet_test_auc: f64,
    beta_mass: f64,
    wls_train_auc: f64,
    wls_test_auc: f64,
}

/// The planted 75/25-per-class experiment shared by criteria 6 and 8.
fn planted_replicate(seed: u64) -> Result<Replicate> {
    let spec = SynthSpec::default().with_seed(seed);
    let data = generate_dataset(&spec)?;
    let (train, test) = split_per_class(&data, 75)?;
    let basis = spec.basis()?;
    let coefficients = train.to_coefficients(&basis)?;

    let base = FitConfig::new(Estimator::Wnet);
    let grid = default_grid(&coefficients, Estimator::Wnet)?;
    let folds = make_folds(coefficients.labels(), 5, seed)?;
    let selection = cross_validate(&coefficients, &base, &grid, &folds, CriterionKind::CvAuc)?;
    let wnet = fit_model(
        &train,
        spec.family,
        spec.j0,
        &selection.best_point().apply(&base),
    )?;
    let wnet_test_auc = auc(&wnet.predict_curves(test.curves())?, test.labels())?;
    let beta_mass = mass_fraction(&wnet.beta()?, &planted_time_support(&spec)?);

    // Heavily reduced sparse PLS: two components, loadings thresholded at the median.
    let tau = tau_grid(&coefficients, ReductionKind::Pls, 2)?[1];
    let wls = fit_model(
        &train,
        spec.family,
        spec.j0,
        &FitConfig::new(Estimator::Wls).with_q(2).with_tau(tau),
    )?;
    Ok(Replicate {
        wnet_test_auc,
        beta_mass,
        wls_train_auc: auc(&wls.predict_curves(train.curves())?, train.labels())?,
        wls_test_auc: auc(&wls.predict_curves(test.curves())?, test.labels())?,
    })
}

fn criterion_6(reps: &[Result<Replicate>], elapsed: Duration) -> Outcome {
    let ok: Vec<&Replicate> = reps.iter().flatten().collect();
    let auc_hits = ok.iter().filter(|r| r.wnet_test_auc > 0.7).count();
    let mass_hits = ok.iter().filter(|r| r.beta_mass >= 0.8).count();
    let aucs: Vec<String> = ok
        .iter()
        .map(|r| format!("{:.3}", r.wnet_test_auc))
        .collect();
    let masses: Vec<String> = ok.iter().map(|r| format!("{:.2}", r.beta_mass)).collect();
    let (fast, time) = within(elapsed, 600);
    outcome(
        auc_hits >= 9 && mass_hits >= 8 && fast,
        format!(
            "held-out AUC > 0.7 in {auc_hits}/10 [{}], beta mass >= 0.8 in {mass_hits}/10 [{}], {time}",
            aucs.join(" "),
            masses.join(" ")
        ),
    )
}

/// PCA invariants, τ = 0 sparse equivalence and the full-basis WPCR identity.
fn criterion_7() -> Outcome {
    let mut pca_worst = 0.0f64;
    let mut ordered = true;
    for seed in 0..200u64 {
        let mut r = rng(7000 + seed);
        let (n, d) = (5 + (seed as usize % 40), [4, 8, 16, 32][seed as usize % 4]);
        let q = 1 + (seed as usize % n.min(d).saturating_sub(1).max(1));
        let theta = Matrix::from_vec(n, d, gaussian(&mut r, n * d)).unwrap();
        let Ok(basis) = pca_fit(&theta, q) else {
            pca_worst = f64::INFINITY;
            continue;
        };
        let v = basis.loadings();
        // Orthonormal columns.
        for a in 0..q {
            for b in 0..q {
                let dot: f64 = (0..d).map(|i| v[(i, a)] * v[(i, b)]).sum();
                pca_worst = pca_worst.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        // Each column is an eigenvector of the sample covariance, eigenvalues non-increasing.
        let centered = theta.centered(&theta.column_means());
        let cov = centered.gram();
        let scale = cov.frobenius_norm().max(1.0);
        let mut prev = f64::INFINITY;
        for a in 0..q {
            let col = v.column(a);
            let sv = cov.mul_vec(&col);
            let rq: f64 = sv.iter().zip(&col).map(|(x, y)| x * y).sum();
            let resid: f64 = sv
                .iter()
                .zip(&col)
                .map(|(x, y)| (x - rq * y).powi(2))
                .sum::<f64>()
                .sqrt();
            pca_worst = pca_worst.max(resid / scale);
            ordered &= rq <= prev + 1e-9 * scale;
            prev = rq;
        }
    }

    let mut sparse_worst = 0.0f64;
    for seed in 0..20u64 {
        let data = logistic_instance(40, 16, 1, 7500 + seed);
        for (dense, kind, labels) in [
            (
                pca_fit(data.theta(), 3).unwrap(),
                ReductionKind::SparsePca,
                None,
            ),
            (
                pls_fit(data.theta(), data.labels(), 3).unwrap(),
                ReductionKind::SparsePls,
                Some(data.labels()),
            ),
        ] {
            let sparse = sparse_component_fit(data.theta(), labels, 3, 0.0, kind).unwrap();
            let diff = dense
                .loadings()
                .as_slice()
                .iter()
                .zip(sparse.loadings().as_slice())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            sparse_worst = sparse_worst.max(diff);
        }
    }

    let mut nll_worst = 0.0f64;
    for seed in 0..5u64 {
        let data = logistic_instance(200, 16, 1, 7800 + seed);
        let wnet = fit_wnet(
            &data,
            &FitConfig::new(Estimator::Wnet).with_max_iter(100_000),
        )
        .unwrap();
        let basis = pca_fit(data.theta(), 16).unwrap();
        let wpcr =
            fit_reduced_penalized(&data, &basis, &FitConfig::new(Estimator::Wpcr).with_q(16))
                .unwrap();
        let a = nll_oracle(data.theta(), data.labels(), &wnet.omega, wnet.intercept);
        let b = nll_oracle(data.theta(), data.labels(), &wpcr.omega, wpcr.intercept);
        nll_worst = nll_worst.max((a - b).abs());
    }
    outcome(
        pca_worst <= 1e-10 && ordered && sparse_worst <= 1e-8 && nll_worst <= 1e-6,
        format!(
            "PCA defect {pca_worst:.2e} (ordered: {ordered}), sparse tau=0 vs dense {sparse_worst:.2e}, WPCR(q=d) vs WNET NLL {nll_worst:.2e}"
        ),
    )
}

fn criterion_8(reps: &[Result<Replicate>]) -> Outcome {
    let ok: Vec<&Replicate> = reps.iter().flatten().collect();
    let hits = ok
        .iter()
        .filter(|r| r.wls_train_auc >= r.wls_test_auc + 0.1)
        .count();
    let pairs: Vec<String> = ok
        .iter()
        .map(|r| format!("{:.3}/{:.3}", r.wls_train_auc, r.wls_test_auc))
        .collect();
    outcome(
        hits >= 7,
        format!(
            "train >= held-out + 0.1 in {hits}/10 (train/held-out: {})",
            pairs.join(" ")
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wflr"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("cli runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

/// Runs simulate → cv → fit → evaluate → export-beta in `dir`; returns
/// every produced file and stdout, in order.
fn cli_pipeline(dir: &Path) -> std::result::Result<Vec<(String, Vec<u8>)>, String> {
    let steps: [&[&str]; 7] = [
        &[
            "simulate",
            "--out",
            "train.csv",
            "--train-per-class",
            "75",
            "--test-out",
            "test.csv",
            "--seed",
            "11",
        ],
        &[
            "cv",
            "--data",
            "train.csv",
            "--table",
            "table.csv",
            "--out",
            "cv.toml",
            "--seed",
            "11",
        ],
        &[
            "cv",
            "--data",
            "train.csv",
            "--method",
            "wpls",
            "--select",
            "aicc",
            "--qs",
            "1,2",
            "--n-lambda",
            "4",
            "--out",
            "aicc.toml",
        ],
        &[
            "fit",
            "--data",
            "train.csv",
            "--method",
            "wnet",
            "--lambda",
            "2.0",
            "--out",
            "fit.toml",
        ],
        &["evaluate", "--model", "cv.toml", "--data", "test.csv"],
        &[
            "predict", "--model", "fit.toml", "--data", "test.csv", "--out", "pred.csv",
        ],
        &["export-beta", "--model", "cv.toml", "--out", "beta.csv"],
    ];
    let mut produced = Vec::new();
    for args in steps {
        let (code, stdout) = run_cli(dir, args);
        if code != 0 {
            return Err(format!("`wflr {}` exited with {code}", args.join(" ")));
        }
        produced.push((format!("stdout of {}", args[0]), stdout.into_bytes()));
    }
    for name in [
        "train.csv",
        "test.csv",
        "table.csv",
        "cv.toml",
        "aicc.toml",
        "fit.toml",
        "pred.csv",
        "beta.csv",
    ] {
        produced.push((
            name.to_string(),
            std::fs::read(dir.join(name)).map_err(|e| e.to_string())?,
        ));
    }
    Ok(produced)
}

/// Byte-identical CLI runs and bit-exact predictions after save/load.
fn criterion_9() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (first, second) = match (cli_pipeline(a.path()), cli_pipeline(b.path())) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();

    let spec = SynthSpec {
        n_per_class: 40,
        d: 64,
        j0: 2,
        true_support: vec![10, 33],
        effect_sizes: vec![1.0, 1.0],
        ..SynthSpec::default()
    };
    let data = generate_dataset(&spec).unwrap();
    let configs = [
        FitConfig::new(Estimator::Wnet).with_lambda(1.0),
        FitConfig::new(Estimator::Wpcr).with_lambda(0.5).with_q(4),
        FitConfig::new(Estimator::Wpls).with_lambda(0.5).with_q(2),
        FitConfig::new(Estimator::Wcr).with_q(2).with_tau(0.05),
        FitConfig::new(Estimator::Wls).with_q(2).with_tau(0.05),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut mismatched = Vec::new();
    for cfg in configs {
        let model = fit_model(&data, spec.family, spec.j0, &cfg).unwrap();
        let path = dir.path().join(format!("{}.toml", cfg.estimator));
        io::save_model(&model, &path).unwrap();
        let loaded = io::load_model(&path).unwrap();
        let before = model.predict_curves(data.curves()).unwrap();
        let after = loaded.predict_curves(data.curves()).unwrap();
        let same = before
            .iter()
            .zip(&after)
            .all(|(x, y)| x.to_bits() == y.to_bits())
            && loaded == model;
        if !same {
            mismatched.push(cfg.estimator.to_string());
        }
    }
    outcome(
        differing.is_empty() && mismatched.is_empty(),
        format!(
            "{} CLI artifacts compared, differing: [{}]; save/load prediction mismatches: [{}]",
            first.len(),
            differing.join(", "),
            mismatched.join(", ")
        ),
    )
}

fn main() {
    let suite_start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |k: usize, name: &'static str, o: Outcome| {
        println!(
            "criterion {k} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((k, name, o));
    };
    record(1, "wavelet round trip", criterion_1());
    record(2, "gradient correctness", criterion_2());
    record(3, "lambda=0 IRLS oracle", criterion_3());
    record(4, "KKT certificate", criterion_4());
    record(5, "AUC oracle equivalence", criterion_5());
    let start = Instant::now();
    let reps: Vec<Result<Replicate>> = (0..10u64).into_par_iter().map(planted_replicate).collect();
    let elapsed = start.elapsed();
    for (seed, r) in reps.iter().enumerate() {
        if let Err(e) = r {
            println!("  planted replicate {seed} failed: {e}");
        }
    }
    record(6, "synthetic experiment", criterion_6(&reps, elapsed));
    record(7, "reduction sanity", criterion_7());
    record(8, "reduced-fit overfit pattern", criterion_8(&reps));
    record(9, "CLI determinism and round trips", criterion_9());

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.1}s",
        results.len(),
        suite_start.elapsed().as_secs_f64()
    );
    if passed != results.len() {
        std::process::exit(1);
    }
}
