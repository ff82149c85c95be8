//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::eval::{auc, discrimination_verdict};
use crate::io::{
    export_beta, load_dataset, load_model, probabilities_to_csv, save_dataset, save_model,
    write_atomic,
};
use crate::model::{fit_model, CurveDataset};
use crate::penalized::{lambda_max, Estimator, FitConfig};
use crate::reduce::ReductionKind;
use crate::select::{
    cross_validate, lambda_grid, make_folds, q_grid, select_by_aicc, tau_grid, CriterionKind,
    GridPoint, SelectionResult,
};
use crate::synth::{generate_dataset, split_per_class, SynthSpec};
use crate::wavelet::{WaveletBasis, WaveletFamily};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "wflr",
    version,
    about = "Wavelet-domain penalized logistic classification of curves"
)]
struct Cli {
    /// Seed for every random choice (simulation, fold assignment).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for cross-validation; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic two-class curve dataset.
    Simulate(SimulateArgs),
    /// Fit one estimator with fixed tuning parameters.
    Fit(FitArgs),
    /// Select tuning parameters by cross-validation or AICc, optionally refitting.
    Cv(CvArgs),
    /// Write class-1 probabilities for every curve in a dataset.
    Predict(PredictArgs),
    /// Print the AUC of a model on a dataset and the discrimination verdict.
    Evaluate(EvaluateArgs),
    /// Write the sampled discriminant function of a model.
    ExportBeta(ExportBetaArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    n_per_class: usize,
    #[arg(long, default_value_t = 256)]
    d: usize,
    #[arg(long, default_value = "db4")]
    wavelet: WaveletFamily,
    #[arg(long, default_value_t = 3)]
    j0: usize,
    /// 0-based detail coefficient indices carrying the class signal.
    #[arg(long, value_delimiter = ',')]
    support: Option<Vec<usize>>,
    /// Effect size per support index; a single value applies to all.
    #[arg(long, value_delimiter = ',')]
    effect: Option<Vec<f64>>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    /// Send the first N curves of each class to --out and the rest to --test-out.
    #[arg(long, requires = "test_out")]
    train_per_class: Option<usize>,
    #[arg(long, requires = "train_per_class")]
    test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "wnet")]
    method: Estimator,
    #[arg(long, default_value = "db4")]
    wavelet: WaveletFamily,
    #[arg(long, default_value_t = 3)]
    j0: usize,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SelectMode {
    Cv,
    Aicc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum CvCriterion {
    Auc,
    Deviance,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, value_enum, default_value_t = SelectMode::Cv)]
    select: SelectMode,
    #[arg(long, value_enum, default_value_t = CvCriterion::Auc)]
    criterion: CvCriterion,
    /// Explicit λ values; otherwise a log grid below λ_max.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 20)]
    n_lambda: usize,
    #[arg(long, default_value_t = 1e-4)]
    lambda_ratio: f64,
    #[arg(long, value_delimiter = ',')]
    qs: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Refit at the selected parameters and save the model here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the criterion table as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct ExportBetaArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// A failure together with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

/// Context names the flag or file the error is about.
fn fail(context: &str, e: Error) -> Failure {
    let code = if e.is_numerical() {
        EXIT_NUMERICAL
    } else if matches!(e, Error::InvalidParameter(_) | Error::InvalidBasis(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    };
    Failure {
        code,
        message: format!("{context}: {e}"),
    }
}

fn with_path(flag: &str, path: &Path) -> String {
    format!("{flag} {}", path.display())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: --threads {}: {e}", cli.threads);
            return EXIT_USAGE;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Fit(a) => fit(a, cli.seed),
        Command::Cv(a) => cv(a, cli.seed),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::ExportBeta(a) => {
            let model = load_model(&a.model).map_err(|e| fail("--model", e))?;
            export_beta(&model, &a.out).map_err(|e| fail("--out", e))
        }
    }
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<(), Failure> {
    let mut spec = SynthSpec {
        n_per_class: a.n_per_class,
        d: a.d,
        family: a.wavelet,
        j0: a.j0,
        seed,
        ..SynthSpec::default()
    };
    if let Some(s) = &a.support {
        spec.true_support = s.clone();
    }
    spec.effect_sizes = match &a.effect {
        Some(e) if e.len() == 1 => vec![e[0]; spec.true_support.len()],
        Some(e) => e.clone(),
        None => vec![SynthSpec::default().effect_sizes[0]; spec.true_support.len()],
    };
    if let Some(v) = a.noise_sd {
        spec.noise_sd = v;
    }
    if let Some(v) = a.decay {
        spec.background_decay = v;
    }
    let data = generate_dataset(&spec).map_err(|e| {
        fail(
            "simulate (--d/--j0/--support/--effect/--noise-sd/--decay)",
            e,
        )
    })?;
    match (a.train_per_class, &a.test_out) {
        (Some(k), Some(test_out)) => {
            let (train, test) =
                split_per_class(&data, k).map_err(|e| fail("--train-per-class", e))?;
            save_dataset(&train, &a.out).map_err(|e| fail("--out", e))?;
            save_dataset(&test, test_out).map_err(|e| fail("--test-out", e))
        }
        _ => save_dataset(&data, &a.out).map_err(|e| fail("--out", e)),
    }
}

fn load(flag: &str, path: &Path) -> Result<CurveDataset<f64>, Failure> {
    load_dataset(path).map_err(|e| fail(flag, e))
}

fn base_config(m: &ModelArgs, seed: u64) -> FitConfig<f64> {
    let mut cfg = FitConfig::new(m.method).with_max_iter(m.max_iter);
    cfg.seed = seed;
    cfg
}

fn fit(a: &FitArgs, seed: u64) -> Result<(), Failure> {
    let data = load("--data", &a.model.data)?;
    let cfg = base_config(&a.model, seed)
        .with_lambda(a.lambda)
        .with_q(a.q)
        .with_tau(a.tau);
    cfg.validate().map_err(|e| fail("--lambda/--q/--tau", e))?;
    let model = fit_model(&data, a.model.wavelet, a.model.j0, &cfg)
        .map_err(|e| fail(&format!("fit --method {}", a.model.method), e))?;
    save_model(&model, &a.out).map_err(|e| fail("--out", e))?;
    println!(
        "{} fit: {} nonzero coefficients, {} iterations, kkt residual {:.3e}",
        model.estimator,
        model.state.omega.iter().filter(|&&v| v != 0.0).count(),
        model.iterations,
        model.kkt_residual
    );
    Ok(())
}

fn cv(a: &CvArgs, seed: u64) -> Result<(), Failure> {
    let method = a.model.method;
    let dataset = load("--data", &a.model.data)?;
    let basis = WaveletBasis::new(a.model.wavelet, a.model.j0, dataset.d())
        .map_err(|e| fail("--wavelet/--j0", e))?;
    let data = dataset
        .to_coefficients(&basis)
        .map_err(|e| fail(&with_path("--data", &a.model.data), e))?;
    let base = base_config(&a.model, seed);

    let lambdas = match (&a.lambdas, method.uses_lambda()) {
        (Some(l), true) => l.clone(),
        (Some(_), false) => {
            return Err(Failure::usage(format!(
                "--lambdas: method {method} has no penalty"
            )))
        }
        (None, true) => {
            if a.n_lambda == 0 || !(a.lambda_ratio > 0.0 && a.lambda_ratio <= 1.0) {
                return Err(Failure::usage(
                    "--n-lambda must be >= 1 and --lambda-ratio in (0, 1]",
                ));
            }
            let lmax =
                lambda_max(&data).map_err(|e| fail(&with_path("--data", &a.model.data), e))?;
            lambda_grid(lmax, a.n_lambda, a.lambda_ratio)
        }
        (None, false) => vec![0.0],
    };
    let qs = match (&a.qs, method) {
        (_, Estimator::Wnet) => vec![1],
        (Some(q), _) => q.clone(),
        (None, _) => q_grid(data.n(), data.d()),
    };
    let mut grid = Vec::new();
    for &q in &qs {
        let taus = match (&a.taus, method.uses_tau()) {
            (Some(t), true) => t.clone(),
            (None, true) => {
                let kind = if method == Estimator::Wls {
                    ReductionKind::Pls
                } else {
                    ReductionKind::Pca
                };
                tau_grid(&data, kind, q).map_err(|e| fail(&format!("--qs {q}"), e))?
            }
            (Some(_), false) => {
                return Err(Failure::usage(format!(
                    "--taus: method {method} has no threshold"
                )))
            }
            (None, false) => vec![0.0],
        };
        for &tau in &taus {
            for &lambda in &lambdas {
                grid.push(GridPoint::new(lambda, q, tau));
            }
        }
    }

    let result: SelectionResult<f64> = match a.select {
        SelectMode::Cv => {
            let folds = make_folds(data.labels(), a.folds, seed)
                .map_err(|e| fail(&format!("--folds {}", a.folds), e))?;
            let kind = match a.criterion {
                CvCriterion::Auc => CriterionKind::CvAuc,
                CvCriterion::Deviance => CriterionKind::CvDeviance,
            };
            cross_validate(&data, &base, &grid, &folds, kind)
        }
        SelectMode::Aicc => select_by_aicc(&data, &base, &grid),
    }
    .map_err(|e| fail(&format!("cv --method {method}"), e))?;

    if let Some(path) = &a.table {
        let mut text = String::from("lambda,q,tau,value\n");
        for e in &result.criterion_table {
            let value = e.value.map(|v| format!("{v:.16e}")).unwrap_or_default();
            text.push_str(&format!(
                "{:.16e},{},{:.16e},{value}\n",
                e.point.lambda, e.point.q, e.point.tau
            ));
        }
        write_atomic(path, text.as_bytes()).map_err(|e| fail("--table", e))?;
    }
    println!(
        "selected lambda={:.6e} q={} tau={:.6e} ({} = {:.6})",
        result.best_lambda,
        result.best_q,
        result.best_tau,
        result.criterion_kind,
        result.best_value()
    );
    if let Some(out) = &a.out {
        let cfg = result.best_point().apply(&base);
        let model = fit_model(&dataset, a.model.wavelet, a.model.j0, &cfg)
            .map_err(|e| fail(&format!("refit --method {method}"), e))?;
        save_model(&model, out).map_err(|e| fail("--out", e))?;
    }
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<(), Failure> {
    let model = load_model(&a.model).map_err(|e| fail("--model", e))?;
    let data = load("--data", &a.data)?;
    let p = model
        .predict_curves(data.curves())
        .map_err(|e| fail(&with_path("--data", &a.data), e))?;
    let text = probabilities_to_csv(&p);
    match &a.out {
        Some(out) => write_atomic(out, text.as_bytes()).map_err(|e| fail("--out", e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn evaluate(a: &EvaluateArgs) -> Result<(), Failure> {
    let model = load_model(&a.model).map_err(|e| fail("--model", e))?;
    let data = load("--data", &a.data)?;
    let ctx = with_path("--data", &a.data);
    let p = model
        .predict_curves(data.curves())
        .map_err(|e| fail(&ctx, e))?;
    let value = auc(&p, data.labels()).map_err(|e| fail(&ctx, e))?;
    println!("AUC {value:.3}");
    println!("{}", discrimination_verdict(value));
    Ok(())
}
