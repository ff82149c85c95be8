//! Stratified k-fold cross-validation and AICc selection over tuning grids.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::auc;
use crate::glm::{neg_log_likelihood, LabeledCoefficients};
use crate::model::{build_reduction, fit_with_reduction};
use crate::penalized::{lambda_max, Estimator, FitConfig, PenalizedSolution};
use crate::reduce::{pca_fit, pls_fit, ReductionKind};
use crate::scalar::Scalar;

/// Default fold count.
pub const DEFAULT_FOLDS: usize = 5;

/// Fold index of every observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles each class with one seeded stream, then deals class 0 followed by
/// class 1 round-robin with a shared counter.
pub fn make_folds(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "fold count must be >= 2, got {k}"
        )));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut counter = 0usize;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::Stratification {
                k,
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = counter % k;
            counter += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// One combination of tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<T> {
    pub lambda: T,
    pub q: usize,
    pub tau: T,
}

impl<T: Scalar> GridPoint<T> {
    pub fn new(lambda: T, q: usize, tau: T) -> Self {
        Self { lambda, q, tau }
    }

    pub fn apply(&self, base: &FitConfig<T>) -> FitConfig<T> {
        FitConfig {
            lambda: self.lambda,
            q: self.q,
            tau: self.tau,
            ..*base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    /// Mean held-out AUC, maximised.
    CvAuc,
    /// Mean held-out deviance per observation, minimised.
    CvDeviance,
    /// Corrected AIC on the full sample, minimised.
    Aicc,
}

impl CriterionKind {
    fn maximize(self) -> bool {
        self == CriterionKind::CvAuc
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionKind::CvAuc => "cv_auc",
            CriterionKind::CvDeviance => "cv_deviance",
            CriterionKind::Aicc => "aicc",
        })
    }
}

impl FromStr for CriterionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cv_auc" | "auc" => Ok(CriterionKind::CvAuc),
            "cv_deviance" | "deviance" => Ok(CriterionKind::CvDeviance),
            "aicc" => Ok(CriterionKind::Aicc),
            _ => Err(Error::InvalidParameter(format!("unknown criterion '{s}'"))),
        }
    }
}

/// A grid point and its criterion; `None` when some fit failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionEntry<T> {
    pub point: GridPoint<T>,
    pub value: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    pub best_lambda: T,
    pub best_q: usize,
    pub best_tau: T,
    /// Position of the winner in `criterion_table`.
    pub best_index: usize,
    pub criterion_table: Vec<CriterionEntry<T>>,
    pub criterion_kind: CriterionKind,
}

impl<T: Scalar> SelectionResult<T> {
    pub fn best_point(&self) -> GridPoint<T> {
        self.criterion_table[self.best_index].point
    }

    pub fn best_value(&self) -> T {
        self.criterion_table[self.best_index]
            .value
            .expect("winner always has a value")
    }
}

/// `2 NLL + 2k + 2k(k+1)/(n - k - 1)`.
pub fn aicc_value<T: Scalar>(nll: T, k_eff: usize, n: usize) -> Result<T> {
    if n <= k_eff + 1 {
        return Err(Error::UndefinedCriterion { n, k_eff });
    }
    let k = T::from_usize_lossy(k_eff);
    let two = T::c(2.0);
    Ok(two * nll + two * k + two * k * (k + T::one()) / T::from_usize_lossy(n - k_eff - 1))
}

/// AICc of a fitted solution, with `k_eff` its effective degrees of freedom.
pub fn aicc<T: Scalar>(
    solution: &PenalizedSolution<T>,
    data: &LabeledCoefficients<T>,
) -> Result<T> {
    let nll = neg_log_likelihood(&solution.state(), data)?;
    aicc_value(nll, solution.effective_df, data.n())
}

/// `count` values spaced logarithmically from `lambda_max` down to `ratio * lambda_max`.
pub fn lambda_grid<T: Scalar>(lambda_max: T, count: usize, ratio: T) -> Vec<T> {
    if count == 1 || lambda_max <= T::zero() {
        return vec![lambda_max; count.min(1)];
    }
    let step = ratio.ln() / T::from_usize_lossy(count - 1);
    (0..count)
        .map(|i| lambda_max * (step * T::from_usize_lossy(i)).exp())
        .collect()
}

/// `{1, 2, 4, 8, 16} ∩ [1, min(n - 1, d)]`.
pub fn q_grid(n: usize, d: usize) -> Vec<usize> {
    let cap = n.saturating_sub(1).min(d);
    [1, 2, 4, 8, 16].into_iter().filter(|&q| q <= cap).collect()
}

/// `{0, τ_med, 2 τ_med}` with `τ_med` the median absolute entry of the dense
/// `q`-component loadings matching `kind`.
pub fn tau_grid<T: Scalar>(
    data: &LabeledCoefficients<T>,
    kind: ReductionKind,
    q: usize,
) -> Result<Vec<T>> {
    let dense = if kind.is_supervised() {
        pls_fit(data.theta(), data.labels(), q)?
    } else {
        pca_fit(data.theta(), q)?
    };
    let mut abs: Vec<T> = dense
        .loadings()
        .as_slice()
        .iter()
        .map(|v| v.abs())
        .collect();
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let m = abs.len();
    let med = if m % 2 == 1 {
        abs[m / 2]
    } else {
        (abs[m / 2 - 1] + abs[m / 2]) * T::c(0.5)
    };
    Ok(vec![T::zero(), med, med + med])
}

/// Default grid for `estimator` on `data`: λ for penalised fits, q for reduced
/// fits and τ for sparse-reduced fits.
pub fn default_grid<T: Scalar>(
    data: &LabeledCoefficients<T>,
    estimator: Estimator,
) -> Result<Vec<GridPoint<T>>> {
    let lambdas = if estimator.uses_lambda() {
        lambda_grid(lambda_max(data)?, 20, T::c(1e-4))
    } else {
        vec![T::zero()]
    };
    let qs = if estimator == Estimator::Wnet {
        vec![1]
    } else {
        q_grid(data.n(), data.d())
    };
    let mut grid = Vec::new();
    for &q in &qs {
        let taus = match estimator.reduction() {
            Some(kind) if estimator.uses_tau() => {
                let dense_kind = if kind.is_supervised() {
                    ReductionKind::Pls
                } else {
                    ReductionKind::Pca
                };
                tau_grid(data, dense_kind, q)?
            }
            _ => vec![T::zero()],
        };
        for &tau in &taus {
            for &lambda in &lambdas {
                grid.push(GridPoint::new(lambda, q, tau));
            }
        }
    }
    Ok(grid)
}

/// Grid indices sharing `(q, τ)`, each group ordered by decreasing λ so fits
/// can be warm started along the path.
fn path_groups<T: Scalar>(grid: &[GridPoint<T>]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in grid.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| grid[g[0]].q == p.q && grid[g[0]].tau.to_bits_key() == p.tau.to_bits_key())
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    for g in &mut groups {
        g.sort_by(|&a, &b| {
            grid[b]
                .lambda
                .partial_cmp(&grid[a].lambda)
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
    }
    groups
}

trait BitsKey {
    fn to_bits_key(self) -> u64;
}

impl<T: Scalar> BitsKey for T {
    fn to_bits_key(self) -> u64 {
        self.as_f64().to_bits()
    }
}

/// Fits one `(q, τ)` path on `train`, returning one solution per member index.
fn fit_path<T: Scalar>(
    train: &LabeledCoefficients<T>,
    base: &FitConfig<T>,
    grid: &[GridPoint<T>],
    members: &[usize],
) -> Vec<Result<PenalizedSolution<T>>> {
    let head = grid[members[0]];
    let reduction = match build_reduction(train, base.estimator, head.q, head.tau) {
        Ok(r) => r,
        Err(e) => return members.iter().map(|_| Err(e.clone())).collect(),
    };
    let mut warm: Option<PenalizedSolution<T>> = None;
    members
        .iter()
        .map(|&i| {
            let cfg = grid[i].apply(base);
            let res = fit_with_reduction(train, &cfg, reduction.as_ref(), warm.as_ref());
            if let Ok(sol) = &res {
                warm = Some(sol.clone());
            }
            res
        })
        .collect()
}

fn held_out_score<T: Scalar>(
    sol: &PenalizedSolution<T>,
    test: &LabeledCoefficients<T>,
    kind: CriterionKind,
) -> Result<T> {
    match kind {
        CriterionKind::CvAuc => {
            let state = sol.state();
            let scores: Vec<T> = test
                .theta()
                .rows_iter()
                .map(|r| state.intercept + crate::linalg::dot(r, &state.omega))
                .collect();
            auc(&scores, test.labels())
        }
        CriterionKind::CvDeviance => {
            let nll = neg_log_likelihood(&sol.state(), test)?;
            Ok(T::c(2.0) * nll / T::from_usize_lossy(test.n()))
        }
        CriterionKind::Aicc => Err(Error::InvalidParameter(
            "aicc is not a cross-validation criterion".into(),
        )),
    }
}

/// Picks the best finite entry; ties go to larger λ, then smaller q, then larger τ.
fn select<T: Scalar>(
    table: Vec<CriterionEntry<T>>,
    kind: CriterionKind,
) -> Result<SelectionResult<T>> {
    let better = |a: &CriterionEntry<T>, b: &CriterionEntry<T>| -> bool {
        let (va, vb) = (a.value.unwrap(), b.value.unwrap());
        let primary = if kind.maximize() {
            va.partial_cmp(&vb)
        } else {
            vb.partial_cmp(&va)
        }
        .unwrap_or(Ordering::Equal);
        let order = primary
            .then(
                a.point
                    .lambda
                    .partial_cmp(&b.point.lambda)
                    .unwrap_or(Ordering::Equal),
            )
            .then(b.point.q.cmp(&a.point.q))
            .then(
                a.point
                    .tau
                    .partial_cmp(&b.point.tau)
                    .unwrap_or(Ordering::Equal),
            );
        order == Ordering::Greater
    };
    let mut best: Option<usize> = None;
    for (i, e) in table.iter().enumerate() {
        if e.value.is_none() {
            continue;
        }
        if best.is_none_or(|b| better(e, &table[b])) {
            best = Some(i);
        }
    }
    let best_index = best.ok_or(Error::SelectionFailed)?;
    let p = table[best_index].point;
    Ok(SelectionResult {
        best_lambda: p.lambda,
        best_q: p.q,
        best_tau: p.tau,
        best_index,
        criterion_table: table,
        criterion_kind: kind,
    })
}

fn check_grid<T: Scalar>(base: &FitConfig<T>, grid: &[GridPoint<T>]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("tuning grid is empty".into()));
    }
    for p in grid {
        p.apply(base).validate()?;
    }
    Ok(())
}

/// Mean held-out criterion for every grid point. A point whose fit fails on any
/// fold is excluded from selection.
pub fn cross_validate<T: Scalar>(
    data: &LabeledCoefficients<T>,
    base: &FitConfig<T>,
    grid: &[GridPoint<T>],
    folds: &FoldPlan,
    kind: CriterionKind,
) -> Result<SelectionResult<T>> {
    check_grid(base, grid)?;
    if kind == CriterionKind::Aicc {
        return Err(Error::InvalidParameter(
            "aicc is not a cross-validation criterion".into(),
        ));
    }
    if folds.assignments.len() != data.n() {
        return Err(Error::Dimension {
            what: "fold assignments",
            expected: data.n(),
            found: folds.assignments.len(),
        });
    }
    let groups = path_groups(grid);
    let splits: Vec<(LabeledCoefficients<T>, LabeledCoefficients<T>)> = (0..folds.k)
        .map(|f| {
            Ok((
                data.subset(&folds.train_indices(f))?,
                data.subset(&folds.test_indices(f))?,
            ))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..folds.k)
        .flat_map(|f| (0..groups.len()).map(move |g| (f, g)))
        .collect();
    // Each job returns (grid index, score) pairs; collection keeps job order.
    let results: Vec<Vec<(usize, Option<T>)>> = jobs
        .par_iter()
        .map(|&(f, g)| {
            let (train, test) = &splits[f];
            let members = &groups[g];
            fit_path(train, base, grid, members)
                .into_iter()
                .zip(members)
                .map(|(res, &i)| (i, res.and_then(|s| held_out_score(&s, test, kind)).ok()))
                .collect()
        })
        .collect();

    let mut sums = vec![Some(T::zero()); grid.len()];
    for (i, score) in results.into_iter().flatten() {
        sums[i] = match (sums[i], score) {
            (Some(acc), Some(s)) => Some(acc + s),
            _ => None,
        };
    }
    let k = T::from_usize_lossy(folds.k);
    let table = grid
        .iter()
        .zip(sums)
        .map(|(&point, s)| CriterionEntry {
            point,
            value: s.map(|v| v / k),
        })
        .collect();
    select(table, kind)
}

/// Fits every grid point on all of `data` and minimises AICc. An undefined
/// AICc counts as `+∞`; a failed fit is excluded.
pub fn select_by_aicc<T: Scalar>(
    data: &LabeledCoefficients<T>,
    base: &FitConfig<T>,
    grid: &[GridPoint<T>],
) -> Result<SelectionResult<T>> {
    check_grid(base, grid)?;
    let groups = path_groups(grid);
    let results: Vec<Vec<(usize, Option<T>)>> = groups
        .par_iter()
        .map(|members| {
            fit_path(data, base, grid, members)
                .into_iter()
                .zip(members)
                .map(|(res, &i)| {
                    let value = match res.and_then(|s| aicc(&s, data)) {
                        Ok(v) => Some(v),
                        Err(Error::UndefinedCriterion { .. }) => Some(T::infinity()),
                        Err(_) => None,
                    };
                    (i, value)
                })
                .collect()
        })
        .collect();
    let mut values = vec![None; grid.len()];
    for (i, v) in results.into_iter().flatten() {
        values[i] = v;
    }
    let table = grid
        .iter()
        .zip(values)
        .map(|(&point, value)| CriterionEntry { point, value })
        .collect();
    select(table, CriterionKind::Aicc)
}
