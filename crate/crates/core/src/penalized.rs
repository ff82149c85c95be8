//! ℓ¹-penalised logistic fits in the wavelet domain.
//!
//! Scale coefficients (positions `< 2^j0`) and the intercept are never
//! penalised. WNET solves the plain lasso-type problem by accelerated proximal
//! gradient; WPCR/WPLS constrain `ω = V_q γ` and penalise the detail block of
//! `V_q γ`, which is a generalised lasso in `γ` solved by ADMM; WCR/WLS fit an
//! unpenalised model on a sparse-reduced design.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::glm::{
    gradient_from_eta, irls_design, link_logistic, nll_from_eta, predictors, IrlsOptions,
    LabeledCoefficients, LinearModelState,
};
use crate::linalg::{dot, norm2, solve_spd, Matrix, SymmetricEigen};
use crate::reduce::{ReducedBasis, ReductionKind};
use crate::scalar::Scalar;
use crate::wavelet::WaveletBasis;

/// The estimator menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// ℓ¹ penalty on detail coefficients, no reduction.
    Wnet,
    /// Unpenalised fit on a sparse principal component reduction.
    Wcr,
    /// Unpenalised fit on a sparse partial least squares reduction.
    Wls,
    /// ℓ¹ penalty with `ω` constrained to the PCA span.
    Wpcr,
    /// ℓ¹ penalty with `ω` constrained to the PLS span.
    Wpls,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::Wnet,
        Estimator::Wcr,
        Estimator::Wls,
        Estimator::Wpcr,
        Estimator::Wpls,
    ];

    pub fn reduction(self) -> Option<ReductionKind> {
        match self {
            Estimator::Wnet => None,
            Estimator::Wcr => Some(ReductionKind::SparsePca),
            Estimator::Wls => Some(ReductionKind::SparsePls),
            Estimator::Wpcr => Some(ReductionKind::Pca),
            Estimator::Wpls => Some(ReductionKind::Pls),
        }
    }

    pub fn uses_lambda(self) -> bool {
        matches!(self, Estimator::Wnet | Estimator::Wpcr | Estimator::Wpls)
    }

    pub fn uses_tau(self) -> bool {
        matches!(self, Estimator::Wcr | Estimator::Wls)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Wnet => "wnet",
            Estimator::Wcr => "wcr",
            Estimator::Wls => "wls",
            Estimator::Wpcr => "wpcr",
            Estimator::Wpls => "wpls",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator '{s}'")))
    }
}

/// Tuning parameters and solver limits for one fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig<T> {
    pub estimator: Estimator,
    pub lambda: T,
    /// Component count; ignored by WNET.
    pub q: usize,
    /// Sparse-reduction threshold; WCR/WLS only.
    pub tau: T,
    pub max_iter: usize,
    /// Exit tolerance on the KKT residual of proximal-gradient fits.
    pub kkt_tol: T,
    /// ADMM stops when primal and dual residuals fall below `admm_tol * sqrt(dim)`.
    pub admm_tol: T,
    pub seed: u64,
}

impl<T: Scalar> FitConfig<T> {
    pub fn new(estimator: Estimator) -> Self {
        Self {
            estimator,
            lambda: T::zero(),
            q: 1,
            tau: T::zero(),
            max_iter: 5000,
            kkt_tol: T::c(1e-5),
            admm_tol: T::c(1e-6),
            seed: 0,
        }
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !self.tau.is_finite() || self.tau < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and >= 0, got {}",
                self.tau
            )));
        }
        if self.estimator != Estimator::Wnet && self.q == 0 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        Ok(())
    }
}

/// Output of any estimator in the family.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedSolution<T> {
    pub omega: Vec<T>,
    pub intercept: T,
    /// Reduced coordinates when `ω = V_q γ`.
    pub gamma: Option<Vec<T>>,
    /// Objective after each accepted iteration; non-increasing.
    pub objective_trace: Vec<T>,
    pub kkt_residual: T,
    pub nonzero_detail_count: usize,
    pub iterations: usize,
    /// Degrees of freedom used by AICc, intercept included.
    pub effective_df: usize,
}

impl<T: Scalar> PenalizedSolution<T> {
    pub fn state(&self) -> LinearModelState<T> {
        LinearModelState {
            omega: self.omega.clone(),
            intercept: self.intercept,
        }
    }
}

/// `sign(z) max(|z| - t, 0)`, returning an exact zero inside the threshold.
#[inline]
pub fn soft_threshold<T: Scalar>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

fn detail_l1<T: Scalar>(omega: &[T], n_scale: usize) -> T {
    omega[n_scale..].iter().fold(T::zero(), |a, &v| a + v.abs())
}

fn count_detail_nonzero<T: Scalar>(omega: &[T], n_scale: usize) -> usize {
    omega[n_scale..].iter().filter(|&&v| v != T::zero()).count()
}

/// Penalised objective `NLL + λ Σ_{detail} |ω_ℓ|`.
pub fn penalized_objective<T: Scalar>(
    data: &LabeledCoefficients<T>,
    state: &LinearModelState<T>,
    lambda: T,
) -> Result<T> {
    Ok(crate::glm::neg_log_likelihood(state, data)?
        + lambda * detail_l1(&state.omega, data.n_scale()))
}

fn kkt_from_gradient<T: Scalar>(omega: &[T], grad: &[T], g0: T, lambda: T, n_scale: usize) -> T {
    let mut r = g0.abs();
    for (l, (&w, &g)) in omega.iter().zip(grad).enumerate() {
        let v = if l < n_scale {
            g.abs()
        } else if w == T::zero() {
            (g.abs() - lambda).max(T::zero())
        } else {
            (g + lambda * w.signum()).abs()
        };
        r = r.max(v);
    }
    r
}

/// Sign-consistent KKT residual of the WNET problem at `state`.
///
/// For zero detail coordinates the violation is `max(|∇ℓ| - λ, 0)`, for nonzero
/// ones `|∇ℓ + λ sign ωℓ|`, and unpenalised coordinates contribute `|∇|`.
pub fn kkt_residual<T: Scalar>(
    data: &LabeledCoefficients<T>,
    state: &LinearModelState<T>,
    lambda: T,
) -> Result<T> {
    let (g, g0) = crate::glm::nll_gradient(state, data)?;
    Ok(kkt_from_gradient(
        &state.omega,
        &g,
        g0,
        lambda,
        data.n_scale(),
    ))
}

/// Unpenalised fit of the scale block and intercept (all detail coefficients zero).
pub fn null_model<T: Scalar>(data: &LabeledCoefficients<T>) -> Result<LinearModelState<T>> {
    data.require_both_classes()?;
    let ns = data.n_scale();
    let idx: Vec<usize> = (0..ns).collect();
    let scale_design = data.theta().transpose().select_rows(&idx).transpose();
    let fit = irls_design(
        &scale_design,
        data.labels(),
        IrlsOptions {
            max_iter: 200,
            tol: T::c(1e-10).max(T::c(100.0) * T::epsilon()) * T::from_usize_lossy(data.n()),
            separation_bound: None,
        },
        None,
    )?;
    let mut omega = vec![T::zero(); data.d()];
    omega[..ns].copy_from_slice(&fit.coef);
    Ok(LinearModelState {
        omega,
        intercept: fit.intercept,
    })
}

/// `λ_max = ‖∇_detail NLL‖∞` at the null model: the smallest penalty at which
/// every detail coefficient of the WNET solution vanishes.
pub fn lambda_max<T: Scalar>(data: &LabeledCoefficients<T>) -> Result<T> {
    let null = null_model(data)?;
    let (g, _) = crate::glm::nll_gradient(&null, data)?;
    Ok(g[data.n_scale()..]
        .iter()
        .fold(T::zero(), |m, &v| m.max(v.abs())))
}

fn wnet_solution<T: Scalar>(
    data: &LabeledCoefficients<T>,
    state: LinearModelState<T>,
    trace: Vec<T>,
    kkt: T,
    iterations: usize,
) -> PenalizedSolution<T> {
    let ns = data.n_scale();
    let nonzero = state.omega.iter().filter(|&&v| v != T::zero()).count();
    PenalizedSolution {
        nonzero_detail_count: count_detail_nonzero(&state.omega, ns),
        effective_df: nonzero + usize::from(state.intercept != T::zero()),
        omega: state.omega,
        intercept: state.intercept,
        gamma: None,
        objective_trace: trace,
        kkt_residual: kkt,
        iterations,
    }
}

/// WNET: `argmin NLL(ω, b) + λ Σ_{ℓ ≥ 2^j0} |ω_ℓ|`.
pub fn fit_wnet<T: Scalar>(
    data: &LabeledCoefficients<T>,
    config: &FitConfig<T>,
) -> Result<PenalizedSolution<T>> {
    fit_wnet_warm(data, config, None)
}

/// [`fit_wnet`] started from `init` (used along decreasing λ paths).
///
/// Accelerated proximal gradient with backtracking and function-value restart:
/// every accepted iterate lowers the objective.
pub fn fit_wnet_warm<T: Scalar>(
    data: &LabeledCoefficients<T>,
    config: &FitConfig<T>,
    init: Option<&LinearModelState<T>>,
) -> Result<PenalizedSolution<T>> {
    config.validate()?;
    data.require_both_classes()?;
    let (n, d, ns) = (data.n(), data.d(), data.n_scale());
    let lambda = config.lambda;
    let x = data.theta();
    let y = data.labels();

    let null = null_model(data).ok();
    if let Some(null) = &null {
        // Screening: at or above λ_max the null model is the exact solution.
        let (g, g0) = crate::glm::nll_gradient(null, data)?;
        let gmax = g[ns..].iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        if lambda >= gmax {
            let f = penalized_objective(data, null, lambda)?;
            let kkt = kkt_from_gradient(&null.omega, &g, g0, lambda, ns);
            return Ok(wnet_solution(data, null.clone(), vec![f], kkt, 0));
        }
    }

    let start = match init {
        Some(s) => {
            if s.omega.len() != d {
                return Err(Error::Dimension {
                    what: "initial omega",
                    expected: d,
                    found: s.omega.len(),
                });
            }
            s.clone()
        }
        None => null.unwrap_or_else(|| LinearModelState::zeros(d)),
    };

    let penalty = |w: &[T]| lambda * detail_l1(w, ns);
    let prox = |v: &mut [T], step: T| {
        for c in v[ns..].iter_mut() {
            *c = soft_threshold(*c, lambda * step);
        }
    };

    // Lipschitz estimate for the augmented design [θ 1], refined by backtracking.
    let frob2 = dot(x.as_slice(), x.as_slice()) + T::from_usize_lossy(n);
    let mut lip = (frob2 / (T::c(4.0) * T::from_usize_lossy(n))).max(T::c(1e-12));

    let mut xw = start.omega;
    let mut xb = start.intercept;
    let mut eta_x = predictors(x, &xw, xb);
    let mut fx = nll_from_eta(&eta_x, y);
    let (mut gx, mut gx0) = gradient_from_eta(x, &eta_x, y);
    let mut obj_x = fx + penalty(&xw);
    let mut trace = vec![obj_x];

    let mut kkt = kkt_from_gradient(&xw, &gx, gx0, lambda, ns);
    if kkt <= config.kkt_tol {
        return Ok(wnet_solution(
            data,
            LinearModelState {
                omega: xw,
                intercept: xb,
            },
            trace,
            kkt,
            0,
        ));
    }

    let mut yw = xw.clone();
    let mut yb = xb;
    let mut eta_y = eta_x.clone();
    let mut fy = fx;
    let (mut gy, mut gy0) = (gx.clone(), gx0);
    let mut t = T::one();
    let mut at_x = true;
    let half = T::c(0.5);
    let slack = |v: T| T::c(16.0) * T::epsilon() * (T::one() + v.abs());

    for it in 1..=config.max_iter {
        // Proximal step from y with backtracking on the quadratic upper bound.
        let (zw, zb, eta_z, fz) = loop {
            let step = T::one() / lip;
            let mut zw: Vec<T> = yw.iter().zip(&gy).map(|(&a, &g)| a - step * g).collect();
            prox(&mut zw, step);
            let zb = yb - step * gy0;
            let eta_z = predictors(x, &zw, zb);
            let fz = nll_from_eta(&eta_z, y);
            let dw: Vec<T> = zw.iter().zip(&yw).map(|(&a, &b)| a - b).collect();
            let db = zb - yb;
            let model = fy + dot(&gy, &dw) + gy0 * db + half * lip * (dot(&dw, &dw) + db * db);
            if fz <= model + slack(fy) {
                break (zw, zb, eta_z, fz);
            }
            lip *= T::c(2.0);
        };
        let obj_z = fz + penalty(&zw);

        if obj_z > obj_x + slack(obj_x) {
            // Restart the momentum; from x a proximal step cannot increase the objective
            // except through rounding, in which case the step is shortened.
            if at_x {
                lip *= T::c(2.0);
            }
            t = T::one();
            yw.clone_from(&xw);
            yb = xb;
            eta_y.clone_from(&eta_x);
            fy = fx;
            gy.clone_from(&gx);
            gy0 = gx0;
            at_x = true;
            continue;
        }

        let prev_w = std::mem::replace(&mut xw, zw);
        let prev_b = std::mem::replace(&mut xb, zb);
        let prev_eta = std::mem::replace(&mut eta_x, eta_z);
        fx = fz;
        obj_x = obj_z;
        let (g, g0) = gradient_from_eta(x, &eta_x, y);
        gx = g;
        gx0 = g0;
        trace.push(obj_x);

        kkt = kkt_from_gradient(&xw, &gx, gx0, lambda, ns);
        if kkt <= config.kkt_tol {
            return Ok(wnet_solution(
                data,
                LinearModelState {
                    omega: xw,
                    intercept: xb,
                },
                trace,
                kkt,
                it,
            ));
        }

        let t_next = (T::one() + (T::one() + T::c(4.0) * t * t).sqrt()) * half;
        let beta = (t - T::one()) / t_next;
        t = t_next;
        yw = xw
            .iter()
            .zip(&prev_w)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        yb = xb + beta * (xb - prev_b);
        eta_y = eta_x
            .iter()
            .zip(&prev_eta)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        fy = nll_from_eta(&eta_y, y);
        let (g, g0) = gradient_from_eta(x, &eta_y, y);
        gy = g;
        gy0 = g0;
        at_x = beta == T::zero();
        // Let the step grow again; backtracking keeps it valid.
        lip *= T::c(0.9);
    }
    Err(Error::NonConvergence {
        solver: "proximal gradient",
        iterations: config.max_iter,
        residual: kkt.as_f64(),
        last_omega: xw.iter().map(|v| v.as_f64()).collect(),
        last_intercept: xb.as_f64(),
    })
}

fn check_basis<T: Scalar>(data: &LabeledCoefficients<T>, basis: &ReducedBasis<T>) -> Result<()> {
    if basis.d() != data.d() {
        return Err(Error::Dimension {
            what: "reduced basis rows",
            expected: data.d(),
            found: basis.d(),
        });
    }
    Ok(())
}

/// Numerical rank of a matrix through the eigenvalues of its Gram matrix.
fn numerical_rank<T: Scalar>(a: &Matrix<T>) -> Result<usize> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let eig = SymmetricEigen::new(&a.gram())?;
    let top = eig.values[0].max(T::zero());
    if top == T::zero() {
        return Ok(0);
    }
    let cut = top * T::c(1e-10);
    Ok(eig.values.iter().filter(|&&v| v > cut).count())
}

/// Newton solve of `min NLL(Zγ + b) + ρ/2 ‖Aγ - c‖²`, warm-started in place.
#[allow(clippy::too_many_arguments)]
fn admm_primal_update<T: Scalar>(
    z: &Matrix<T>,
    y: &[u8],
    a: &Matrix<T>,
    ata: &Matrix<T>,
    rho: T,
    c: &[T],
    gamma: &mut Vec<T>,
    b: &mut T,
) -> Result<()> {
    let q = z.ncols();
    let objective = |g: &[T], b: T| {
        let eta = predictors(z, g, b);
        let r: Vec<T> = a.mul_vec(g).iter().zip(c).map(|(&u, &v)| u - v).collect();
        nll_from_eta(&eta, y) + T::c(0.5) * rho * dot(&r, &r)
    };
    let mut f = objective(gamma, *b);
    for _ in 0..100 {
        let eta = predictors(z, gamma, *b);
        let probs: Vec<T> = eta.iter().map(|&e| link_logistic(e)).collect();
        let resid: Vec<T> = probs
            .iter()
            .zip(y)
            .map(|(&p, &yi)| p - T::from_u8(yi).unwrap())
            .collect();
        let ag: Vec<T> = a
            .mul_vec(gamma)
            .iter()
            .zip(c)
            .map(|(&u, &v)| u - v)
            .collect();
        let mut grad = z.tr_mul_vec(&resid);
        let pen = a.tr_mul_vec(&ag);
        for (g, p) in grad.iter_mut().zip(pen) {
            *g += rho * p;
        }
        grad.push(resid.iter().copied().sum());
        let gnorm = grad.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        if gnorm <= T::c(1e-10) * (T::one() + f.abs()) {
            return Ok(());
        }
        let mut h = Matrix::zeros(q + 1, q + 1);
        for (row, &p) in z.rows_iter().zip(&probs) {
            let w = p * (T::one() - p);
            for i in 0..q {
                let wi = w * row[i];
                for j in i..q {
                    h[(i, j)] += wi * row[j];
                }
                h[(i, q)] += wi;
            }
            h[(q, q)] += w;
        }
        for i in 0..q {
            for j in i..q {
                h[(i, j)] += rho * ata[(i, j)];
            }
        }
        for i in 0..=q {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        let delta = solve_spd(&h, &grad, "ADMM primal update")?;
        let dec = dot(&grad, &delta);
        let mut step = T::one();
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<T> = gamma
                .iter()
                .zip(&delta)
                .map(|(&g, &dg)| g - step * dg)
                .collect();
            let tb = *b - step * delta[q];
            let tf = objective(&trial, tb);
            if tf <= f - T::c(1e-4) * step * dec + T::c(8.0) * T::epsilon() * f.abs() {
                *gamma = trial;
                *b = tb;
                f = tf;
                moved = true;
                break;
            }
            step *= T::c(0.5);
        }
        if !moved {
            return Ok(());
        }
    }
    Ok(())
}

const ADMM_REBALANCE_EVERY: usize = 10;

/// WPCR / WPLS: `argmin NLL(V_q γ, b) + λ ‖D V_q γ‖₁` with `D` selecting detail
/// coordinates, by ADMM on the splitting `s = D V_q γ`. `ρ` starts at `max(λ, 1)`
/// and is rebalanced while one residual dominates the other.
pub fn fit_reduced_penalized<T: Scalar>(
    data: &LabeledCoefficients<T>,
    basis: &ReducedBasis<T>,
    config: &FitConfig<T>,
) -> Result<PenalizedSolution<T>> {
    fit_reduced_penalized_warm(data, basis, config, None)
}

/// [`fit_reduced_penalized`] started from `(γ, b)`.
pub fn fit_reduced_penalized_warm<T: Scalar>(
    data: &LabeledCoefficients<T>,
    basis: &ReducedBasis<T>,
    config: &FitConfig<T>,
    init: Option<(&[T], T)>,
) -> Result<PenalizedSolution<T>> {
    config.validate()?;
    data.require_both_classes()?;
    check_basis(data, basis)?;
    let (n, d, ns, q) = (data.n(), data.d(), data.n_scale(), basis.q());
    let lambda = config.lambda;
    let y = data.labels();
    let v = basis.loadings();
    let zdesign = data.theta().matmul(v);
    let detail_rows: Vec<usize> = (ns..d).collect();
    let a = v.select_rows(&detail_rows);
    let ata = a.gram();
    let m = a.nrows();
    let mut rho = lambda.max(T::one());

    let (mut gamma, mut b) = match init {
        Some((g, b0)) if g.len() == q => (g.to_vec(), b0),
        Some((g, _)) => {
            return Err(Error::Dimension {
                what: "initial gamma",
                expected: q,
                found: g.len(),
            })
        }
        None => {
            let ones = y.iter().filter(|&&v| v == 1).count();
            let ybar = T::from_usize_lossy(ones) / T::from_usize_lossy(n);
            (vec![T::zero(); q], (ybar / (T::one() - ybar)).ln())
        }
    };
    let mut split = a.mul_vec(&gamma);
    let mut dual = vec![T::zero(); m];
    let tol_primal = config.admm_tol * T::from_usize_lossy(m).sqrt();
    let tol_dual = config.admm_tol * T::from_usize_lossy(q).sqrt();

    let objective = |g: &[T], b: T| {
        let eta = predictors(&zdesign, g, b);
        let ag = a.mul_vec(g);
        nll_from_eta(&eta, y) + lambda * ag.iter().fold(T::zero(), |s, &v| s + v.abs())
    };
    let mut best = objective(&gamma, b);
    let mut trace = vec![best];
    let mut residual = T::infinity();

    for it in 1..=config.max_iter {
        let target: Vec<T> = split.iter().zip(&dual).map(|(&s, &u)| s - u).collect();
        admm_primal_update(&zdesign, y, &a, &ata, rho, &target, &mut gamma, &mut b)?;
        let ag = a.mul_vec(&gamma);
        let old_split = std::mem::take(&mut split);
        split = ag
            .iter()
            .zip(&dual)
            .map(|(&x, &u)| soft_threshold(x + u, lambda / rho))
            .collect();
        let mut r2 = T::zero();
        for ((u, &x), &s) in dual.iter_mut().zip(&ag).zip(&split) {
            let r = x - s;
            *u += r;
            r2 += r * r;
        }
        let ds: Vec<T> = split.iter().zip(&old_split).map(|(&s, &o)| s - o).collect();
        let primal = r2.sqrt();
        let dual_res = rho * norm2(&a.tr_mul_vec(&ds));
        residual = primal.max(dual_res);

        // Best primal objective so far; ADMM iterates themselves need not be monotone.
        best = best.min(objective(&gamma, b));
        trace.push(best);

        if primal <= tol_primal && dual_res <= tol_dual {
            let omega = basis.expand(&gamma)?;
            let zero_rows: Vec<usize> = split
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == T::zero())
                .map(|(i, _)| i)
                .collect();
            let constrained = numerical_rank(&a.select_rows(&zero_rows))?;
            return Ok(PenalizedSolution {
                nonzero_detail_count: count_detail_nonzero(&omega, ns),
                effective_df: q - constrained.min(q) + usize::from(b != T::zero()),
                omega,
                intercept: b,
                gamma: Some(gamma),
                objective_trace: trace,
                kkt_residual: residual,
                iterations: it,
            });
        }
        // Residual balancing, frozen for the second half of the budget so the
        // final phase runs at a fixed ρ.
        if it % ADMM_REBALANCE_EVERY == 0 && it <= config.max_iter / 2 {
            let (p, dr) = (primal, dual_res);
            let factor = if p > T::c(10.0) * dr {
                T::c(2.0)
            } else if dr > T::c(10.0) * p {
                T::c(0.5)
            } else {
                T::one()
            };
            if factor != T::one() {
                rho *= factor;
                for u in dual.iter_mut() {
                    *u /= factor;
                }
            }
        }
    }
    let omega = basis.expand(&gamma)?;
    Err(Error::NonConvergence {
        solver: "admm",
        iterations: config.max_iter,
        residual: residual.as_f64(),
        last_omega: omega.iter().map(|v| v.as_f64()).collect(),
        last_intercept: b.as_f64(),
    })
}

/// Separation is reported once a reduced coefficient exceeds this magnitude.
pub const SEPARATION_BOUND: f64 = 1e3;

/// WCR / WLS: unpenalised likelihood over `γ` on the sparse-reduced design `θ V_q`.
pub fn fit_reduced_unpenalized<T: Scalar>(
    data: &LabeledCoefficients<T>,
    basis: &ReducedBasis<T>,
    config: &FitConfig<T>,
) -> Result<PenalizedSolution<T>> {
    config.validate()?;
    data.require_both_classes()?;
    check_basis(data, basis)?;
    if !matches!(
        basis.kind(),
        ReductionKind::SparsePca | ReductionKind::SparsePls
    ) {
        return Err(Error::InvalidParameter(format!(
            "unpenalised reduced fits need a sparse reduction, got {}",
            basis.kind()
        )));
    }
    let zdesign = data.theta().matmul(basis.loadings());
    let fit = irls_design(
        &zdesign,
        data.labels(),
        IrlsOptions {
            max_iter: config.max_iter.min(500),
            tol: T::c(1e-8),
            separation_bound: Some(T::c(SEPARATION_BOUND)),
        },
        None,
    )?;
    let omega = basis.expand(&fit.coef)?;
    let nonzero = fit.coef.iter().filter(|&&v| v != T::zero()).count();
    Ok(PenalizedSolution {
        nonzero_detail_count: count_detail_nonzero(&omega, data.n_scale()),
        effective_df: nonzero + usize::from(fit.intercept != T::zero()),
        omega,
        intercept: fit.intercept,
        gamma: Some(fit.coef),
        objective_trace: fit.objective_trace,
        kkt_residual: fit.gradient_norm,
        iterations: fit.iterations,
    })
}

/// Sampled discriminant function `β = Wᵀ ω`.
pub fn beta_estimate<T: Scalar>(
    solution: &PenalizedSolution<T>,
    basis: &WaveletBasis<T>,
) -> Result<Vec<T>> {
    basis.inverse_slice(&solution.omega)
}
