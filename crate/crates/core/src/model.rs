//! Curve datasets, estimator dispatch and fitted models.

use crate::error::{Error, Result};
use crate::glm::{link_logistic, LabeledCoefficients, LinearModelState};
use crate::linalg::{dot, Matrix};
use crate::penalized::{
    fit_reduced_penalized_warm, fit_reduced_unpenalized, fit_wnet_warm, Estimator, FitConfig,
    PenalizedSolution,
};
use crate::reduce::{pca_fit, pls_fit, sparse_component_fit, ReducedBasis, ReductionKind};
use crate::scalar::Scalar;
use crate::wavelet::{WaveletBasis, WaveletFamily};

/// `n` curves sampled at `d` points with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDataset<T> {
    curves: Matrix<T>,
    labels: Vec<u8>,
}

impl<T: Scalar> CurveDataset<T> {
    pub fn new(curves: Matrix<T>, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != curves.nrows() {
            return Err(Error::Dimension {
                what: "labels",
                expected: curves.nrows(),
                found: labels.len(),
            });
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        let d = curves.ncols();
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "curve length d = {d} must be a power of two >= 2"
            )));
        }
        if curves.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "curve values must be finite".into(),
            ));
        }
        Ok(Self { curves, labels })
    }

    pub fn curves(&self) -> &Matrix<T> {
        &self.curves
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.curves.nrows()
    }

    pub fn d(&self) -> usize {
        self.curves.ncols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            curves: self.curves.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Wavelet coefficients of every curve.
    pub fn coefficient_matrix(&self, basis: &WaveletBasis<T>) -> Result<Matrix<T>> {
        let mut theta = Matrix::zeros(self.n(), self.d());
        for i in 0..self.n() {
            let c = basis.dwt_forward(self.curves.row(i))?;
            theta.row_mut(i).copy_from_slice(c.values());
        }
        Ok(theta)
    }

    pub fn to_coefficients(&self, basis: &WaveletBasis<T>) -> Result<LabeledCoefficients<T>> {
        LabeledCoefficients::new(
            self.coefficient_matrix(basis)?,
            self.labels.clone(),
            basis.j0(),
        )
    }
}

/// Builds the reduction an estimator needs, if any.
pub fn build_reduction<T: Scalar>(
    data: &LabeledCoefficients<T>,
    estimator: Estimator,
    q: usize,
    tau: T,
) -> Result<Option<ReducedBasis<T>>> {
    let theta = data.theta();
    Ok(match estimator.reduction() {
        None => None,
        Some(ReductionKind::Pca) => Some(pca_fit(theta, q)?),
        Some(ReductionKind::Pls) => Some(pls_fit(theta, data.labels(), q)?),
        Some(kind @ ReductionKind::SparsePca) => {
            Some(sparse_component_fit(theta, None, q, tau, kind)?)
        }
        Some(kind @ ReductionKind::SparsePls) => Some(sparse_component_fit(
            theta,
            Some(data.labels()),
            q,
            tau,
            kind,
        )?),
    })
}

/// Runs the configured estimator with an already built reduction.
pub fn fit_with_reduction<T: Scalar>(
    data: &LabeledCoefficients<T>,
    config: &FitConfig<T>,
    reduction: Option<&ReducedBasis<T>>,
    warm: Option<&PenalizedSolution<T>>,
) -> Result<PenalizedSolution<T>> {
    match (config.estimator, reduction) {
        (Estimator::Wnet, _) => {
            let init = warm.map(PenalizedSolution::state);
            fit_wnet_warm(data, config, init.as_ref())
        }
        (Estimator::Wpcr | Estimator::Wpls, Some(basis)) => {
            let init = warm.and_then(|w| {
                w.gamma
                    .as_deref()
                    .filter(|g| g.len() == basis.q())
                    .map(|g| (g, w.intercept))
            });
            fit_reduced_penalized_warm(data, basis, config, init)
        }
        (Estimator::Wcr | Estimator::Wls, Some(basis)) => {
            fit_reduced_unpenalized(data, basis, config)
        }
        (e, None) => Err(Error::InvalidParameter(format!(
            "estimator {e} needs a reduced basis"
        ))),
    }
}

/// Builds any needed reduction and fits the configured estimator.
pub fn fit_estimator<T: Scalar>(
    data: &LabeledCoefficients<T>,
    config: &FitConfig<T>,
) -> Result<(PenalizedSolution<T>, Option<ReducedBasis<T>>)> {
    config.validate()?;
    let reduction = build_reduction(data, config.estimator, config.q, config.tau)?;
    let sol = fit_with_reduction(data, config, reduction.as_ref(), None)?;
    Ok((sol, reduction))
}

/// A fitted classifier together with everything needed to apply it to new curves.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel<T> {
    pub estimator: Estimator,
    pub family: WaveletFamily,
    pub j0: usize,
    pub d: usize,
    pub lambda: T,
    pub q: Option<usize>,
    pub tau: Option<T>,
    pub state: LinearModelState<T>,
    pub reduction: Option<ReducedBasis<T>>,
    pub kkt_residual: T,
    pub iterations: usize,
}

impl<T: Scalar> FittedModel<T> {
    pub fn from_solution(
        config: &FitConfig<T>,
        family: WaveletFamily,
        j0: usize,
        solution: &PenalizedSolution<T>,
        reduction: Option<ReducedBasis<T>>,
    ) -> Self {
        let e = config.estimator;
        Self {
            estimator: e,
            family,
            j0,
            d: solution.omega.len(),
            lambda: if e.uses_lambda() {
                config.lambda
            } else {
                T::zero()
            },
            q: (e != Estimator::Wnet).then_some(config.q),
            tau: e.uses_tau().then_some(config.tau),
            state: solution.state(),
            reduction,
            kkt_residual: solution.kkt_residual,
            iterations: solution.iterations,
        }
    }

    pub fn wavelet(&self) -> Result<WaveletBasis<T>> {
        WaveletBasis::new(self.family, self.j0, self.d)
    }

    /// Class-1 probabilities for rows of wavelet coefficients.
    pub fn predict_coefficients(&self, theta: &Matrix<T>) -> Result<Vec<T>> {
        if theta.ncols() != self.d {
            return Err(Error::Dimension {
                what: "coefficient columns",
                expected: self.d,
                found: theta.ncols(),
            });
        }
        Ok(theta
            .rows_iter()
            .map(|r| link_logistic(self.state.intercept + dot(r, &self.state.omega)))
            .collect())
    }

    /// Class-1 probabilities for sampled curves.
    pub fn predict_curves(&self, curves: &Matrix<T>) -> Result<Vec<T>> {
        if curves.ncols() != self.d {
            return Err(Error::Dimension {
                what: "curve length",
                expected: self.d,
                found: curves.ncols(),
            });
        }
        let basis = self.wavelet()?;
        let mut theta = Matrix::zeros(curves.nrows(), self.d);
        for i in 0..curves.nrows() {
            theta
                .row_mut(i)
                .copy_from_slice(basis.dwt_forward(curves.row(i))?.values());
        }
        self.predict_coefficients(&theta)
    }

    /// Sampled discriminant function `β = Wᵀ ω`.
    pub fn beta(&self) -> Result<Vec<T>> {
        self.wavelet()?.inverse_slice(&self.state.omega)
    }
}

/// Transforms `dataset`, fits `config` and packages the result.
pub fn fit_model<T: Scalar>(
    dataset: &CurveDataset<T>,
    family: WaveletFamily,
    j0: usize,
    config: &FitConfig<T>,
) -> Result<FittedModel<T>> {
    let basis = WaveletBasis::new(family, j0, dataset.d())?;
    let data = dataset.to_coefficients(&basis)?;
    let (sol, reduction) = fit_estimator(&data, config)?;
    Ok(FittedModel::from_solution(
        config, family, j0, &sol, reduction,
    ))
}
