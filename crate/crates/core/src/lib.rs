//! Wavelet-domain penalised logistic functional linear regression.
//!
//! Curves sampled on a dyadic grid are mapped to orthonormal wavelet
//! coefficients; a logistic model on those coefficients is estimated with an
//! ℓ¹ penalty on the detail block, optionally constrained to a PCA or PLS
//! span. Tuning is by stratified cross-validated AUC or by AICc.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below name the double precision instantiations used by the CLI.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod eval;
mod filters;
pub mod glm;
pub mod io;
pub mod linalg;
pub mod model;
pub mod penalized;
pub mod reduce;
pub mod scalar;
pub mod select;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
pub use eval::{auc, discrimination_verdict, roc_curve, RocCurve, Verdict};
pub use glm::{
    irls_fit, linear_predictor, link_logistic, neg_log_likelihood, nll_gradient,
    LabeledCoefficients, LinearModelState,
};
pub use linalg::Matrix;
pub use model::{
    build_reduction, fit_estimator, fit_model, fit_with_reduction, CurveDataset, FittedModel,
};
pub use penalized::{
    beta_estimate, fit_reduced_penalized, fit_reduced_unpenalized, fit_wnet, lambda_max,
    soft_threshold, Estimator, FitConfig, PenalizedSolution,
};
pub use reduce::{pca_fit, pls_fit, sparse_component_fit, ReducedBasis, ReductionKind};
pub use scalar::Scalar;
pub use select::{
    aicc, aicc_value, cross_validate, default_grid, lambda_grid, make_folds, q_grid,
    select_by_aicc, tau_grid, CriterionEntry, CriterionKind, FoldPlan, GridPoint, SelectionResult,
};
pub use synth::{generate_beta, generate_dataset, split_per_class, SynthSpec};
pub use wavelet::{CoefficientVector, WaveletBasis, WaveletFamily};

pub type MatrixF64 = Matrix<f64>;
pub type WaveletBasisF64 = WaveletBasis<f64>;
pub type WaveletBasisF32 = WaveletBasis<f32>;
pub type LabeledCoefficientsF64 = LabeledCoefficients<f64>;
pub type ReducedBasisF64 = ReducedBasis<f64>;
pub type FitConfigF64 = FitConfig<f64>;
pub type PenalizedSolutionF64 = PenalizedSolution<f64>;
pub type CurveDatasetF64 = CurveDataset<f64>;
pub type FittedModelF64 = FittedModel<f64>;
pub type SelectionResultF64 = SelectionResult<f64>;
