//! Principal component and partial least squares reductions of the
//! coefficient matrix, dense and sparse, producing the constraint basis `V_q`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix, SymmetricEigen};
use crate::scalar::Scalar;

const SPARSE_MAX_ITER: usize = 500;
const SPARSE_TOL: f64 = 1e-8;
const PLS_ZERO_COVARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReductionKind {
    Pca,
    Pls,
    SparsePca,
    SparsePls,
}

impl ReductionKind {
    pub fn is_supervised(self) -> bool {
        matches!(self, ReductionKind::Pls | ReductionKind::SparsePls)
    }
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionKind::Pca => "pca",
            ReductionKind::Pls => "pls",
            ReductionKind::SparsePca => "sparse_pca",
            ReductionKind::SparsePls => "sparse_pls",
        })
    }
}

impl FromStr for ReductionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(ReductionKind::Pca),
            "pls" => Ok(ReductionKind::Pls),
            "sparse_pca" => Ok(ReductionKind::SparsePca),
            "sparse_pls" => Ok(ReductionKind::SparsePls),
            other => Err(Error::InvalidParameter(format!(
                "unknown reduction kind '{other}'"
            ))),
        }
    }
}

/// Loadings `V_q` (`d x q`, one component per column) with per-component scale values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis<T> {
    loadings: Matrix<T>,
    scores_scale: Vec<T>,
    kind: ReductionKind,
    center: Vec<T>,
}

impl<T: Scalar> ReducedBasis<T> {
    /// Reassembles a basis from stored parts, checking shapes and unit-norm columns.
    pub fn from_parts(
        loadings: Matrix<T>,
        scores_scale: Vec<T>,
        kind: ReductionKind,
        center: Vec<T>,
    ) -> Result<Self> {
        let (d, q) = (loadings.nrows(), loadings.ncols());
        if q == 0 {
            return Err(Error::InvalidParameter("reduced basis needs q >= 1".into()));
        }
        if scores_scale.len() != q {
            return Err(Error::Dimension {
                what: "scores_scale",
                expected: q,
                found: scores_scale.len(),
            });
        }
        if center.len() != d {
            return Err(Error::Dimension {
                what: "center",
                expected: d,
                found: center.len(),
            });
        }
        for j in 0..q {
            let nrm = norm2(&loadings.column(j));
            if (nrm - T::one()).abs() > T::c(1e-6) {
                return Err(Error::InvalidParameter(format!(
                    "loading column {j} has norm {nrm}, expected 1"
                )));
            }
        }
        Ok(Self {
            loadings,
            scores_scale,
            kind,
            center,
        })
    }

    pub fn loadings(&self) -> &Matrix<T> {
        &self.loadings
    }

    pub fn scores_scale(&self) -> &[T] {
        &self.scores_scale
    }

    pub fn kind(&self) -> ReductionKind {
        self.kind
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn q(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn d(&self) -> usize {
        self.loadings.nrows()
    }

    /// `V_qᵀ (θ - center)`.
    pub fn reduce(&self, theta_row: &[T]) -> Result<Vec<T>> {
        if theta_row.len() != self.d() {
            return Err(Error::Dimension {
                what: "coefficient row",
                expected: self.d(),
                found: theta_row.len(),
            });
        }
        let centered: Vec<T> = theta_row
            .iter()
            .zip(&self.center)
            .map(|(&a, &c)| a - c)
            .collect();
        Ok(self.loadings.tr_mul_vec(&centered))
    }

    /// `V_q γ`; no center is added since `γ` parametrises coefficient directions.
    pub fn expand(&self, gamma: &[T]) -> Result<Vec<T>> {
        if gamma.len() != self.q() {
            return Err(Error::Dimension {
                what: "gamma",
                expected: self.q(),
                found: gamma.len(),
            });
        }
        Ok(self.loadings.mul_vec(gamma))
    }
}

fn check_q(n: usize, d: usize, q: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2 observations, got {n}"
        )));
    }
    let max_q = (n - 1).min(d);
    if q == 0 || q > max_q {
        return Err(Error::InvalidParameter(format!(
            "component count q = {q} must lie in [1, min(n - 1, d)] = [1, {max_q}]"
        )));
    }
    Ok(())
}

fn centered_labels<T: Scalar>(labels: &[u8], n: usize) -> Result<Vec<T>> {
    if labels.len() != n {
        return Err(Error::Dimension {
            what: "labels",
            expected: n,
            found: labels.len(),
        });
    }
    let ones = labels.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == n || labels.iter().any(|&y| y > 1) {
        return Err(Error::SingleClass);
    }
    let ybar = T::from_usize_lossy(ones) / T::from_usize_lossy(n);
    Ok(labels
        .iter()
        .map(|&y| T::from_u8(y).unwrap() - ybar)
        .collect())
}

/// Flips `v` so that its first largest-magnitude entry is positive.
fn orient<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < T::zero()) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn normalize<T: Scalar>(v: &mut [T]) -> T {
    let nrm = norm2(v);
    if nrm > T::zero() {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Leading `q` eigenpairs of the sample covariance of an already centred matrix.
fn leading_directions<T: Scalar>(xc: &Matrix<T>, q: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let (n, d) = (xc.nrows(), xc.ncols());
    let denom = T::from_usize_lossy(n - 1);
    let mut values = Vec::with_capacity(q);
    let mut vectors = Vec::with_capacity(q);
    if n < d {
        // Gram route: eigenvectors of X Xᵀ mapped back through Xᵀ.
        let gram = xc.transpose().gram().map(|g| g / denom);
        let eig = SymmetricEigen::new(&gram)?;
        let top = eig
            .values
            .first()
            .copied()
            .unwrap_or(T::zero())
            .max(T::zero());
        for k in 0..q {
            let lambda = eig.values[k];
            if lambda.is_nan() || lambda <= top * T::c(1e-12) {
                return Err(Error::RankDeficient {
                    achieved: k,
                    requested: q,
                });
            }
            let mut v = xc.tr_mul_vec(&eig.vectors.column(k));
            normalize(&mut v);
            orient(&mut v);
            values.push(lambda);
            vectors.push(v);
        }
    } else {
        let cov = xc.gram().map(|g| g / denom);
        let eig = SymmetricEigen::new(&cov)?;
        for k in 0..q {
            let mut v = eig.vectors.column(k);
            orient(&mut v);
            values.push(eig.values[k]);
            vectors.push(v);
        }
    }
    Ok((values, vectors))
}

/// Principal component reduction: the `q` leading eigenvectors of the sample
/// covariance (divisor `n - 1`) of the column-centred coefficients.
pub fn pca_fit<T: Scalar>(theta: &Matrix<T>, q: usize) -> Result<ReducedBasis<T>> {
    let (n, d) = (theta.nrows(), theta.ncols());
    check_q(n, d, q)?;
    let center = theta.column_means();
    let xc = theta.centered(&center);
    let (values, vectors) = leading_directions(&xc, q)?;
    Ok(ReducedBasis {
        loadings: Matrix::from_columns(&vectors, d)?,
        scores_scale: values,
        kind: ReductionKind::Pca,
        center,
    })
}

/// Removes the rank-one part of `x` along score vector `t` (regression of `x` on `t`).
fn deflate_on_scores<T: Scalar>(x: &mut Matrix<T>, t: &[T]) {
    let tt = dot(t, t);
    if tt == T::zero() {
        return;
    }
    let p: Vec<T> = x.tr_mul_vec(t).into_iter().map(|v| v / tt).collect();
    for (i, &ti) in t.iter().enumerate() {
        for (xij, &pj) in x.row_mut(i).iter_mut().zip(&p) {
            *xij -= ti * pj;
        }
    }
}

/// Univariate-response NIPALS partial least squares on centred 0/1 labels.
///
/// Returned loadings are the NIPALS weight vectors (unit norm, not mutually
/// orthogonal in general); the scale of component `k` is `‖X_kᵀ y_c‖ / (n - 1)`.
pub fn pls_fit<T: Scalar>(theta: &Matrix<T>, labels: &[u8], q: usize) -> Result<ReducedBasis<T>> {
    let (n, d) = (theta.nrows(), theta.ncols());
    let yc = centered_labels::<T>(labels, n)?;
    check_q(n, d, q)?;
    let center = theta.column_means();
    let mut xres = theta.centered(&center);
    let denom = T::from_usize_lossy(n - 1);
    let mut columns = Vec::with_capacity(q);
    let mut scales = Vec::with_capacity(q);
    for k in 0..q {
        let mut w = xres.tr_mul_vec(&yc);
        let nw = normalize(&mut w);
        if nw < T::c(PLS_ZERO_COVARIANCE) {
            return Err(Error::RankDeficient {
                achieved: k,
                requested: q,
            });
        }
        let t = xres.mul_vec(&w);
        deflate_on_scores(&mut xres, &t);
        columns.push(w);
        scales.push(nw / denom);
    }
    Ok(ReducedBasis {
        loadings: Matrix::from_columns(&columns, d)?,
        scores_scale: scales,
        kind: ReductionKind::Pls,
        center,
    })
}

pub fn soft_threshold_vec<T: Scalar>(z: &[T], t: T) -> Vec<T> {
    z.iter()
        .map(|&v| crate::penalized::soft_threshold(v, t))
        .collect()
}

/// Sparse PCA or sparse PLS by rank-one soft-thresholded alternating updates.
///
/// `tau` is applied to the unit-normalised update direction, so it is scale free
/// and meaningful in `[0, 1)`. With `tau = 0` the dense reduction is reproduced.
pub fn sparse_component_fit<T: Scalar>(
    theta: &Matrix<T>,
    labels: Option<&[u8]>,
    q: usize,
    tau: T,
    kind: ReductionKind,
) -> Result<ReducedBasis<T>> {
    let (n, d) = (theta.nrows(), theta.ncols());
    if !tau.is_finite() || tau < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "tau must be finite and >= 0, got {tau}"
        )));
    }
    let supervised = match kind {
        ReductionKind::SparsePca | ReductionKind::Pca => false,
        ReductionKind::SparsePls | ReductionKind::Pls => true,
    };
    let yc = if supervised {
        let labels =
            labels.ok_or_else(|| Error::InvalidParameter("sparse PLS requires labels".into()))?;
        Some(centered_labels::<T>(labels, n)?)
    } else {
        None
    };
    check_q(n, d, q)?;
    let center = theta.column_means();
    let mut xres = theta.centered(&center);
    let denom = T::from_usize_lossy(n - 1);
    let tol = T::c(SPARSE_TOL);
    let mut columns = Vec::with_capacity(q);
    let mut scales = Vec::with_capacity(q);

    for k in 0..q {
        let v = match &yc {
            None => {
                let (_, dense) = leading_directions(&xres, 1).map_err(|e| match e {
                    Error::RankDeficient { .. } => Error::RankDeficient {
                        achieved: k,
                        requested: q,
                    },
                    other => other,
                })?;
                let mut v = dense.into_iter().next().expect("one direction");
                for _ in 0..SPARSE_MAX_ITER {
                    let mut u = xres.mul_vec(&v);
                    if normalize(&mut u) == T::zero() {
                        return Err(Error::RankDeficient {
                            achieved: k,
                            requested: q,
                        });
                    }
                    let mut z = xres.tr_mul_vec(&u);
                    normalize(&mut z);
                    let mut next = soft_threshold_vec(&z, tau);
                    if normalize(&mut next) == T::zero() {
                        return Err(Error::SparsityTooStrong { component: k });
                    }
                    orient(&mut next);
                    let change = norm2(
                        &next
                            .iter()
                            .zip(&v)
                            .map(|(&a, &b)| a - b)
                            .collect::<Vec<_>>(),
                    );
                    v = next;
                    if change <= tol {
                        break;
                    }
                }
                v
            }
            Some(yc) => {
                // With a single response the direction update does not depend on
                // the current scores, so one pass reaches the fixed point.
                let mut z = xres.tr_mul_vec(yc);
                if normalize(&mut z) < T::c(PLS_ZERO_COVARIANCE) {
                    return Err(Error::RankDeficient {
                        achieved: k,
                        requested: q,
                    });
                }
                let mut v = soft_threshold_vec(&z, tau);
                if normalize(&mut v) == T::zero() {
                    return Err(Error::SparsityTooStrong { component: k });
                }
                v
            }
        };
        let scores = xres.mul_vec(&v);
        let scale = match &yc {
            None => dot(&scores, &scores) / denom,
            Some(yc) => dot(&scores, yc).abs() / denom,
        };
        match &yc {
            None => {
                // Projection deflation X <- X - (X v) vᵀ.
                for (i, &si) in scores.iter().enumerate() {
                    for (xij, &vj) in xres.row_mut(i).iter_mut().zip(&v) {
                        *xij -= si * vj;
                    }
                }
            }
            Some(_) => deflate_on_scores(&mut xres, &scores),
        }
        columns.push(v);
        scales.push(scale);
    }
    Ok(ReducedBasis {
        loadings: Matrix::from_columns(&columns, d)?,
        scores_scale: scales,
        kind: if supervised {
            ReductionKind::SparsePls
        } else {
            ReductionKind::SparsePca
        },
        center,
    })
}
