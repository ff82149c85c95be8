//! Small dense linear algebra kernel: row-major matrices, Cholesky solves and a
//! symmetric eigensolver (Householder tridiagonalisation followed by implicit QL).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                what: "matrix storage",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    what: "matrix row",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<T>], rows: usize) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Dimension {
                    what: "matrix column",
                    expected: rows,
                    found: c.len(),
                });
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Submatrix made of the listed rows, in the listed order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        self.rows_iter().map(|r| dot(r, v)).collect()
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (r, &w) in self.rows_iter().zip(v) {
            if w != T::zero() {
                axpy(w, r, &mut out);
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != T::zero() {
                    axpy(a, other.row(k), orow);
                }
            }
        }
        out
    }

    /// `selfᵀ * self`.
    pub fn gram(&self) -> Self {
        let p = self.cols;
        let mut g = Self::zeros(p, p);
        for r in self.rows_iter() {
            for a in 0..p {
                let ra = r[a];
                if ra == T::zero() {
                    continue;
                }
                for b in a..p {
                    g.data[a * p + b] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.data[a * p + b] = g.data[b * p + a];
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.cols];
        for r in self.rows_iter() {
            for (a, &b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let n = T::from_usize_lossy(self.rows.max(1));
        m.iter_mut().for_each(|x| *x /= n);
        m
    }

    /// Copy with `center` subtracted from every row.
    pub fn centered(&self, center: &[T]) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            for (x, &c) in out.row_mut(i).iter_mut().zip(center) {
                *x -= c;
            }
        }
        out
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::c(x.as_f64())).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` when a pivot is not safely positive.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        let n = a.nrows();
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
        let floor = T::epsilon() * T::from_usize_lossy(n.max(1)) * max_diag;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut s = a[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)];
            }
            if !s.is_finite() || s <= floor {
                return None;
            }
            let ljj = s.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.nrows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Solves `a x = b` for symmetric positive semi-definite `a`.
///
/// When the factorisation fails a ridge of `1e-10 * max(1, max diag)` is added
/// once; a second failure is reported as singular.
pub fn solve_spd<T: Scalar>(a: &Matrix<T>, b: &[T], what: &'static str) -> Result<Vec<T>> {
    if let Some(ch) = Cholesky::new(a) {
        return Ok(ch.solve(b));
    }
    let n = a.nrows();
    let max_diag = (0..n).fold(T::one(), |m, i| m.max(a[(i, i)].abs()));
    let mut jittered = a.clone();
    for i in 0..n {
        jittered[(i, i)] += T::c(1e-10) * max_diag;
    }
    Cholesky::new(&jittered)
        .map(|ch| ch.solve(b))
        .ok_or(Error::Singular(what))
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in non-increasing order.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension {
                what: "symmetric eigenproblem",
                expected: n,
                found: a.ncols(),
            });
        }
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Matrix::zeros(0, 0),
            });
        }
        let mut v = a.clone();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tred2(&mut v, &mut d, &mut e);
        tql2(&mut v, &mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| d[i]).collect();
        let mut vectors = Matrix::zeros(n, n);
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..n {
                vectors[(i, newj)] = v[(i, oldj)];
            }
        }
        Ok(Self { values, vectors })
    }
}

// Householder reduction to tridiagonal form (after the EISPACK tred2 routine).
fn tred2<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

// Implicit QL iterations on the tridiagonal form (after the EISPACK tql2 routine).
fn tql2<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let two = T::c(2.0);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Singular("symmetric eigensolver (no QL convergence)"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
