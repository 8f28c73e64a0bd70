//! Small dense linear algebra: a row-major matrix, Cholesky factorization,
//! triangular solves, and Rue's precision-parameterized Gaussian sampler.
//!
//! Matrices in this crate are at most a few dozen columns wide, so nothing
//! here tries to be blocked or cache-aware.

use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero width
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
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

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.rows_iter().map(|r| dot(r, v)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest `|a_ij - a_ji|`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `self += weight * v vᵀ`, touching only the upper triangle.
    #[inline]
    pub(crate) fn add_outer_upper(&mut self, v: &[f64], weight: f64) {
        let n = self.cols;
        for i in 0..n {
            let wi = weight * v[i];
            if wi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * n + i..(i + 1) * n];
            for (r, &vj) in row.iter_mut().zip(&v[i..]) {
                *r += wi * vj;
            }
        }
    }

    /// Mirrors the upper triangle into the lower one.
    pub(crate) fn symmetrize_from_upper(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                self[(i, j)] = self[(j, i)];
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper-triangular Cholesky factor `R` with `RᵀR = m`.
///
/// Only the upper triangle of `m` is read. Fails with `NotPositiveDefinite`
/// on the first pivot that is not strictly positive.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= r[(k, j)] * r[(k, j)];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let rjj = pivot.sqrt();
        r[(j, j)] = rjj;
        for i in (j + 1)..n {
            let mut s = m[(j, i)];
            for k in 0..j {
                s -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = s / rjj;
        }
    }
    Ok(r)
}

/// Cholesky with a single jittered retry: on failure the diagonal is
/// inflated by `1e-8 * trace / p` and factorization attempted once more.
pub fn cholesky_with_jitter(m: &Matrix) -> Result<Matrix> {
    match cholesky(m) {
        Ok(r) => Ok(r),
        Err(Error::NotPositiveDefinite { .. }) => {
            let n = m.nrows();
            let jitter = 1e-8 * m.trace().abs().max(f64::MIN_POSITIVE) / n as f64;
            let mut bumped = m.clone();
            for i in 0..n {
                bumped[(i, i)] += jitter;
            }
            cholesky(&bumped)
        }
        Err(e) => Err(e),
    }
}

/// Solves `R x = b` for upper-triangular `R` (back substitution).
pub fn solve_upper(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.nrows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let row = r.row(i);
        let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
        x[i] = (x[i] - s) / row[i];
    }
    x
}

/// Solves `Rᵀ x = b` for upper-triangular `R` (forward substitution).
pub fn solve_upper_transposed(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.nrows();
    let mut x = b.to_vec();
    for i in 0..n {
        let xi = x[i] / r[(i, i)];
        x[i] = xi;
        let row = r.row(i);
        for (xk, &rik) in x[i + 1..].iter_mut().zip(&row[i + 1..]) {
            *xk -= rik * xi;
        }
    }
    x
}

/// Gaussian `N(Λ⁻¹d, σ²Λ⁻¹)` given by its precision `Λ`, shift `d` and scale `σ`.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    pub precision: Matrix,
    pub shift: Vec<f64>,
    pub scale: f64,
}

impl GaussianConditional {
    pub fn new(precision: Matrix, shift: Vec<f64>, scale: f64) -> Result<Self> {
        let p = precision.nrows();
        if precision.ncols() != p || shift.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "precision {}x{} with shift of length {}",
                p,
                precision.ncols(),
                shift.len()
            )));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidConfig(format!("scale must be finite and >= 0, got {scale}")));
        }
        let asym = precision.asymmetry();
        if asym > 1e-10 * precision.max_abs().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self {
            precision,
            shift,
            scale,
        })
    }

    /// Factors the precision once, so that mean, quadratic form and draws can share it.
    pub fn factor(&self) -> Result<FactoredGaussian> {
        FactoredGaussian::new(&self.precision, &self.shift)
    }
}

/// A precision matrix already reduced to its Cholesky factor, with the
/// forward-solved shift `u = R⁻ᵀ d` and mean `μ = R⁻¹ u` cached.
#[derive(Debug, Clone)]
pub struct FactoredGaussian {
    r: Matrix,
    u: Vec<f64>,
    mean: Vec<f64>,
}

impl FactoredGaussian {
    pub fn new(precision: &Matrix, shift: &[f64]) -> Result<Self> {
        let r = cholesky_with_jitter(precision)?;
        let u = solve_upper_transposed(&r, shift);
        let mean = solve_upper(&r, &u);
        Ok(Self { r, u, mean })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn factor(&self) -> &Matrix {
        &self.r
    }

    /// `dᵀ Λ⁻¹ d`, equivalently `μᵀ Λ μ`.
    pub fn quadratic_form(&self) -> f64 {
        dot(&self.u, &self.u)
    }

    /// One draw `μ + σ w` where `R w = v`, `v ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Vec<f64> {
        let v: Vec<f64> = (0..self.mean.len()).map(|_| rng.sample(StandardNormal)).collect();
        let w = solve_upper(&self.r, &v);
        self.mean.iter().zip(w).map(|(m, w)| m + scale * w).collect()
    }
}

/// Rue's algorithm: Cholesky-factor `Λ = RᵀR`, draw `v ~ N(0, I)`, solve
/// `R w = v`, `Rᵀ u = d`, `R μ = u`, and return `μ + σ w`.
pub fn rue_sample<R: Rng + ?Sized>(g: &GaussianConditional, rng: &mut R) -> Result<Vec<f64>> {
    Ok(g.factor()?.sample(g.scale, rng))
}
