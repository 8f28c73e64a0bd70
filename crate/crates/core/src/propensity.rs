//! Logistic-regression propensity scores fitted by iteratively reweighted
//! least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, solve_upper, solve_upper_transposed, Matrix};

const RIDGE: f64 = 1e-6;
const DIVERGENCE_NORM: f64 = 1e3;
const CLIP: f64 = 1e-6;

/// Intercept followed by one slope per covariate, on the raw covariate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.coef[0] + dot(&self.coef[1..], x)
    }
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Maximizes the logistic log-likelihood with a `1e-6` ridge on the slopes.
///
/// Covariates are centered and scaled internally and the coefficients mapped
/// back, which keeps the weighted normal equations well conditioned when
/// covariates live on very different scales.
pub fn fit_logistic(x: &Matrix, z: &[f64], max_iter: usize, tol: f64) -> Result<LogisticModel> {
    let n = x.nrows();
    let d = x.ncols();
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!("{} treatments for {n} rows", z.len())));
    }
    if n == 0 {
        return Err(Error::EmptyData { what: "propensity design".into() });
    }
    let treated = z.iter().filter(|&&v| v == 1.0).count();
    if treated == 0 || treated == n {
        return Err(Error::SingleArm);
    }
    if n <= d + 1 {
        return Err(Error::InvalidConfig(format!(
            "propensity fit needs more than {} rows, got {n}",
            d + 1
        )));
    }

    let mut centers = vec![0.0; d];
    let mut scales = vec![1.0; d];
    for j in 0..d {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        if sd > 0.0 {
            centers[j] = mean;
            scales[j] = sd;
        }
    }
    let k = d + 1;
    let mut design = Matrix::zeros(n, k);
    for i in 0..n {
        let row = design.row_mut(i);
        row[0] = 1.0;
        for j in 0..d {
            row[j + 1] = (x[(i, j)] - centers[j]) / scales[j];
        }
    }

    let mut beta = vec![0.0; k];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        // Newton step: (XᵀWX + R) δ = Xᵀ(z − p) − Rβ
        let mut hess = Matrix::zeros(k, k);
        let mut grad = vec![0.0; k];
        for i in 0..n {
            let row = design.row(i);
            let p = logistic(dot(row, &beta));
            hess.add_outer_upper(row, (p * (1.0 - p)).max(1e-12));
            for (g, &v) in grad.iter_mut().zip(row) {
                *g += (z[i] - p) * v;
            }
        }
        for j in 1..k {
            hess[(j, j)] += RIDGE;
            grad[j] -= RIDGE * beta[j];
        }
        hess.symmetrize_from_upper();
        let r = cholesky(&hess)?;
        let step = solve_upper(&r, &solve_upper_transposed(&r, &grad));
        let mut change: f64 = 0.0;
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
            change = change.max(s.abs());
        }
        let norm = dot(&beta, &beta).sqrt();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::SeparationDetected { norm });
        }
        if change < tol {
            converged = true;
            break;
        }
    }

    // With the ridge the coefficients of separated data stay bounded but
    // every subject ends up classified with near certainty.
    let separated = (0..n).all(|i| {
        let p = logistic(dot(design.row(i), &beta));
        if z[i] == 1.0 {
            p > 0.999
        } else {
            p < 0.001
        }
    });
    if separated {
        return Err(Error::SeparationDetected { norm: dot(&beta, &beta).sqrt() });
    }

    let mut coef = vec![0.0; k];
    coef[0] = beta[0];
    for j in 0..d {
        coef[j + 1] = beta[j + 1] / scales[j];
        coef[0] -= coef[j + 1] * centers[j];
    }
    Ok(LogisticModel { coef, converged, iterations })
}

/// `logistic(intercept + xᵀ slopes)` clipped to `[1e-6, 1 − 1e-6]`.
pub fn predict_propensity(model: &LogisticModel, x: &Matrix) -> Vec<f64> {
    x.rows_iter()
        .map(|row| logistic(model.linear_predictor(row)).clamp(CLIP, 1.0 - CLIP))
        .collect()
}
