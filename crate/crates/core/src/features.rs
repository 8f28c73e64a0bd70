//! Feature maps `φ_β`, `φ_γ`, `ψ` and the stacked atom design `φ(z, x)`.
//!
//! All three maps are the linear identity with a leading intercept:
//! `(1, x, [π̂])`, with `π̂` appended only where the config asks for it.
//! Row `i` of the full atom design is `(φ_β(x_i), z_i · φ_γ(x_i))`.

use serde::{Deserialize, Serialize};

use crate::config::SamplerConfig;
use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Everything needed to map a raw covariate profile to feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Per-covariate centering (0 for untouched columns).
    pub centers: Vec<f64>,
    /// Per-covariate scale (1 for untouched columns).
    pub scales: Vec<f64>,
    pub pscore_in_atoms: bool,
    pub pscore_in_weights: bool,
}

impl FeatureSpec {
    pub fn identity(d: usize, pscore_in_atoms: bool, pscore_in_weights: bool) -> Self {
        Self {
            centers: vec![0.0; d],
            scales: vec![1.0; d],
            pscore_in_atoms,
            pscore_in_weights,
        }
    }

    pub fn d(&self) -> usize {
        self.centers.len()
    }

    pub fn p_beta(&self) -> usize {
        1 + self.d() + usize::from(self.pscore_in_atoms)
    }

    pub fn p_gamma(&self) -> usize {
        self.p_beta()
    }

    pub fn q(&self) -> usize {
        1 + self.d() + usize::from(self.pscore_in_weights)
    }

    pub fn needs_pscore(&self) -> bool {
        self.pscore_in_atoms || self.pscore_in_weights
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.centers.iter().zip(&self.scales))
            .map(|(v, (c, s))| (v - c) / s)
            .collect()
    }

    pub fn unstandardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.centers.iter().zip(&self.scales))
            .map(|(v, (c, s))| v * s + c)
            .collect()
    }

    /// Feature rows for one raw covariate profile under treatment `z`.
    pub fn rows_for(&self, x_raw: &[f64], pi_hat: Option<f64>, z: f64) -> Result<FeatureRows> {
        if x_raw.len() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "covariate profile has {} entries, model expects {}",
                x_raw.len(),
                self.d()
            )));
        }
        if self.needs_pscore() && pi_hat.is_none() {
            return Err(Error::MissingPropensity);
        }
        let xs = self.standardize(x_raw);
        let mut phi_beta = Vec::with_capacity(self.p_beta());
        phi_beta.push(1.0);
        phi_beta.extend_from_slice(&xs);
        if self.pscore_in_atoms {
            phi_beta.push(pi_hat.unwrap_or_default());
        }
        let phi_gamma = phi_beta.clone();
        let mut psi = Vec::with_capacity(self.q());
        psi.push(1.0);
        psi.extend_from_slice(&xs);
        if self.pscore_in_weights {
            psi.push(pi_hat.unwrap_or_default());
        }
        let mut phi_full = phi_beta.clone();
        phi_full.extend(phi_gamma.iter().map(|v| z * v));
        Ok(FeatureRows {
            phi_beta,
            phi_gamma,
            psi,
            phi_full,
        })
    }
}

/// Feature rows for a single subject or covariate profile.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRows {
    pub phi_beta: Vec<f64>,
    pub phi_gamma: Vec<f64>,
    pub psi: Vec<f64>,
    pub phi_full: Vec<f64>,
}

/// Per-subject feature matrices for a fitted data set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    pub phi_beta: Matrix,
    pub phi_gamma: Matrix,
    pub psi: Matrix,
    pub phi_full: Matrix,
    /// Recorded transform; `None` for maps assembled by hand.
    pub spec: Option<FeatureSpec>,
}

impl FeatureMaps {
    /// Assembles maps from explicit matrices; `phi_full` is derived from `z`.
    pub fn from_parts(phi_beta: Matrix, phi_gamma: Matrix, psi: Matrix, z: &[f64]) -> Result<Self> {
        let n = phi_beta.nrows();
        if phi_gamma.nrows() != n || psi.nrows() != n || z.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "feature maps disagree on n: {} / {} / {} / z {}",
                n,
                phi_gamma.nrows(),
                psi.nrows(),
                z.len()
            )));
        }
        let pb = phi_beta.ncols();
        let pg = phi_gamma.ncols();
        let mut phi_full = Matrix::zeros(n, pb + pg);
        for i in 0..n {
            let row = phi_full.row_mut(i);
            row[..pb].copy_from_slice(phi_beta.row(i));
            for (dst, &g) in row[pb..].iter_mut().zip(phi_gamma.row(i)) {
                *dst = z[i] * g;
            }
        }
        Ok(Self {
            phi_beta,
            phi_gamma,
            psi,
            phi_full,
            spec: None,
        })
    }

    pub fn n(&self) -> usize {
        self.phi_full.nrows()
    }

    pub fn p(&self) -> usize {
        self.phi_full.ncols()
    }

    pub fn p_beta(&self) -> usize {
        self.phi_beta.ncols()
    }

    pub fn p_gamma(&self) -> usize {
        self.phi_gamma.ncols()
    }

    pub fn q(&self) -> usize {
        self.psi.ncols()
    }
}

/// Returns true for columns that only take the values 0 and 1.
fn is_indicator(col: &[f64]) -> bool {
    col.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Builds `φ_β = φ_γ = (1, x, [π̂])` and `ψ = (1, x, [π̂])`, standardizing
/// continuous covariates when the config asks for it.
pub fn build_feature_maps(obs: &ObservationSet, cfg: &SamplerConfig) -> Result<FeatureMaps> {
    if cfg.uses_pscore() && obs.pi_hat.is_none() {
        return Err(Error::MissingPropensity);
    }
    let n = obs.n();
    let d = obs.d();
    let mut spec = FeatureSpec::identity(d, cfg.include_pscore_in_atoms, cfg.include_pscore_in_weights);
    if cfg.standardize {
        for j in 0..d {
            let col = obs.x.column(j);
            if is_indicator(&col) {
                continue;
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            // constant columns stay as they are
            if sd > 0.0 && sd.is_finite() {
                spec.centers[j] = mean;
                spec.scales[j] = sd;
            }
        }
    }

    let mut phi_beta = Matrix::zeros(n, spec.p_beta());
    let mut psi = Matrix::zeros(n, spec.q());
    for i in 0..n {
        let rows = spec.rows_for(obs.x.row(i), obs.pi_hat.as_ref().map(|p| p[i]), obs.z[i])?;
        phi_beta.row_mut(i).copy_from_slice(&rows.phi_beta);
        psi.row_mut(i).copy_from_slice(&rows.psi);
    }
    let phi_gamma = phi_beta.clone();
    let mut maps = FeatureMaps::from_parts(phi_beta, phi_gamma, psi, &obs.z)?;
    maps.spec = Some(spec);
    Ok(maps)
}
