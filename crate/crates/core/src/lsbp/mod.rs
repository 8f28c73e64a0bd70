//! The causal logit stick-breaking mixture.
//!
//! Outcomes follow a truncated mixture with `H + 1` normal components whose
//! means are linear in `φ(z, x)` and whose weights come from sequential
//! logistic regressions on `ψ(x)`. Components are indexed from 0 here, so
//! component `h` in code is stick `h + 1` in the usual one-based notation and
//! the residual component is index `H`.

mod gibbs;
mod updates;
mod weights;

pub use gibbs::{
    gibbs_step, log_likelihood, run_gibbs, run_gibbs_from, DrawDiagnostics, DrawSnapshot,
    PosteriorDraws, SweepPlan,
};
pub use updates::{
    update_atoms, update_augmentation, update_horseshoe, update_memberships,
    update_weight_coefficients, update_weight_hyper,
};
pub use weights::{component_mean, log_stick_weights, stick_weights};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SamplerConfig;
use crate::error::{Error, Result};
use crate::features::FeatureMaps;
use crate::linalg::Matrix;

/// Outcomes paired with their feature maps: everything a sweep reads.
#[derive(Debug, Clone)]
pub struct ModelData {
    pub y: Vec<f64>,
    pub maps: FeatureMaps,
}

impl ModelData {
    pub fn new(y: Vec<f64>, maps: FeatureMaps) -> Result<Self> {
        if y.len() != maps.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes for {} feature rows",
                y.len(),
                maps.n()
            )));
        }
        Ok(Self { y, maps })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.maps.p()
    }

    pub fn q(&self) -> usize {
        self.maps.q()
    }
}

/// Fixed prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub nu0: f64,
    pub s0_sq: f64,
    pub a_rho: f64,
    pub b_rho: f64,
    pub a_zeta: f64,
    pub b_zeta: f64,
}

impl From<&SamplerConfig> for Priors {
    fn from(cfg: &SamplerConfig) -> Self {
        Self {
            nu0: cfg.nu0,
            s0_sq: cfg.s0_sq,
            a_rho: cfg.a_rho,
            b_rho: cfg.b_rho,
            a_zeta: cfg.a_zeta,
            b_zeta: cfg.b_zeta,
        }
    }
}

/// Component regression coefficients and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// `(H + 1) × p`; row `h` is `(β̃_h, γ̃_h)`.
    pub beta: Matrix,
    pub sigma_sq: Vec<f64>,
}

impl AtomParams {
    pub fn components(&self) -> usize {
        self.sigma_sq.len()
    }
}

/// Stick-breaking logistic coefficients, `H × q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub b: Matrix,
}

impl WeightParams {
    pub fn zeros(sticks: usize, q: usize) -> Self {
        Self { b: Matrix::zeros(sticks, q) }
    }

    pub fn sticks(&self) -> usize {
        self.b.nrows()
    }
}

/// Horseshoe scales for the atoms plus inverse-gamma scales for the weights.
///
/// The atom prior precision is `Λ_β = diag(1 / (ξ² λ_j²))`; the weight prior
/// precision is `Λ_b = diag(1 / (ζ² ρ_j²))`. `nu_aux` and `nu_xi` are the
/// inverse-gamma auxiliaries of the half-Cauchy scale mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageState {
    pub xi_sq: f64,
    pub lambda_sq: Vec<f64>,
    pub nu_aux: Vec<f64>,
    pub nu_xi: f64,
    pub zeta_sq: f64,
    pub rho_sq: Vec<f64>,
}

impl ShrinkageState {
    pub fn unit(p: usize, q: usize) -> Self {
        Self {
            xi_sq: 1.0,
            lambda_sq: vec![1.0; p],
            nu_aux: vec![1.0; p],
            nu_xi: 1.0,
            zeta_sq: 1.0,
            rho_sq: vec![1.0; q],
        }
    }

    /// Diagonal of `Λ_β`.
    pub fn atom_precision_diag(&self) -> Vec<f64> {
        self.lambda_sq.iter().map(|l| 1.0 / (self.xi_sq * l)).collect()
    }

    /// Diagonal of `Λ_b`.
    pub fn weight_precision_diag(&self) -> Vec<f64> {
        self.rho_sq.iter().map(|r| 1.0 / (self.zeta_sq * r)).collect()
    }
}

/// Memberships and Pólya-Gamma augmentation.
///
/// `eta` and `omega` are `n × H`; entries with `u_i < h` are unused and held at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationState {
    pub u: Vec<usize>,
    pub eta: Matrix,
    pub omega: Matrix,
}

impl AugmentationState {
    /// Membership implied by row `i` of `eta`: the first stick with `η = 1/2`,
    /// or the residual component when there is none.
    pub fn membership_from_eta(&self, i: usize) -> usize {
        let sticks = self.eta.ncols();
        self.eta
            .row(i)
            .iter()
            .position(|&e| e == 0.5)
            .unwrap_or(sticks)
    }
}

/// All latent quantities of one Gibbs iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub atoms: AtomParams,
    pub weights: WeightParams,
    pub shrink: ShrinkageState,
    pub aug: AugmentationState,
}

impl ChainState {
    /// Neutral starting point: uniform memberships, zero coefficients,
    /// `σ² = s₀²`, unit shrinkage scales.
    pub fn initial<R: Rng + ?Sized>(
        data: &ModelData,
        sticks: usize,
        priors: &Priors,
        rng: &mut R,
    ) -> Self {
        let n = data.n();
        let (p, q) = (data.p(), data.q());
        let u: Vec<usize> = (0..n).map(|_| rng.random_range(0..=sticks)).collect();
        let mut aug = AugmentationState {
            u,
            eta: Matrix::zeros(n, sticks),
            omega: Matrix::zeros(n, sticks),
        };
        for i in 0..n {
            for h in 0..sticks.min(aug.u[i] + 1) {
                aug.eta[(i, h)] = if aug.u[i] == h { 0.5 } else { -0.5 };
                aug.omega[(i, h)] = 0.25;
            }
        }
        Self {
            atoms: AtomParams {
                beta: Matrix::zeros(sticks + 1, p),
                sigma_sq: vec![priors.s0_sq; sticks + 1],
            },
            weights: WeightParams::zeros(sticks, q),
            shrink: ShrinkageState::unit(p, q),
            aug,
        }
    }

    pub fn sticks(&self) -> usize {
        self.weights.sticks()
    }

    /// Number of components with at least one member.
    pub fn occupied(&self) -> usize {
        let mut seen = vec![false; self.sticks() + 1];
        for &u in &self.aug.u {
            seen[u] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Dimensional consistency with `(n, p, q, H)`.
    pub fn check_dims(&self, data: &ModelData) -> Result<()> {
        let h = self.sticks();
        let ok = self.atoms.beta.nrows() == h + 1
            && self.atoms.beta.ncols() == data.p()
            && self.atoms.sigma_sq.len() == h + 1
            && self.weights.b.ncols() == data.q()
            && self.shrink.lambda_sq.len() == data.p()
            && self.shrink.nu_aux.len() == data.p()
            && self.shrink.rho_sq.len() == data.q()
            && self.aug.u.len() == data.n()
            && self.aug.eta.nrows() == data.n()
            && self.aug.eta.ncols() == h
            && self.aug.omega.nrows() == data.n()
            && self.aug.omega.ncols() == h
            && self.aug.u.iter().all(|&u| u <= h);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("chain state does not match data dimensions".into()))
        }
    }

    /// Checks weight normalization for every subject and the η/u identity.
    pub fn check_invariants(&self, data: &ModelData) -> std::result::Result<(), String> {
        for i in 0..data.n() {
            let w = stick_weights(data.maps.psi.row(i), &self.weights);
            let total: f64 = w.iter().sum();
            if total != 1.0 {
                return Err(format!("weights for subject {i} sum to {total}"));
            }
            if self.aug.membership_from_eta(i) != self.aug.u[i] {
                return Err(format!("eta row {i} disagrees with membership {}", self.aug.u[i]));
            }
        }
        Ok(())
    }
}
