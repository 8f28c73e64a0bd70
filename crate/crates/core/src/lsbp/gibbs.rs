use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SamplerConfig;
use crate::error::{Error, Result};
use crate::estimands::cate_row;
use crate::features::FeatureSpec;
use crate::linalg::{dot, Matrix};

use super::updates::{augment_level, compute_tilts, memberships_with_tilts, weight_level};
use super::weights::log_weights_from_tilts;
use super::{
    update_atoms, update_horseshoe, update_weight_hyper, AtomParams, ChainState, ModelData, Priors,
    ShrinkageState, WeightParams,
};

/// Which blocks of the sweep run. Everything is on for ordinary fitting;
/// tests switch blocks off to isolate conditionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPlan {
    pub memberships: bool,
    /// Weight hyperparameters, augmentation and stick coefficients.
    pub weights: bool,
    pub shrinkage: bool,
    pub atoms: bool,
}

impl SweepPlan {
    pub fn full() -> Self {
        Self {
            memberships: true,
            weights: true,
            shrinkage: true,
            atoms: true,
        }
    }
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self::full()
    }
}

/// One sweep in the order: memberships, weight hyperparameters,
/// `(η, ω, b_h)` stick by stick, horseshoe scales, atoms.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &ModelData,
    priors: &Priors,
    plan: SweepPlan,
    rng: &mut R,
) -> Result<()> {
    let sticks = state.sticks();
    let tilts = if sticks > 0 && (plan.memberships || plan.weights) {
        compute_tilts(state, data)
    } else {
        Vec::new()
    };
    if plan.memberships {
        memberships_with_tilts(state, data, &tilts, rng)?;
    }
    if plan.weights {
        update_weight_hyper(state, priors, rng);
        for h in 0..sticks {
            augment_level(state, h, &tilts, rng);
            weight_level(state, data, h, rng)?;
        }
    }
    if plan.shrinkage {
        update_horseshoe(state, rng);
    }
    if plan.atoms {
        update_atoms(state, data, priors, rng)?;
    }
    Ok(())
}

/// Mixture log-density `Σ_i ln Σ_h w_h(x_i) N(y_i | β_hᵀφ_i, σ_h²)`.
pub fn log_likelihood(state: &ChainState, data: &ModelData) -> f64 {
    let sticks = state.sticks();
    let comps = sticks + 1;
    let tilts = compute_tilts(state, data);
    let mut logw = vec![0.0; comps];
    let mut total = 0.0;
    for i in 0..data.n() {
        log_weights_from_tilts(&tilts[i * sticks..(i + 1) * sticks], &mut logw);
        let phi = data.maps.phi_full.row(i);
        let mut terms = Vec::with_capacity(comps);
        for h in 0..comps {
            let s2 = state.atoms.sigma_sq[h];
            let r = data.y[i] - dot(state.atoms.beta.row(h), phi);
            terms.push(logw[h] - 0.5 * (2.0 * PI * s2).ln() - 0.5 * r * r / s2);
        }
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        total += m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
    }
    total
}

/// Retained parameters of one post-burn-in iteration. The augmentation
/// `(η, ω)` is not kept: `η` is a function of the memberships and `ω` is
/// redrawn from scratch every sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSnapshot {
    pub iteration: usize,
    pub atoms: AtomParams,
    pub weights: WeightParams,
    pub shrink: ShrinkageState,
    pub memberships: Vec<u32>,
}

/// Scalar summaries recorded for each retained draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawDiagnostics {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub mate: f64,
    pub xi_sq: f64,
    pub zeta_sq: f64,
    pub occupied: usize,
}

#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub states: Vec<DrawSnapshot>,
    /// `keep × n`, entry `(s, i)` is `τ(x_i)` under draw `s`.
    pub cate: Matrix,
    pub diagnostics: Vec<DrawDiagnostics>,
    pub sticks: usize,
    pub p_beta: usize,
    /// Feature transform, when the maps came from `build_feature_maps`.
    pub spec: Option<FeatureSpec>,
}

impl PosteriorDraws {
    pub fn keep(&self) -> usize {
        self.states.len()
    }

    pub fn n_subjects(&self) -> usize {
        self.cate.ncols()
    }

    /// Per-draw mixed average treatment effect (row means of `cate`).
    pub fn mate_draws(&self) -> Vec<f64> {
        let n = self.n_subjects() as f64;
        self.cate.rows_iter().map(|r| r.iter().sum::<f64>() / n).collect()
    }
}

/// Initializes a chain and runs `burn_in + keep · thin` sweeps.
pub fn run_gibbs<R: Rng + ?Sized>(
    data: &ModelData,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    cfg.validate()?;
    let priors = Priors::from(cfg);
    let state = ChainState::initial(data, cfg.sticks, &priors, rng);
    run_gibbs_from(data, cfg, state, SweepPlan::full(), rng)
}

/// Runs the sampler from a given state.
pub fn run_gibbs_from<R: Rng + ?Sized>(
    data: &ModelData,
    cfg: &SamplerConfig,
    mut state: ChainState,
    plan: SweepPlan,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    cfg.validate()?;
    state.check_dims(data)?;
    let priors = Priors::from(cfg);
    let sticks = state.sticks();
    let n = data.n();
    let mut states = Vec::with_capacity(cfg.keep);
    let mut diagnostics = Vec::with_capacity(cfg.keep);
    let mut cate = Vec::with_capacity(cfg.keep * n);

    for iteration in 0..cfg.total_sweeps() {
        gibbs_step(&mut state, data, &priors, plan, rng).map_err(|e| Error::ChainAborted {
            iteration,
            source: Box::new(e),
        })?;
        if iteration < cfg.burn_in || (iteration - cfg.burn_in + 1) % cfg.thin != 0 {
            continue;
        }
        let row = cate_row(&state.atoms, &state.weights, &data.maps);
        let mate = row.iter().sum::<f64>() / n.max(1) as f64;
        cate.extend_from_slice(&row);
        diagnostics.push(DrawDiagnostics {
            iteration,
            log_likelihood: log_likelihood(&state, data),
            mate,
            xi_sq: state.shrink.xi_sq,
            zeta_sq: state.shrink.zeta_sq,
            occupied: state.occupied(),
        });
        states.push(DrawSnapshot {
            iteration,
            atoms: state.atoms.clone(),
            weights: state.weights.clone(),
            shrink: state.shrink.clone(),
            memberships: state.aug.u.iter().map(|&u| u as u32).collect(),
        });
    }
    Ok(PosteriorDraws {
        cate: Matrix::from_row_major(states.len(), n, cate)?,
        states,
        diagnostics,
        sticks,
        p_beta: data.maps.p_beta(),
        spec: data.maps.spec.clone(),
    })
}
