//! Full-conditional updates for one Gibbs sweep.

use std::f64::consts::PI;

use rand::Rng;

use crate::distributions::{sample_categorical, sample_inverse_gamma, sample_pg1};
use crate::error::{Error, Result};
use crate::linalg::{dot, FactoredGaussian, Matrix};

use super::weights::log_weights_from_tilts;
use super::{ChainState, ModelData, Priors};

/// `ψ(x_i)ᵀ b_h` for every subject and stick, `n × H` row-major.
pub(crate) fn compute_tilts(state: &ChainState, data: &ModelData) -> Vec<f64> {
    let sticks = state.sticks();
    let n = data.n();
    let mut tilts = vec![0.0; n * sticks];
    for i in 0..n {
        let psi = data.maps.psi.row(i);
        for h in 0..sticks {
            tilts[i * sticks + h] = dot(psi, state.weights.b.row(h));
        }
    }
    tilts
}

/// Resamples every `u_i` from `p(u_i = h | ·) ∝ w_h(x_i) N(y_i | β_hᵀφ_i, σ_h²)`.
pub fn update_memberships<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &ModelData,
    rng: &mut R,
) -> Result<()> {
    let tilts = compute_tilts(state, data);
    memberships_with_tilts(state, data, &tilts, rng)
}

pub(crate) fn memberships_with_tilts<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &ModelData,
    tilts: &[f64],
    rng: &mut R,
) -> Result<()> {
    let sticks = state.sticks();
    if sticks == 0 {
        state.aug.u.iter_mut().for_each(|u| *u = 0);
        return Ok(());
    }
    let comps = sticks + 1;
    let p_beta = data.maps.p_beta();
    let log_norm: Vec<f64> = state
        .atoms
        .sigma_sq
        .iter()
        .map(|s| -0.5 * (2.0 * PI * s).ln())
        .collect();
    let inv_var: Vec<f64> = state.atoms.sigma_sq.iter().map(|s| 0.5 / s).collect();
    let mut logp = vec![0.0; comps];
    let mut probs = vec![0.0; comps];

    for i in 0..data.n() {
        let phi = data.maps.phi_full.row(i);
        // control rows have an all-zero treatment block
        let phi = if phi[p_beta..].iter().all(|&v| v == 0.0) {
            &phi[..p_beta]
        } else {
            phi
        };
        log_weights_from_tilts(&tilts[i * sticks..(i + 1) * sticks], &mut logp);
        let y = data.y[i];
        let mut max = f64::NEG_INFINITY;
        for h in 0..comps {
            let mean = dot(&state.atoms.beta.row(h)[..phi.len()], phi);
            let r = y - mean;
            let lp = logp[h] + log_norm[h] - r * r * inv_var[h];
            logp[h] = lp;
            if lp > max {
                max = lp;
            }
        }
        if !max.is_finite() {
            return Err(Error::AllZeroLikelihood { subject: i });
        }
        for (p, &lp) in probs.iter_mut().zip(&logp) {
            *p = (lp - max).exp();
        }
        state.aug.u[i] = sample_categorical(&probs, rng).map_err(|_| Error::AllZeroLikelihood { subject: i })?;
    }
    Ok(())
}

/// Sets `η_{i,h}` from the memberships and draws `ω_{i,h} ~ PG(1, ψ_iᵀb_h)`
/// for stick `h` and every subject with `u_i ≥ h`; other entries are zeroed.
pub(crate) fn augment_level<R: Rng + ?Sized>(
    state: &mut ChainState,
    h: usize,
    tilts: &[f64],
    rng: &mut R,
) {
    let sticks = state.sticks();
    for i in 0..state.aug.u.len() {
        let ui = state.aug.u[i];
        if ui >= h {
            state.aug.eta[(i, h)] = if ui == h { 0.5 } else { -0.5 };
            state.aug.omega[(i, h)] = sample_pg1(tilts[i * sticks + h], rng);
        } else {
            state.aug.eta[(i, h)] = 0.0;
            state.aug.omega[(i, h)] = 0.0;
        }
    }
}

/// Draws `b_h ~ N(Λ_{b_h}⁻¹ Σ η_{i,h} ψ_i, Λ_{b_h}⁻¹)` with
/// `Λ_{b_h} = Λ_b + Σ ω_{i,h} ψ_i ψ_iᵀ` over subjects with `u_i ≥ h`.
pub(crate) fn weight_level<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &ModelData,
    h: usize,
    rng: &mut R,
) -> Result<()> {
    let q = data.q();
    let mut precision = Matrix::from_diagonal(&state.shrink.weight_precision_diag());
    let mut shift = vec![0.0; q];
    for i in 0..data.n() {
        if state.aug.u[i] < h {
            continue;
        }
        let psi = data.maps.psi.row(i);
        precision.add_outer_upper(psi, state.aug.omega[(i, h)]);
        let eta = state.aug.eta[(i, h)];
        for (s, &v) in shift.iter_mut().zip(psi) {
            *s += eta * v;
        }
    }
    precision.symmetrize_from_upper();
    let draw = FactoredGaussian::new(&precision, &shift)?.sample(1.0, rng);
    state.weights.b.row_mut(h).copy_from_slice(&draw);
    Ok(())
}

/// Augmentation for every stick: `η` deterministically from `u`, `ω` from PG(1, ·).
pub fn update_augmentation<R: Rng + ?Sized>(state: &mut ChainState, data: &ModelData, rng: &mut R) {
    let tilts = compute_tilts(state, data);
    for h in 0..state.sticks() {
        augment_level(state, h, &tilts, rng);
    }
}

/// Redraws every `b_h` given the current augmentation.
pub fn update_weight_coefficients<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &ModelData,
    rng: &mut R,
) -> Result<()> {
    for h in 0..state.sticks() {
        weight_level(state, data, h, rng)?;
    }
    Ok(())
}

/// Conjugate inverse-gamma updates of `ρ_j²` and `ζ²` given `b`.
pub fn update_weight_hyper<R: Rng + ?Sized>(state: &mut ChainState, priors: &Priors, rng: &mut R) {
    let sticks = state.sticks();
    let q = state.shrink.rho_sq.len();
    let b = &state.weights.b;
    let shrink = &mut state.shrink;
    for j in 0..q {
        let ss: f64 = (0..sticks).map(|h| b[(h, j)] * b[(h, j)]).sum();
        shrink.rho_sq[j] = sample_inverse_gamma(
            priors.a_rho + 0.5 * sticks as f64,
            priors.b_rho + 0.5 * ss / shrink.zeta_sq,
            rng,
        );
    }
    let mut ss = 0.0;
    for h in 0..sticks {
        for j in 0..q {
            ss += b[(h, j)] * b[(h, j)] / shrink.rho_sq[j];
        }
    }
    shrink.zeta_sq = sample_inverse_gamma(
        priors.a_zeta + 0.5 * (q * sticks) as f64,
        priors.b_zeta + 0.5 * ss,
        rng,
    );
}

/// Horseshoe scales via the inverse-gamma decomposition of the half-Cauchy:
/// `λ_j² | ν_j ~ IG(1/2, 1/ν_j)`, `ν_j ~ IG(1/2, 1)`, and likewise for `ξ²`.
pub fn update_horseshoe<R: Rng + ?Sized>(state: &mut ChainState, rng: &mut R) {
    let comps = state.atoms.components();
    let p = state.shrink.lambda_sq.len();
    let beta = &state.atoms.beta;
    let sigma_sq = &state.atoms.sigma_sq;
    let shrink = &mut state.shrink;

    // Σ_h β_hj² / σ_h² per coordinate
    let mut scaled = vec![0.0; p];
    for h in 0..comps {
        let inv = 1.0 / sigma_sq[h];
        for (s, &b) in scaled.iter_mut().zip(beta.row(h)) {
            *s += b * b * inv;
        }
    }
    let lambda_shape = 0.5 * (comps as f64 + 1.0);
    for j in 0..p {
        shrink.lambda_sq[j] = sample_inverse_gamma(
            lambda_shape,
            1.0 / shrink.nu_aux[j] + 0.5 * scaled[j] / shrink.xi_sq,
            rng,
        );
        shrink.nu_aux[j] = sample_inverse_gamma(1.0, 1.0 + 1.0 / shrink.lambda_sq[j], rng);
    }
    let total: f64 = scaled.iter().zip(&shrink.lambda_sq).map(|(s, l)| s / l).sum();
    shrink.xi_sq = sample_inverse_gamma(
        0.5 * ((p * comps) as f64 + 1.0),
        1.0 / shrink.nu_xi + 0.5 * total,
        rng,
    );
    shrink.nu_xi = sample_inverse_gamma(1.0, 1.0 + 1.0 / shrink.xi_sq, rng);
}

/// Normal–inverse-gamma update of every component: `σ_h²` from its marginal
/// conditional, then `β_h | σ_h²` by Rue's algorithm.
pub fn update_atoms<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &ModelData,
    priors: &Priors,
    rng: &mut R,
) -> Result<()> {
    let comps = state.atoms.components();
    let p = data.p();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps];
    for (i, &u) in state.aug.u.iter().enumerate() {
        members[u].push(i);
    }
    let prior_diag = state.shrink.atom_precision_diag();

    for (h, idx) in members.iter().enumerate() {
        let mut precision = Matrix::from_diagonal(&prior_diag);
        let mut shift = vec![0.0; p];
        let mut y_sq = 0.0;
        for &i in idx {
            let phi = data.maps.phi_full.row(i);
            let y = data.y[i];
            precision.add_outer_upper(phi, 1.0);
            for (s, &v) in shift.iter_mut().zip(phi) {
                *s += y * v;
            }
            y_sq += y * y;
        }
        precision.symmetrize_from_upper();
        let post = FactoredGaussian::new(&precision, &shift)?;
        let nu_h = priors.nu0 + idx.len() as f64;
        let mut scale = priors.nu0 * priors.s0_sq + y_sq - post.quadratic_form();
        if scale <= 0.0 {
            if scale < -1e-9 {
                return Err(Error::NegativeScale { component: h, value: scale });
            }
            scale = 1e-12;
        }
        let sigma_sq = sample_inverse_gamma(0.5 * nu_h, 0.5 * scale, rng);
        let beta = post.sample(sigma_sq.sqrt(), rng);
        state.atoms.sigma_sq[h] = sigma_sq;
        state.atoms.beta.row_mut(h).copy_from_slice(&beta);
    }
    Ok(())
}
