use crate::linalg::dot;

use super::{AtomParams, WeightParams};

/// Logistic function; equals `exp(c/2) / (2 cosh(c/2))`.
#[inline]
pub(crate) fn sigmoid(c: f64) -> f64 {
    if c >= 0.0 {
        1.0 / (1.0 + (-c).exp())
    } else {
        let e = c.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(c)` without overflow.
#[inline]
pub(crate) fn log_sigmoid(c: f64) -> f64 {
    if c >= 0.0 {
        -(-c).exp().ln_1p()
    } else {
        c - c.exp().ln_1p()
    }
}

/// Mixture weights `w_1(x), …, w_{H+1}(x)` for one `ψ(x)` row.
///
/// Each stick takes a logistic fraction of what remains; the last component
/// receives `1 - Σ_{h≤H} w_h`, so the weights sum to one exactly.
pub fn stick_weights(psi_x: &[f64], w: &WeightParams) -> Vec<f64> {
    let sticks = w.sticks();
    let mut out = Vec::with_capacity(sticks + 1);
    let mut remaining = 1.0;
    let mut used = 0.0;
    for h in 0..sticks {
        let c = dot(psi_x, w.b.row(h));
        // capping at 1 - used keeps rounding from pushing the total past one
        let wh = (remaining * sigmoid(c)).min(1.0 - used);
        remaining *= sigmoid(-c);
        used += wh;
        out.push(wh);
    }
    out.push(1.0 - used);
    out
}

/// `ln w_h(x)` for all `H + 1` components from precomputed tilts `ψ(x)ᵀb_h`.
#[inline]
pub(crate) fn log_weights_from_tilts(tilts: &[f64], out: &mut [f64]) {
    let mut log_rest = 0.0;
    for (h, &c) in tilts.iter().enumerate() {
        out[h] = log_rest + log_sigmoid(c);
        log_rest += log_sigmoid(-c);
    }
    out[tilts.len()] = log_rest;
}

/// `ln w_h(x)` for one `ψ(x)` row, computed stick by stick in log space.
pub fn log_stick_weights(psi_x: &[f64], w: &WeightParams) -> Vec<f64> {
    let tilts: Vec<f64> = (0..w.sticks()).map(|h| dot(psi_x, w.b.row(h))).collect();
    let mut out = vec![0.0; tilts.len() + 1];
    log_weights_from_tilts(&tilts, &mut out);
    out
}

/// `β_hᵀ φ(z, x)` for component `h`.
pub fn component_mean(atoms: &AtomParams, h: usize, phi_full_row: &[f64]) -> f64 {
    dot(atoms.beta.row(h), phi_full_row)
}
