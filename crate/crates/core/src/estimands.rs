//! Causal summaries of posterior draws: CATE, MATE, subgroup effects,
//! quantile treatment effects and posterior predictive densities.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::{norm_cdf, norm_pdf};
use crate::error::{Error, Result};
use crate::features::{FeatureMaps, FeatureRows, FeatureSpec};
use crate::linalg::{dot, Matrix};
use crate::lsbp::{stick_weights, AtomParams, DrawSnapshot, PosteriorDraws, WeightParams};

/// Posterior mean with an equal-tailed credible interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Sample quantile with linear interpolation between order statistics
/// (R's type 7). `sorted` must be ascending and nonempty.
pub fn quantile_type7(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(draws: &[f64], level: f64) -> Result<EffectSummary> {
    if draws.len() < 2 {
        return Err(Error::TooFewDraws(draws.len()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("credible level {level} outside (0, 1)")));
    }
    let point = draws.iter().sum::<f64>() / draws.len() as f64;
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EffectSummary {
        point,
        lower: quantile_type7(&sorted, 0.5 * (1.0 - level)),
        upper: quantile_type7(&sorted, 0.5 * (1.0 + level)),
        level,
    })
}

/// `Σ_h w_h(x) γ̃_hᵀ φ_γ(x)` for one draw, where `γ̃_h` is the part of row `h`
/// of `β` after the first `p_beta` entries.
pub fn cate_draw(atoms: &AtomParams, weights: &WeightParams, phi_gamma: &[f64], psi: &[f64]) -> f64 {
    let p_beta = atoms.beta.ncols() - phi_gamma.len();
    stick_weights(psi, weights)
        .iter()
        .enumerate()
        .map(|(h, w)| w * dot(&atoms.beta.row(h)[p_beta..], phi_gamma))
        .sum()
}

/// CATE of every subject under one draw.
pub fn cate_row(atoms: &AtomParams, weights: &WeightParams, maps: &FeatureMaps) -> Vec<f64> {
    (0..maps.n())
        .map(|i| cate_draw(atoms, weights, maps.phi_gamma.row(i), maps.psi.row(i)))
        .collect()
}

/// Mixed average treatment effect `(1/n) Σ_i τ(x_i)` for one draw.
pub fn mate_draw(atoms: &AtomParams, weights: &WeightParams, maps: &FeatureMaps) -> f64 {
    let row = cate_row(atoms, weights, maps);
    row.iter().sum::<f64>() / row.len() as f64
}

pub fn mate_summary(draws: &PosteriorDraws, level: f64) -> Result<EffectSummary> {
    summarize(&draws.mate_draws(), level)
}

/// Per-subject CATE summaries, in subject order.
pub fn cate_summaries(draws: &PosteriorDraws, level: f64) -> Result<Vec<EffectSummary>> {
    (0..draws.n_subjects())
        .map(|i| summarize(&draws.cate.column(i), level))
        .collect()
}

/// Average CATE over `members`, computed per draw and then summarized.
pub fn subgroup_cate(draws: &PosteriorDraws, members: &[usize], level: f64) -> Result<EffectSummary> {
    if members.is_empty() {
        return Err(Error::EmptySubgroup);
    }
    let n = draws.n_subjects();
    if let Some(&bad) = members.iter().find(|&&i| i >= n) {
        return Err(Error::DimensionMismatch(format!(
            "subgroup member {bad} out of range for {n} subjects"
        )));
    }
    let m = members.len() as f64;
    let per_draw: Vec<f64> = draws
        .cate
        .rows_iter()
        .map(|row| members.iter().map(|&i| row[i]).sum::<f64>() / m)
        .collect();
    summarize(&per_draw, level)
}

/// Feature rows of one covariate profile under control and treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub control: FeatureRows,
    pub treated: FeatureRows,
}

impl Profile {
    pub fn new(spec: &FeatureSpec, x_raw: &[f64], pi_hat: Option<f64>) -> Result<Self> {
        Ok(Self {
            control: spec.rows_for(x_raw, pi_hat, 0.0)?,
            treated: spec.rows_for(x_raw, pi_hat, 1.0)?,
        })
    }

    pub fn rows(&self, z: f64) -> &FeatureRows {
        if z == 0.0 {
            &self.control
        } else {
            &self.treated
        }
    }
}

/// A normal mixture in one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl NormalMixture {
    /// Outcome distribution implied by one draw at the given feature rows.
    pub fn from_draw(atoms: &AtomParams, weights: &WeightParams, rows: &FeatureRows) -> Self {
        let w = stick_weights(&rows.psi, weights);
        let means = (0..atoms.components())
            .map(|h| dot(atoms.beta.row(h), &rows.phi_full))
            .collect();
        let sds = atoms.sigma_sq.iter().map(|s| s.sqrt()).collect();
        Self { weights: w, means, sds }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.iter().map(|(w, m, s)| w * norm_pdf((y - m) / s) / s).sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.iter().map(|(w, m, s)| w * norm_cdf((y - m) / s)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(w, m, _)| w * m).sum()
    }

    /// Standard deviation of the mixture as a whole.
    pub fn pooled_sd(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self.iter().map(|(w, m, s)| w * (s * s + m * m)).sum();
        (second - mean * mean).max(0.0).sqrt()
    }

    /// α-quantile by bisection on the mixture CDF.
    ///
    /// The bracket starts one pooled SD either side of the mean and doubles
    /// out to at most 12 SDs; bisection stops once the bracket is narrower
    /// than `1e-8`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("quantile level {alpha} outside (0, 1)")));
        }
        let center = self.mean();
        let sd = self.pooled_sd().max(1e-12);
        let bracket = |sign: f64| -> Result<f64> {
            let mut k = 1.0_f64;
            loop {
                let y = center + sign * k * sd;
                let c = self.cdf(y);
                if (sign < 0.0 && c <= alpha) || (sign > 0.0 && c >= alpha) {
                    return Ok(y);
                }
                if k >= 12.0 {
                    return Err(Error::BisectionFailure { alpha });
                }
                k = (2.0 * k).min(12.0);
            }
        };
        let mut lo = bracket(-1.0)?;
        let mut hi = bracket(1.0)?;
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((&w, &m), &s)| (w, m, s))
    }
}

/// Anything carrying one draw of the mixture parameters.
pub trait MixtureDraw {
    fn atoms(&self) -> &AtomParams;
    fn weights(&self) -> &WeightParams;

    fn mixture_at(&self, rows: &FeatureRows) -> NormalMixture {
        NormalMixture::from_draw(self.atoms(), self.weights(), rows)
    }
}

impl MixtureDraw for DrawSnapshot {
    fn atoms(&self) -> &AtomParams {
        &self.atoms
    }

    fn weights(&self) -> &WeightParams {
        &self.weights
    }
}

impl MixtureDraw for (AtomParams, WeightParams) {
    fn atoms(&self) -> &AtomParams {
        &self.0
    }

    fn weights(&self) -> &WeightParams {
        &self.1
    }
}

/// Per-draw QTE values `q_1(α) − q_0(α)` at one profile.
pub fn qte_draws<D: MixtureDraw>(draws: &[D], profile: &Profile, alpha: f64) -> Result<Vec<f64>> {
    draws
        .iter()
        .map(|d| {
            let q1 = d.mixture_at(&profile.treated).quantile(alpha)?;
            let q0 = d.mixture_at(&profile.control).quantile(alpha)?;
            Ok(q1 - q0)
        })
        .collect()
}

/// Quantile treatment effects at a covariate profile, one summary per α.
pub fn qte<D: MixtureDraw>(
    draws: &[D],
    profile: &Profile,
    alphas: &[f64],
    level: f64,
) -> Result<Vec<EffectSummary>> {
    alphas
        .iter()
        .map(|&a| summarize(&qte_draws(draws, profile, a)?, level))
        .collect()
}

/// Predictive density of `y` on a grid, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDensity {
    pub grid: Vec<f64>,
    /// `draws × grid`.
    pub density: Matrix,
}

impl PredictiveDensity {
    pub fn mean_curve(&self) -> Vec<f64> {
        let s = self.density.nrows() as f64;
        (0..self.grid.len())
            .map(|g| self.density.column(g).iter().sum::<f64>() / s)
            .collect()
    }

    /// Pointwise equal-tailed bands `(lower, upper)`.
    pub fn bands(&self, level: f64) -> (Vec<f64>, Vec<f64>) {
        let mut lower = Vec::with_capacity(self.grid.len());
        let mut upper = Vec::with_capacity(self.grid.len());
        for g in 0..self.grid.len() {
            let mut col = self.density.column(g);
            col.sort_by(f64::total_cmp);
            lower.push(quantile_type7(&col, 0.5 * (1.0 - level)));
            upper.push(quantile_type7(&col, 0.5 * (1.0 + level)));
        }
        (lower, upper)
    }

    /// Trapezoid-rule integral of each draw's curve.
    pub fn integrals(&self) -> Vec<f64> {
        self.density.rows_iter().map(|row| trapezoid(&self.grid, row)).collect()
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

pub fn predictive_density<D: MixtureDraw>(
    draws: &[D],
    rows: &FeatureRows,
    grid: &[f64],
) -> Result<PredictiveDensity> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("predictive grid must be sorted ascending".into()));
    }
    let mut density = Matrix::zeros(draws.len(), grid.len());
    for (s, draw) in draws.iter().enumerate() {
        let mix = draw.mixture_at(rows);
        for (g, &y) in grid.iter().enumerate() {
            density[(s, g)] = mix.pdf(y);
        }
    }
    Ok(PredictiveDensity {
        grid: grid.to_vec(),
        density,
    })
}

/// Evenly spaced grid covering every draw's components out to `±width` SDs.
pub fn default_grid<D: MixtureDraw>(draws: &[D], profile: &Profile, width: f64, points: usize) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in draws {
        for rows in [&profile.control, &profile.treated] {
            let mix = d.mixture_at(rows);
            for ((&w, &m), &sd) in mix.weights.iter().zip(&mix.means).zip(&mix.sds) {
                // components with negligible weight would only stretch the grid
                if w < 1e-6 {
                    continue;
                }
                lo = lo.min(m - width * sd);
                hi = hi.max(m + width * sd);
            }
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Vec::new();
    }
    let points = points.max(2);
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|k| lo + k as f64 * step).collect()
}

/// A labelled summary row in `estimates.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimand: String,
    pub group: String,
    #[serde(flatten)]
    pub summary: EffectSummary,
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["estimand", "group", "point", "lower", "upper", "level"])?;
    for r in rows {
        w.write_record([
            r.estimand.clone(),
            r.group.clone(),
            r.summary.point.to_string(),
            r.summary.lower.to_string(),
            r.summary.upper.to_string(),
            r.summary.level.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
