//! Oracles shared by the integration tests.

#![allow(dead_code)]

use clsbp::distributions::{sample_categorical, sample_inverse_gamma};
use clsbp::features::FeatureMaps;
use clsbp::linalg::Matrix;
use clsbp::lsbp::{stick_weights, AtomParams, AugmentationState, ChainState, ModelData, Priors, ShrinkageState, WeightParams};
use rand::Rng;
use rand_distr::StandardNormal;

/// Mean and its standard error from iid values.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value of `sqrt(n) D`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let t = (n as f64).sqrt() * d;
    let mut p = 0.0;
    for k in 1..200 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
    }
    p.clamp(0.0, 1.0)
}

/// Dense inverse through nalgebra, independent of the crate's Cholesky.
pub fn dense_inverse(m: &Matrix) -> Matrix {
    let n = m.nrows();
    let dm = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
    let inv = dm.try_inverse().expect("invertible");
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.row_mut(i)[j] = inv[(i, j)];
        }
    }
    out
}

/// PG(1, c) density as the alternating series
/// `cosh(c/2) Σ (−1)^n (2n+1)/√(2π x³) exp(−(2n+1)²/(8x) − c²x/2)`.
pub fn pg_density_series(x: f64, c: f64, terms: usize) -> f64 {
    let mut s = 0.0;
    for n in 0..terms {
        let k = (2 * n + 1) as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * k / (2.0 * std::f64::consts::PI * x.powi(3)).sqrt() * (-k * k / (8.0 * x)).exp();
    }
    (c / 2.0).cosh() * (-c * c * x / 2.0).exp() * s
}

/// A PG(1, c) draw as the truncated infinite sum of gammas
/// `(1 / 2π²) Σ g_k / ((k − 1/2)² + c² / 4π²)` with `g_k ~ Exp(1)`.
pub fn pg_gamma_series<R: Rng>(c: f64, terms: usize, rng: &mut R) -> f64 {
    let pi2 = std::f64::consts::PI.powi(2);
    let mut s = 0.0;
    for k in 1..=terms {
        let g: f64 = rng.sample(rand_distr::Exp1);
        let kk = k as f64 - 0.5;
        s += g / (kk * kk + c * c / (4.0 * pi2));
    }
    s / (2.0 * pi2)
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws `(θ, y)` from the joint prior predictive: every parameter from its
/// prior, memberships from the stick weights, outcomes from the mixture.
pub fn sample_prior_state<R: Rng>(
    maps: &FeatureMaps,
    sticks: usize,
    priors: &Priors,
    rng: &mut R,
) -> (ChainState, Vec<f64>) {
    let (n, p, q) = (maps.n(), maps.p(), maps.q());
    let nu_xi = sample_inverse_gamma(0.5, 1.0, rng);
    let xi_sq = sample_inverse_gamma(0.5, 1.0 / nu_xi, rng);
    let nu_aux: Vec<f64> = (0..p).map(|_| sample_inverse_gamma(0.5, 1.0, rng)).collect();
    let lambda_sq: Vec<f64> = nu_aux.iter().map(|&v| sample_inverse_gamma(0.5, 1.0 / v, rng)).collect();
    let zeta_sq = sample_inverse_gamma(priors.a_zeta, priors.b_zeta, rng);
    let rho_sq: Vec<f64> = (0..q).map(|_| sample_inverse_gamma(priors.a_rho, priors.b_rho, rng)).collect();

    let mut b = Matrix::zeros(sticks, q);
    for h in 0..sticks {
        for j in 0..q {
            b.row_mut(h)[j] = (zeta_sq * rho_sq[j]).sqrt() * normal(rng);
        }
    }
    let mut beta = Matrix::zeros(sticks + 1, p);
    let mut sigma_sq = Vec::with_capacity(sticks + 1);
    for h in 0..=sticks {
        let s2 = sample_inverse_gamma(0.5 * priors.nu0, 0.5 * priors.nu0 * priors.s0_sq, rng);
        for j in 0..p {
            beta.row_mut(h)[j] = (s2 * xi_sq * lambda_sq[j]).sqrt() * normal(rng);
        }
        sigma_sq.push(s2);
    }
    let weights = WeightParams { b };
    let atoms = AtomParams { beta, sigma_sq };
    let mut u = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let w = stick_weights(maps.psi.row(i), &weights);
        let ui = sample_categorical(&w, rng).unwrap();
        let mean = clsbp::linalg::dot(atoms.beta.row(ui), maps.phi_full.row(i));
        y.push(mean + atoms.sigma_sq[ui].sqrt() * normal(rng));
        u.push(ui);
    }
    let mut aug = AugmentationState { u, eta: Matrix::zeros(n, sticks), omega: Matrix::zeros(n, sticks) };
    for i in 0..n {
        for h in 0..sticks.min(aug.u[i] + 1) {
            aug.eta.row_mut(i)[h] = if aug.u[i] == h { 0.5 } else { -0.5 };
        }
    }
    let state = ChainState {
        atoms,
        weights,
        shrink: ShrinkageState { xi_sq, lambda_sq, nu_aux, nu_xi, zeta_sq, rho_sq },
        aug,
    };
    (state, y)
}

/// Redraws the outcomes given every parameter and membership.
pub fn resample_outcomes<R: Rng>(state: &ChainState, data: &mut ModelData, rng: &mut R) {
    for i in 0..data.n() {
        let h = state.aug.u[i];
        let mean = clsbp::linalg::dot(state.atoms.beta.row(h), data.maps.phi_full.row(i));
        data.y[i] = mean + state.atoms.sigma_sq[h].sqrt() * normal(rng);
    }
}

/// Test functions compared between the two simulators: bounded or
/// log-transformed so that every one has finite variance under the
/// heavy-tailed shrinkage priors.
pub fn geweke_functions(state: &ChainState, y: &[f64]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let beta = &state.atoms.beta;
    for j in 0..beta.ncols() {
        let m = (0..beta.nrows()).map(|h| beta.row(h)[j].atan()).sum::<f64>() / beta.nrows() as f64;
        out.push((format!("atan beta[.,{j}]"), m));
        let s = (0..beta.nrows()).map(|h| beta.row(h)[j].atan().powi(2)).sum::<f64>() / beta.nrows() as f64;
        out.push((format!("atan^2 beta[.,{j}]"), s));
    }
    let comps = state.atoms.sigma_sq.len() as f64;
    let ls: f64 = state.atoms.sigma_sq.iter().map(|s| s.ln()).sum::<f64>() / comps;
    out.push(("log sigma^2".into(), ls));
    out.push(("log^2 sigma^2".into(), state.atoms.sigma_sq.iter().map(|s| s.ln().powi(2)).sum::<f64>() / comps));
    let b = &state.weights.b;
    for j in 0..b.ncols() {
        let m = (0..b.nrows()).map(|h| b.row(h)[j].atan()).sum::<f64>() / b.nrows().max(1) as f64;
        out.push((format!("atan b[.,{j}]"), m));
        let s = (0..b.nrows()).map(|h| b.row(h)[j].atan().powi(2)).sum::<f64>() / b.nrows().max(1) as f64;
        out.push((format!("atan^2 b[.,{j}]"), s));
    }
    let sh = &state.shrink;
    out.push(("atan log xi^2".into(), sh.xi_sq.ln().atan()));
    out.push(("atan log zeta^2".into(), sh.zeta_sq.ln().atan()));
    for (j, l) in sh.lambda_sq.iter().enumerate() {
        out.push((format!("atan log lambda^2[{j}]"), l.ln().atan()));
    }
    for (j, r) in sh.rho_sq.iter().enumerate() {
        out.push((format!("log rho^2[{j}]"), r.ln()));
    }
    let n = y.len() as f64;
    out.push(("mean u".into(), state.aug.u.iter().sum::<usize>() as f64 / n));
    out.push(("share u=0".into(), state.aug.u.iter().filter(|&&u| u == 0).count() as f64 / n));
    out.push(("atan y[0]".into(), y[0].atan()));
    out.push(("atan mean y".into(), (y.iter().sum::<f64>() / n).atan()));
    out.push(("atan^2 y[1]".into(), y[1].atan().powi(2)));
    out
}

/// Design for the getting-it-right test: `φ_β = (1, x₁)`, `φ_γ = (1)`,
/// `ψ = (1, x₁, x₂)`, alternating treatment, so `p = q = 3`.
pub fn geweke_design<R: Rng>(n: usize, rng: &mut R) -> FeatureMaps {
    let mut phi_beta = Matrix::zeros(n, 2);
    let mut phi_gamma = Matrix::zeros(n, 1);
    let mut psi = Matrix::zeros(n, 3);
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let (x1, x2) = (normal(rng), normal(rng));
        phi_beta.row_mut(i).copy_from_slice(&[1.0, x1]);
        phi_gamma.row_mut(i)[0] = 1.0;
        psi.row_mut(i).copy_from_slice(&[1.0, x1, x2]);
        z.push((i % 2) as f64);
    }
    FeatureMaps::from_parts(phi_beta, phi_gamma, psi, &z).unwrap()
}

pub struct GewekeComparison {
    pub name: String,
    pub marginal: (f64, f64),
    pub successive: (f64, f64),
}

impl GewekeComparison {
    pub fn z_score(&self) -> f64 {
        (self.marginal.0 - self.successive.0) / (self.marginal.1.powi(2) + self.successive.1.powi(2)).sqrt()
    }
}

/// Marginal-conditional versus successive-conditional simulation with
/// `samples` draws each.
///
/// The successive side runs `chains` independent chains of
/// `samples / chains` sweeps, each started from an exact prior draw. Since a
/// correct sampler preserves the joint prior, every state is then marginally
/// exact, and the per-chain means are iid, so the standard error stays honest
/// even where a single long chain would stall (large |β| draws produce
/// extreme outcomes that pin β for a very long time).
pub fn run_geweke<R: Rng>(
    n: usize,
    sticks: usize,
    priors: &Priors,
    samples: usize,
    chains: usize,
    rng: &mut R,
) -> Vec<GewekeComparison> {
    use clsbp::lsbp::{gibbs_step, SweepPlan};
    let maps = geweke_design(n, rng);

    let mut marginal: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for s in 0..samples {
        let (state, y) = sample_prior_state(&maps, sticks, priors, rng);
        let f = geweke_functions(&state, &y);
        if s == 0 {
            names = f.iter().map(|(k, _)| k.clone()).collect();
            marginal = vec![Vec::with_capacity(samples); f.len()];
        }
        for (k, (_, v)) in f.into_iter().enumerate() {
            marginal[k].push(v);
        }
    }

    let steps = samples / chains;
    let mut chain_means: Vec<Vec<f64>> = vec![Vec::with_capacity(chains); names.len()];
    for _ in 0..chains {
        let (mut state, y) = sample_prior_state(&maps, sticks, priors, rng);
        let mut data = ModelData::new(y, maps.clone()).unwrap();
        let mut sums = vec![0.0; names.len()];
        for _ in 0..steps {
            gibbs_step(&mut state, &data, priors, SweepPlan::full(), rng).expect("sweep");
            resample_outcomes(&state, &mut data, rng);
            for (k, (_, v)) in geweke_functions(&state, &data.y).into_iter().enumerate() {
                sums[k] += v;
            }
        }
        for (k, s) in sums.into_iter().enumerate() {
            chain_means[k].push(s / steps as f64);
        }
    }

    names
        .into_iter()
        .enumerate()
        .map(|(k, name)| GewekeComparison {
            name,
            marginal: mean_se(&marginal[k]),
            successive: mean_se(&chain_means[k]),
        })
        .collect()
}

/// A Monte Carlo estimate set against its exact value.
pub struct MomentCheck {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
}

impl MomentCheck {
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.target) / self.se
    }
}

/// Single-component fit against the closed-form normal–inverse-gamma
/// posterior. Shrinkage is held at one so that `Λ_β = I`, which makes the
/// conditional atom draws exact posterior draws.
pub fn conjugate_check<R: Rng>(n: usize, draws: usize, rng: &mut R) -> Vec<MomentCheck> {
    use clsbp::lsbp::{run_gibbs_from, SweepPlan};
    use clsbp::SamplerConfig;

    let mut phi_beta = Matrix::zeros(n, 2);
    let mut phi_gamma = Matrix::zeros(n, 1);
    let mut psi = Matrix::zeros(n, 1);
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let x = normal(rng);
        let zi = (i % 2) as f64;
        phi_beta.row_mut(i).copy_from_slice(&[1.0, x]);
        phi_gamma.row_mut(i)[0] = 1.0;
        psi.row_mut(i)[0] = 1.0;
        z.push(zi);
        y.push(1.0 + 0.5 * x + 0.8 * zi + 0.5 * normal(rng));
    }
    let maps = FeatureMaps::from_parts(phi_beta, phi_gamma, psi, &z).unwrap();
    let data = ModelData::new(y.clone(), maps).unwrap();
    let cfg = SamplerConfig { sticks: 0, burn_in: 10, keep: draws, ..SamplerConfig::default() };
    let priors = Priors::from(&cfg);
    let state = ChainState::initial(&data, 0, &priors, rng);
    let plan = SweepPlan { memberships: false, weights: false, shrinkage: false, atoms: true };
    let post = run_gibbs_from(&data, &cfg, state, plan, rng).unwrap();

    // Λₙ = I + ΦᵀΦ, mₙ = Λₙ⁻¹Φᵀy, σ² ~ IG(aₙ, bₙ)
    let p = data.p();
    let mut lam = Matrix::identity(p);
    let mut rhs = vec![0.0; p];
    for i in 0..n {
        let phi = data.maps.phi_full.row(i);
        for j in 0..p {
            rhs[j] += phi[j] * y[i];
            for k in 0..p {
                lam[(j, k)] += phi[j] * phi[k];
            }
        }
    }
    let inv = dense_inverse(&lam);
    let m = inv.matvec(&rhs);
    let a_n = 0.5 * (cfg.nu0 + n as f64);
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let b_n = 0.5 * (cfg.nu0 * cfg.s0_sq + yy - clsbp::linalg::dot(&m, &rhs));
    let sigma_mean = b_n / (a_n - 1.0);
    let sigma_var = b_n * b_n / ((a_n - 1.0).powi(2) * (a_n - 2.0));

    let mut out = Vec::new();
    let mut check = |name: String, values: Vec<f64>, target: f64| {
        let (estimate, se) = mean_se(&values);
        out.push(MomentCheck { name, estimate, se, target });
    };
    for j in 0..p {
        let b: Vec<f64> = post.states.iter().map(|s| s.atoms.beta[(0, j)]).collect();
        check(format!("E beta[{j}]"), b.clone(), m[j]);
        let sq = b.iter().map(|v| (v - m[j]).powi(2)).collect();
        check(format!("Var beta[{j}]"), sq, sigma_mean * inv[(j, j)]);
    }
    let s: Vec<f64> = post.states.iter().map(|s| s.atoms.sigma_sq[0]).collect();
    check("E sigma^2".into(), s.clone(), sigma_mean);
    check("Var sigma^2".into(), s.iter().map(|v| (v - sigma_mean).powi(2)).collect(), sigma_var);
    out
}
