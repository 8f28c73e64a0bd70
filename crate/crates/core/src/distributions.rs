//! Random variate generation used by the Gibbs sampler.
//!
//! The centerpiece is an exact PG(1, c) sampler: the alternating-series
//! accept/reject scheme of Devroye as adapted to Pólya-Gamma variates by
//! Polson, Scott and Windle. Proposals come from a mixture of a truncated
//! inverse Gaussian (left of `TRUNC`) and a shifted exponential (right of it).

use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Random stream used for every chain. Streams are reproducible from a seed
/// and can be split into independent substreams.
pub type ChainRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ChainRng {
    ChainRng::seed_from_u64(seed)
}

/// Independent substream `stream` of the generator seeded by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const PI_SQ: f64 = PI * PI;
const TRUNC: f64 = 0.64;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln Φ(x)`, accurate far into the left tail.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        // Mills-ratio asymptotic expansion
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - LN_SQRT_2PI + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Parameters of a PG(b, c) law. Only `b = 1` is ever sampled here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyaGammaParams {
    pub b: f64,
    pub c: f64,
}

impl PolyaGammaParams {
    pub fn unit(c: f64) -> Self {
        Self { b: 1.0, c }
    }

    /// `E[PG(1, c)] = tanh(c/2) / (2c)`, with limit 1/4 at zero.
    pub fn mean(&self) -> f64 {
        let c = self.c.abs();
        if c < 1e-6 {
            0.25 - c * c / 48.0
        } else {
            (0.5 * c).tanh() / (2.0 * c)
        }
    }
}

/// Exact draw from PG(1, c). Depends on `c` only through `|c|`.
pub fn sample_pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    debug_assert!(c.is_finite());
    let z = 0.5 * c.abs();
    let k = PI_SQ / 8.0 + 0.5 * z * z;

    // relative mass of the exponential (right) piece of the proposal
    let log_right = (PI / (2.0 * k)).ln() - k * TRUNC;
    let log_left = LN_2 - z + log_inverse_gaussian_cdf(TRUNC, z);
    let p_right = 1.0 / (1.0 + (log_left - log_right).exp());

    loop {
        let x = if rng.random::<f64>() < p_right {
            let e: f64 = Exp1.sample(rng);
            TRUNC + e / k
        } else {
            truncated_inverse_gaussian(z, rng)
        };

        let mut s = series_coefficient(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0usize;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coefficient(n, x);
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += series_coefficient(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

/// Piecewise coefficient `a_n(x)` of the Jacobi density J*(1).
fn series_coefficient(n: usize, x: f64) -> f64 {
    let k = n as f64 + 0.5;
    if x <= TRUNC {
        let r = 2.0 / (PI * x);
        PI * k * r * r.sqrt() * (-2.0 * k * k / x).exp()
    } else {
        PI * k * (-0.5 * k * k * PI_SQ * x).exp()
    }
}

/// `ln P(X < t)` for `X ~ IG(mean = 1/z, shape = 1)`.
fn log_inverse_gaussian_cdf(t: f64, z: f64) -> f64 {
    let st = t.sqrt();
    let a = log_norm_cdf((t * z - 1.0) / st);
    let b = 2.0 * z + log_norm_cdf(-(t * z + 1.0) / st);
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Inverse Gaussian with mean `1/z` and shape 1, truncated to `(0, TRUNC)`.
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    if z < 1.0 / TRUNC {
        // mean beyond the truncation point: 1/chi-square proposal + tilt rejection
        loop {
            let e1 = loop {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                if e1 * e1 <= 2.0 * e2 / TRUNC {
                    break e1;
                }
            };
            let d = 1.0 + e1 * TRUNC;
            let x = TRUNC / (d * d);
            if rng.random::<f64>() <= (-0.5 * z * z * x).exp() {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let v: f64 = rng.sample(StandardNormal);
            let y = v * v;
            let muy = mu * y;
            let mut x = mu + 0.5 * mu * muy - 0.5 * mu * (4.0 * muy + muy * muy).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < TRUNC {
                return x;
            }
        }
    }
}

/// Partial sum of the alternating-series PG(1, c) density with `n_terms` terms,
/// including the `cosh(c/2)` tilt prefactor.
pub fn pg_density_truncated(x: f64, c: f64, n_terms: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let norm = (2.0 * PI * x * x * x).sqrt();
    let tilt = -0.5 * c * c * x;
    let mut sum = 0.0;
    for n in 1..=n_terms {
        let m = (2 * n - 1) as f64;
        let term = m / norm * (-(m * m) / (8.0 * x) + tilt).exp();
        if n % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    (0.5 * c).cosh() * sum
}

/// Draw with density proportional to `x^(-shape-1) exp(-scale/x)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && scale > 0.0, "IG({shape}, {scale})");
    let g: f64 = Gamma::new(shape, 1.0)
        .expect("inverse-gamma shape must be positive")
        .sample(rng);
    scale / g
}

/// Gamma draw with the given shape and rate.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0)
        .expect("gamma shape must be positive")
        .sample(rng);
    g / rate
}

/// Index `h` with probability `weights[h] / sum(weights)`.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (h, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = h;
        }
        acc += w;
        if target < acc {
            return Ok(h);
        }
    }
    Ok(last_positive)
}
