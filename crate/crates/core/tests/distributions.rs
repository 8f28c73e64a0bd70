mod common;

use clsbp::distributions::{
    log_norm_cdf, norm_cdf, pg_density_truncated, sample_categorical, sample_inverse_gamma, sample_pg1, seeded_rng,
    substream, PolyaGammaParams,
};
use clsbp::estimands::trapezoid;
use common::{ks_pvalue, mean_se, pg_density_series, pg_gamma_series};
use proptest::prelude::*;

fn pg_variance(c: f64) -> f64 {
    if c.abs() < 1e-4 {
        return 1.0 / 24.0;
    }
    let sech = 1.0 / (0.5 * c).cosh();
    (c.sinh() - c) * sech * sech / (4.0 * c.powi(3))
}

fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[test]
fn pg_matches_gamma_series_in_distribution() {
    for (k, &c) in [0.0, 1.5, 4.0].iter().enumerate() {
        let mut rng = substream(31, k as u64);
        let mut exact: Vec<f64> = (0..20_000).map(|_| sample_pg1(c, &mut rng)).collect();
        let mut series: Vec<f64> = (0..20_000).map(|_| pg_gamma_series(c, 1000, &mut rng)).collect();
        let d = two_sample_ks(&mut exact, &mut series);
        let p = ks_pvalue(d, 10_000);
        assert!(p > 1e-3, "c={c}: KS distance {d}, p={p}");
    }
}

#[test]
fn pg_mean_and_variance() {
    let mut rng = seeded_rng(5);
    for c in [0.0, 0.5, 2.0, 5.0, -3.0, 12.0] {
        let draws: Vec<f64> = (0..40_000).map(|_| sample_pg1(c, &mut rng)).collect();
        let (m, se) = mean_se(&draws);
        let target = PolyaGammaParams::unit(c).mean();
        assert!((m - target).abs() < 4.0 * se, "c={c}: mean {m} vs {target} (se {se})");

        let sq: Vec<f64> = draws.iter().map(|x| (x - target).powi(2)).collect();
        let (v, vse) = mean_se(&sq);
        let vt = pg_variance(c);
        assert!((v - vt).abs() < 4.0 * vse, "c={c}: variance {v} vs {vt} (se {vse})");
    }
}

#[test]
fn pg_density_agrees_with_independent_series() {
    for c in [0.0, 0.7, 3.0] {
        for k in 1..200 {
            let x = 0.02 * k as f64;
            let a = pg_density_truncated(x, c, 100);
            let b = pg_density_series(x, c, 100);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "x={x} c={c}: {a} vs {b}");
        }
    }
}

#[test]
fn pg_density_integrates_to_one_and_tilts_exactly() {
    let grid: Vec<f64> = (1..=40_000).map(|k| k as f64 * 5e-4).collect();
    for c in [0.0, 1.0, 4.0] {
        let f: Vec<f64> = grid.iter().map(|&x| pg_density_truncated(x, c, 200)).collect();
        let total = trapezoid(&grid, &f);
        assert!((total - 1.0).abs() < 1e-4, "c={c}: {total}");
        let mean = trapezoid(&grid, &grid.iter().zip(&f).map(|(x, f)| x * f).collect::<Vec<_>>());
        assert!((mean - PolyaGammaParams::unit(c).mean()).abs() < 1e-4);
    }
    for &x in &[0.05, 0.3, 1.0, 2.5] {
        for &c in &[0.5, 2.0, 5.0] {
            let ratio = pg_density_truncated(x, c, 200) / pg_density_truncated(x, 0.0, 200);
            let expected = (0.5 * c).cosh() * (-0.5 * c * c * x).exp();
            assert!((ratio / expected - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn inverse_gamma_moments() {
    // IG(4, 3): mean 1, variance 0.5
    let mut rng = seeded_rng(2);
    let draws: Vec<f64> = (0..50_000).map(|_| sample_inverse_gamma(4.0, 3.0, &mut rng)).collect();
    assert!(draws.iter().all(|&x| x > 0.0));
    let (m, se) = mean_se(&draws);
    assert!((m - 1.0).abs() < 4.0 * se);
    let sq: Vec<f64> = draws.iter().map(|x| (x - 1.0).powi(2)).collect();
    let (v, vse) = mean_se(&sq);
    assert!((v - 0.5).abs() < 4.0 * vse, "{v} ± {vse}");
}

#[test]
fn categorical_frequencies() {
    let w = [0.5, 0.0, 1.5, 2.0];
    let mut rng = seeded_rng(8);
    let n = 40_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[sample_categorical(&w, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[1], 0);
    for (h, &c) in counts.iter().enumerate() {
        let p = w[h] / 4.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() <= 4.0 * se + 1e-12, "h={h}");
    }
}

#[test]
fn normal_cdf_reference_values() {
    // statrs erfc is good to about 1e-11 here
    assert!((norm_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-10);
    assert!((norm_cdf(-1.0) - 0.158_655_253_931_457).abs() < 1e-10);
    // Φ(−40) underflows an f64; its log does not (reference from scipy)
    assert!((log_norm_cdf(-40.0) - (-804.608_442_013_754)).abs() < 1e-6);
}

proptest! {
    #[test]
    fn pg_draws_are_positive(c in -60.0f64..60.0, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        for _ in 0..20 {
            let x = sample_pg1(c, &mut rng);
            prop_assert!(x > 0.0 && x.is_finite());
        }
    }

    #[test]
    fn pg_mean_is_even_and_decreasing(c in 0.0f64..40.0, dc in 0.01f64..5.0) {
        let m = |c: f64| PolyaGammaParams::unit(c).mean();
        prop_assert_eq!(m(c), m(-c));
        prop_assert!(m(c + dc) < m(c));
    }
}
