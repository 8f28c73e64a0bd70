use std::ffi::CString;
use std::path::Path;
use std::process::Command;
use std::ptr;

use clsbp_ffi::*;

fn last_error() -> String {
    unsafe {
        let needed = clsbp_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0u8; needed];
        clsbp_last_error_message(buf.as_mut_ptr().cast(), buf.len());
        let end = buf.iter().position(|&b| b == 0).unwrap_or(buf.len());
        String::from_utf8(buf[..end].to_vec()).unwrap()
    }
}

fn small_config(seed: u64) -> *mut ClsbpConfig {
    let cfg = clsbp_config_new();
    unsafe {
        assert_eq!(clsbp_config_set_sticks(cfg, 3), ClsbpStatus::Ok);
        assert_eq!(clsbp_config_set_chain(cfg, 100, 60, 1), ClsbpStatus::Ok);
        assert_eq!(clsbp_config_set_seed(cfg, seed), ClsbpStatus::Ok);
    }
    cfg
}

fn simulate(scenario: &str, seed: u64) -> *mut ClsbpObservations {
    let name = CString::new(scenario).unwrap();
    let mut obs = ptr::null_mut();
    let status = unsafe { clsbp_simulate(name.as_ptr(), seed, &mut obs) };
    assert_eq!(status, ClsbpStatus::Ok, "{}", last_error());
    obs
}

#[test]
fn simulate_fit_and_query() {
    let obs = simulate("sim2:linear:homogeneous:n=60", 4);
    let cfg = small_config(9);
    unsafe {
        let (mut n, mut d) = (0, 0);
        assert_eq!(clsbp_observations_dims(obs, &mut n, &mut d), ClsbpStatus::Ok);
        assert_eq!((n, d), (60, 5));
        let mut tau = vec![0.0; n];
        assert_eq!(clsbp_observations_true_effects(obs, tau.as_mut_ptr(), n), ClsbpStatus::Ok);
        assert!(tau.iter().all(|&t| t == 3.0));

        let mut post = ptr::null_mut();
        assert_eq!(clsbp_fit(obs, cfg, false, &mut post), ClsbpStatus::Ok, "{}", last_error());
        let (mut keep, mut m) = (0, 0);
        assert_eq!(clsbp_posterior_dims(post, &mut keep, &mut m), ClsbpStatus::Ok);
        assert_eq!((keep, m), (60, 60));

        let mut cate = vec![0.0; keep * m];
        assert_eq!(clsbp_posterior_cate(post, cate.as_mut_ptr(), cate.len()), ClsbpStatus::Ok);
        let mut ate = ClsbpSummary::default();
        assert_eq!(clsbp_posterior_ate(post, 0.9, &mut ate), ClsbpStatus::Ok);
        let mean = cate.iter().sum::<f64>() / cate.len() as f64;
        assert!((ate.point - mean).abs() < 1e-9);
        assert!(ate.lower <= ate.point && ate.point <= ate.upper);
        assert_eq!(ate.level, 0.9);

        let everyone: Vec<usize> = (0..m).collect();
        let mut sub = ClsbpSummary::default();
        assert_eq!(
            clsbp_posterior_subgroup(post, everyone.as_ptr(), m, 0.9, &mut sub),
            ClsbpStatus::Ok
        );
        assert!((sub.point - ate.point).abs() < 1e-9);

        let x = [0.0, 0.0, 0.0, 0.0, 2.0];
        let alphas = [0.25, 0.5, 0.75];
        let mut qte = [ClsbpSummary::default(); 3];
        let st = clsbp_posterior_qte(post, x.as_ptr(), 5, f64::NAN, alphas.as_ptr(), 3, 0.95, qte.as_mut_ptr());
        assert_eq!(st, ClsbpStatus::Ok, "{}", last_error());
        assert!(qte.iter().all(|s| s.point.is_finite() && s.lower <= s.upper));

        let grid: Vec<f64> = (0..801).map(|i| -20.0 + 0.05 * i as f64).collect();
        let mut dens = vec![0.0; grid.len()];
        let st = clsbp_posterior_predictive(post, x.as_ptr(), 5, f64::NAN, 1.0, grid.as_ptr(), grid.len(), dens.as_mut_ptr());
        assert_eq!(st, ClsbpStatus::Ok, "{}", last_error());
        let integral: f64 = dens.windows(2).map(|w| 0.025 * (w[0] + w[1])).sum();
        assert!((integral - 1.0).abs() < 1e-3, "{integral}");

        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(clsbp_posterior_draw_cdf(post, 0, x.as_ptr(), 5, f64::NAN, 0.0, -50.0, &mut lo), ClsbpStatus::Ok);
        assert_eq!(clsbp_posterior_draw_cdf(post, 0, x.as_ptr(), 5, f64::NAN, 0.0, 50.0, &mut hi), ClsbpStatus::Ok);
        assert!(lo < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert_eq!(
            clsbp_posterior_draw_cdf(post, keep, x.as_ptr(), 5, f64::NAN, 0.0, 0.0, &mut lo),
            ClsbpStatus::Validation
        );

        clsbp_posterior_free(post);
        clsbp_observations_free(obs);
        clsbp_config_free(cfg);
    }
}

#[test]
fn fits_are_reproducible() {
    let run = || {
        let obs = simulate("sim1:t=0:n=50", 2);
        let cfg = small_config(17);
        unsafe {
            let mut post = ptr::null_mut();
            assert_eq!(clsbp_fit(obs, cfg, true, &mut post), ClsbpStatus::Ok, "{}", last_error());
            let mut cate = vec![0.0; 60 * 50];
            assert_eq!(clsbp_posterior_cate(post, cate.as_mut_ptr(), cate.len()), ClsbpStatus::Ok);
            clsbp_posterior_free(post);
            clsbp_observations_free(obs);
            clsbp_config_free(cfg);
            cate
        }
    };
    assert_eq!(run(), run());
}

#[test]
fn caller_supplied_observations() {
    let y = [1.0, 2.0, 0.5, 1.5, 3.0, 2.5];
    let z = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
    let x = [0.1, -0.3, 0.4, 1.2, -0.8, 0.0];
    unsafe {
        let mut obs = ptr::null_mut();
        assert_eq!(
            clsbp_observations_new(y.as_ptr(), z.as_ptr(), x.as_ptr(), 6, 1, ptr::null(), &mut obs),
            ClsbpStatus::Ok
        );
        let mut tau = [0.0; 6];
        assert_eq!(clsbp_observations_true_effects(obs, tau.as_mut_ptr(), 6), ClsbpStatus::Validation);

        // propensity-score covariates requested but none supplied or fitted
        let cfg = small_config(1);
        clsbp_config_set_pscore(cfg, true, false);
        let mut post = ptr::null_mut();
        assert_eq!(clsbp_fit(obs, cfg, false, &mut post), ClsbpStatus::Validation);
        assert!(last_error().starts_with("MissingPropensity"), "{}", last_error());
        assert!(post.is_null());

        clsbp_config_free(cfg);
        clsbp_observations_free(obs);

        let bad_z = [0.0, 1.0, 0.5, 1.0, 0.0, 1.0];
        let mut obs = ptr::null_mut();
        assert_eq!(
            clsbp_observations_new(y.as_ptr(), bad_z.as_ptr(), x.as_ptr(), 6, 1, ptr::null(), &mut obs),
            ClsbpStatus::Validation
        );
        assert!(obs.is_null());
    }
}

#[test]
fn null_pointers_and_small_buffers() {
    unsafe {
        let mut obs = ptr::null_mut();
        assert_eq!(clsbp_simulate(ptr::null(), 1, &mut obs), ClsbpStatus::NullPointer);
        assert!(last_error().contains("scenario"));
        assert_eq!(clsbp_config_set_sticks(ptr::null_mut(), 2), ClsbpStatus::NullPointer);
        assert_eq!(clsbp_posterior_ate(ptr::null(), 0.95, ptr::null_mut()), ClsbpStatus::NullPointer);
        let y = [1.0, 2.0];
        assert_eq!(
            clsbp_observations_new(y.as_ptr(), ptr::null(), ptr::null(), 2, 0, ptr::null(), &mut obs),
            ClsbpStatus::NullPointer
        );

        // freeing null is a no-op
        clsbp_config_free(ptr::null_mut());
        clsbp_observations_free(ptr::null_mut());
        clsbp_posterior_free(ptr::null_mut());

        let bogus = CString::new("sim3:whatever").unwrap();
        assert_eq!(clsbp_simulate(bogus.as_ptr(), 1, &mut obs), ClsbpStatus::Validation);

        let obs = simulate("sim2:nonlinear:heterogeneous:n=20", 3);
        let mut tau = [0.0; 10];
        assert_eq!(clsbp_observations_true_effects(obs, tau.as_mut_ptr(), 10), ClsbpStatus::BufferTooSmall);
        assert!(last_error().contains("20"));
        clsbp_observations_free(obs);
    }
}

#[test]
fn invalid_config_is_rejected_at_fit() {
    let obs = simulate("sim2:linear:homogeneous:n=30", 5);
    let cfg = small_config(3);
    unsafe {
        clsbp_config_set_chain(cfg, 10, 0, 1);
        let mut post = ptr::null_mut();
        assert_eq!(clsbp_fit(obs, cfg, false, &mut post), ClsbpStatus::Validation);
        clsbp_config_set_chain(cfg, 10, 5, 1);
        clsbp_config_set_variance_prior(cfg, -1.0, 0.2);
        assert_eq!(clsbp_fit(obs, cfg, false, &mut post), ClsbpStatus::Validation);
        assert!(last_error().contains("nu0"));
        clsbp_config_free(cfg);
        clsbp_observations_free(obs);
    }
}

#[test]
fn error_message_truncates_and_terminates() {
    unsafe {
        clsbp_config_set_seed(ptr::null_mut(), 0);
        let full = last_error();
        let mut buf = [0x7fu8; 5];
        let needed = clsbp_last_error_message(buf.as_mut_ptr().cast(), buf.len());
        assert_eq!(needed, full.len() + 1);
        assert_eq!(&buf[..4], &full.as_bytes()[..4]);
        assert_eq!(buf[4], 0);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/clsbp.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["clsbp_fit", "clsbp_simulate", "clsbp_posterior_qte", "CLSBP_STATUS_BUFFER_TOO_SMALL"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c"]).arg(&header).output()
    else {
        eprintln!("no C compiler, skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
