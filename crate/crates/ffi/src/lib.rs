//! C interface to the clsbp sampler.
//!
//! Objects cross the boundary as opaque pointers created by `*_new`, `clsbp_fit`
//! or `clsbp_simulate` and released with the matching `*_free`. Every fallible
//! call returns a [`ClsbpStatus`]; on failure the message is available from
//! [`clsbp_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clsbp::distributions::seeded_rng;
use clsbp::estimands::{self, MixtureDraw, Profile};
use clsbp::linalg::Matrix;
use clsbp::simharness::Scenario;
use clsbp::{Error, ErrorClass, Fit, ObservationSet, SamplerConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClsbpStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Numerical = 3,
    Io = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Posterior mean and equal-tailed credible bounds.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClsbpSummary {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl From<estimands::EffectSummary> for ClsbpSummary {
    fn from(s: estimands::EffectSummary) -> Self {
        Self {
            point: s.point,
            lower: s.lower,
            upper: s.upper,
            level: s.level,
        }
    }
}

/// Outcomes, treatments, covariates and optional propensity scores.
pub struct ClsbpObservations {
    inner: ObservationSet,
    /// True effects when the set came from `clsbp_simulate`.
    tau_true: Option<Vec<f64>>,
}

/// Sampler settings.
pub struct ClsbpConfig {
    inner: SamplerConfig,
}

/// A finished fit with its retained draws.
pub struct ClsbpPosterior {
    inner: Fit,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(e: Error) -> ClsbpStatus {
    set_error(format!("{}: {e}", e.name()));
    match e.class() {
        ErrorClass::Validation => ClsbpStatus::Validation,
        ErrorClass::Numerical => ClsbpStatus::Numerical,
        ErrorClass::Io => ClsbpStatus::Io,
    }
}

fn null(what: &str) -> ClsbpStatus {
    set_error(format!("null pointer: {what}"));
    ClsbpStatus::NullPointer
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), ClsbpStatus>) -> ClsbpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClsbpStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            ClsbpStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], ClsbpStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], ClsbpStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, ClsbpStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the buffer size needed for the full message.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn clsbp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// New configuration with default settings.
#[no_mangle]
pub extern "C" fn clsbp_config_new() -> *mut ClsbpConfig {
    Box::into_raw(Box::new(ClsbpConfig {
        inner: SamplerConfig::default(),
    }))
}

/// # Safety
/// `cfg` must be null or a pointer from `clsbp_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn clsbp_config_free(cfg: *mut ClsbpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live pointer from `clsbp_config_new`.
#[no_mangle]
pub unsafe extern "C" fn clsbp_config_set_sticks(cfg: *mut ClsbpConfig, sticks: usize) -> ClsbpStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.inner.sticks = sticks;
            ClsbpStatus::Ok
        }
        None => null("config"),
    }
}

/// Burn-in, retained draws and thinning interval.
///
/// # Safety
/// `cfg` must be a live pointer from `clsbp_config_new`.
#[no_mangle]
pub unsafe extern "C" fn clsbp_config_set_chain(
    cfg: *mut ClsbpConfig,
    burn_in: usize,
    keep: usize,
    thin: usize,
) -> ClsbpStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.inner.burn_in = burn_in;
            c.inner.keep = keep;
            c.inner.thin = thin;
            ClsbpStatus::Ok
        }
        None => null("config"),
    }
}

/// # Safety
/// `cfg` must be a live pointer from `clsbp_config_new`.
#[no_mangle]
pub unsafe extern "C" fn clsbp_config_set_seed(cfg: *mut ClsbpConfig, seed: u64) -> ClsbpStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.inner.seed = seed;
            ClsbpStatus::Ok
        }
        None => null("config"),
    }
}

/// Degrees of freedom and scale of the inverse-gamma prior on component variances.
///
/// # Safety
/// `cfg` must be a live pointer from `clsbp_config_new`.
#[no_mangle]
pub unsafe extern "C" fn clsbp_config_set_variance_prior(
    cfg: *mut ClsbpConfig,
    nu0: f64,
    s0_sq: f64,
) -> ClsbpStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.inner.nu0 = nu0;
            c.inner.s0_sq = s0_sq;
            ClsbpStatus::Ok
        }
        None => null("config"),
    }
}

/// Whether the propensity score enters the atom maps and/or the weight map.
///
/// # Safety
/// `cfg` must be a live pointer from `clsbp_config_new`.
#[no_mangle]
pub unsafe extern "C" fn clsbp_config_set_pscore(
    cfg: *mut ClsbpConfig,
    in_atoms: bool,
    in_weights: bool,
) -> ClsbpStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.inner.include_pscore_in_atoms = in_atoms;
            c.inner.include_pscore_in_weights = in_weights;
            ClsbpStatus::Ok
        }
        None => null("config"),
    }
}

/// # Safety
/// `cfg` must be a live pointer from `clsbp_config_new`.
#[no_mangle]
pub unsafe extern "C" fn clsbp_config_set_standardize(cfg: *mut ClsbpConfig, standardize: bool) -> ClsbpStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.inner.standardize = standardize;
            ClsbpStatus::Ok
        }
        None => null("config"),
    }
}

/// Copies `n` subjects into a new observation set. `x` is `n × d` row-major;
/// `pihat` may be null.
///
/// # Safety
/// `y`, `z` must hold `n` values, `x` must hold `n * d`, `pihat` must be null
/// or hold `n`, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clsbp_observations_new(
    y: *const f64,
    z: *const f64,
    x: *const f64,
    n: usize,
    d: usize,
    pihat: *const f64,
    out: *mut *mut ClsbpObservations,
) -> ClsbpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let y = slice(y, n, "y")?.to_vec();
        let z = slice(z, n, "z")?.to_vec();
        let x = slice(x, n * d, "x")?.to_vec();
        let pi = if pihat.is_null() { None } else { Some(slice(pihat, n, "pihat")?.to_vec()) };
        let x = Matrix::from_row_major(n, d, x).map_err(fail)?;
        let inner = ObservationSet::new(y, z, x, pi).map_err(fail)?;
        *out = Box::into_raw(Box::new(ClsbpObservations { inner, tau_true: None }));
        Ok(())
    })
}

/// # Safety
/// `obs` must be null or a live observation pointer.
#[no_mangle]
pub unsafe extern "C" fn clsbp_observations_free(obs: *mut ClsbpObservations) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Number of subjects and covariates.
///
/// # Safety
/// `obs` must be a live observation pointer; `n` and `d` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn clsbp_observations_dims(
    obs: *const ClsbpObservations,
    n: *mut usize,
    d: *mut usize,
) -> ClsbpStatus {
    let Some(o) = obs.as_ref() else {
        return null("observations");
    };
    if !n.is_null() {
        *n = o.inner.n();
    }
    if !d.is_null() {
        *d = o.inner.d();
    }
    ClsbpStatus::Ok
}

/// Copies the true per-subject effects of a simulated set into `buf` (length `n`).
///
/// # Safety
/// `obs` must be a live observation pointer; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn clsbp_observations_true_effects(
    obs: *const ClsbpObservations,
    buf: *mut f64,
    len: usize,
) -> ClsbpStatus {
    guard(|| {
        let o = reference(obs, "observations")?;
        let Some(tau) = &o.tau_true else {
            set_error("observation set carries no true effects".into());
            return Err(ClsbpStatus::Validation);
        };
        if len < tau.len() {
            set_error(format!("buffer holds {len} values, {} needed", tau.len()));
            return Err(ClsbpStatus::BufferTooSmall);
        }
        slice_mut(buf, len, "buf")?[..tau.len()].copy_from_slice(tau);
        Ok(())
    })
}

/// Simulates one data set, e.g. `"sim1:t=0:n=500"` or `"sim2:linear:homogeneous"`.
///
/// # Safety
/// `scenario` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn clsbp_simulate(
    scenario: *const c_char,
    seed: u64,
    out: *mut *mut ClsbpObservations,
) -> ClsbpStatus {
    guard(|| {
        if scenario.is_null() {
            return Err(null("scenario"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(scenario)
            .to_str()
            .map_err(|_| fail(Error::Parse("scenario is not UTF-8".into())))?;
        let sc: Scenario = text.parse().map_err(fail)?;
        let sim = sc.generate(&mut seeded_rng(seed)).map_err(fail)?;
        *out = Box::into_raw(Box::new(ClsbpObservations {
            inner: sim.obs,
            tau_true: Some(sim.tau_true),
        }));
        Ok(())
    })
}

/// Runs the sampler. With `fit_propensity` the propensity scores are
/// estimated by logistic regression first.
///
/// # Safety
/// `obs` and `cfg` must be live pointers and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn clsbp_fit(
    obs: *const ClsbpObservations,
    cfg: *const ClsbpConfig,
    fit_propensity: bool,
    out: *mut *mut ClsbpPosterior,
) -> ClsbpStatus {
    guard(|| {
        let o = reference(obs, "observations")?;
        let c = reference(cfg, "config")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = clsbp::fit_model(&o.inner, &c.inner, fit_propensity).map_err(fail)?;
        *out = Box::into_raw(Box::new(ClsbpPosterior { inner }));
        Ok(())
    })
}

/// # Safety
/// `post` must be null or a live posterior pointer.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_free(post: *mut ClsbpPosterior) {
    if !post.is_null() {
        drop(Box::from_raw(post));
    }
}

/// Number of retained draws and subjects.
///
/// # Safety
/// `post` must be a live posterior pointer; `keep` and `n` writable or null.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_dims(
    post: *const ClsbpPosterior,
    keep: *mut usize,
    n: *mut usize,
) -> ClsbpStatus {
    let Some(p) = post.as_ref() else {
        return null("posterior");
    };
    if !keep.is_null() {
        *keep = p.inner.draws.keep();
    }
    if !n.is_null() {
        *n = p.inner.draws.n_subjects();
    }
    ClsbpStatus::Ok
}

/// Copies the `keep × n` CATE draws, row-major, into `buf`.
///
/// # Safety
/// `post` must be a live posterior pointer; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_cate(post: *const ClsbpPosterior, buf: *mut f64, len: usize) -> ClsbpStatus {
    guard(|| {
        let p = reference(post, "posterior")?;
        let data = p.inner.draws.cate.as_slice();
        if len < data.len() {
            set_error(format!("buffer holds {len} values, {} needed", data.len()));
            return Err(ClsbpStatus::BufferTooSmall);
        }
        slice_mut(buf, len, "buf")?[..data.len()].copy_from_slice(data);
        Ok(())
    })
}

/// Average treatment effect over the fitted subjects.
///
/// # Safety
/// `post` must be a live posterior pointer and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_ate(
    post: *const ClsbpPosterior,
    level: f64,
    out: *mut ClsbpSummary,
) -> ClsbpStatus {
    guard(|| {
        let p = reference(post, "posterior")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = estimands::mate_summary(&p.inner.draws, level).map_err(fail)?.into();
        Ok(())
    })
}

/// Average CATE over the subjects listed in `members` (zero-based indices).
///
/// # Safety
/// `post` must be a live posterior pointer, `members` must hold `m` indices
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_subgroup(
    post: *const ClsbpPosterior,
    members: *const usize,
    m: usize,
    level: f64,
    out: *mut ClsbpSummary,
) -> ClsbpStatus {
    guard(|| {
        let p = reference(post, "posterior")?;
        let idx = slice(members, m, "members")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = estimands::subgroup_cate(&p.inner.draws, idx, level).map_err(fail)?.into();
        Ok(())
    })
}

unsafe fn profile(p: &ClsbpPosterior, x: *const f64, d: usize, pihat: f64) -> Result<Profile, ClsbpStatus> {
    let spec = p
        .inner
        .data
        .maps
        .spec
        .as_ref()
        .expect("fits from observations record their feature transform");
    let x = slice(x, d, "x")?;
    let pi = if pihat.is_nan() { None } else { Some(pihat) };
    Profile::new(spec, x, pi).map_err(fail)
}

/// Quantile treatment effects at covariate profile `x` (raw scale, length `d`)
/// for each of the `k` levels in `alphas`. Pass NaN for `pihat` when the
/// model does not use propensity scores.
///
/// # Safety
/// `post` must be a live posterior pointer, `x` must hold `d` doubles,
/// `alphas` `k` doubles and `out` room for `k` summaries.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_qte(
    post: *const ClsbpPosterior,
    x: *const f64,
    d: usize,
    pihat: f64,
    alphas: *const f64,
    k: usize,
    level: f64,
    out: *mut ClsbpSummary,
) -> ClsbpStatus {
    guard(|| {
        let p = reference(post, "posterior")?;
        let prof = profile(p, x, d, pihat)?;
        let alphas = slice(alphas, k, "alphas")?;
        let out = slice_mut(out, k, "out")?;
        let res = estimands::qte(&p.inner.draws.states, &prof, alphas, level).map_err(fail)?;
        for (o, r) in out.iter_mut().zip(res) {
            *o = r.into();
        }
        Ok(())
    })
}

/// Posterior mean predictive density of `y` at profile `x` under treatment
/// `z`, evaluated on the `g` points of `grid`.
///
/// # Safety
/// `post` must be a live posterior pointer, `x` must hold `d` doubles and
/// `grid` and `out` must each hold `g` doubles.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_predictive(
    post: *const ClsbpPosterior,
    x: *const f64,
    d: usize,
    pihat: f64,
    z: f64,
    grid: *const f64,
    g: usize,
    out: *mut f64,
) -> ClsbpStatus {
    guard(|| {
        let p = reference(post, "posterior")?;
        let prof = profile(p, x, d, pihat)?;
        let grid = slice(grid, g, "grid")?;
        let out = slice_mut(out, g, "out")?;
        let rows = prof.rows(z);
        let mean = if p.inner.draws.states.is_empty() {
            vec![0.0; g]
        } else {
            estimands::predictive_density(&p.inner.draws.states, rows, grid)
                .map_err(fail)?
                .mean_curve()
        };
        out.copy_from_slice(&mean);
        Ok(())
    })
}

/// Mixture CDF of draw `draw` at profile `x` under treatment `z`, at `y`.
/// Useful for checking quantiles from C.
///
/// # Safety
/// `post` must be a live posterior pointer, `x` must hold `d` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clsbp_posterior_draw_cdf(
    post: *const ClsbpPosterior,
    draw: usize,
    x: *const f64,
    d: usize,
    pihat: f64,
    z: f64,
    y: f64,
    out: *mut f64,
) -> ClsbpStatus {
    guard(|| {
        let p = reference(post, "posterior")?;
        let prof = profile(p, x, d, pihat)?;
        let Some(state) = p.inner.draws.states.get(draw) else {
            return Err(fail(Error::DimensionMismatch(format!("no draw {draw}"))));
        };
        if out.is_null() {
            return Err(null("out"));
        }
        *out = state.mixture_at(prof.rows(z)).cdf(y);
        Ok(())
    })
}
