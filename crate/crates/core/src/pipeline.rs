//! Observation set in, posterior draws out.

use rand::Rng;

use crate::config::SamplerConfig;
use crate::data::ObservationSet;
use crate::distributions::seeded_rng;
use crate::error::Result;
use crate::features::build_feature_maps;
use crate::lsbp::{run_gibbs, ModelData, PosteriorDraws};
use crate::propensity::{fit_logistic, predict_propensity, LogisticModel};

const PROPENSITY_MAX_ITER: usize = 100;
const PROPENSITY_TOL: f64 = 1e-8;

/// A finished fit together with the data it was run on.
#[derive(Debug, Clone)]
pub struct Fit {
    /// Input data, with `pi_hat` filled in when the propensity was fitted here.
    pub obs: ObservationSet,
    pub propensity: Option<LogisticModel>,
    pub data: ModelData,
    pub draws: PosteriorDraws,
}

/// Fits the logistic propensity model and stores its predictions as `pi_hat`.
pub fn attach_propensity(obs: &ObservationSet) -> Result<(ObservationSet, LogisticModel)> {
    let model = fit_logistic(&obs.x, &obs.z, PROPENSITY_MAX_ITER, PROPENSITY_TOL)?;
    let mut out = obs.clone();
    out.pi_hat = Some(predict_propensity(&model, &obs.x));
    Ok((out, model))
}

/// Runs the whole chain with a generator seeded from `cfg.seed`.
pub fn fit_model(obs: &ObservationSet, cfg: &SamplerConfig, fit_propensity: bool) -> Result<Fit> {
    fit_model_with_rng(obs, cfg, fit_propensity, &mut seeded_rng(cfg.seed))
}

pub fn fit_model_with_rng<R: Rng + ?Sized>(
    obs: &ObservationSet,
    cfg: &SamplerConfig,
    fit_propensity: bool,
    rng: &mut R,
) -> Result<Fit> {
    cfg.validate()?;
    let (obs, propensity) = if fit_propensity {
        let (o, m) = attach_propensity(obs)?;
        (o, Some(m))
    } else {
        (obs.clone(), None)
    };
    let maps = build_feature_maps(&obs, cfg)?;
    let data = ModelData::new(obs.y.clone(), maps)?;
    let draws = run_gibbs(&data, cfg, rng)?;
    Ok(Fit {
        obs,
        propensity,
        data,
        draws,
    })
}
