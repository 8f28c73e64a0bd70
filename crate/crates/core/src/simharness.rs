//! Simulation studies: the two data-generating processes, replication
//! orchestration and RMSE / coverage / interval-length metrics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SamplerConfig;
use crate::data::ObservationSet;
use crate::distributions::{norm_cdf, substream};
use crate::error::{Error, Result};
use crate::estimands::{cate_summaries, mate_summary, EffectSummary};
use crate::linalg::Matrix;
use crate::pipeline::fit_model_with_rng;

/// One simulated data set with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub obs: ObservationSet,
    pub pi_true: Vec<f64>,
    pub mu_true: Vec<f64>,
    pub tau_true: Vec<f64>,
    /// Sample average of `tau_true`.
    pub sate_true: f64,
}

impl SimulatedDataset {
    /// Writes `y, z, x1.., pitrue, mutrue, tautrue`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string(), "z".to_string()];
        header.extend(self.obs.x_names.iter().cloned());
        header.extend(["pitrue", "mutrue", "tautrue"].map(String::from));
        w.write_record(&header)?;
        for i in 0..self.obs.n() {
            let mut rec = vec![self.obs.y[i].to_string(), self.obs.z[i].to_string()];
            rec.extend(self.obs.x.row(i).iter().map(|v| v.to_string()));
            rec.push(self.pi_true[i].to_string());
            rec.push(self.mu_true[i].to_string());
            rec.push(self.tau_true[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn assemble<R: Rng + ?Sized>(
    x: Matrix,
    pi_true: Vec<f64>,
    mu_true: Vec<f64>,
    tau_true: Vec<f64>,
    noise_sd: f64,
    rng: &mut R,
) -> Result<SimulatedDataset> {
    let n = pi_true.len();
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let zi = if Bernoulli::new(pi_true[i]).expect("probability in [0, 1]").sample(rng) {
            1.0
        } else {
            0.0
        };
        z.push(zi);
        y.push(mu_true[i] + tau_true[i] * zi + noise_sd * normal(rng));
    }
    let sate_true = tau_true.iter().sum::<f64>() / n as f64;
    Ok(SimulatedDataset {
        obs: ObservationSet::new(y, z, x, None)?,
        pi_true,
        mu_true,
        tau_true,
        sate_true,
    })
}

/// Kang–Schafer-style design with targeted selection of strength `t`.
///
/// Latent `W ~ N(0, I₄)` drive the truth; the analyst sees four nonlinear
/// transforms of `W`.
pub fn dgp_sim1<R: Rng + ?Sized>(n: usize, t: i32, rng: &mut R) -> Result<SimulatedDataset> {
    if n == 0 {
        return Err(Error::EmptyData { what: "simulated sample".into() });
    }
    if !(-2..=2).contains(&t) {
        return Err(Error::InvalidConfig(format!("selection strength t={t} outside [-2, 2]")));
    }
    let mut x = Matrix::zeros(n, 4);
    let mut pi_true = Vec::with_capacity(n);
    let mut mu_true = Vec::with_capacity(n);
    let mut tau_true = Vec::with_capacity(n);
    for i in 0..n {
        let w: [f64; 4] = std::array::from_fn(|_| normal(rng));
        let mu = 10.0 + 4.0 * w[0] + 2.0 * w[1] + 2.0 * w[2] + 2.0 * w[3];
        let tau = 1.0 - w[1] + 2.0 * w[3];
        let index = -w[0] + 0.5 * w[1] - 0.25 * w[2] - 0.1 * w[3]
            + 37.0 / 280.0 * f64::from(t + 1) * (mu - 10.0);
        pi_true.push(norm_cdf(index));
        mu_true.push(mu);
        tau_true.push(tau);
        let row = x.row_mut(i);
        row[0] = (w[0] / 2.0).exp();
        row[1] = w[1] / (1.0 + w[0].exp()) + 10.0;
        row[2] = (w[0] * w[2] / 25.0 + 0.6).powi(3);
        row[3] = (w[1] + w[3] + 20.0).powi(2);
    }
    assemble(x, pi_true, mu_true, tau_true, 1.0, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuType {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauType {
    Homogeneous,
    Heterogeneous,
}

/// Five covariates with linear or nonlinear prognostic effects and
/// homogeneous or heterogeneous treatment effects; selection depends on `μ`.
pub fn dgp_sim2<R: Rng + ?Sized>(
    n: usize,
    mu_type: MuType,
    tau_type: TauType,
    rng: &mut R,
) -> Result<SimulatedDataset> {
    if n == 0 {
        return Err(Error::EmptyData { what: "simulated sample".into() });
    }
    let mut x = Matrix::zeros(n, 5);
    let mut mu_true = Vec::with_capacity(n);
    let mut tau_true = Vec::with_capacity(n);
    for i in 0..n {
        let (x1, x2, x3) = (normal(rng), normal(rng), normal(rng));
        let x4 = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let x5 = rng.random_range(1..=3u8);
        let g = match x5 {
            1 => 2.0,
            2 => -1.0,
            _ => -4.0,
        };
        mu_true.push(match mu_type {
            MuType::Linear => 1.0 + g + x1 * x3,
            MuType::Nonlinear => -6.0 + g + 6.0 * (x3 - 1.0).abs(),
        });
        tau_true.push(match tau_type {
            TauType::Homogeneous => 3.0,
            TauType::Heterogeneous => 1.0 + 2.0 * x2 * x4,
        });
        x.row_mut(i).copy_from_slice(&[x1, x2, x3, x4, f64::from(x5)]);
    }
    let mean = mu_true.iter().sum::<f64>() / n as f64;
    let s = if n > 1 {
        (mu_true.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        1.0
    };
    let pi_true = (0..n)
        .map(|i| {
            let u: f64 = rng.random();
            0.8 * norm_cdf(3.0 * mu_true[i] / s - 0.5 * x[(i, 0)]) + 0.05 + u / 10.0
        })
        .collect();
    assemble(x, pi_true, mu_true, tau_true, 0.5, rng)
}

/// A data-generating process with its sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    Sim1 { t: i32, n: usize },
    Sim2 { mu: MuType, tau: TauType, n: usize },
}

impl Scenario {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SimulatedDataset> {
        match *self {
            Scenario::Sim1 { t, n } => dgp_sim1(n, t, rng),
            Scenario::Sim2 { mu, tau, n } => dgp_sim2(n, mu, tau, rng),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Sim1 { t, n } => write!(f, "sim1:t={t}:n={n}"),
            Scenario::Sim2 { mu, tau, n } => {
                let mu = match mu {
                    MuType::Linear => "linear",
                    MuType::Nonlinear => "nonlinear",
                };
                let tau = match tau {
                    TauType::Homogeneous => "homogeneous",
                    TauType::Heterogeneous => "heterogeneous",
                };
                write!(f, "sim2:{mu}:{tau}:n={n}")
            }
        }
    }
}

/// Parses `sim1:t=0[:n=500]` or `sim2:linear:homogeneous[:n=250]`.
impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognized scenario '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        let size = |part: Option<&&str>, default: usize| -> Result<usize> {
            match part {
                None => Ok(default),
                Some(p) => p
                    .strip_prefix("n=")
                    .and_then(|v| v.parse().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(bad),
            }
        };
        match parts.first() {
            Some(&"sim1") if parts.len() <= 3 => {
                let t = parts
                    .get(1)
                    .and_then(|p| p.strip_prefix("t="))
                    .and_then(|v| v.parse::<i32>().ok())
                    .filter(|t| (-2..=2).contains(t))
                    .ok_or_else(bad)?;
                Ok(Scenario::Sim1 { t, n: size(parts.get(2), 500)? })
            }
            Some(&"sim2") if (3..=4).contains(&parts.len()) => {
                let mu = match parts[1] {
                    "linear" => MuType::Linear,
                    "nonlinear" => MuType::Nonlinear,
                    _ => return Err(bad()),
                };
                let tau = match parts[2] {
                    "homogeneous" => TauType::Homogeneous,
                    "heterogeneous" => TauType::Heterogeneous,
                    _ => return Err(bad()),
                };
                Ok(Scenario::Sim2 { mu, tau, n: size(parts.get(3), 250)? })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimand {
    #[serde(rename = "ATE")]
    Ate,
    #[serde(rename = "CATE")]
    Cate,
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimand::Ate => "ATE",
            Estimand::Cate => "CATE",
        })
    }
}

/// RMSE, coverage and mean interval length of one estimand in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub method: String,
    pub pscore: String,
    pub estimand: Estimand,
    pub rmse: f64,
    pub cov: f64,
    pub len: f64,
    pub replications: usize,
}

/// Error, coverage and length accumulated over (estimate, truth) pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Score {
    pub rmse: f64,
    pub coverage: f64,
    pub length: f64,
    pub count: usize,
}

/// Scores intervals against truths; pairs are pooled with equal weight.
pub fn score(estimates: &[EffectSummary], truths: &[f64]) -> Result<Score> {
    if estimates.len() != truths.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimates for {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::EmptyData { what: "scored estimates".into() });
    }
    let m = estimates.len() as f64;
    let mut sq = 0.0;
    let mut hits = 0usize;
    let mut len = 0.0;
    for (e, &t) in estimates.iter().zip(truths) {
        sq += (e.point - t).powi(2);
        if e.lower <= t && t <= e.upper {
            hits += 1;
        }
        len += e.upper - e.lower;
    }
    Ok(Score {
        rmse: (sq / m).sqrt(),
        coverage: hits as f64 / m,
        length: len / m,
        count: estimates.len(),
    })
}

/// Root mean squared error of the estimated subgroup-minus-overall
/// differential against the true differential, over replications.
pub fn drmse(
    subgroup_estimates: &[f64],
    overall_estimates: &[f64],
    subgroup_truths: &[f64],
    overall_truths: &[f64],
) -> Result<f64> {
    let r = subgroup_estimates.len();
    if overall_estimates.len() != r || subgroup_truths.len() != r || overall_truths.len() != r {
        return Err(Error::DimensionMismatch("replication vectors differ in length".into()));
    }
    if r == 0 {
        return Err(Error::EmptyData { what: "replications".into() });
    }
    let ss: f64 = (0..r)
        .map(|k| {
            let est = subgroup_estimates[k] - overall_estimates[k];
            let truth = subgroup_truths[k] - overall_truths[k];
            (est - truth).powi(2)
        })
        .sum();
    Ok((ss / r as f64).sqrt())
}

/// Summaries and truths from one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutcome {
    pub ate: EffectSummary,
    pub sate_true: f64,
    pub cate: Vec<EffectSummary>,
    pub tau_true: Vec<f64>,
}

/// Generates replication `rep` on its own substream and fits it.
pub fn run_one(
    scenario: &Scenario,
    rep: usize,
    cfg: &SamplerConfig,
    level: f64,
) -> Result<ReplicationOutcome> {
    let mut rng = substream(cfg.seed, rep as u64);
    let sim = scenario.generate(&mut rng)?;
    let fit = fit_model_with_rng(&sim.obs, cfg, cfg.uses_pscore(), &mut rng)?;
    Ok(ReplicationOutcome {
        ate: mate_summary(&fit.draws, level)?,
        sate_true: sim.sate_true,
        cate: cate_summaries(&fit.draws, level)?,
        tau_true: sim.tau_true,
    })
}

/// Metrics of a scenario plus any replications that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub rows: Vec<MetricsRow>,
    /// `(replication index, error name, message)` of each failure.
    pub failures: Vec<(usize, String, String)>,
}

/// Runs `reps` replications on a pool of `jobs` threads and scores them.
///
/// Replication `r` draws everything from substream `r` of `cfg.seed`, so the
/// report does not depend on `jobs`. When the config uses propensity scores
/// they are fitted by logistic regression inside each replication.
pub fn run_replications(
    scenario: &Scenario,
    reps: usize,
    cfg: &SamplerConfig,
    level: f64,
    jobs: usize,
) -> Result<ReplicationReport> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<ReplicationOutcome>> = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| run_one(scenario, r, cfg, level))
            .collect()
    });

    let mut ate = Vec::new();
    let mut sate = Vec::new();
    let mut cate = Vec::new();
    let mut tau = Vec::new();
    let mut failures = Vec::new();
    for (r, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) => {
                ate.push(o.ate);
                sate.push(o.sate_true);
                cate.extend(o.cate);
                tau.extend(o.tau_true);
            }
            Err(e) => failures.push((r, e.name().to_string(), e.to_string())),
        }
    }
    if ate.is_empty() {
        return Ok(ReplicationReport { rows: Vec::new(), failures });
    }
    let label = scenario.to_string();
    let pscore = if cfg.uses_pscore() { "with" } else { "without" };
    let row = |estimand, s: Score| MetricsRow {
        scenario: label.clone(),
        method: "cLSBP".into(),
        pscore: pscore.into(),
        estimand,
        rmse: s.rmse,
        cov: s.coverage,
        len: s.length,
        replications: ate.len(),
    };
    let rows = vec![
        row(Estimand::Ate, score(&ate, &sate)?),
        row(Estimand::Cate, score(&cate, &tau)?),
    ];
    Ok(ReplicationReport { rows, failures })
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario", "method", "pscore", "estimand", "rmse", "cov", "len"])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.method.clone(),
            r.pscore.clone(),
            r.estimand.to_string(),
            r.rmse.to_string(),
            r.cov.to_string(),
            r.len.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::seeded_rng;

    fn interval(point: f64, half: f64) -> EffectSummary {
        EffectSummary { point, lower: point - half, upper: point + half, level: 0.95 }
    }

    #[test]
    fn perfect_estimates() {
        let est = [interval(1.0, 0.5), interval(2.0, 0.5)];
        let s = score(&est, &[1.0, 2.0]).unwrap();
        assert_eq!((s.rmse, s.coverage, s.length), (0.0, 1.0, 1.0));
    }

    #[test]
    fn single_miss() {
        let s = score(&[interval(3.0, 0.1)], &[1.0]).unwrap();
        assert!((s.rmse - 2.0).abs() < 1e-15);
        assert_eq!(s.coverage, 0.0);
    }

    #[test]
    fn half_coverage() {
        let est = [interval(0.0, 1.0), interval(5.0, 1.0)];
        assert_eq!(score(&est, &[0.0, 0.0]).unwrap().coverage, 0.5);
    }

    #[test]
    fn drmse_cases() {
        let o = [1.0, 2.0, 3.0];
        assert_eq!(drmse(&[2.0, 3.0, 4.0], &o, &[2.0, 3.0, 4.0], &o).unwrap(), 0.0);
        let got = drmse(&[2.5, 3.5, 4.5], &o, &[2.0, 3.0, 4.0], &o).unwrap();
        assert!((got - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scenario_round_trip() {
        for s in ["sim1:t=0:n=500", "sim1:t=-2:n=40", "sim2:nonlinear:heterogeneous:n=250"] {
            assert_eq!(s.parse::<Scenario>().unwrap().to_string(), s);
        }
        assert_eq!("sim1:t=2".parse::<Scenario>().unwrap(), Scenario::Sim1 { t: 2, n: 500 });
        assert!("sim1:t=3".parse::<Scenario>().is_err());
        assert!("sim3".parse::<Scenario>().is_err());
        assert!("sim2:linear".parse::<Scenario>().is_err());
    }

    #[test]
    fn sim2_homogeneous_truth() {
        let d = dgp_sim2(50, MuType::Linear, TauType::Homogeneous, &mut seeded_rng(3)).unwrap();
        assert!(d.tau_true.iter().all(|&t| t == 3.0));
        assert_eq!(d.sate_true, 3.0);
        assert!(d.pi_true.iter().all(|&p| p > 0.05 && p < 0.95));
    }

    #[test]
    fn sim1_rejects_bad_t() {
        assert!(dgp_sim1(10, 3, &mut seeded_rng(1)).is_err());
    }
}
