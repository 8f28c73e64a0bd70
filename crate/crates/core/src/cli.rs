//! Command-line front end: `fit`, `estimate`, `simulate`, `benchmark`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::SamplerConfig;
use crate::data::{read_column, ObservationSet};
use crate::distributions::seeded_rng;
use crate::error::{Error, ErrorClass, Result};
use crate::estimands::{
    default_grid, mate_summary, predictive_density, qte, subgroup_cate, write_summary_csv, Profile,
    SummaryRow,
};
use crate::lsbp::stick_weights;
use crate::pipeline::fit_model;
use crate::simharness::{run_replications, write_metrics_csv, Scenario};
use crate::store::{load_draws, save_draws, CateFormat, ModelInfo};

#[derive(Debug, Parser)]
#[command(name = "clsbp", version, about = "Treatment effects from logit stick-breaking mixtures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the mixture to a CSV and summarize average effects.
    Fit(FitArgs),
    /// Quantile effects and predictive densities from a previous fit.
    Estimate(EstimateArgs),
    /// Write one simulated data set with its ground truth.
    Simulate(SimulateArgs),
    /// Replicated simulation study with RMSE, coverage and interval length.
    Benchmark(BenchmarkArgs),
}

/// Sampler settings; flags override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct SamplerArgs {
    /// JSON file with sampler settings.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "CLSBP_SEED")]
    pub seed: Option<u64>,
    /// Number of sticks H (the mixture has H + 1 components).
    #[arg(long)]
    pub sticks: Option<usize>,
    #[arg(long)]
    pub nu0: Option<f64>,
    #[arg(long)]
    pub s0sq: Option<f64>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub pscore_in_atoms: bool,
    #[arg(long)]
    pub pscore_in_weights: bool,
    /// Leave covariates on their original scale.
    #[arg(long)]
    pub no_standardize: bool,
}

impl SamplerArgs {
    pub fn resolve(&self) -> Result<SamplerConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let file = File::open(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_reader(std::io::BufReader::new(file))?
            }
            None => SamplerConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.sticks {
            cfg.sticks = v;
        }
        if let Some(v) = self.nu0 {
            cfg.nu0 = v;
        }
        if let Some(v) = self.s0sq {
            cfg.s0_sq = v;
        }
        if let Some(v) = self.burnin {
            cfg.burn_in = v;
        }
        if let Some(v) = self.keep {
            cfg.keep = v;
        }
        if let Some(v) = self.thin {
            cfg.thin = v;
        }
        cfg.include_pscore_in_atoms |= self.pscore_in_atoms;
        cfg.include_pscore_in_weights |= self.pscore_in_weights;
        if self.no_standardize {
            cfg.standardize = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub outdir: PathBuf,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Estimate propensity scores by logistic regression (replaces any `pihat` column).
    #[arg(long)]
    pub fit_propensity: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Column whose distinct values define subgroups for CATE summaries.
    #[arg(long)]
    pub subgroup_col: Option<String>,
    /// Store the CATE matrix in the compact binary format.
    #[arg(long)]
    pub binary_draws: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Directory of a previous `fit` (containing `draws/`).
    #[arg(long)]
    pub outdir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    pub qte_alphas: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Raw covariate profile; defaults to the training means.
    #[arg(long, value_delimiter = ',')]
    pub profile: Option<Vec<f64>>,
    /// Propensity score at the profile; defaults to the training mean.
    #[arg(long)]
    pub profile_pihat: Option<f64>,
    #[arg(long, default_value_t = 401)]
    pub grid_points: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `sim1:t=<t>[:n=<n>]` or `sim2:<linear|nonlinear>:<homogeneous|heterogeneous>[:n=<n>]`.
    #[arg(long)]
    pub scenario: Scenario,
    #[arg(long)]
    pub outdir: PathBuf,
    #[arg(long, env = "CLSBP_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// One or more scenarios, comma separated or repeated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub scenario: Vec<Scenario>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub outdir: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Run every scenario both with and without fitted propensity scores.
    #[arg(long)]
    pub with_and_without: bool,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Io => 4,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
    }
}

fn make_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(create(path)?, value)?;
    Ok(())
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("credible level {level} outside (0, 1)")))
    }
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    check_level(a.level)?;
    let cfg = a.sampler.resolve()?;
    let obs = ObservationSet::from_csv_path(&a.input)?;
    let groups = match &a.subgroup_col {
        Some(col) => Some((col.clone(), read_column(&a.input, col)?)),
        None => None,
    };
    make_dir(&a.outdir)?;

    let start = Instant::now();
    let fit = fit_model(&obs, &cfg, a.fit_propensity)?;
    let wall = start.elapsed().as_secs_f64();

    let mut rows = vec![SummaryRow {
        estimand: "ATE".into(),
        group: "all".into(),
        summary: mate_summary(&fit.draws, a.level)?,
    }];
    if let Some((col, values)) = &groups {
        let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, v) in values.iter().enumerate() {
            members.entry(v.as_str()).or_default().push(i);
        }
        for (value, idx) in members {
            rows.push(SummaryRow {
                estimand: "CATE".into(),
                group: format!("{col}={value}"),
                summary: subgroup_cate(&fit.draws, &idx, a.level)?,
            });
        }
    }
    write_summary_csv(&rows, create(&a.outdir.join("estimates.csv"))?)?;

    let spec = fit.data.maps.spec.clone().expect("maps built from observations");
    let n = obs.n();
    let info = ModelInfo {
        n,
        keep: fit.draws.keep(),
        sticks: fit.draws.sticks,
        p: fit.data.p(),
        p_beta: fit.draws.p_beta,
        q: fit.data.q(),
        x_names: obs.x_names.clone(),
        x_means: (0..obs.d())
            .map(|j| obs.x.column(j).iter().sum::<f64>() / n as f64)
            .collect(),
        pi_hat_mean: fit.obs.pi_hat.as_ref().map(|p| p.iter().sum::<f64>() / n as f64),
        spec,
        cate_format: if a.binary_draws { CateFormat::Binary } else { CateFormat::Csv },
        config: cfg.clone(),
    };
    save_draws(&a.outdir, &fit.draws, &info)?;

    // the last retained draw must give every subject weights summing to one
    let weights_ok = fit.draws.states.last().is_none_or(|s| {
        (0..n).all(|i| stick_weights(fit.data.maps.psi.row(i), &s.weights).iter().sum::<f64>() == 1.0)
    });
    write_json(
        &a.outdir.join("manifest.json"),
        &json!({
            "command": "fit",
            "version": env!("CARGO_PKG_VERSION"),
            "input": a.input,
            "seed": cfg.seed,
            "config": cfg,
            "fit_propensity": a.fit_propensity,
            "propensity_coefficients": fit.propensity.as_ref().map(|m| m.coef.clone()),
            "level": a.level,
            "subgroup_col": a.subgroup_col,
            "n": n,
            "wall_time_secs": wall,
            "invariants": { "weights_sum_to_one": weights_ok },
        }),
    )?;
    Ok(())
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    check_level(a.level)?;
    if let Some(&bad) = a.qte_alphas.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidConfig(format!("QTE level {bad} outside (0, 1)")));
    }
    let stored = load_draws(&a.outdir.join("draws"))?;
    let info = &stored.info;
    let x = a.profile.clone().unwrap_or_else(|| info.x_means.clone());
    let pi = a.profile_pihat.or(info.pi_hat_mean);
    let profile = Profile::new(&info.spec, &x, pi)?;

    let qtes = qte(&stored.params, &profile, &a.qte_alphas, a.level)?;
    let mut w = csv::Writer::from_writer(create(&a.outdir.join("qte.csv"))?);
    w.write_record(["alpha", "point", "lower", "upper"])?;
    for (alpha, s) in a.qte_alphas.iter().zip(&qtes) {
        w.write_record([alpha.to_string(), s.point.to_string(), s.lower.to_string(), s.upper.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(a.outdir.join("qte.csv"), e))?;

    let grid = default_grid(&stored.params, &profile, 6.0, a.grid_points);
    let control = predictive_density(&stored.params, &profile.control, &grid)?;
    let treated = predictive_density(&stored.params, &profile.treated, &grid)?;
    let (c_mean, (c_lo, c_hi)) = (control.mean_curve(), control.bands(a.level));
    let (t_mean, (t_lo, t_hi)) = (treated.mean_curve(), treated.bands(a.level));
    let mut w = csv::Writer::from_writer(create(&a.outdir.join("predictive.csv"))?);
    w.write_record(["y", "mean_z0", "lower_z0", "upper_z0", "mean_z1", "lower_z1", "upper_z1"])?;
    for g in 0..grid.len() {
        w.write_record(
            [grid[g], c_mean[g], c_lo[g], c_hi[g], t_mean[g], t_lo[g], t_hi[g]].map(|v| v.to_string()),
        )?;
    }
    w.flush().map_err(|e| Error::io(a.outdir.join("predictive.csv"), e))?;

    let range = |v: Vec<f64>| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        json!({ "min": lo, "max": hi })
    };
    let manifest_path = a.outdir.join("manifest.json");
    let mut manifest: serde_json::Value = match File::open(&manifest_path) {
        Ok(f) => serde_json::from_reader(std::io::BufReader::new(f))?,
        Err(_) => json!({}),
    };
    manifest["estimate"] = json!({
        "profile": x,
        "profile_pihat": pi,
        "qte_alphas": a.qte_alphas,
        "level": a.level,
        "grid_points": grid.len(),
        "density_integrals": { "z0": range(control.integrals()), "z1": range(treated.integrals()) },
    });
    write_json(&manifest_path, &manifest)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    make_dir(&a.outdir)?;
    let sim = a.scenario.generate(&mut seeded_rng(a.seed))?;
    sim.write_csv(create(&a.outdir.join("sim.csv"))?)
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<()> {
    check_level(a.level)?;
    let base = a.sampler.resolve()?;
    make_dir(&a.outdir)?;
    let variants: Vec<SamplerConfig> = if a.with_and_without {
        vec![
            SamplerConfig {
                include_pscore_in_atoms: true,
                include_pscore_in_weights: true,
                ..base.clone()
            },
            SamplerConfig {
                include_pscore_in_atoms: false,
                include_pscore_in_weights: false,
                ..base.clone()
            },
        ]
    } else {
        vec![base.clone()]
    };

    let start = Instant::now();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for scenario in &a.scenario {
        for cfg in &variants {
            let report = run_replications(scenario, a.reps, cfg, a.level, a.jobs)?;
            for (rep, name, message) in &report.failures {
                failures.push(json!({
                    "scenario": scenario.to_string(),
                    "pscore": cfg.uses_pscore(),
                    "replication": rep,
                    "error": name,
                    "message": message,
                }));
            }
            if !report.failures.is_empty() {
                eprintln!(
                    "warning: {scenario}: {} of {} replications failed and were excluded",
                    report.failures.len(),
                    a.reps
                );
            }
            rows.extend(report.rows);
        }
    }
    write_metrics_csv(&rows, create(&a.outdir.join("metrics.csv"))?)?;
    write_json(
        &a.outdir.join("manifest.json"),
        &json!({
            "command": "benchmark",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": base.seed,
            "config": base,
            "scenarios": a.scenario.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            "with_and_without": a.with_and_without,
            "reps": a.reps,
            "jobs": a.jobs,
            "level": a.level,
            "cate_scoring": "pooled over subjects and replications",
            "ate_truth": "sample average of the true effects",
            "propensity": "logistic regression, fitted per replication",
            "rows": rows,
            "failures": failures,
            "wall_time_secs": start.elapsed().as_secs_f64(),
        }),
    )
}
