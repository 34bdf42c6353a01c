//! Scenario runs: data generation, method dispatch and artifact files.
//!
//! Seeding: a run's root stream `(seed, 0)` is split into a truth stream, a
//! data stream and a sampler stream. Grid levels share the data stream (so a
//! `sigma` grid reuses one dataset and an `n` grid uses nested prefixes of
//! one simulation) and take sampler substreams indexed by level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::gibbs::{MwgConfig, gibbs_sat, mcmc_count_original, mcmc_count_pseudo};
use crate::importance::istp_sat;
use crate::io::{
    Fixture, chain_trace_csv, read_dataset, read_fixture, trace_csv, weights_csv, write_atomic, write_dataset,
    write_json,
};
use crate::model::{CountTheta, IncompleteDataset, PriorSpec, SatTheta, simulate_count, simulate_sat};
use crate::pseudo_tp::{
    IdentificationReport, ROOT_GRID, chat_estimates, default_mu_max, identification_roots, population_chat,
    pseudo_istp_count,
};
use crate::stochastics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Sat,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gibbs,
    Istp,
    PseudoMcmc,
    PseudoIs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gibbs => "gibbs",
            Method::Istp => "istp",
            Method::PseudoMcmc => "pseudo-mcmc",
            Method::PseudoIs => "pseudo-is",
        }
    }

    pub fn is_chain(self) -> bool {
        matches!(self, Method::Gibbs | Method::PseudoMcmc)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gibbs" => Ok(Method::Gibbs),
            "istp" => Ok(Method::Istp),
            "pseudo-mcmc" => Ok(Method::PseudoMcmc),
            "pseudo-is" => Ok(Method::PseudoIs),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

impl Model {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sat" => Ok(Model::Sat),
            "count" => Ok(Model::Count),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20240101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub method: Method,
    pub n: usize,
    /// Binary covariates (sat model only).
    pub p: usize,
    /// Prior SD of `δ` (sat) or `α1` (count).
    pub sigma: f64,
    /// Total draws; split evenly across chains for chain methods.
    pub draws: usize,
    pub chains: usize,
    pub burnin: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub true_params: Option<PathBuf>,
    /// Load the dataset from this CSV instead of simulating it.
    pub data: Option<PathBuf>,
    pub mwg: MwgConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::Sat,
            method: Method::Istp,
            n: 3000,
            p: 3,
            sigma: 0.5,
            draws: 45_000,
            chains: 3,
            burnin: 2000,
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from("out"),
            true_params: None,
            data: None,
            mwg: MwgConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = matches!(
            (self.model, self.method),
            (Model::Sat, Method::Gibbs | Method::Istp)
                | (Model::Count, Method::Gibbs | Method::PseudoMcmc | Method::PseudoIs)
        );
        if !ok {
            return Err(Error::Config(format!(
                "method {} is not available for the {} model",
                self.method.name(),
                match self.model {
                    Model::Sat => "sat",
                    Model::Count => "count",
                }
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.draws == 0 {
            return Err(Error::Config("draws must be positive".into()));
        }
        if self.method.is_chain() {
            if self.chains == 0 || self.draws % self.chains != 0 {
                return Err(Error::Config(format!(
                    "draws ({}) must be a positive multiple of chains ({})",
                    self.draws, self.chains
                )));
            }
        }
        if self.model == Model::Sat && !(1..=crate::model::MAX_COVARIATES).contains(&self.p) {
            return Err(Error::Config(format!("p must be in 1..={}", crate::model::MAX_COVARIATES)));
        }
        Ok(())
    }

    pub fn prior(&self) -> Result<PriorSpec> {
        PriorSpec::with_sigma(self.sigma).map_err(|e| Error::Config(e.to_string()))
    }

    fn streams(&self) -> (RngStream, RngStream, RngStream) {
        let mut s = RngStream::new(self.seed, 0).split(3).into_iter();
        (s.next().unwrap(), s.next().unwrap(), s.next().unwrap())
    }
}

/// Data-generating parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Sat(SatTheta),
    Count(CountTheta),
}

impl Truth {
    pub fn fixture(&self) -> Fixture {
        match self {
            Truth::Sat(t) => Fixture::from_sat(t),
            Truth::Count(t) => Fixture::from_count(t),
        }
    }
}

/// Truth from the fixture file, or drawn from the prior with `σ = 0.5` for the
/// sat model and the reference values for the count model. The truth never
/// depends on `config.sigma`, so a sigma grid shares one dataset.
pub fn truth_for(config: &RunConfig) -> Result<Truth> {
    if let Some(path) = &config.true_params {
        let f = read_fixture(path)?;
        return match config.model {
            Model::Sat => {
                let t = f.to_sat()?;
                if t.p() != config.p {
                    return Err(Error::Config(format!("fixture has p = {}, config has p = {}", t.p(), config.p)));
                }
                Ok(Truth::Sat(t))
            }
            Model::Count => Ok(Truth::Count(f.to_count()?)),
        };
    }
    let (mut truth_rng, _, _) = config.streams();
    match config.model {
        Model::Sat => Ok(Truth::Sat(SatTheta::sample_prior(config.p, &PriorSpec::default(), &mut truth_rng)?)),
        Model::Count => Ok(Truth::Count(CountTheta::reference())),
    }
}

/// Dataset for `config`: loaded from `config.data`, otherwise simulated.
pub fn simulate_data(config: &RunConfig) -> Result<(IncompleteDataset, Option<Truth>)> {
    if let Some(path) = &config.data {
        let p = (config.model == Model::Sat).then_some(config.p);
        let d = read_dataset(path, p)?;
        return Ok((d, None));
    }
    let truth = truth_for(config)?;
    let (_, mut data_rng, _) = config.streams();
    let d = match &truth {
        Truth::Sat(t) => simulate_sat(t, config.n, &mut data_rng),
        Truth::Count(t) => simulate_count(t, config.n, &mut data_rng),
    };
    Ok((d, Some(truth)))
}

/// Artifacts of one method run, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub report: DiagnosticsReport,
    pub draws_csv: Vec<u8>,
    pub weights_csv: Option<Vec<u8>>,
}

/// Runs `config.method` on `d` with the given sampler stream.
pub fn run_method(config: &RunConfig, d: &IncompleteDataset, rng: &mut RngStream) -> Result<MethodResult> {
    config.validate()?;
    let prior = config.prior()?;
    let method = config.method.name();
    let iters = config.draws / config.chains.max(1);
    let (mut report, draws_csv, weights) = match (config.model, config.method) {
        (Model::Sat, Method::Istp) => {
            let out = istp_sat(d, &prior, config.draws, rng)?;
            let rows: Vec<Vec<f64>> = out.resampled.iter().map(SatTheta::to_flat).collect();
            let names = SatTheta::param_names(d.require_sat()?);
            (out.report, trace_csv(method, &[rows], &names)?, Some(weights_csv(&out.weighted)?))
        }
        (Model::Sat, Method::Gibbs) => {
            let out = gibbs_sat(d, &prior, config.chains, iters, config.burnin, &config.mwg, rng)?;
            (out.report(method, "beta[1]")?, chain_trace_csv(method, &out)?, None)
        }
        (Model::Count, Method::Gibbs) => {
            let out = mcmc_count_original(d, &prior, config.chains, iters, config.burnin, &config.mwg, rng)?;
            (out.report(method, "mu")?, chain_trace_csv(method, &out)?, None)
        }
        (Model::Count, Method::PseudoMcmc) => {
            let out = mcmc_count_pseudo(d, &prior, config.chains, iters, config.burnin, &config.mwg, rng)?;
            (out.report(method, "mu")?, chain_trace_csv(method, &out)?, None)
        }
        (Model::Count, Method::PseudoIs) => {
            let out = pseudo_istp_count(d, &prior, config.draws, rng)?;
            let rows: Vec<Vec<f64>> = out.resampled.iter().map(CountTheta::to_flat).collect();
            (out.report, trace_csv(method, &[rows], &CountTheta::param_names())?, Some(weights_csv(&out.weighted)?))
        }
        _ => unreachable!("validated above"),
    };
    report.config_echo = serde_json::to_value(config)?;
    Ok(MethodResult { report, draws_csv, weights_csv: weights })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: DiagnosticsReport,
    pub files: Vec<PathBuf>,
}

/// Full run: data, sampling, and `draws.csv`, `weights.csv` (importance
/// methods) and `summary.json` under `config.out_dir`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (d, _) = simulate_data(config)?;
    let (_, _, mut sampler_rng) = config.streams();
    let result = run_method(config, &d, &mut sampler_rng)?;
    let dir = &config.out_dir;
    let mut files = Vec::new();
    let draws = dir.join("draws.csv");
    write_atomic(&draws, &result.draws_csv)?;
    files.push(draws);
    if let Some(w) = &result.weights_csv {
        let path = dir.join("weights.csv");
        write_atomic(&path, w)?;
        files.push(path);
    }
    let summary = dir.join("summary.json");
    write_json(&summary, &result.report)?;
    files.push(summary);
    Ok(RunOutcome { report: result.report, files })
}

/// Writes the simulated (or loaded) dataset and its truth to `out_dir`.
pub fn write_simulated_data(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let (d, truth) = simulate_data(config)?;
    let data = config.out_dir.join("data.csv");
    write_dataset(&data, &d)?;
    let mut files = vec![data];
    if let Some(t) = truth {
        let path = config.out_dir.join("truth.json");
        write_json(&path, &t.fixture())?;
        files.push(path);
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    N,
    P,
    Sigma,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Axis::N),
            "p" => Ok(Axis::P),
            "sigma" => Ok(Axis::Sigma),
            other => Err(Error::Config(format!("unknown axis {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::P => "p",
            Axis::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub axis: Axis,
    pub levels: Vec<f64>,
    pub base: RunConfig,
    /// Methods run at every level; defaults to the base method.
    pub methods: Vec<Method>,
}

impl ScenarioGrid {
    pub fn new(axis: Axis, levels: Vec<f64>, base: RunConfig, methods: Vec<Method>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("grid levels must be non-empty".into()));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid levels must be strictly increasing".into()));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("grid levels must be finite".into()));
        }
        if matches!(axis, Axis::N | Axis::P) && levels.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::Config(format!("{} levels must be non-negative integers", axis.name())));
        }
        let methods = if methods.is_empty() { vec![base.method] } else { methods };
        Ok(Self { axis, levels, base, methods })
    }

    /// The configuration of one level (output directory included).
    pub fn level_config(&self, level: f64, method: Method) -> RunConfig {
        let mut c = self.base.clone();
        c.method = method;
        match self.axis {
            Axis::N => c.n = level as usize,
            Axis::P => c.p = level as usize,
            Axis::Sigma => c.sigma = level,
        }
        c.out_dir = self.base.out_dir.join(format!("{}={}", self.axis.name(), level)).join(method.name());
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub axis: String,
    pub level: f64,
    pub method: String,
    pub ess_target: Option<f64>,
    pub ess_median: Option<f64>,
    pub multi_ess: Option<f64>,
    pub importance_ess: Option<f64>,
    pub time_sec: Option<f64>,
    pub ess_per_sec: Option<f64>,
    pub error: Option<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn grid_csv(rows: &[GridRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "axis", "level", "method", "ess_target", "ess_median", "multi_ess", "importance_ess", "time_sec", "ess_per_sec",
    ])?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            r.level.to_string(),
            r.method.clone(),
            opt(r.ess_target),
            opt(r.ess_median),
            opt(r.multi_ess),
            opt(r.importance_ess),
            opt(r.time_sec),
            opt(r.ess_per_sec),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// One run per level and method. Failed levels are recorded and skipped.
/// Writes `grid.csv`, `grid.json` and each level's `summary.json`.
pub fn run_grid(grid: &ScenarioGrid) -> Result<Vec<GridRow>> {
    grid.base.validate().or_else(|e| {
        // the base method may be replaced per level; only reject real config errors
        if grid.methods.iter().any(|&m| RunConfig { method: m, ..grid.base.clone() }.validate().is_ok()) {
            Ok(())
        } else {
            Err(e)
        }
    })?;
    let (_, _, sampler_root) = grid.base.streams();
    let mut rows = Vec::new();
    for (li, &level) in grid.levels.iter().enumerate() {
        for (mi, &method) in grid.methods.iter().enumerate() {
            let cfg = grid.level_config(level, method);
            let mut rng = sampler_root.substream((li * grid.methods.len() + mi) as u64);
            let outcome = cfg
                .validate()
                .and_then(|_| simulate_data(&cfg))
                .and_then(|(d, _)| run_method(&cfg, &d, &mut rng));
            let row = match outcome {
                Ok(res) => {
                    write_json(&cfg.out_dir.join("summary.json"), &res.report)?;
                    let r = &res.report;
                    GridRow {
                        axis: grid.axis.name().into(),
                        level,
                        method: method.name().into(),
                        ess_target: Some(r.ess_target),
                        ess_median: Some(r.ess_median),
                        multi_ess: Some(r.multi_ess),
                        importance_ess: r.importance_ess,
                        time_sec: Some(r.wall_time_sec),
                        ess_per_sec: Some(r.ess_per_sec),
                        error: None,
                    }
                }
                Err(e) => {
                    write_json(&cfg.out_dir.join("error.json"), &error_json(&e))?;
                    GridRow {
                        axis: grid.axis.name().into(),
                        level,
                        method: method.name().into(),
                        ess_target: None,
                        ess_median: None,
                        multi_ess: None,
                        importance_ess: None,
                        time_sec: None,
                        ess_per_sec: None,
                        error: Some(e.to_string()),
                    }
                }
            };
            rows.push(row);
        }
    }
    write_atomic(&grid.base.out_dir.join("grid.csv"), &grid_csv(&rows)?)?;
    write_json(&grid.base.out_dir.join("grid.json"), &rows)?;
    Ok(rows)
}

/// Root count of the moment equation for the count model. With `analytic`
/// the population `c` of the truth is used instead of simulated data.
pub fn identify(config: &RunConfig, analytic: bool, mu_max: Option<f64>) -> Result<IdentificationReport> {
    if config.model != Model::Count {
        return Err(Error::Config("identification applies to the count model only".into()));
    }
    let (c, default_max) = if analytic {
        let Truth::Count(theta) = truth_for(config)? else {
            unreachable!("count model")
        };
        let c = population_chat(&theta);
        let mean = crate::pseudo_tp::exact_conditionals(&theta).mean_observed;
        (c, (5.0 * mean).max(1.0))
    } else {
        let (d, _) = simulate_data(config)?;
        (chat_estimates(&d)?, default_mu_max(&d)?)
    };
    let report = identification_roots(&c, mu_max.unwrap_or(default_max), ROOT_GRID)?;
    write_json(&config.out_dir.join("identification.json"), &report)?;
    Ok(report)
}

/// Machine-readable error description.
pub fn error_json(e: &Error) -> serde_json::Value {
    json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    })
}

/// Writes `error.json` into `dir`, ignoring failures (the caller is already
/// reporting an error).
pub fn write_error(dir: &Path, e: &Error) {
    let _ = write_json(&dir.join("error.json"), &error_json(e));
}

/// Parses a `RunConfig` JSON file; unknown keys are rejected.
pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(method: Method, model: Model, dir: &Path) -> RunConfig {
        RunConfig {
            model,
            method,
            n: 200,
            p: 1,
            draws: 600,
            chains: 2,
            burnin: 100,
            out_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.method = Method::PseudoIs;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RunConfig { sigma: 0.0, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { method: Method::Gibbs, draws: 1000, chains: 3, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let json = r#"{"model":"count","method":"pseudo-mcmc","n":100}"#;
        let c: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.method, Method::PseudoMcmc);
        assert_eq!(c.draws, 45_000);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn run_writes_artifacts_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let a = small(Method::Istp, Model::Sat, &dir.path().join("a"));
        let b = small(Method::Istp, Model::Sat, &dir.path().join("b"));
        let ra = run(&a).unwrap();
        run(&b).unwrap();
        assert_eq!(ra.files.len(), 3);
        let read = |p: &Path| std::fs::read(p).unwrap();
        assert_eq!(read(&a.out_dir.join("draws.csv")), read(&b.out_dir.join("draws.csv")));
        assert_eq!(read(&a.out_dir.join("weights.csv")), read(&b.out_dir.join("weights.csv")));
        let summary: serde_json::Value =
            serde_json::from_slice(&read(&a.out_dir.join("summary.json"))).unwrap();
        assert!(summary["importance_ess"].as_f64().unwrap() >= 1.0);
        assert!(summary["wall_time_sec"].as_f64().unwrap() >= 0.0);
        assert_eq!(summary["config_echo"]["method"], "istp");
    }

    #[test]
    fn every_method_runs() {
        let dir = tempfile::tempdir().unwrap();
        for (model, method) in [
            (Model::Sat, Method::Gibbs),
            (Model::Count, Method::Gibbs),
            (Model::Count, Method::PseudoMcmc),
            (Model::Count, Method::PseudoIs),
        ] {
            let c = small(method, model, &dir.path().join(method.name()));
            let out = run(&c).unwrap();
            let r = &out.report;
            assert!(r.ess_target >= 1.0 && r.ess_target <= c.draws as f64, "{method:?}: {}", r.ess_target);
        }
    }

    #[test]
    fn sigma_grid_shares_data_and_records_rows() {
        let dir = tempfile::tempdir().unwrap();
        let base = small(Method::Istp, Model::Sat, dir.path());
        let grid = ScenarioGrid::new(Axis::Sigma, vec![0.1, 1.0], base, vec![]).unwrap();
        let (d1, _) = simulate_data(&grid.level_config(0.1, Method::Istp)).unwrap();
        let (d2, _) = simulate_data(&grid.level_config(1.0, Method::Istp)).unwrap();
        assert_eq!(d1, d2);
        let rows = run_grid(&grid).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            let e = r.importance_ess.unwrap();
            assert!(e >= 1.0 && e <= 600.0);
        }
        let text = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
        assert!(text.starts_with("axis,level,method,ess_target,ess_median,multi_ess,importance_ess,time_sec,ess_per_sec\n"));
    }

    #[test]
    fn grid_levels_validated_and_failures_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let base = small(Method::Istp, Model::Sat, dir.path());
        assert!(ScenarioGrid::new(Axis::N, vec![], base.clone(), vec![]).is_err());
        assert!(ScenarioGrid::new(Axis::N, vec![10.0, 5.0], base.clone(), vec![]).is_err());
        // p = 0 fails validation at its level, p = 1 runs
        let grid = ScenarioGrid::new(Axis::P, vec![0.0, 1.0], base, vec![]).unwrap();
        let rows = run_grid(&grid).unwrap();
        assert!(rows[0].error.is_some());
        assert!(rows[1].error.is_none());
    }

    #[test]
    fn analytic_identification_finds_truth() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig { model: Model::Count, method: Method::PseudoIs, out_dir: dir.path().into(), ..RunConfig::default() };
        let rep = identify(&c, true, None).unwrap();
        assert!(rep.roots.iter().any(|r| (r - 5.0).abs() < 1e-6), "{rep:?}");
        assert!(dir.path().join("identification.json").exists());
    }

    #[test]
    fn error_json_has_kind_and_code() {
        let v = error_json(&Error::NoSupport { n_draws: 4 });
        assert_eq!(v["exit_code"], 3);
        let v = error_json(&Error::Config("x".into()));
        assert_eq!(v["exit_code"], 2);
    }
}
