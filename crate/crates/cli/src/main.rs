//! `tpis`: simulation harness for the samplers in `tpis-core`.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 sampler
//! degeneracy. Errors are printed to stderr as JSON and also written to
//! `<out-dir>/error.json`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tpis::Error;
use tpis::harness::{self, Axis, Method, Model, RunConfig, ScenarioGrid};

#[derive(Debug, Parser)]
#[command(name = "tpis", version, about = "Transparent-reparameterization importance sampling harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dataset and write data.csv and truth.json.
    SimulateData(RunArgs),
    /// Run one method and write draws.csv, weights.csv and summary.json.
    Run(RunArgs),
    /// Run a scenario grid over one axis.
    Grid {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = ["n", "p", "sigma"])]
        axis: String,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
    },
    /// Count the roots of the identification equation (count model).
    Identify {
        #[command(flatten)]
        run: RunArgs,
        /// Use population moments of the truth instead of simulated data.
        #[arg(long)]
        analytic: bool,
        /// Upper end of the root search.
        #[arg(long)]
        mu_max: Option<f64>,
    },
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with RunConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["sat", "count"])]
    model: Option<String>,
    /// One method, or a comma list for `grid`.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Parameter fixture JSON used as the data-generating truth.
    #[arg(long)]
    true_params: Option<PathBuf>,
    /// Dataset CSV to load instead of simulating.
    #[arg(long)]
    data: Option<PathBuf>,
}

impl RunArgs {
    /// Config file (if any) with flags applied on top, plus the method list.
    fn resolve(&self) -> tpis::Result<(RunConfig, Vec<Method>)> {
        let mut c = match &self.config {
            Some(path) => harness::read_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.model {
            c.model = Model::parse(m)?;
            if self.method.is_empty() && c.model == Model::Count && c.method == Method::Istp {
                c.method = Method::PseudoIs;
            }
        }
        let methods = self.method.iter().map(|m| Method::parse(m.trim())).collect::<tpis::Result<Vec<_>>>()?;
        if let Some(&m) = methods.first() {
            c.method = m;
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        set!(n, p, sigma, draws, chains, burnin, seed, out_dir);
        if self.true_params.is_some() {
            c.true_params = self.true_params.clone();
        }
        if self.data.is_some() {
            c.data = self.data.clone();
        }
        Ok((c, methods))
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| RunConfig::default().out_dir)
    }
}

fn single_method(methods: &[Method]) -> tpis::Result<()> {
    if methods.len() > 1 {
        return Err(Error::Config("only `grid` accepts several methods".into()));
    }
    Ok(())
}

fn execute(cmd: &Command) -> tpis::Result<(serde_json::Value, u8)> {
    match cmd {
        Command::SimulateData(args) => {
            let (c, methods) = args.resolve()?;
            single_method(&methods)?;
            let files = harness::write_simulated_data(&c)?;
            Ok((json!({ "files": files }), 0))
        }
        Command::Run(args) => {
            let (c, methods) = args.resolve()?;
            single_method(&methods)?;
            let out = harness::run(&c)?;
            let r = &out.report;
            let code = if r.weight_degenerate { 3 } else { 0 };
            let summary = json!({
                "method": r.method,
                "target_param": r.target_param,
                "ess_target": r.ess_target,
                "importance_ess": r.importance_ess,
                "wall_time_sec": r.wall_time_sec,
                "weight_degenerate": r.weight_degenerate,
                "warnings": r.warnings,
                "files": out.files,
            });
            Ok((summary, code))
        }
        Command::Grid { run, axis, levels } => {
            let (c, methods) = run.resolve()?;
            let grid = ScenarioGrid::new(Axis::parse(axis)?, levels.clone(), c, methods)?;
            let rows = harness::run_grid(&grid)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            Ok((json!({ "rows": rows.len(), "failed": failed, "csv": grid.base.out_dir.join("grid.csv") }), 0))
        }
        Command::Identify { run, analytic, mu_max } => {
            let (mut c, methods) = run.resolve()?;
            single_method(&methods)?;
            if run.model.is_none() && run.config.is_none() {
                c.model = Model::Count;
            }
            let report = harness::identify(&c, *analytic, *mu_max)?;
            Ok((serde_json::to_value(&report)?, 0))
        }
    }
}

fn out_dir_of(cmd: &Command) -> PathBuf {
    let args = match cmd {
        Command::SimulateData(a) | Command::Run(a) => a,
        Command::Grid { run, .. } | Command::Identify { run, .. } => run,
    };
    // prefer the resolved directory so a config-file out_dir is honoured
    args.resolve().map(|(c, _)| c.out_dir).unwrap_or_else(|_| args.out_dir())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match execute(&cli.command) {
        Ok((summary, code)) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("{}", harness::error_json(&e));
            harness::write_error(&out_dir_of(&cli.command), &e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
