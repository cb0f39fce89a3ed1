//! Argument parsing and dispatch for the `symgl` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use symgl_core::detrend::DetrendMethod;
use symgl_core::select::{log_grid, Criterion};
use symgl_core::sim::{oracle_experiment, SimScenario};
use symgl_core::solver::{fit_sgl, SglProblem};
use symgl_core::SolverConfig;

use crate::error::{CliError, CliResult};
use crate::io::{load_timeseries, matrix_csv, write_text, Orientation};
use crate::model::{intersect_models, symmetry_dot, FitInfo, ModelJson};
use crate::pipeline::{
    criterion_name, detrend_series, prepare, run_pipeline, select, stage_one_pick, RunConfig, DOT, MODEL, SUMMARY,
    TRACE,
};
use crate::roi::RoiMap;
use crate::tables::{sidecar_json, summary_tsv, table1_tsv, table2_tsv, trace_tsv};

#[derive(Debug, Parser)]
#[command(name = "symgl", version, about = "Symmetric graphical lasso for paired-hemisphere data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remove trends and write the residual matrix.
    Detrend(DetrendArgs),
    /// Fit one penalty pair and write the model.
    Fit(FitArgs),
    /// Two-stage BIC/eBIC grid search over the penalties.
    Select(SelectArgs),
    /// Oracle-tuned recovery benchmark on synthetic data.
    Simulate(SimulateArgs),
    /// Shared graph and ties of several models.
    Intersect(IntersectArgs),
    /// Render the symmetry graph and summary of a stored model.
    Report(ReportArgs),
    /// Detrend, select and report in one go.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Var1,
    Dcs,
    Henderson,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Bic,
    Ebic,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Bic => Criterion::Bic,
            CriterionArg::Ebic => Criterion::Ebic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioArg {
    A,
    B,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV with a header of series names.
    #[arg(long)]
    pub input: PathBuf,
    /// Rows of the file are series rather than time points.
    #[arg(long)]
    pub transpose: bool,
}

impl InputArgs {
    fn orientation(&self) -> Orientation {
        if self.transpose {
            Orientation::VariableByTime
        } else {
            Orientation::Auto
        }
    }
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value = "var1")]
    pub method: MethodArg,
    /// Henderson half-length (the filter has 2h+1 terms).
    #[arg(long, default_value_t = 6)]
    pub h: usize,
}

impl MethodArgs {
    fn method(&self) -> DetrendMethod {
        match self.method {
            MethodArg::Var1 => DetrendMethod::Var1,
            MethodArg::Dcs => DetrendMethod::Dcs,
            MethodArg::Henderson => DetrendMethod::henderson(self.h),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    pub rho1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho2: f64,
    /// Relative-change tolerance of the outer iterations.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Cap on outer iterations.
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> CliResult<SolverConfig> {
        let cfg = SolverConfig {
            rho1: self.rho1,
            rho2: self.rho2,
            tol: self.tol,
            max_outer: self.max_iter,
            ..SolverConfig::default()
        };
        cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Comma-separated values, or `log:LO:HI:K` for K log-spaced points.
    #[arg(long)]
    pub lambda1_grid: Option<String>,
    #[arg(long)]
    pub lambda2_grid: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "ebic")]
    pub criterion: CriterionArg,
}

impl GridArgs {
    fn grids(&self) -> CliResult<(Option<Vec<f64>>, Option<Vec<f64>>)> {
        Ok((
            self.lambda1_grid.as_deref().map(parse_grid).transpose()?,
            self.lambda2_grid.as_deref().map(parse_grid).transpose()?,
        ))
    }

    fn check_gamma(&self) -> CliResult<()> {
        if (0.0..=1.0).contains(&self.gamma) {
            Ok(())
        } else {
            Err(CliError::config(format!("gamma must lie in [0, 1], got {}", self.gamma)))
        }
    }
}

#[derive(Debug, Args)]
pub struct DetrendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Region map used to put left regions first.
    #[arg(long)]
    pub roi_map: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the symmetry graph.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub roi_map: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "run")]
    pub label: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "a")]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub sym_fraction: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct IntersectArgs {
    /// Model JSON files fitted on the same region map.
    #[arg(required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "run")]
    pub label: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub roi_map: Option<PathBuf>,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Recorded in the manifest; every stage is deterministic.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "run")]
    pub label: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// `a,b,c` or `log:LO:HI:K`.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::config(format!("cannot read penalty grid '{spec}'"));
    let grid = if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
        log_grid(lo, hi, k).map_err(|e| CliError::config(e.to_string()))?
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(CliError::config(format!("penalty grid '{spec}' needs positive finite values")));
    }
    Ok(grid)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load_roi(path: Option<&Path>) -> CliResult<Option<RoiMap>> {
    path.map(RoiMap::load).transpose()
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Detrend(a) => {
            let x = load_timeseries(&a.input.input, a.input.orientation())?;
            let (d, ts) = detrend_series(&x, a.method.method())?;
            log::info!("{} residual rows from input row {}", ts.t(), d.first_row);
            write_text(&a.out, &matrix_csv(ts.names(), ts.data()))
        }
        Command::Fit(a) => {
            let cfg = a.solver.config()?;
            let x = load_timeseries(&a.input.input, a.input.orientation())?;
            let roi = load_roi(a.roi_map.as_deref())?;
            let prep = prepare(x.data(), x.names(), roi.as_ref())?;
            let prob = SglProblem::new(prep.s.clone(), prep.n, a.lambda1, a.lambda2)
                .map_err(|e| CliError::config(e.to_string()))?;
            let sol = fit_sgl(&prob, &cfg)?;
            if !sol.converged {
                log::warn!("stopped after {} iterations without meeting the tolerance", sol.outer_iters);
            }
            let info = FitInfo {
                lambda1: Some(a.lambda1),
                lambda2: Some(a.lambda2),
                ..FitInfo::default()
            };
            let model = ModelJson::from_theta(&sol.theta_hat, prep.names, prep.permutation, info)?;
            model.save(&a.out)?;
            if let Some(dot) = &a.dot {
                write_text(dot, &symmetry_dot(&model))?;
            }
            Ok(())
        }
        Command::Select(a) => {
            let cfg = a.solver.config()?;
            a.grid.check_gamma()?;
            let (l1, l2) = a.grid.grids()?;
            let x = load_timeseries(&a.input.input, a.input.orientation())?;
            let roi = load_roi(a.roi_map.as_deref())?;
            let prep = prepare(x.data(), x.names(), roi.as_ref())?;
            let criterion: Criterion = a.grid.criterion.into();
            let (sel, model) = select(&prep, l1.as_deref(), l2.as_deref(), a.grid.gamma, criterion, &cfg)?;
            create_dir(&a.out_dir)?;
            write_text(&a.out_dir.join(TRACE), &trace_tsv(&sel.trace))?;
            model.save(&a.out_dir.join(MODEL))?;
            write_text(&a.out_dir.join(DOT), &symmetry_dot(&model))?;
            let summary = summary_tsv(&a.label, criterion_name(criterion), stage_one_pick(&sel), &model);
            write_text(&a.out_dir.join(SUMMARY), &summary)
        }
        Command::Simulate(a) => {
            let cfg = a.solver.config()?;
            let (base, label) = match a.scenario {
                ScenarioArg::A => (SimScenario::scenario_a(a.seed), "A"),
                ScenarioArg::B => (SimScenario::scenario_b(a.seed), "B"),
            };
            let sc = SimScenario {
                p: a.p.unwrap_or(base.p),
                edge_density: a.density.unwrap_or(base.edge_density),
                sym_fraction: a.sym_fraction.unwrap_or(base.sym_fraction),
                n: a.n.unwrap_or(base.n),
                replicates: a.replicates.unwrap_or(base.replicates),
                seed: a.seed,
            };
            sc.validate().map_err(|e| CliError::config(e.to_string()))?;
            let res = oracle_experiment(&sc, &cfg)?;
            if !res.flagged.is_empty() {
                log::warn!("replicates {:?} missed the target edge count", res.flagged);
            }
            create_dir(&a.out_dir)?;
            write_text(&a.out_dir.join("table1.tsv"), &table1_tsv(&res))?;
            write_text(&a.out_dir.join("table2.tsv"), &table2_tsv(label, &res))?;
            write_text(&a.out_dir.join("simulation.json"), &sidecar_json(label, &sc, &cfg, &res))
        }
        Command::Intersect(a) => {
            let models = a.models.iter().map(|p| ModelJson::load(p)).collect::<CliResult<Vec<_>>>()?;
            let shared = intersect_models(&models)?;
            shared.save(&a.out)?;
            if let Some(dot) = &a.dot {
                write_text(dot, &symmetry_dot(&shared))?;
            }
            Ok(())
        }
        Command::Report(a) => {
            let model = ModelJson::load(&a.model)?;
            create_dir(&a.out_dir)?;
            write_text(&a.out_dir.join(DOT), &symmetry_dot(&model))?;
            let criterion = model.criterion.clone().unwrap_or_else(|| "-".into());
            write_text(&a.out_dir.join(SUMMARY), &summary_tsv(&a.label, &criterion, None, &model))
        }
        Command::Run(a) => {
            let (l1, l2) = a.grid.grids()?;
            let cfg = RunConfig {
                input: a.input.input.clone(),
                orientation: a.input.orientation(),
                roi_map: a.roi_map,
                method: a.method.method(),
                lambda1_grid: l1,
                lambda2_grid: l2,
                gamma: a.grid.gamma,
                criterion: a.grid.criterion.into(),
                solver: a.solver.config()?,
                seed: a.seed,
                label: a.label,
                out_dir: a.out_dir,
            };
            run_pipeline(&cfg).map(|_| ())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("0.1, 0.2,0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        let g = parse_grid("log:0.01:1:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 0.1).abs() < 1e-12);
        assert!(parse_grid("0.1,-1").is_err());
        assert!(parse_grid("log:1:2").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
