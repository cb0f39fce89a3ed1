//! Detrend, select and report in one run, with a manifest of completed stages.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use symgl_core::detrend::{detrend, DetrendMethod, Detrended, TimeSeriesMatrix};
use symgl_core::linalg::{second_moment, HemispherePartition};
use symgl_core::select::{default_lambda1_grid, default_lambda2_grid, grid_select_by, Criterion, GridSelection};
use symgl_core::{SolverConfig, SymMatrix};

use crate::error::{CliError, CliResult};
use crate::io::{load_timeseries, matrix_csv, write_text, Orientation};
use crate::model::{symmetry_dot, FitInfo, ModelJson};
use crate::roi::RoiMap;
use crate::tables::{summary_tsv, trace_tsv};

pub const RESIDUALS: &str = "residuals.csv";
pub const TRACE: &str = "trace.tsv";
pub const MODEL: &str = "model.json";
pub const DOT: &str = "symmetry.dot";
pub const SUMMARY: &str = "summary.tsv";
pub const MANIFEST: &str = "MANIFEST";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub orientation: Orientation,
    pub roi_map: Option<PathBuf>,
    pub method: DetrendMethod,
    /// `None` selects the default grid scaled by the largest off-diagonal of `S`.
    pub lambda1_grid: Option<Vec<f64>>,
    pub lambda2_grid: Option<Vec<f64>>,
    pub gamma: f64,
    pub criterion: Criterion,
    pub solver: SolverConfig,
    pub seed: u64,
    pub label: String,
    pub out_dir: PathBuf,
}

pub fn criterion_name(c: Criterion) -> &'static str {
    match c {
        Criterion::Bic => "bic",
        Criterion::Ebic => "ebic",
    }
}

fn check_grid(name: &str, grid: &Option<Vec<f64>>) -> CliResult<()> {
    if let Some(g) = grid {
        if g.is_empty() || g.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(CliError::config(format!("{name} must be a nonempty list of positive numbers")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CliError::config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        check_grid("lambda1 grid", &self.lambda1_grid)?;
        check_grid("lambda2 grid", &self.lambda2_grid)?;
        if let DetrendMethod::Henderson { h, .. } = self.method {
            if h < 2 {
                return Err(CliError::config("Henderson half-length must be at least 2"));
            }
        }
        self.solver.validate().map_err(|e| CliError::config(e.to_string()))?;
        if self.label.contains(['\t', '\n']) {
            return Err(CliError::config("label may not contain tabs or newlines"));
        }
        Ok(())
    }
}

/// Residuals reordered into solver order, with their second-moment matrix.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub names: Vec<String>,
    pub permutation: Vec<usize>,
    pub s: SymMatrix,
    pub n: usize,
}

pub fn prepare(x: &DMatrix<f64>, names: &[String], roi: Option<&RoiMap>) -> CliResult<Prepared> {
    let p = x.ncols();
    let permutation = match roi {
        Some(map) => map.permutation(names)?,
        None => (0..p).collect(),
    };
    HemispherePartition::new(p).map_err(|e| CliError::config(e.to_string()))?;
    let reordered = DMatrix::from_fn(x.nrows(), p, |r, k| x[(r, permutation[k])]);
    Ok(Prepared {
        names: permutation.iter().map(|&k| names[k].clone()).collect(),
        s: second_moment(&reordered)?,
        n: x.nrows(),
        permutation,
    })
}

/// Two-stage selection plus the exported model.
pub fn select(
    prep: &Prepared,
    lambda1_grid: Option<&[f64]>,
    lambda2_grid: Option<&[f64]>,
    gamma: f64,
    criterion: Criterion,
    solver: &SolverConfig,
) -> CliResult<(GridSelection, ModelJson)> {
    let part = HemispherePartition::new(prep.s.dim())?;
    let l1 = match lambda1_grid {
        Some(g) => g.to_vec(),
        None => default_lambda1_grid(&prep.s)?,
    };
    let l2 = match lambda2_grid {
        Some(g) => g.to_vec(),
        None => default_lambda2_grid(&prep.s)?,
    };
    let sel = grid_select_by(&prep.s, prep.n, &part, &l1, &l2, gamma, criterion, solver)?;
    let row = &sel.trace[sel.best_row];
    let info = FitInfo {
        lambda1: Some(row.lambda1),
        lambda2: Some(row.lambda2),
        criterion: Some(criterion_name(criterion).to_string()),
        score: Some(sel.score),
    };
    let model = ModelJson::from_theta(&sel.best.theta_hat, prep.names.clone(), prep.permutation.clone(), info)?;
    Ok((sel, model))
}

/// The stage-one row chosen before the `lambda2` sweep.
pub fn stage_one_pick(sel: &GridSelection) -> Option<&symgl_core::select::TraceRow> {
    let l1 = sel.trace[sel.best_row].lambda1;
    sel.trace.iter().find(|r| r.stage == 1 && r.lambda1 == l1)
}

/// Completion record, rewritten after every stage.
struct Manifest {
    path: PathBuf,
    header: String,
    lines: Vec<String>,
}

impl Manifest {
    fn new(dir: &Path, cfg: &RunConfig) -> Self {
        Manifest {
            path: dir.join(MANIFEST),
            header: format!(
                "# label={} method={} criterion={} gamma={} seed={}\n",
                cfg.label,
                cfg.method.name(),
                criterion_name(cfg.criterion),
                cfg.gamma,
                cfg.seed
            ),
            lines: Vec::new(),
        }
    }

    fn record(&mut self, stage: &str, status: &str, detail: &str) -> CliResult<()> {
        self.lines.push(format!("{stage}\t{status}\t{detail}"));
        let mut text = self.header.clone();
        for l in &self.lines {
            text.push_str(l);
            text.push('\n');
        }
        write_text(&self.path, &text)
    }

    fn stage<T>(&mut self, stage: &str, files: &str, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
        match f() {
            Ok(v) => {
                self.record(stage, "ok", files)?;
                Ok(v)
            }
            Err(e) => {
                let msg = e.to_string().replace(['\t', '\n'], " ");
                self.record(stage, "failed", &msg)?;
                Err(e)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub detrended: Detrended,
    pub model: ModelJson,
    pub out_dir: PathBuf,
}

pub fn detrend_series(x: &TimeSeriesMatrix, method: DetrendMethod) -> CliResult<(Detrended, TimeSeriesMatrix)> {
    let d = detrend(x, method)?;
    let ts = TimeSeriesMatrix::new(d.residuals.clone(), d.names.clone())?;
    Ok((d, ts))
}

/// Runs every stage; outputs of finished stages are kept when a later one fails.
pub fn run_pipeline(cfg: &RunConfig) -> CliResult<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let dir = cfg.out_dir.as_path();
    let mut manifest = Manifest::new(dir, cfg);

    let (x, roi) = manifest.stage("load", "-", || {
        let x = load_timeseries(&cfg.input, cfg.orientation)?;
        let roi = cfg.roi_map.as_deref().map(RoiMap::load).transpose()?;
        if let Some(map) = &roi {
            map.permutation(x.names())?;
        }
        Ok((x, roi))
    })?;

    let (detrended, residuals) = manifest.stage("detrend", RESIDUALS, || {
        let (d, ts) = detrend_series(&x, cfg.method)?;
        write_text(&dir.join(RESIDUALS), &matrix_csv(ts.names(), ts.data()))?;
        Ok((d, ts))
    })?;

    let (sel, model) = manifest.stage("select", &format!("{TRACE},{MODEL}"), || {
        let prep = prepare(residuals.data(), residuals.names(), roi.as_ref())?;
        let (sel, model) = select(
            &prep,
            cfg.lambda1_grid.as_deref(),
            cfg.lambda2_grid.as_deref(),
            cfg.gamma,
            cfg.criterion,
            &cfg.solver,
        )?;
        write_text(&dir.join(TRACE), &trace_tsv(&sel.trace))?;
        model.save(&dir.join(MODEL))?;
        Ok((sel, model))
    })?;

    manifest.stage("report", &format!("{DOT},{SUMMARY}"), || {
        write_text(&dir.join(DOT), &symmetry_dot(&model))?;
        let summary = summary_tsv(&cfg.label, criterion_name(cfg.criterion), stage_one_pick(&sel), &model);
        write_text(&dir.join(SUMMARY), &summary)
    })?;

    Ok(RunReport {
        detrended,
        model,
        out_dir: cfg.out_dir.clone(),
    })
}
