//! Colored-model refits and information-criterion selection of the penalties.
//!
//! A penalized estimate is turned into a [`ColoredModel`] (its graph plus the
//! homolog ties it exhibits), refitted by maximum likelihood inside that model
//! and scored with BIC or eBIC. [`grid_select`] runs the two-stage search:
//! `lambda1` first with `lambda2` at its smallest grid value, then `lambda2`
//! at the chosen `lambda1`.

mod mle;
mod model;

pub use mle::{rcon_mle, RconFit};
pub use model::{extract_colored_model, ColoredModel};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{HemispherePartition, SymMatrix};
use crate::solver::{fit_sgl, symmetry_summary, SglProblem, SglSolution, SolverConfig, TIE_TOL, ZERO_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelScore {
    /// Maximized log-likelihood `(n / 2)(log det Theta - tr(S Theta))`.
    pub loglik: f64,
    pub d: usize,
    pub bic: f64,
    pub ebic: f64,
    pub gamma: f64,
}

/// `-2 l + d log n + 4 d gamma log p`, with `bic` the `gamma = 0` value.
pub fn score_model(loglik: f64, n: usize, p: usize, d: usize, gamma: f64) -> Result<ModelScore> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be positive"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let d_f = d as f64;
    let bic = -2.0 * loglik + d_f * (n as f64).ln();
    let ebic = if gamma == 0.0 {
        bic
    } else {
        bic + 4.0 * d_f * gamma * (p as f64).ln()
    };
    Ok(ModelScore {
        loglik,
        d,
        bic,
        ebic,
        gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    Bic,
    #[default]
    Ebic,
}

impl ModelScore {
    pub fn value(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Bic => self.bic,
            Criterion::Ebic => self.ebic,
        }
    }
}

/// `k` points equally spaced in log scale on `[lo, hi]`, increasing.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && k >= 1) || !hi.is_finite() {
        return Err(Error::invalid(format!("bad log grid [{lo}, {hi}] with {k} points")));
    }
    if k == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect())
}

/// Largest absolute off-diagonal entry.
pub fn max_offdiag(s: &SymMatrix) -> f64 {
    let mut m = 0.0f64;
    for i in 0..s.dim() {
        for j in 0..i {
            m = m.max(s.get(i, j).abs());
        }
    }
    m
}

/// Default `lambda1` grid: 30 log-spaced points on `[0.02, 1] max|s_ij|`.
pub fn default_lambda1_grid(s: &SymMatrix) -> Result<Vec<f64>> {
    let top = max_offdiag(s);
    log_grid(0.02 * top, top, 30)
}

/// Default `lambda2` grid: 20 log-spaced points on `[1e-3, 1] max|s_ij|`.
pub fn default_lambda2_grid(s: &SymMatrix) -> Result<Vec<f64>> {
    let top = max_offdiag(s);
    log_grid(1e-3 * top, top, 20)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1 for the `lambda1` sweep, 2 for the `lambda2` sweep.
    pub stage: u8,
    pub lambda1: f64,
    pub lambda2: f64,
    pub edges: usize,
    pub density: f64,
    pub sym_edges: usize,
    pub sym_offdiag: usize,
    pub sym_diag: usize,
    pub converged: bool,
    /// `None` when the refit failed and the point was excluded.
    pub score: Option<ModelScore>,
}

#[derive(Debug, Clone)]
pub struct GridSelection {
    pub best: SglSolution,
    pub model: ColoredModel,
    pub refit: RconFit,
    pub score: ModelScore,
    pub trace: Vec<TraceRow>,
    /// Index of the selected row in `trace`.
    pub best_row: usize,
}

struct Evaluated {
    row: TraceRow,
    fit: Option<(SglSolution, ColoredModel, RconFit)>,
}

fn evaluate(prob: &SglProblem, cfg: &SolverConfig, stage: u8, gamma: f64) -> Result<Evaluated> {
    let sol = fit_sgl(prob, cfg)?;
    let p = prob.part.p();
    let summary = symmetry_summary(&sol.theta_hat, &prob.part);
    let mut row = TraceRow {
        stage,
        lambda1: prob.lambda1,
        lambda2: prob.lambda2,
        edges: summary.edges,
        density: summary.edges as f64 / (p * (p - 1) / 2) as f64,
        sym_edges: summary.sym_edges,
        sym_offdiag: summary.sym_offdiag,
        sym_diag: summary.sym_diag,
        converged: sol.converged,
        score: None,
    };
    let model = extract_colored_model(&sol.theta_hat, &prob.part, ZERO_TOL, TIE_TOL)?;
    match rcon_mle(&prob.s, prob.n, &model) {
        Ok(refit) => {
            row.score = Some(score_model(refit.gaussian_loglik, prob.n, p, model.d(), gamma)?);
            Ok(Evaluated {
                row,
                fit: Some((sol, model, refit)),
            })
        }
        Err(e) => {
            log::warn!(
                "refit failed at lambda1 = {}, lambda2 = {}: {e}",
                prob.lambda1,
                prob.lambda2
            );
            Ok(Evaluated { row, fit: None })
        }
    }
}

fn argmin(rows: &[Evaluated], criterion: Criterion) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, e) in rows.iter().enumerate() {
        if let Some(score) = &e.row.score {
            let v = score.value(criterion);
            if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
    }
    best.map(|(k, _)| k)
}

fn sweep(
    base: &SglProblem,
    points: &[(f64, f64)],
    cfg: &SolverConfig,
    stage: u8,
    gamma: f64,
) -> Result<Vec<Evaluated>> {
    points
        .par_iter()
        .map(|&(l1, l2)| evaluate(&base.with_lambdas(l1, l2), cfg, stage, gamma))
        .collect()
}

/// Two-stage eBIC grid search.
pub fn grid_select(
    s: &SymMatrix,
    n: usize,
    part: &HemispherePartition,
    lambda1_grid: &[f64],
    lambda2_grid: &[f64],
    gamma: f64,
    cfg: &SolverConfig,
) -> Result<GridSelection> {
    grid_select_by(s, n, part, lambda1_grid, lambda2_grid, gamma, Criterion::Ebic, cfg)
}

#[allow(clippy::too_many_arguments)]
pub fn grid_select_by(
    s: &SymMatrix,
    n: usize,
    part: &HemispherePartition,
    lambda1_grid: &[f64],
    lambda2_grid: &[f64],
    gamma: f64,
    criterion: Criterion,
    cfg: &SolverConfig,
) -> Result<GridSelection> {
    if lambda1_grid.is_empty() || lambda2_grid.is_empty() {
        return Err(Error::invalid("penalty grids must be nonempty"));
    }
    if lambda1_grid
        .iter()
        .chain(lambda2_grid)
        .any(|&l| !(l > 0.0) || !l.is_finite())
    {
        return Err(Error::invalid("penalty grid values must be positive and finite"));
    }
    if part.p() != s.dim() {
        return Err(Error::invalid("partition does not match S"));
    }
    score_model(0.0, n.max(1), s.dim(), 0, gamma)?;
    cfg.validate()?;
    let base = SglProblem::new(s.clone(), n, lambda1_grid[0], 0.0)?;
    let l2_min = lambda2_grid.iter().copied().fold(f64::INFINITY, f64::min);

    let stage1: Vec<(f64, f64)> = lambda1_grid.iter().map(|&l1| (l1, l2_min)).collect();
    let first = sweep(&base, &stage1, cfg, 1, gamma)?;
    let k1 = argmin(&first, criterion)
        .ok_or_else(|| Error::NonConvergence("no feasible point on the lambda1 grid".into()))?;
    let l1_star = first[k1].row.lambda1;

    let stage2: Vec<(f64, f64)> = lambda2_grid.iter().map(|&l2| (l1_star, l2)).collect();
    let second = sweep(&base, &stage2, cfg, 2, gamma)?;
    let k2 = argmin(&second, criterion)
        .ok_or_else(|| Error::NonConvergence("no feasible point on the lambda2 grid".into()))?;

    let best_row = first.len() + k2;
    let mut trace: Vec<TraceRow> = first.iter().map(|e| e.row.clone()).collect();
    trace.extend(second.iter().map(|e| e.row.clone()));
    let score = second[k2].row.score.expect("argmin only picks scored rows");
    let (best, model, refit) = second
        .into_iter()
        .nth(k2)
        .and_then(|e| e.fit)
        .expect("scored rows carry their fit");
    Ok(GridSelection {
        best,
        model,
        refit,
        score,
        trace,
        best_row,
    })
}
