//! Tab-separated reports and the simulation sidecar.

use std::fmt::Write as _;

use serde::Serialize;
use symgl_core::select::{ModelScore, TraceRow};
use symgl_core::sim::{MeanSd, OracleResult, SimScenario};
use symgl_core::SolverConfig;

use crate::model::ModelJson;

pub const TRACE_COLUMNS: [&str; 11] = [
    "lambda1",
    "lambda2",
    "edges",
    "density",
    "sym_edges",
    "sym_offdiag",
    "sym_diag",
    "d",
    "loglik",
    "bic",
    "ebic",
];

fn na<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Grid-search trace; infeasible refits show `NA` scores.
pub fn trace_tsv(rows: &[TraceRow]) -> String {
    let mut out = TRACE_COLUMNS.join("\t");
    out.push('\n');
    for r in rows {
        let s: Option<&ModelScore> = r.score.as_ref();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.lambda1,
            r.lambda2,
            r.edges,
            r.density,
            r.sym_edges,
            r.sym_offdiag,
            r.sym_diag,
            na(s.map(|x| x.d)),
            na(s.map(|x| x.loglik)),
            na(s.map(|x| x.bic)),
            na(s.map(|x| x.ebic)),
        );
    }
    out
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "label",
    "criterion",
    "method",
    "lambda1",
    "lambda2",
    "edges",
    "density",
    "sym_edges",
    "sym_offdiag",
    "sym_diag",
];

/// One row per method in the layout of the subject-level result tables.
///
/// The `gl` row is the stage-one pick, where only the edge symmetry is
/// meaningful.
pub fn summary_tsv(label: &str, criterion: &str, gl: Option<&TraceRow>, sgl: &ModelJson) -> String {
    let mut out = SUMMARY_COLUMNS.join("\t");
    out.push('\n');
    if let Some(r) = gl {
        let _ = writeln!(
            out,
            "{label}\t{criterion}\tgl\t{}\t{}\t{}\t{:.4}\t{}\t-\t-",
            r.lambda1,
            r.lambda2,
            r.edges,
            100.0 * r.density,
            r.sym_edges
        );
    }
    let s = sgl.summary();
    let _ = writeln!(
        out,
        "{label}\t{criterion}\tsgl\t{}\t{}\t{}\t{:.4}\t{}\t{}\t{}",
        na(sgl.lambda1),
        na(sgl.lambda2),
        s.edges,
        100.0 * sgl.density(),
        s.sym_edges,
        s.sym_offdiag,
        s.sym_diag
    );
    out
}

/// Per-replicate, per-penalty recovery rows; ratios in percent.
pub fn table1_tsv(res: &OracleResult) -> String {
    let mut out = String::from(
        "replicate\tmethod\tlambda1\tlambda2\tePPV\teTPR\teTNR\tedges\tsPPV\tsTPR\tsTNR\tsTPR+sTNR\tsymm\tconverged\tselected\tmatched\n",
    );
    for rep in &res.replicates {
        for row in &rep.rows {
            let m = &row.metrics;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}",
                rep.replicate,
                row.method.name(),
                row.lambda1,
                row.lambda2,
                m.e_ppv.percent(),
                m.e_tpr.percent(),
                m.e_tnr.percent(),
                m.edges_hat,
                m.s_ppv.percent(),
                m.s_tpr.percent(),
                m.s_tnr.percent(),
                100.0 * m.s_sum(),
                m.symm_hat,
                row.converged,
                row.selected,
                rep.matched
            );
        }
    }
    out
}

fn ms(x: MeanSd) -> String {
    format!("{:.4}\t{:.4}", x.mean, x.sd)
}

/// Means and standard deviations over the replicates that passed the bisection.
pub fn table2_tsv(label: &str, res: &OracleResult) -> String {
    let mut out = String::from("environment\tmethod\treplicates");
    for c in ["ePPV", "eTPR", "eTNR", "edges", "density", "sPPV", "sTPR", "sTNR", "symm"] {
        let _ = write!(out, "\t{c}_mean\t{c}_sd");
    }
    out.push('\n');
    for s in &res.summary {
        let _ = writeln!(
            out,
            "{label}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.method.name(),
            s.replicates,
            ms(s.e_ppv),
            ms(s.e_tpr),
            ms(s.e_tnr),
            ms(s.edges),
            ms(s.density),
            ms(s.s_ppv),
            ms(s.s_tpr),
            ms(s.s_tnr),
            ms(s.symm)
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct ScenarioJson {
    p: usize,
    edge_density: f64,
    sym_fraction: f64,
    n: usize,
    replicates: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SolverJson {
    pub rho1: f64,
    pub rho2: f64,
    pub tol: f64,
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl From<&SolverConfig> for SolverJson {
    fn from(c: &SolverConfig) -> Self {
        SolverJson {
            rho1: c.rho1,
            rho2: c.rho2,
            tol: c.tol,
            inner_tol: c.inner_tol,
            max_outer: c.max_outer,
            max_inner: c.max_inner,
        }
    }
}

#[derive(Debug, Serialize)]
struct ReplicateJson {
    replicate: usize,
    lambda1: f64,
    bisection_steps: usize,
    matched: bool,
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    label: &'a str,
    scenario: ScenarioJson,
    solver: SolverJson,
    true_edges: usize,
    true_sym_pairs: usize,
    flagged: &'a [usize],
    replicates: Vec<ReplicateJson>,
}

/// Scenario, seed and solver settings needed to rerun a simulation.
pub fn sidecar_json(label: &str, scenario: &SimScenario, cfg: &SolverConfig, res: &OracleResult) -> String {
    let sc = Sidecar {
        label,
        scenario: ScenarioJson {
            p: scenario.p,
            edge_density: scenario.edge_density,
            sym_fraction: scenario.sym_fraction,
            n: scenario.n,
            replicates: scenario.replicates,
            seed: scenario.seed,
        },
        solver: cfg.into(),
        true_edges: res.true_edges,
        true_sym_pairs: res.true_sym_pairs,
        flagged: &res.flagged,
        replicates: res
            .replicates
            .iter()
            .map(|r| ReplicateJson {
                replicate: r.replicate,
                lambda1: r.lambda1,
                bisection_steps: r.bisection_steps,
                matched: r.matched,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&sc).expect("sidecar serializes");
    s.push('\n');
    s
}
