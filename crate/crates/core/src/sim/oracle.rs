use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{compute_metrics_theta, MetricsReport};
use super::truth::{gen_graph, gen_precision, sample_mvn, GroundTruth};
use crate::error::{Error, Result};
use crate::linalg::{second_moment, HemispherePartition};
use crate::select::{log_grid, max_offdiag};
use crate::solver::{fit_sgl_from, symmetry_summary, SglProblem, SglSolution, SolverConfig};

const BISECTION_STEPS: usize = 40;
const LAMBDA2_POINTS: usize = 10;

/// Parameters of one simulated environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimScenario {
    pub p: usize,
    pub edge_density: f64,
    pub sym_fraction: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl SimScenario {
    /// Sparser setting: 23.1% edges, 10.8% tied pairs.
    pub fn scenario_a(seed: u64) -> Self {
        SimScenario {
            p: 70,
            edge_density: 0.231,
            sym_fraction: 0.108,
            n: 400,
            replicates: 9,
            seed,
        }
    }

    /// Denser setting: 31.6% edges, 30.1% tied pairs.
    pub fn scenario_b(seed: u64) -> Self {
        SimScenario {
            p: 70,
            edge_density: 0.316,
            sym_fraction: 0.301,
            n: 400,
            replicates: 9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        HemispherePartition::new(self.p)?;
        if !(self.edge_density > 0.0 && self.edge_density < 1.0) {
            return Err(Error::invalid("edge density must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.sym_fraction) {
            return Err(Error::invalid("symmetric fraction must lie in [0, 1]"));
        }
        if self.n < 2 || self.replicates == 0 {
            return Err(Error::invalid("need n >= 2 and at least one replicate"));
        }
        Ok(())
    }

    /// Ground truth and the RNG stream of replicate `r` are derived from `seed`.
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        self.validate()?;
        let part = HemispherePartition::new(self.p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let graph = gen_graph(self.p, self.edge_density, &mut rng)?;
        gen_precision(&graph, &part, self.sym_fraction, &mut rng)
    }

    pub fn replicate_rng(&self, r: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r as u64 + 1);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gl,
    Sgl,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Gl => "gl",
            Method::Sgl => "sgl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub replicate: usize,
    pub method: Method,
    pub lambda1: f64,
    pub lambda2: f64,
    pub metrics: MetricsReport,
    pub converged: bool,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub lambda1: f64,
    pub bisection_steps: usize,
    /// Edge count of the matched fit is within one of the truth.
    pub matched: bool,
    /// The gl row followed by one sgl row per `lambda2`.
    pub rows: Vec<OracleRow>,
}

impl ReplicateResult {
    pub fn gl(&self) -> &OracleRow {
        &self.rows[0]
    }

    pub fn selected(&self) -> &OracleRow {
        self.rows.iter().find(|r| r.selected).expect("one row is always selected")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return MeanSd { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

/// Means and standard deviations across replicates; ratios in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub replicates: usize,
    pub e_ppv: MeanSd,
    pub e_tpr: MeanSd,
    pub e_tnr: MeanSd,
    pub edges: MeanSd,
    pub density: MeanSd,
    pub s_ppv: MeanSd,
    pub s_tpr: MeanSd,
    pub s_tnr: MeanSd,
    pub symm: MeanSd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub scenario: SimScenario,
    pub true_edges: usize,
    pub true_sym_pairs: usize,
    pub replicates: Vec<ReplicateResult>,
    /// Replicates whose bisection failed; excluded from the summary.
    pub flagged: Vec<usize>,
    /// `[gl, sgl]`.
    pub summary: [SummaryRow; 2],
}

fn summarize(method: Method, rows: &[&OracleRow], p: usize) -> SummaryRow {
    let col = |f: &dyn Fn(&MetricsReport) -> f64| -> MeanSd {
        MeanSd::of(&rows.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    let total = (p * (p - 1) / 2) as f64;
    SummaryRow {
        method,
        replicates: rows.len(),
        e_ppv: col(&|m| m.e_ppv.percent()),
        e_tpr: col(&|m| m.e_tpr.percent()),
        e_tnr: col(&|m| m.e_tnr.percent()),
        edges: col(&|m| m.edges_hat as f64),
        density: col(&|m| 100.0 * m.edges_hat as f64 / total),
        s_ppv: col(&|m| m.s_ppv.percent()),
        s_tpr: col(&|m| m.s_tpr.percent()),
        s_tnr: col(&|m| m.s_tnr.percent()),
        symm: col(&|m| m.symm_hat as f64),
    }
}

fn edge_count(sol: &SglSolution, part: &HemispherePartition) -> usize {
    symmetry_summary(&sol.theta_hat, part).edges
}

/// One replicate of the oracle protocol on a fixed ground truth.
pub fn oracle_replicate(
    truth: &GroundTruth,
    scenario: &SimScenario,
    replicate: usize,
    cfg: &SolverConfig,
) -> Result<ReplicateResult> {
    let part = HemispherePartition::new(scenario.p)?;
    let mut rng = scenario.replicate_rng(replicate);
    let x = sample_mvn(&truth.theta, scenario.n, &mut rng)?;
    let s = second_moment(&x)?;
    let target = truth.graph.len();
    let base = SglProblem::new(s.clone(), scenario.n, max_offdiag(&s), 0.0)?;

    // edge count falls as lambda1 grows
    let (mut lo, mut hi) = ((max_offdiag(&s) * 1e-4).ln(), max_offdiag(&s).ln());
    let mut state = None;
    let mut best: Option<(f64, SglSolution, usize)> = None;
    let mut steps = 0;
    let mut matched = false;
    while steps < BISECTION_STEPS {
        steps += 1;
        let l1 = (0.5 * (lo + hi)).exp();
        let sol = fit_sgl_from(&base.with_lambdas(l1, 0.0), cfg, state.as_ref())?;
        let e = edge_count(&sol, &part);
        state = Some(sol.state.clone());
        let gap = e.abs_diff(target);
        if best.as_ref().is_none_or(|b| gap < b.2) {
            best = Some((l1, sol, gap));
        }
        if gap <= 1 {
            matched = true;
            break;
        }
        if e > target {
            lo = l1.ln();
        } else {
            hi = l1.ln();
        }
    }
    let (l1, gl, _) = best.expect("at least one bisection step");
    let mut rows = vec![OracleRow {
        replicate,
        method: Method::Gl,
        lambda1: l1,
        lambda2: 0.0,
        metrics: compute_metrics_theta(truth, &part, &gl.theta_hat)?,
        converged: gl.converged,
        selected: false,
    }];
    let mut warm = gl.state.clone();
    for l2 in log_grid(1e-3 * l1, 10.0 * l1, LAMBDA2_POINTS)? {
        let sol = fit_sgl_from(&base.with_lambdas(l1, l2), cfg, Some(&warm))?;
        rows.push(OracleRow {
            replicate,
            method: Method::Sgl,
            lambda1: l1,
            lambda2: l2,
            metrics: compute_metrics_theta(truth, &part, &sol.theta_hat)?,
            converged: sol.converged,
            selected: false,
        });
        warm = sol.state;
    }
    let pick = (1..rows.len())
        .fold(1, |b, k| if rows[k].metrics.s_sum() > rows[b].metrics.s_sum() { k } else { b });
    rows[pick].selected = true;
    Ok(ReplicateResult {
        replicate,
        lambda1: l1,
        bisection_steps: steps,
        matched,
        rows,
    })
}

/// Oracle-tuned comparison of the graphical lasso and its symmetric variant.
pub fn oracle_experiment(scenario: &SimScenario, cfg: &SolverConfig) -> Result<OracleResult> {
    scenario.validate()?;
    cfg.validate()?;
    let truth = scenario.ground_truth()?;
    let replicates: Vec<ReplicateResult> = (0..scenario.replicates)
        .into_par_iter()
        .map(|r| oracle_replicate(&truth, scenario, r, cfg))
        .collect::<Result<_>>()?;
    let flagged: Vec<usize> = replicates.iter().filter(|r| !r.matched).map(|r| r.replicate).collect();
    for r in &flagged {
        log::warn!("replicate {r}: edge-count bisection did not reach the target; excluded");
    }
    let kept: Vec<&ReplicateResult> = replicates.iter().filter(|r| r.matched).collect();
    let gl: Vec<&OracleRow> = kept.iter().map(|r| r.gl()).collect();
    let sgl: Vec<&OracleRow> = kept.iter().map(|r| r.selected()).collect();
    Ok(OracleResult {
        scenario: *scenario,
        true_edges: truth.graph.len(),
        true_sym_pairs: truth.sym_pairs.len(),
        summary: [summarize(Method::Gl, &gl, scenario.p), summarize(Method::Sgl, &sgl, scenario.p)],
        replicates,
        flagged,
    })
}
