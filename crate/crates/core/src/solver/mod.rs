//! Symmetric graphical lasso: penalized Gaussian likelihood with a lasso
//! penalty on all entries and a fused penalty tying each left-block entry to its
//! right-block homolog,
//!
//! ```text
//! -log det T + tr(S T) + l1 ||T||_1 + l2 ||T_LL - T_RR||_1
//! ```
//!
//! solved by a nested ADMM. With `l2 = 0` this is the plain graphical lasso.

mod fused;
mod theta;

pub use fused::{
    fused_pair, inner_z_step, prox_sparse_fused, solve_fused, FusedProx, InnerReport, InnerState,
};
pub use theta::theta_update;

use crate::error::{Error, Result};
use crate::linalg::{HemispherePartition, SymMatrix};

/// Entries closer than this (relative to `max(1, |a|)`) are reported as tied.
pub const TIE_TOL: f64 = 1e-9;
/// Entries with smaller magnitude are reported as zero.
pub const ZERO_TOL: f64 = 1e-9;

#[inline]
pub fn is_tied(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SglProblem {
    pub s: SymMatrix,
    pub n: usize,
    pub part: HemispherePartition,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl SglProblem {
    pub fn new(s: SymMatrix, n: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        let part = HemispherePartition::new(s.dim())?;
        let prob = SglProblem {
            s,
            n,
            part,
            lambda1,
            lambda2,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_lambdas(&self, lambda1: f64, lambda2: f64) -> Self {
        SglProblem {
            lambda1,
            lambda2,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(Error::invalid("sample covariance has non-finite entries"));
        }
        if self.s.dim() != self.part.p() {
            return Err(Error::invalid("sample covariance does not match the partition"));
        }
        if self.n == 0 {
            return Err(Error::invalid("sample size must be positive"));
        }
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) {
            return Err(Error::invalid("penalties must be non-negative"));
        }
        if let Some(i) = self.s.diagonal().iter().position(|&d| d < 0.0) {
            return Err(Error::invalid(format!("negative variance at index {i}")));
        }
        let min_diag = self.s.diagonal().into_iter().fold(f64::INFINITY, f64::min);
        if !(min_diag > 0.0) && self.lambda1 == 0.0 {
            return Err(Error::invalid(
                "a zero variance needs lambda1 > 0 for the minimizer to exist",
            ));
        }
        Ok(())
    }
}

/// ADMM step sizes, tolerances and iteration caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub tol: f64,
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho1: 1.0,
            rho2: 1.0,
            tol: 1e-6,
            inner_tol: 1e-8,
            max_outer: 2000,
            max_inner: 5000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("tol", self.tol),
            ("inner_tol", self.inner_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::invalid("iteration caps must be positive"));
        }
        Ok(())
    }
}

/// Outer ADMM iterates plus the warm-started inner variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub theta: SymMatrix,
    pub z: SymMatrix,
    pub u: SymMatrix,
    pub inner: InnerState,
    pub iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SglSolution {
    /// The `Z` iterate at termination: exactly sparse and exactly tied.
    pub theta_hat: SymMatrix,
    pub objective: f64,
    pub outer_iters: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// `||T^m - T^{m-1}||_F / ||T^{m-1}||_F` at the last iteration.
    pub rel_change: f64,
    /// `||T - Z||_F` at the last iteration.
    pub primal_residual: f64,
    /// Outer iterations whose inner solve hit `max_inner`.
    pub inner_failures: usize,
    pub state: SolverState,
}

/// Penalized negative log-likelihood. `||.||_1` sums all `p * p` entries.
pub fn objective(theta: &SymMatrix, prob: &SglProblem) -> Result<f64> {
    let log_det = theta.log_det()?;
    Ok(-log_det + theta.trace_product(&prob.s) + penalty(theta, prob))
}

fn penalty(theta: &SymMatrix, prob: &SglProblem) -> f64 {
    let q = prob.part.q();
    let mut fused = 0.0;
    for i in 0..q {
        for j in 0..q {
            fused += (theta.get(i, j) - theta.get(i + q, j + q)).abs();
        }
    }
    prob.lambda1 * theta.l1_norm() + prob.lambda2 * fused
}

/// Runs the nested ADMM from `Z = U = 0`.
pub fn fit_sgl(prob: &SglProblem, cfg: &SolverConfig) -> Result<SglSolution> {
    fit_sgl_from(prob, cfg, None)
}

/// Runs the nested ADMM, optionally warm-started from a previous state (e.g. a
/// neighbouring grid point).
pub fn fit_sgl_from(
    prob: &SglProblem,
    cfg: &SolverConfig,
    start: Option<&SolverState>,
) -> Result<SglSolution> {
    prob.validate()?;
    cfg.validate()?;
    let p = prob.part.p();
    // The first Theta of a warm start is a function of the old Z and U only,
    // so it says nothing about the new penalties; comparisons start after it.
    let (mut z, mut u, inner) = match start {
        Some(st) if st.z.dim() == p => (st.z.clone(), st.u.clone(), st.inner.clone()),
        _ => (SymMatrix::zeros(p), SymMatrix::zeros(p), InnerState::zeros(prob.part.q())),
    };
    let mut theta_prev: Option<SymMatrix> = None;
    let mut prox = FusedProx::new(
        prob.part,
        prob.lambda1 / cfg.rho1,
        prob.lambda2 / cfg.rho1,
        cfg.rho2,
        cfg.inner_tol,
        cfg.max_inner,
    )
    .with_state(inner);

    let mut converged = false;
    let mut rel_change = f64::INFINITY;
    let mut inner_failures = 0;
    let mut iter = 0;
    let mut theta = SymMatrix::zeros(p);
    while iter < cfg.max_outer {
        iter += 1;
        theta = theta_update(&z, &u, &prob.s, cfg.rho1)?;
        let b = SymMatrix::from_fn(p, |i, j| theta.get(i, j) + u.get(i, j));
        let (z_new, report) = prox.apply(&b);
        if !report.converged {
            inner_failures += 1;
        }
        z = z_new;
        u = SymMatrix::from_fn(p, |i, j| u.get(i, j) + theta.get(i, j) - z.get(i, j));
        if let Some(prev) = &theta_prev {
            let denom = prev.frobenius_norm();
            let mut diff = SymMatrix::zeros(p);
            for i in 0..p {
                for j in 0..=i {
                    diff.set(i, j, theta.get(i, j) - prev.get(i, j));
                }
            }
            rel_change = diff.frobenius_norm() / denom;
            if rel_change < cfg.tol && z.is_positive_definite() {
                converged = true;
                break;
            }
        }
        theta_prev = Some(theta.clone());
    }

    let primal_residual = {
        let mut acc = SymMatrix::zeros(p);
        for i in 0..p {
            for j in 0..=i {
                acc.set(i, j, theta.get(i, j) - z.get(i, j));
            }
        }
        acc.frobenius_norm()
    };
    // Z is the carrier of exact zeros and ties; fall back to the PD iterate
    // only when Z has not yet become positive definite.
    let theta_hat = if z.is_positive_definite() {
        z.clone()
    } else {
        converged = false;
        theta.clone()
    };
    let objective = objective(&theta_hat, prob)?;
    let kkt_residual = kkt_violation(&theta_hat, prob)?;
    Ok(SglSolution {
        theta_hat,
        objective,
        outer_iters: iter,
        converged,
        kkt_residual,
        rel_change,
        primal_residual,
        inner_failures,
        state: SolverState {
            theta,
            z,
            u,
            inner: prox.state().clone(),
            iter,
        },
    })
}

/// Max-norm violation of the optimality condition for a solution.
pub fn kkt_check(sol: &SglSolution, prob: &SglProblem) -> Result<f64> {
    kkt_violation(&sol.theta_hat, prob)
}

/// Max-norm distance of `T^{-1} - S` from
/// `l1 d||T||_1 + l2 d||T_LL - T_RR||_1`, entry by entry.
pub fn kkt_violation(theta: &SymMatrix, prob: &SglProblem) -> Result<f64> {
    let inv = theta.inverse()?;
    let q = prob.part.q();
    let (l1, l2) = (prob.lambda1, prob.lambda2);
    let g = |i: usize, j: usize| inv.get(i, j) - prob.s.get(i, j);
    let mut worst = 0.0f64;
    // cross-hemisphere block: lasso only
    for i in 0..q {
        for j in q..2 * q {
            worst = worst.max(dist_to_l1_subdiff(g(i, j), theta.get(i, j), l1));
        }
    }
    for j in 0..q {
        for i in j..q {
            let (a, b) = (theta.get(i, j), theta.get(i + q, j + q));
            let (ga, gb) = (g(i, j), g(i + q, j + q));
            let v = if l2 == 0.0 {
                dist_to_l1_subdiff(ga, a, l1).max(dist_to_l1_subdiff(gb, b, l1))
            } else if is_tied(a, b, TIE_TOL) {
                let f = |c: f64| {
                    dist_to_l1_subdiff(ga - l2 * c, a, l1).max(dist_to_l1_subdiff(gb + l2 * c, b, l1))
                };
                minimize_convex(f, -1.0, 1.0)
            } else {
                let c = (a - b).signum();
                dist_to_l1_subdiff(ga - l2 * c, a, l1).max(dist_to_l1_subdiff(gb + l2 * c, b, l1))
            };
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Distance of `x` from `lambda * d|theta|`.
fn dist_to_l1_subdiff(x: f64, theta: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        x.abs()
    } else if theta.abs() <= ZERO_TOL {
        (x.abs() - lambda).max(0.0)
    } else {
        (x - lambda * theta.signum()).abs()
    }
}

/// Ternary search for the minimum of a convex function on `[lo, hi]`.
fn minimize_convex(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(lo).min(f(hi)).min(f(0.5 * (lo + hi)))
}

/// Tie and sparsity counts of an estimate, in homolog-pair units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SymmetrySummary {
    pub edges: usize,
    /// Homolog edge pairs with both edges present.
    pub sym_edges: usize,
    /// Homolog pairs of nonzero off-diagonal entries that are tied.
    pub sym_offdiag: usize,
    /// Tied diagonal homolog pairs.
    pub sym_diag: usize,
}

pub fn symmetry_summary(theta: &SymMatrix, part: &HemispherePartition) -> SymmetrySummary {
    let p = part.p();
    let q = part.q();
    let mut out = SymmetrySummary::default();
    for i in 0..p {
        for j in 0..i {
            if theta.get(i, j).abs() > ZERO_TOL {
                out.edges += 1;
            }
        }
    }
    for i in 0..q {
        if is_tied(theta.get(i, i), theta.get(i + q, i + q), TIE_TOL) {
            out.sym_diag += 1;
        }
        for j in 0..i {
            let a = theta.get(i, j);
            let b = theta.get(i + q, j + q);
            if a.abs() > ZERO_TOL && b.abs() > ZERO_TOL {
                out.sym_edges += 1;
                if is_tied(a, b, TIE_TOL) {
                    out.sym_offdiag += 1;
                }
            }
        }
    }
    out
}
