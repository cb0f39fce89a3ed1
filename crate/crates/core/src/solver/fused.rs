//! Proximal step for the sparse-plus-fused penalty.
//!
//! The Z-update reduces to the fused lasso signal approximator
//!
//! ```text
//! minimize_z  1/2 ||z - b||^2 + l1 ||z||_1 + l2 ||F z||_1,   F = [I  -I  O]
//! ```
//!
//! over stacked vectors. It is solved with `l1 = 0` by an inner ADMM on the
//! generalized lasso form and then soft-thresholded entry-wise by `l1`.

use crate::linalg::{soft_threshold, HemispherePartition, StackedVector, SymMatrix};

/// Inner ADMM variables `v ~ F z` and scaled dual `t`, one entry per fused pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerState {
    pub v: Vec<f64>,
    pub t: Vec<f64>,
}

impl InnerState {
    pub fn zeros(q: usize) -> Self {
        let h = q * (q + 1) / 2;
        InnerState {
            v: vec![0.0; h],
            t: vec![0.0; h],
        }
    }
}

/// Outcome of one inner solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerReport {
    pub iterations: usize,
    pub converged: bool,
}

/// `(I + rho2 F^T F)^{-1} (b + rho2 F^T (v - t))` in closed form.
///
/// Each fused pair `(a, b)` with right-hand side `(r_a, r_b)` maps to
/// `((1 + rho2) r_a + rho2 r_b, rho2 r_a + (1 + rho2) r_b) / (1 + 2 rho2)`;
/// LR-block entries pass through.
pub fn inner_z_step(b: &StackedVector, v: &[f64], t: &[f64], rho2: f64) -> StackedVector {
    let mut z = b.clone();
    let denom = 1.0 + 2.0 * rho2;
    let (ll, rr, _) = z.blocks_mut();
    for k in 0..ll.len() {
        let shift = rho2 * (v[k] - t[k]);
        let ra = ll[k] + shift;
        let rb = rr[k] - shift;
        ll[k] = ((1.0 + rho2) * ra + rho2 * rb) / denom;
        rr[k] = (rho2 * ra + (1.0 + rho2) * rb) / denom;
    }
    z
}

/// Closed-form solution of the two-point problem
/// `min 1/2 (x - a)^2 + 1/2 (y - b)^2 + lambda |x - y|`.
pub fn fused_pair(a: f64, b: f64, lambda: f64) -> (f64, f64) {
    let diff = a - b;
    if diff.abs() <= 2.0 * lambda {
        let m = 0.5 * (a + b);
        (m, m)
    } else {
        let s = diff.signum() * lambda;
        (a - s, b + s)
    }
}

/// Solves the `l1 = 0` problem by ADMM, warm-started from `state`.
///
/// Once the iterates settle, each pair is polished on the active set the ADMM
/// identified: pairs with `v = 0` are set to their exact common mean, the
/// others are shifted by exactly `l2` toward each other (kept only when that
/// preserves the sign of the difference). This makes ties exact.
pub fn solve_fused(
    b: &StackedVector,
    lambda2: f64,
    rho2: f64,
    tol: f64,
    max_iter: usize,
    state: &mut InnerState,
) -> (StackedVector, InnerReport) {
    let h = b.half_len();
    debug_assert_eq!(state.v.len(), h);
    if lambda2 == 0.0 {
        return (
            b.clone(),
            InnerReport {
                iterations: 0,
                converged: true,
            },
        );
    }
    let kappa = lambda2 / rho2;
    let scale = b.as_slice().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut z = b.clone();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        z = inner_z_step(b, &state.v, &state.t, rho2);
        let (ll, rr, _) = z.blocks();
        let mut primal = 0.0f64;
        let mut dual = 0.0f64;
        for k in 0..h {
            let fz = ll[k] - rr[k];
            let v_new = soft_threshold(fz + state.t[k], kappa);
            state.t[k] += fz - v_new;
            primal = primal.max((fz - v_new).abs());
            dual = dual.max(rho2 * (v_new - state.v[k]).abs());
            state.v[k] = v_new;
        }
        if primal <= tol * scale && dual <= tol * scale {
            converged = true;
            break;
        }
    }
    let (b_ll, b_rr, _) = b.blocks();
    let (ll, rr, _) = z.blocks_mut();
    for k in 0..h {
        let d = state.v[k];
        if d == 0.0 {
            let m = 0.5 * (b_ll[k] + b_rr[k]);
            ll[k] = m;
            rr[k] = m;
        } else {
            let s = d.signum() * lambda2;
            let (x, y) = (b_ll[k] - s, b_rr[k] + s);
            if (x - y) * d > 0.0 {
                ll[k] = x;
                rr[k] = y;
            }
        }
    }
    (
        z,
        InnerReport {
            iterations,
            converged,
        },
    )
}

/// Full proximal step: fused solve at `l1 = 0`, then entry-wise soft-threshold by `l1`.
pub fn prox_sparse_fused(
    b: &StackedVector,
    lambda1: f64,
    lambda2: f64,
    rho2: f64,
    tol: f64,
    max_iter: usize,
    state: &mut InnerState,
) -> (StackedVector, InnerReport) {
    let (mut z, report) = solve_fused(b, lambda2, rho2, tol, max_iter, state);
    if lambda1 > 0.0 {
        for x in z.as_mut_slice() {
            *x = soft_threshold(*x, lambda1);
        }
    }
    (z, report)
}

/// Warm-started Z-update used across outer iterations.
#[derive(Debug, Clone)]
pub struct FusedProx {
    part: HemispherePartition,
    lambda1: f64,
    lambda2: f64,
    rho2: f64,
    tol: f64,
    max_iter: usize,
    state: InnerState,
}

impl FusedProx {
    /// `lambda1`, `lambda2` are the already rescaled `lambda / rho1` values.
    pub fn new(
        part: HemispherePartition,
        lambda1: f64,
        lambda2: f64,
        rho2: f64,
        tol: f64,
        max_iter: usize,
    ) -> Self {
        FusedProx {
            part,
            lambda1,
            lambda2,
            rho2,
            tol,
            max_iter,
            state: InnerState::zeros(part.q()),
        }
    }

    pub fn with_state(mut self, state: InnerState) -> Self {
        if state.v.len() == self.state.v.len() {
            self.state = state;
        }
        self
    }

    pub fn state(&self) -> &InnerState {
        &self.state
    }

    /// Prox of the matrix `b`; returns the new `Z`.
    pub fn apply(&mut self, b: &SymMatrix) -> (SymMatrix, InnerReport) {
        let stacked = StackedVector::stack(b, &self.part).expect("dimension checked by caller");
        let (z, report) = prox_sparse_fused(
            &stacked,
            self.lambda1,
            self.lambda2,
            self.rho2,
            self.tol,
            self.max_iter,
            &mut self.state,
        );
        (z.unstack(), report)
    }
}
