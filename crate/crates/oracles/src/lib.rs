//! Reference solvers that share no code with `symgl-core`.
//!
//! Each routine attacks the same problem as a production routine by a
//! different route (block coordinate descent, the Lagrange dual, active-set
//! enumeration) so the test suites can compare the two.

use nalgebra::{Cholesky, DMatrix};

fn soft(x: f64, k: f64) -> f64 {
    if x > k {
        x - k
    } else if x < -k {
        x + k
    } else {
        0.0
    }
}

/// Graphical lasso by block coordinate descent on the covariance, with the
/// penalty on every entry including the diagonal (`W_ii = s_ii + lambda`).
pub fn glasso_reference(s: &DMatrix<f64>, lambda: f64, tol: f64, max_sweeps: usize) -> DMatrix<f64> {
    let p = s.nrows();
    let mut w = s.clone();
    for i in 0..p {
        w[(i, i)] = s[(i, i)] + lambda;
    }
    let mut betas = vec![vec![0.0; p - 1]; p];
    for _ in 0..max_sweeps {
        let mut change = 0.0f64;
        for j in 0..p {
            let idx: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let beta = &mut betas[j];
            // lasso: min 1/2 b' W11 b - s12' b + lambda ||b||_1
            for _ in 0..10_000 {
                let mut delta = 0.0f64;
                for (a, &ka) in idx.iter().enumerate() {
                    let mut r = s[(ka, j)];
                    for (c, &kc) in idx.iter().enumerate() {
                        if c != a {
                            r -= w[(ka, kc)] * beta[c];
                        }
                    }
                    let new = soft(r, lambda) / w[(ka, ka)];
                    delta = delta.max((new - beta[a]).abs());
                    beta[a] = new;
                }
                if delta < tol * 1e-2 {
                    break;
                }
            }
            for &ka in idx.iter() {
                let mut v = 0.0;
                for (c, &kc) in idx.iter().enumerate() {
                    v += w[(ka, kc)] * beta[c];
                }
                change = change.max((v - w[(ka, j)]).abs());
                w[(ka, j)] = v;
                w[(j, ka)] = v;
            }
        }
        if change < tol {
            break;
        }
    }
    let mut theta = DMatrix::zeros(p, p);
    for j in 0..p {
        let idx: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        let beta = &betas[j];
        let mut wb = 0.0;
        for (a, &ka) in idx.iter().enumerate() {
            wb += w[(ka, j)] * beta[a];
        }
        let tjj = 1.0 / (w[(j, j)] - wb);
        theta[(j, j)] = tjj;
        for (a, &ka) in idx.iter().enumerate() {
            theta[(ka, j)] = -beta[a] * tjj;
        }
    }
    (&theta + theta.transpose()) / 2.0
}

/// Penalized objective `-log det T + tr(S T) + l1 ||T||_1 + l2 ||T_LL - T_RR||_1`
/// evaluated on a dense matrix; `None` when `T` is not positive definite.
pub fn sgl_objective(theta: &DMatrix<f64>, s: &DMatrix<f64>, l1: f64, l2: f64) -> Option<f64> {
    let p = theta.nrows();
    let q = p / 2;
    let chol = Cholesky::new(theta.clone())?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let tr = (s * theta).trace();
    let l1n: f64 = theta.iter().map(|x| x.abs()).sum();
    let mut fused = 0.0;
    for i in 0..q {
        for j in 0..q {
            fused += (theta[(i, j)] - theta[(i + q, j + q)]).abs();
        }
    }
    Some(-log_det + tr + l1 * l1n + l2 * fused)
}

/// Result of the dual ascent oracle.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    /// Primal point recovered from the dual, `(S + W)^{-1}`.
    pub theta: DMatrix<f64>,
    /// Dual objective: a lower bound on the primal minimum.
    pub dual_value: f64,
    /// Primal objective at `theta`: an upper bound.
    pub primal_value: f64,
}

impl DualCertificate {
    pub fn gap(&self) -> f64 {
        self.primal_value - self.dual_value
    }
}

/// Solves the Lagrange dual
/// `max log det(S + l1 A + l2 blkdiag(B, -B)) + p` over `|A_ij| <= 1`, `|B_ij| <= 1`
/// by projected gradient ascent with backtracking.
pub fn sgl_dual_oracle(s: &DMatrix<f64>, l1: f64, l2: f64, max_iter: usize) -> DualCertificate {
    let p = s.nrows();
    let q = p / 2;
    let build = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        let mut w = s + a * l1;
        for i in 0..q {
            for j in 0..q {
                w[(i, j)] += l2 * b[(i, j)];
                w[(i + q, j + q)] -= l2 * b[(i, j)];
            }
        }
        w
    };
    let value = |w: &DMatrix<f64>| -> Option<(f64, DMatrix<f64>)> {
        let chol = Cholesky::new(w.clone())?;
        let ld: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Some((ld + p as f64, chol.inverse()))
    };
    let clamp = |m: &mut DMatrix<f64>| {
        for x in m.iter_mut() {
            *x = x.clamp(-1.0, 1.0);
        }
    };
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut b = DMatrix::<f64>::zeros(q, q);
    let (mut f, mut sigma) = value(&build(&a, &b)).expect("S must be positive definite for the dual oracle");
    let mut step = 1.0;
    for _ in 0..max_iter {
        let ga = &sigma * l1;
        let mut gb = DMatrix::zeros(q, q);
        for i in 0..q {
            for j in 0..q {
                gb[(i, j)] = l2 * (sigma[(i, j)] - sigma[(i + q, j + q)]);
            }
        }
        let mut accepted = false;
        step *= 2.0;
        for _ in 0..60 {
            let mut a_new = &a + &ga * step;
            let mut b_new = &b + &gb * step;
            clamp(&mut a_new);
            clamp(&mut b_new);
            if let Some((f_new, s_new)) = value(&build(&a_new, &b_new)) {
                let da = &a_new - &a;
                let db = &b_new - &b;
                let lin = ga.dot(&da) + gb.dot(&db);
                let sq = da.norm_squared() + db.norm_squared();
                if f_new >= f + lin - sq / (2.0 * step) {
                    let moved = sq.sqrt();
                    a = a_new;
                    b = b_new;
                    f = f_new;
                    sigma = s_new;
                    accepted = true;
                    if moved < 1e-15 {
                        step = step.max(1.0);
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let theta = (&sigma + sigma.transpose()) / 2.0;
    let primal_value = sgl_objective(&theta, s, l1, l2).expect("inverse of a PD matrix is PD");
    DualCertificate {
        theta,
        dual_value: f,
        primal_value,
    }
}

/// Minimizes `1/2 ||z - b||^2 + l1 ||z||_1 + l2 ||F z||_1` with
/// `F = [I -I O]` acting on `[LL | RR | LR]` blocks of sizes `h, h, rest`,
/// through its box-constrained dual solved by restarted FISTA.
pub fn fused_qp_oracle(b: &[f64], h: usize, l1: f64, l2: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    // dual variable u = [u1 (n, scaled by l1) | u2 (h, scaled by l2)], |u| <= 1
    let dt = |u: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = u[..n].iter().map(|x| l1 * x).collect();
        for k in 0..h {
            out[k] += l2 * u[n + k];
            out[h + k] -= l2 * u[n + k];
        }
        out
    };
    let lip = l1 * l1 + 2.0 * l2 * l2;
    if lip == 0.0 {
        return b.to_vec();
    }
    let step = 1.0 / lip;
    let mut u = vec![0.0; n + h];
    let mut y = u.clone();
    let mut t = 1.0f64;
    let mut z_prev = b.to_vec();
    for _ in 0..max_iter {
        // gradient of 1/2 ||b - D^T y||^2 is -D (b - D^T y)
        let r: Vec<f64> = b.iter().zip(dt(&y)).map(|(bi, di)| bi - di).collect();
        let mut g = vec![0.0; n + h];
        for i in 0..n {
            g[i] = -l1 * r[i];
        }
        for k in 0..h {
            g[n + k] = -l2 * (r[k] - r[h + k]);
        }
        let u_new: Vec<f64> = y
            .iter()
            .zip(&g)
            .map(|(yi, gi)| (yi - step * gi).clamp(-1.0, 1.0))
            .collect();
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_new;
        // gradient-based restart keeps the iteration monotone near the solution
        let restart = g
            .iter()
            .zip(u_new.iter().zip(&u))
            .map(|(gi, (un, uo))| gi * (un - uo))
            .sum::<f64>()
            > 0.0;
        if restart {
            y = u_new.clone();
            t = 1.0;
        } else {
            y = u_new
                .iter()
                .zip(&u)
                .map(|(un, uo)| un + momentum * (un - uo))
                .collect();
            t = t_new;
        }
        u = u_new;
        let z: Vec<f64> = b.iter().zip(dt(&u)).map(|(bi, di)| bi - di).collect();
        let moved = z
            .iter()
            .zip(&z_prev)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        z_prev = z;
        if moved < 1e-15 && !restart {
            break;
        }
    }
    z_prev
}

/// Exact minimizer of `1/2 (x-a)^2 + 1/2 (y-b)^2 + l1 (|x| + |y|) + l2 |x - y|`
/// by enumerating every sign/tie pattern and keeping the best candidate.
pub fn fused_pair_enumeration(a: f64, b: f64, l1: f64, l2: f64) -> (f64, f64) {
    let f = |x: f64, y: f64| {
        0.5 * (x - a).powi(2) + 0.5 * (y - b).powi(2) + l1 * (x.abs() + y.abs()) + l2 * (x - y).abs()
    };
    let signs = [-1.0, 1.0];
    let mut cands = vec![(0.0, 0.0)];
    for &sx in &signs {
        for &sy in &signs {
            for &sd in &signs {
                cands.push((a - l1 * sx - l2 * sd, b - l1 * sy + l2 * sd));
            }
        }
        cands.push((0.0, b - (l1 + l2) * sx));
        cands.push((a - (l1 + l2) * sx, 0.0));
        let m = 0.5 * (a + b) - l1 * sx;
        cands.push((m, m));
    }
    cands
        .into_iter()
        .min_by(|p, q| f(p.0, p.1).total_cmp(&f(q.0, q.1)))
        .unwrap()
}
