use nalgebra::{DMatrix, DVector};

use super::model::ColoredModel;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Maximum likelihood estimate inside a colored model.
#[derive(Debug, Clone, PartialEq)]
pub struct RconFit {
    pub theta: SymMatrix,
    pub eta: Vec<f64>,
    /// `log det Theta - tr(S Theta)`.
    pub loglik: f64,
    /// `n / 2` times `loglik`.
    pub gaussian_loglik: f64,
    pub iterations: usize,
    /// `max_c |tr(T_c (Theta^{-1} - S))|`.
    pub max_residual: f64,
}

const MAX_NEWTON: usize = 200;

fn per_sample_loglik(theta: &SymMatrix, s: &SymMatrix) -> Option<(f64, DMatrix<f64>)> {
    let chol = nalgebra::Cholesky::new(theta.to_dmatrix())?;
    let ld = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Some((ld - s.trace_product(theta), chol.inverse()))
}

/// Newton ascent on the class parameters of `model`.
pub fn rcon_mle(s: &SymMatrix, n: usize, model: &ColoredModel) -> Result<RconFit> {
    let p = model.p();
    if s.dim() != p || n == 0 {
        return Err(Error::invalid(format!(
            "S of dim {} with n = {n} for a model on {p} vertices",
            s.dim()
        )));
    }
    if (0..p).any(|i| !(s.get(i, i) > 0.0) || !s.get(i, i).is_finite()) {
        return Err(Error::invalid("S needs a positive finite diagonal"));
    }
    let classes = model.class_positions();
    let d = classes.len();
    // both orientations of each off-diagonal position
    let directed: Vec<Vec<(usize, usize)>> = classes
        .iter()
        .map(|c| {
            c.iter()
                .flat_map(|&(a, b)| if a == b { vec![(a, a)] } else { vec![(a, b), (b, a)] })
                .collect()
        })
        .collect();
    let s_class: Vec<f64> = directed
        .iter()
        .map(|c| c.iter().map(|&(a, b)| s.get(a, b)).sum())
        .collect();

    let mut eta = vec![0.0; d];
    for (c, pos) in classes.iter().enumerate() {
        if pos[0].0 == pos[0].1 {
            let mean = pos.iter().map(|&(a, _)| s.get(a, a)).sum::<f64>() / pos.len() as f64;
            eta[c] = 1.0 / mean;
        }
    }
    let mut theta = model.assemble(&eta);
    let (mut f, mut sigma) = per_sample_loglik(&theta, s).expect("diagonal start is positive definite");
    let scale = (0..p).map(|i| s.get(i, i)).fold(0.0f64, f64::max).max(1.0);

    for iter in 0..MAX_NEWTON {
        let grad: Vec<f64> = directed
            .iter()
            .zip(&s_class)
            .map(|(c, sc)| c.iter().map(|&(a, b)| sigma[(a, b)]).sum::<f64>() - sc)
            .collect();
        let max_residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if max_residual <= 1e-11 * scale {
            return Ok(RconFit {
                theta,
                eta,
                loglik: f,
                gaussian_loglik: 0.5 * n as f64 * f,
                iterations: iter,
                max_residual,
            });
        }
        // negative Hessian: tr(T_c Sigma T_c' Sigma)
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for c in 0..d {
            for c2 in 0..=c {
                let mut v = 0.0;
                for &(a, b) in &directed[c] {
                    for &(e, g) in &directed[c2] {
                        v += sigma[(b, e)] * sigma[(g, a)];
                    }
                }
                hess[(c, c2)] = v;
                hess[(c2, c)] = v;
            }
        }
        let g = DVector::from_vec(grad);
        let step = hess
            .cholesky()
            .map(|ch| ch.solve(&g))
            .ok_or_else(|| Error::NonConvergence(format!("singular information matrix at iteration {iter}")))?;
        let decrement = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = eta.iter().zip(step.iter()).map(|(e, s)| e + t * s).collect();
            let cand = model.assemble(&trial);
            if let Some((f_new, sig_new)) = per_sample_loglik(&cand, s) {
                if f_new >= f + 0.25 * t * decrement {
                    eta = trial;
                    theta = cand;
                    f = f_new;
                    sigma = sig_new;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        let blown_up = eta.iter().any(|e| !e.is_finite() || e.abs() > 1e12);
        if !accepted || blown_up {
            if decrement.abs() <= 1e-22 * scale && !blown_up {
                break;
            }
            return Err(Error::NonConvergence(format!(
                "likelihood appears unbounded on this model (iteration {iter}, max residual {max_residual:.3e})"
            )));
        }
    }
    let grad_max = directed
        .iter()
        .zip(&s_class)
        .map(|(c, sc)| (c.iter().map(|&(a, b)| sigma[(a, b)]).sum::<f64>() - sc).abs())
        .fold(0.0f64, f64::max);
    if grad_max <= 1e-6 {
        return Ok(RconFit {
            theta,
            eta,
            loglik: f,
            gaussian_loglik: 0.5 * n as f64 * f,
            iterations: MAX_NEWTON,
            max_residual: grad_max,
        });
    }
    Err(Error::NonConvergence(format!(
        "Newton iterations exhausted with max residual {grad_max:.3e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::second_moment;

    fn sample_cov() -> SymMatrix {
        let x = DMatrix::from_fn(40, 4, |r, c| {
            ((r * 31 + c * 17) % 13) as f64 / 6.0 - 1.0 + if c == 1 { 0.3 * ((r * 7) % 5) as f64 } else { 0.0 }
        });
        second_moment(&x).unwrap()
    }

    #[test]
    fn saturated_model_inverts_s() {
        let s = sample_cov();
        let fit = rcon_mle(&s, 40, &ColoredModel::saturated(4)).unwrap();
        let inv = s.inverse().unwrap();
        assert!(fit.theta.max_abs_diff(&inv) < 1e-8);
        assert!((fit.loglik - (inv.log_det().unwrap() - 4.0)).abs() < 1e-10);
        assert!((fit.gaussian_loglik - 20.0 * fit.loglik).abs() < 1e-12);
    }

    #[test]
    fn independence_model_uses_diagonal() {
        let s = sample_cov();
        let fit = rcon_mle(&s, 40, &ColoredModel::independence(4)).unwrap();
        for i in 0..4 {
            assert!((fit.theta.get(i, i) - 1.0 / s.get(i, i)).abs() < 1e-12);
        }
    }

    #[test]
    fn likelihood_equations_hold_for_colored_model() {
        let s = sample_cov();
        let m = ColoredModel::new(4, vec![vec![0, 2], vec![1], vec![3]], vec![vec![(1, 0), (3, 2)], vec![(2, 1)]]).unwrap();
        let fit = rcon_mle(&s, 40, &m).unwrap();
        let sigma = fit.theta.inverse().unwrap();
        for c in 0..m.d() {
            let t = m.basis(c);
            let r = t.trace_product(&sigma) - t.trace_product(&s);
            assert!(r.abs() < 1e-6);
        }
        assert!(fit.max_residual < 1e-6);
    }

    #[test]
    fn singular_s_is_reported() {
        // rank-one S leaves the saturated likelihood unbounded
        let x = DMatrix::from_fn(5, 4, |r, c| (r + 1) as f64 * (c + 1) as f64);
        let s = second_moment(&x).unwrap();
        assert!(matches!(
            rcon_mle(&s, 5, &ColoredModel::saturated(4)),
            Err(Error::NonConvergence(_))
        ));
    }
}
