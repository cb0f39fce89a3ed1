use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::BFGS;
use finitediff::vec as fd;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Shortest series accepted by [`fit_dcs`].
pub const MIN_DCS_LEN: usize = 50;

// exp(14) keeps nu below ~1.2e6, far into the Gaussian regime
const MAX_LOG_NU_EXCESS: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcsStatus {
    Converged,
    NotConverged,
    /// Constant input: the likelihood is unbounded and the parameters are not identified.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcsDiagnostics {
    pub status: DcsStatus,
    pub starts: usize,
    pub iterations: u64,
    pub gradient_norm: f64,
}

/// Student-t location model with score-driven dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsFit {
    pub omega: f64,
    pub phi: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub nu: f64,
    pub mu_path: Vec<f64>,
    pub u_path: Vec<f64>,
    pub residuals: Vec<f64>,
    pub loglik: f64,
    pub diagnostics: DcsDiagnostics,
}

/// Scaled score of the Student-t location.
pub fn dcs_score(v: f64, sigma: f64, nu: f64) -> f64 {
    v / (1.0 + v * v / (nu * sigma * sigma))
}

/// Upper bound on `|dcs_score|` over all `v`.
pub fn dcs_score_bound(sigma: f64, nu: f64) -> f64 {
    (nu * sigma * sigma).sqrt() / 2.0
}

/// Filtered location path and scores for given parameters, started at `x[0]`.
pub fn dcs_filter(x: &[f64], omega: f64, phi: f64, kappa: f64, sigma: f64, nu: f64) -> (Vec<f64>, Vec<f64>) {
    let mut mu = Vec::with_capacity(x.len());
    let mut u = Vec::with_capacity(x.len());
    let mut m = x[0];
    for (t, &xt) in x.iter().enumerate() {
        if t > 0 {
            m = omega + phi * m + kappa * u[t - 1];
        }
        mu.push(m);
        u.push(dcs_score(xt - m, sigma, nu));
    }
    (mu, u)
}

/// Conditional Student-t log-likelihood of the filtered path.
pub fn dcs_loglik(x: &[f64], mu: &[f64], sigma: f64, nu: f64) -> f64 {
    let c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI * sigma * sigma).ln();
    let mut total = 0.0;
    for (xt, mt) in x.iter().zip(mu) {
        let z = (xt - mt) / sigma;
        total += c - (nu + 1.0) / 2.0 * (z * z / nu).ln_1p();
    }
    total
}

#[derive(Debug, Clone, Copy)]
struct Params {
    omega: f64,
    phi: f64,
    kappa: f64,
    sigma: f64,
    nu: f64,
}

fn decode(w: &[f64]) -> Params {
    Params {
        omega: w[0],
        phi: w[1].tanh(),
        kappa: w[2],
        sigma: w[3].exp(),
        nu: 2.0 + w[4].min(MAX_LOG_NU_EXCESS).exp(),
    }
}

struct NegLoglik<'a> {
    x: &'a [f64],
}

impl NegLoglik<'_> {
    fn eval(&self, w: &[f64]) -> f64 {
        let p = decode(w);
        let (mu, _) = dcs_filter(self.x, p.omega, p.phi, p.kappa, p.sigma, p.nu);
        let ll = dcs_loglik(self.x, &mu, p.sigma, p.nu);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    }
}

impl CostFunction for NegLoglik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, w: &Self::Param) -> std::result::Result<f64, ArgminError> {
        Ok(self.eval(w))
    }
}

impl Gradient for NegLoglik<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, w: &Self::Param) -> std::result::Result<Vec<f64>, ArgminError> {
        let f = |p: &Vec<f64>| -> std::result::Result<f64, ArgminError> { Ok(self.eval(p)) };
        let g = fd::central_diff(&f);
        g(w)
    }
}

fn simplex_around(w: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = vec![w.to_vec()];
    for k in 0..w.len() {
        let mut p = w.to_vec();
        p[k] += if k == 0 { 0.1 } else { 0.3 };
        pts.push(p);
    }
    pts
}

fn local_fit(problem: &NegLoglik<'_>, start: Vec<f64>) -> Option<(Vec<f64>, f64, u64)> {
    let nm = NelderMead::new(simplex_around(&start)).with_sd_tolerance(1e-10).ok()?;
    let res = Executor::new(NegLoglik { x: problem.x }, nm)
        .configure(|s| s.max_iters(3000))
        .run()
        .ok()?;
    let mut best = res.state().get_best_param()?.clone();
    let mut best_cost = res.state().get_best_cost();
    let mut iters = res.state().get_iter();
    let n = best.len();
    let h0: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1e-2 } else { 0.0 }).collect())
        .collect();
    let bfgs = BFGS::new(MoreThuenteLineSearch::new()).with_tolerance_grad(1e-8).ok()?;
    if let Ok(r) = Executor::new(NegLoglik { x: problem.x }, bfgs)
        .configure(|s| s.param(best.clone()).inv_hessian(h0).max_iters(200))
        .run()
    {
        iters += r.state().get_iter();
        if let Some(p) = r.state().get_best_param() {
            if r.state().get_best_cost() < best_cost {
                best = p.clone();
                best_cost = r.state().get_best_cost();
            }
        }
    }
    best_cost.is_finite().then_some((best, best_cost, iters))
}

/// Maximum likelihood fit of the score-driven Student-t location model.
pub fn fit_dcs(x: &[f64]) -> Result<DcsFit> {
    let t = x.len();
    if t < MIN_DCS_LEN {
        return Err(Error::invalid(format!(
            "score-driven fit needs at least {MIN_DCS_LEN} observations, got {t}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite observation"));
    }
    let mean = x.iter().sum::<f64>() / t as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64).sqrt();
    if sd <= 1e-12 * mean.abs().max(1.0) {
        return Ok(DcsFit {
            omega: x[0],
            phi: 0.0,
            kappa: 0.0,
            sigma: f64::MIN_POSITIVE,
            nu: 2.0 + MAX_LOG_NU_EXCESS.exp(),
            mu_path: x.to_vec(),
            u_path: vec![0.0; t],
            residuals: vec![0.0; t],
            loglik: f64::INFINITY,
            diagnostics: DcsDiagnostics {
                status: DcsStatus::Degenerate,
                starts: 0,
                iterations: 0,
                gradient_norm: 0.0,
            },
        });
    }

    // fit on the standardized series, then map back
    let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let problem = NegLoglik { x: &z };
    let starts: [[f64; 3]; 3] = [[0.0, 0.3, 5.0], [0.5, 0.5, 10.0], [0.9, 0.8, 30.0]];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    for s in &starts {
        let w0 = vec![0.0, s[0].atanh(), s[1], 0.0, (s[2] - 2.0).ln()];
        if let Some((w, c, it)) = local_fit(&problem, w0) {
            iterations += it;
            if best.as_ref().is_none_or(|b| c < b.1) {
                best = Some((w, c));
            }
        }
    }
    let (w, _) = best.ok_or_else(|| Error::NonConvergence("no start produced a finite likelihood".into()))?;
    let grad = problem.gradient(&w).unwrap_or_default();
    // the nu direction is flat once it saturates
    let gradient_norm = grad
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != 4 || w[4] < MAX_LOG_NU_EXCESS)
        .map(|(_, g)| g * g)
        .sum::<f64>()
        .sqrt();
    let status = if gradient_norm < 1e-3 * (t as f64).sqrt() {
        DcsStatus::Converged
    } else {
        DcsStatus::NotConverged
    };

    let p = decode(&w);
    let omega = sd * p.omega + mean * (1.0 - p.phi);
    let kappa = p.kappa;
    let sigma = sd * p.sigma;
    let (mu_path, u_path) = dcs_filter(x, omega, p.phi, kappa, sigma, p.nu);
    let residuals: Vec<f64> = x.iter().zip(&mu_path).map(|(a, b)| a - b).collect();
    let loglik = dcs_loglik(x, &mu_path, sigma, p.nu);
    Ok(DcsFit {
        omega,
        phi: p.phi,
        kappa,
        sigma,
        nu: p.nu,
        mu_path,
        u_path,
        residuals,
        loglik,
        diagnostics: DcsDiagnostics {
            status,
            starts: starts.len(),
            iterations,
            gradient_norm,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, StudentT};

    #[test]
    fn score_examples() {
        assert!((dcs_score(1.0, 1.0, 5.0) - 5.0 / 6.0).abs() < 1e-15);
        assert!((dcs_score(1.0, 1.0, 1e6) - 1.0).abs() < 1e-5);
        assert!(dcs_score(2.0, 1.0, 4.0).abs() <= dcs_score_bound(1.0, 4.0) + 1e-15);
    }

    #[test]
    fn short_and_constant_series() {
        assert!(fit_dcs(&[1.0; 49]).is_err());
        let fit = fit_dcs(&[2.5; 80]).unwrap();
        assert_eq!(fit.diagnostics.status, DcsStatus::Degenerate);
        assert!(fit.residuals.iter().all(|r| *r == 0.0));
        assert!(fit.mu_path.iter().all(|m| *m == 2.5));
    }

    fn simulate(t: usize, heavy: bool, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tdist = StudentT::new(3.0).unwrap();
        let (omega, phi, kappa, sigma, nu) = (0.2, 0.9, 0.6, 1.0, 3.0);
        let mut m = omega / (1.0 - phi);
        let mut x = Vec::with_capacity(t);
        for _ in 0..t {
            let e: f64 = if heavy {
                tdist.sample(&mut rng)
            } else {
                StandardNormal.sample(&mut rng)
            };
            let xt = m + sigma * e;
            let u = dcs_score(xt - m, sigma, if heavy { nu } else { 1e12 });
            x.push(xt);
            m = omega + phi * m + kappa * u;
        }
        x
    }

    #[test]
    fn fitted_paths_respect_invariants() {
        let x = simulate(404, true, 4);
        let fit = fit_dcs(&x).unwrap();
        assert!(fit.phi.abs() < 1.0 && fit.sigma > 0.0 && fit.nu > 2.0);
        let bound = dcs_score_bound(fit.sigma, fit.nu);
        for (k, u) in fit.u_path.iter().enumerate() {
            assert!(u.abs() <= bound * (1.0 + 1e-12));
            let v = x[k] - fit.mu_path[k];
            assert!((u - dcs_score(v, fit.sigma, fit.nu)).abs() < 1e-12);
            assert_eq!(fit.residuals[k], v);
        }
        assert!(fit.nu < 20.0, "heavy tails should be detected, nu = {}", fit.nu);
        assert!((fit.phi - 0.9).abs() < 0.15);
    }

    #[test]
    fn reported_loglik_beats_true_parameters() {
        let x = simulate(300, true, 8);
        let fit = fit_dcs(&x).unwrap();
        let (mu, _) = dcs_filter(&x, 0.2, 0.9, 0.6, 1.0, 3.0);
        assert!(fit.loglik >= dcs_loglik(&x, &mu, 1.0, 3.0) - 1e-6);
        let (mu_fit, _) = dcs_filter(&x, fit.omega, fit.phi, fit.kappa, fit.sigma, fit.nu);
        assert!((fit.loglik - dcs_loglik(&x, &mu_fit, fit.sigma, fit.nu)).abs() < 1e-9);
    }

    #[test]
    fn gaussian_data_gives_large_nu() {
        for seed in 0..3 {
            let fit = fit_dcs(&simulate(1000, false, 100 + seed)).unwrap();
            assert!(fit.nu >= 50.0, "seed {seed}: nu = {}", fit.nu);
        }
    }
}
