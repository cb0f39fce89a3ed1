//! Solver output checked against reference routines from `symgl-oracles`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symgl_core::solver::{
    fit_sgl, fit_sgl_from, kkt_check, prox_sparse_fused, symmetry_summary, InnerState, SglProblem, SolverConfig,
};
use symgl_core::{second_moment, HemispherePartition, StackedVector, SymMatrix};
use symgl_oracles::{fused_pair_enumeration, fused_qp_oracle, glasso_reference, sgl_dual_oracle};

fn random_covariance(rng: &mut ChaCha8Rng, p: usize, n: usize) -> SymMatrix {
    // a sparse-ish ground truth gives the penalty something to find
    let mut theta = DMatrix::<f64>::identity(p, p) * 1.5;
    for i in 0..p {
        for j in 0..i {
            if rng.random_bool(0.3) {
                let v = rng.random_range(-0.3..0.3);
                theta[(i, j)] = v;
                theta[(j, i)] = v;
            }
        }
        theta[(i, i)] += theta.row(i).iter().map(|x| x.abs()).sum::<f64>() * 0.5;
    }
    let sigma = theta.try_inverse().unwrap();
    let l = sigma.cholesky().unwrap().unpack();
    let z = DMatrix::from_fn(n, p, |_, _| {
        let u1: f64 = rng.random_range(1e-12..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let x = z * l.transpose();
    second_moment(&x).unwrap()
}

fn max_offdiag(s: &SymMatrix) -> f64 {
    let mut m = 0.0f64;
    for i in 0..s.dim() {
        for j in 0..i {
            m = m.max(s.get(i, j).abs());
        }
    }
    m
}

#[test]
fn lambda2_zero_matches_block_coordinate_glasso() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SolverConfig::default();
    for trial in 0..20 {
        let p = if trial % 2 == 0 { 6 } else { 10 };
        let s = random_covariance(&mut rng, p, 100);
        let lambda = max_offdiag(&s) * rng.random_range(0.1..0.6);
        let prob = SglProblem::new(s.clone(), 100, lambda, 0.0).unwrap();
        let sol = fit_sgl(&prob, &cfg).unwrap();
        assert!(sol.converged);
        let reference = glasso_reference(&s.to_dmatrix(), lambda, 1e-12, 10_000);
        let diff = (sol.theta_hat.to_dmatrix() - reference).amax();
        assert!(diff < 1e-4, "trial {trial}: max diff {diff}");
        assert!(sol.kkt_residual < 1e-4);
    }
}

#[test]
fn objective_matches_dual_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cfg = SolverConfig::default();
    for trial in 0..10 {
        let s = random_covariance(&mut rng, 4, 30);
        let (l1, l2) = (0.2 * max_offdiag(&s).max(0.2), 0.3 * max_offdiag(&s).max(0.2));
        let prob = SglProblem::new(s.clone(), 30, l1, l2).unwrap();
        let sol = fit_sgl(&prob, &cfg).unwrap();
        let cert = sgl_dual_oracle(&s.to_dmatrix(), l1, l2, 50_000);
        // the optimum lies in [dual_value, primal_value]
        assert!(cert.gap() < 1e-7, "oracle gap {}", cert.gap());
        let err = (sol.objective - cert.dual_value).abs() + cert.gap();
        assert!(err < 1e-6, "trial {trial}: objective gap {err}");
        assert!(kkt_check(&sol, &prob).unwrap() < 1e-4);
    }
}

#[test]
fn fixed_problem_objective_against_oracle() {
    let s = SymMatrix::from_fn(4, |i, j| {
        let m = [
            [1.0, 0.35, 0.2, 0.05],
            [0.35, 1.3, 0.15, 0.3],
            [0.2, 0.15, 0.9, 0.32],
            [0.05, 0.3, 0.32, 1.1],
        ];
        m[i][j]
    });
    let prob = SglProblem::new(s.clone(), 50, 0.2, 0.3).unwrap();
    let sol = fit_sgl(&prob, &SolverConfig::default()).unwrap();
    let cert = sgl_dual_oracle(&s.to_dmatrix(), 0.2, 0.3, 50_000);
    assert!(cert.gap() < 1e-7);
    assert!((sol.objective - cert.dual_value).abs() + cert.gap() < 1e-6);
}

#[test]
fn prox_matches_qp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let part = HemispherePartition::new(4).unwrap();
    for _ in 0..10 {
        let b = StackedVector::from_values(2, (0..10).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let mut st = InnerState::zeros(part.q());
        let (z, rep) = prox_sparse_fused(&b, 0.3, 0.4, 1.0, 1e-8, 5000, &mut st);
        assert!(rep.converged);
        let oracle = fused_qp_oracle(b.as_slice(), 3, 0.3, 0.4, 500_000);
        for (a, o) in z.as_slice().iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-5);
        }
    }
}

#[test]
fn prox_matches_qp_oracle_three_per_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let len = StackedVector::expected_len(3);
    for trial in 0..20 {
        let b = StackedVector::from_values(3, (0..len).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let (l1, l2) = (rng.random_range(0.05..1.0), rng.random_range(0.05..1.5));
        let mut st = InnerState::zeros(3);
        let (z, rep) = prox_sparse_fused(&b, l1, l2, 1.0, 1e-10, 20_000, &mut st);
        assert!(rep.converged);
        let oracle = fused_qp_oracle(b.as_slice(), 6, l1, l2, 2_000_000);
        let err = z.as_slice().iter().zip(&oracle).map(|(a, o)| (a - o).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "trial {trial}: max diff {err}");
    }
}

#[test]
fn warm_start_lands_on_the_cold_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let cfg = SolverConfig::default();
    let s = random_covariance(&mut rng, 10, 150);
    let lmax = max_offdiag(&s);
    let from = fit_sgl(&SglProblem::new(s.clone(), 150, 0.6 * lmax, 0.0).unwrap(), &cfg).unwrap();
    for (l1, l2) in [(0.2 * lmax, 0.0), (0.6 * lmax, 0.5 * lmax), (0.1 * lmax, 0.05 * lmax)] {
        let prob = SglProblem::new(s.clone(), 150, l1, l2).unwrap();
        let cold = fit_sgl(&prob, &cfg).unwrap();
        let warm = fit_sgl_from(&prob, &cfg, Some(&from.state)).unwrap();
        assert!(warm.outer_iters > 1);
        assert!(warm.theta_hat.max_abs_diff(&cold.theta_hat) < 1e-4);
        assert_eq!(symmetry_summary(&warm.theta_hat, &part10()), symmetry_summary(&cold.theta_hat, &part10()));
    }
}

fn part10() -> HemispherePartition {
    HemispherePartition::new(10).unwrap()
}

#[test]
fn prox_pairs_match_enumeration_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(-3.0..3.0);
        let l2 = rng.random_range(0.0..2.0);
        let v = StackedVector::from_values(1, vec![a, b, 0.0]).unwrap();
        let mut st = InnerState::zeros(1);
        let (z, _) = prox_sparse_fused(&v, 0.0, l2, 1.0, 1e-8, 5000, &mut st);
        let (x, y) = fused_pair_enumeration(a, b, 0.0, l2);
        assert!((z.as_slice()[0] - x).abs() <= 1e-8 && (z.as_slice()[1] - y).abs() <= 1e-8);
    }
}

#[test]
fn penalty_paths_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = SolverConfig::default();
    let s = random_covariance(&mut rng, 10, 200);
    let part = HemispherePartition::new(10).unwrap();
    let lmax = max_offdiag(&s);
    let mut last_edges = usize::MAX;
    for k in 0..8 {
        let l1 = lmax * (0.05 + 0.12 * k as f64);
        let sol = fit_sgl(&SglProblem::new(s.clone(), 200, l1, 0.0).unwrap(), &cfg).unwrap();
        let e = symmetry_summary(&sol.theta_hat, &part).edges;
        assert!(e <= last_edges, "edges increased from {last_edges} to {e}");
        last_edges = e;
    }
    let l1 = 0.2 * lmax;
    let mut last_ties = 0;
    for k in 0..10 {
        let l2 = l1 * 10f64.powf(-3.0 + 4.0 * k as f64 / 9.0);
        let sol = fit_sgl(&SglProblem::new(s.clone(), 200, l1, l2).unwrap(), &cfg).unwrap();
        let summary = symmetry_summary(&sol.theta_hat, &part);
        let ties = count_all_ties(&sol.theta_hat, &part);
        assert!(ties >= last_ties, "ties dropped from {last_ties} to {ties} ({summary:?})");
        last_ties = ties;
    }
}

fn count_all_ties(theta: &SymMatrix, part: &HemispherePartition) -> usize {
    let q = part.q();
    part.vech_positions()
        .into_iter()
        .filter(|&(i, j)| theta.get(i, j) == theta.get(i + q, j + q))
        .count()
}
