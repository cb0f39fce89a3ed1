//! Oracle protocol at desk scale.

use std::time::Instant;

use symgl_core::sim::{oracle_experiment, Method, SimScenario};
use symgl_core::SolverConfig;

fn desk() -> SimScenario {
    SimScenario {
        p: 20,
        edge_density: 0.231,
        sym_fraction: 0.108,
        n: 200,
        replicates: 5,
        seed: 20,
    }
}

#[test]
fn desk_scale_orderings() {
    let start = Instant::now();
    let res = oracle_experiment(&desk(), &SolverConfig::default()).unwrap();
    eprintln!("desk run took {:?}", start.elapsed());
    let [gl, sgl] = res.summary;
    assert_eq!(gl.method, Method::Gl);
    eprintln!("{gl:?}\n{sgl:?}");
    assert!(gl.e_tpr.mean > sgl.e_tpr.mean);
    assert!(sgl.e_tnr.mean > gl.e_tnr.mean);
    for r in &res.replicates {
        assert_eq!(r.rows[1].metrics.symm_hat, 0, "replicate {}", r.replicate);
    }
}

#[test]
#[ignore = "full scale, several minutes"]
fn scenario_a_full_scale() {
    let start = Instant::now();
    let res = oracle_experiment(&SimScenario::scenario_a(2024), &SolverConfig::default()).unwrap();
    eprintln!("scenario A took {:?}, flagged {:?}, truth edges {} pairs {}", start.elapsed(), res.flagged, res.true_edges, res.true_sym_pairs);
    for s in &res.summary {
        eprintln!(
            "{:?}: ePPV {:.1} eTPR {:.1} eTNR {:.1} edges {:.0} sPPV {:.1} sTPR {:.1} sTNR {:.1} symm {:.0}",
            s.method, s.e_ppv.mean, s.e_tpr.mean, s.e_tnr.mean, s.edges.mean, s.s_ppv.mean, s.s_tpr.mean, s.s_tnr.mean, s.symm.mean
        );
    }
    for row in &res.replicates[0].rows {
        let m = &row.metrics;
        eprintln!(
            "l2 {:.5} edges {} ePPV {:.2} eTPR {:.2} eTNR {:.2} sPPV {:.2} sTPR {:.2} sTNR {:.2} symm {} conv {} sel {}",
            row.lambda2, m.edges_hat, m.e_ppv.percent(), m.e_tpr.percent(), m.e_tnr.percent(), m.s_ppv.percent(), m.s_tpr.percent(), m.s_tnr.percent(), m.symm_hat, row.converged, row.selected
        );
    }
}

#[test]
#[ignore = "diagnostic"]
fn bisection_trace() {
    use symgl_core::linalg::HemispherePartition;
    use symgl_core::select::max_offdiag;
    use symgl_core::sim::sample_mvn;
    use symgl_core::solver::{fit_sgl, symmetry_summary, SglProblem};
    let sc = SimScenario::scenario_a(2024);
    let truth = sc.ground_truth().unwrap();
    let mut rng = sc.replicate_rng(0);
    let x = sample_mvn(&truth.theta, sc.n, &mut rng).unwrap();
    let s = symgl_core::second_moment(&x).unwrap();
    let part = HemispherePartition::new(70).unwrap();
    let top = max_offdiag(&s);
    for k in 0..12 {
        let l1 = top * 10f64.powf(-3.0 + 3.0 * k as f64 / 11.0);
        let t = Instant::now();
        let sol = fit_sgl(&SglProblem::new(s.clone(), sc.n, l1, 0.0).unwrap(), &SolverConfig::default()).unwrap();
        eprintln!("l1 {l1:.5} edges {} conv {} iters {} rel {:.2e} kkt {:.2e} {:?}", symmetry_summary(&sol.theta_hat, &part).edges, sol.converged, sol.outer_iters, sol.rel_change, sol.kkt_residual, t.elapsed());
    }
}

#[test]
#[ignore = "diagnostic"]
fn lambda2_trace() {
    use symgl_core::linalg::HemispherePartition;
    use symgl_core::sim::{compute_metrics_theta, sample_mvn};
    use symgl_core::solver::{fit_sgl, fit_sgl_from, SglProblem};
    let sc = SimScenario::scenario_a(2024);
    let truth = sc.ground_truth().unwrap();
    let mut rng = sc.replicate_rng(0);
    let x = sample_mvn(&truth.theta, sc.n, &mut rng).unwrap();
    let s = symgl_core::second_moment(&x).unwrap();
    let part = HemispherePartition::new(70).unwrap();
    let l1 = 0.0085;
    let gl = fit_sgl(&SglProblem::new(s.clone(), sc.n, l1, 0.0).unwrap(), &SolverConfig::default()).unwrap();
    let mut warm = gl.state.clone();
    for k in 0..10 {
        let l2 = l1 * 10f64.powf(-3.0 + 4.0 * k as f64 / 9.0);
        let prob = SglProblem::new(s.clone(), sc.n, l1, l2).unwrap();
        let t = Instant::now();
        let cold = fit_sgl(&prob, &SolverConfig::default()).unwrap();
        let tc = t.elapsed();
        let t = Instant::now();
        let hot = fit_sgl_from(&prob, &SolverConfig::default(), Some(&warm)).unwrap();
        let th = t.elapsed();
        let mc = compute_metrics_theta(&truth, &part, &cold.theta_hat).unwrap();
        let mh = compute_metrics_theta(&truth, &part, &hot.theta_hat).unwrap();
        eprintln!("l2 {l2:.5} cold: edges {} symm {} it {} kkt {:.1e} {tc:?} | warm: edges {} symm {} it {} kkt {:.1e} {th:?} | obj diff {:.2e}",
            mc.edges_hat, mc.symm_hat, cold.outer_iters, cold.kkt_residual, mh.edges_hat, mh.symm_hat, hot.outer_iters, hot.kkt_residual, cold.objective - hot.objective);
        warm = hot.state;
    }
}
