use std::collections::BTreeSet;

use super::truth::{EdgeSet, GroundTruth};
use crate::error::{Error, Result};
use crate::linalg::{HemispherePartition, SymMatrix};
use crate::select::{extract_colored_model, ColoredModel};
use crate::solver::{TIE_TOL, ZERO_TOL};

/// Exact quotient of two counts; `0 / 0` reads as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: usize,
    pub den: usize,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.value()
    }
}

/// Confusion counts for edges and for tied homolog pairs, plus their ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsReport {
    pub e_tp: usize,
    pub e_tn: usize,
    pub e_p: usize,
    pub e_n: usize,
    pub edges_hat: usize,
    pub s_tp: usize,
    pub s_tn: usize,
    pub s_p: usize,
    pub s_n: usize,
    pub symm_hat: usize,
    pub e_ppv: Ratio,
    pub e_tpr: Ratio,
    pub e_tnr: Ratio,
    pub s_ppv: Ratio,
    pub s_tpr: Ratio,
    pub s_tnr: Ratio,
}

impl MetricsReport {
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        e_tp: usize,
        e_tn: usize,
        e_p: usize,
        e_n: usize,
        edges_hat: usize,
        s_tp: usize,
        s_tn: usize,
        s_p: usize,
        s_n: usize,
        symm_hat: usize,
    ) -> Self {
        MetricsReport {
            e_tp,
            e_tn,
            e_p,
            e_n,
            edges_hat,
            s_tp,
            s_tn,
            s_p,
            s_n,
            symm_hat,
            e_ppv: Ratio { num: e_tp, den: edges_hat },
            e_tpr: Ratio { num: e_tp, den: e_p },
            e_tnr: Ratio { num: e_tn, den: e_n },
            s_ppv: Ratio { num: s_tp, den: symm_hat },
            s_tpr: Ratio { num: s_tp, den: s_p },
            s_tnr: Ratio { num: s_tn, den: s_n },
        }
    }

    pub fn s_sum(&self) -> f64 {
        self.s_tpr.value() + self.s_tnr.value()
    }
}

/// Estimated tied nonzero homolog pairs, as left-block positions.
pub fn tied_pairs(model: &ColoredModel, part: &HemispherePartition) -> BTreeSet<(usize, usize)> {
    let q = part.q();
    let mut out = BTreeSet::new();
    for c in model.vertex_classes() {
        if c.len() == 2 {
            let i = c[0].min(c[1]);
            out.insert((i, i));
        }
    }
    for c in model.edge_classes() {
        if c.len() == 2 {
            let left = if c[0].0 < q { c[0] } else { c[1] };
            out.insert(left);
        }
    }
    out
}

/// Confusion counts from explicit sets.
///
/// The symmetry universe is every homolog pair of the left block: the
/// `q(q-1)/2` off-diagonal pairs plus the `q` diagonal pairs.
pub fn metrics_from_sets(
    part: &HemispherePartition,
    true_edges: &EdgeSet,
    est_edges: &EdgeSet,
    true_pairs: &BTreeSet<(usize, usize)>,
    est_pairs: &BTreeSet<(usize, usize)>,
) -> MetricsReport {
    let p = part.p();
    let q = part.q();
    let total_edges = p * (p - 1) / 2;
    let total_pairs = q * (q - 1) / 2 + q;
    let e_tp = true_edges.intersection(est_edges).count();
    let e_union = true_edges.union(est_edges).count();
    let s_tp = true_pairs.intersection(est_pairs).count();
    let s_union = true_pairs.union(est_pairs).count();
    MetricsReport::from_counts(
        e_tp,
        total_edges - e_union,
        true_edges.len(),
        total_edges - true_edges.len(),
        est_edges.len(),
        s_tp,
        total_pairs - s_union,
        true_pairs.len(),
        total_pairs - true_pairs.len(),
        est_pairs.len(),
    )
}

/// Recovery metrics of a colored model against the ground truth.
pub fn compute_metrics(truth: &GroundTruth, part: &HemispherePartition, est: &ColoredModel) -> Result<MetricsReport> {
    if est.p() != part.p() || truth.theta.dim() != part.p() {
        return Err(Error::invalid("estimate, truth and partition disagree on p"));
    }
    let est_edges: EdgeSet = est.edges().iter().copied().collect();
    Ok(metrics_from_sets(
        part,
        &truth.graph,
        &est_edges,
        &truth.sym_pairs,
        &tied_pairs(est, part),
    ))
}

/// Same as [`compute_metrics`], reading the model off a penalized estimate.
pub fn compute_metrics_theta(truth: &GroundTruth, part: &HemispherePartition, theta: &SymMatrix) -> Result<MetricsReport> {
    let model = extract_colored_model(theta, part, ZERO_TOL, TIE_TOL)?;
    compute_metrics(truth, part, &model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_edges() {
        let part = HemispherePartition::new(4).unwrap();
        // vertices 1..4 -> 0..3; true {12, 13}, estimated {12, 14}
        let truth: EdgeSet = [(1, 0), (2, 0)].into_iter().collect();
        let est: EdgeSet = [(1, 0), (3, 0)].into_iter().collect();
        let none = BTreeSet::new();
        let m = metrics_from_sets(&part, &truth, &est, &none, &none);
        assert_eq!(m.e_ppv.value(), 0.5);
        assert_eq!(m.e_tpr.value(), 0.5);
        assert_eq!(m.e_tnr.value(), 0.75);
        assert_eq!(m.s_ppv.value(), 0.0);
        assert_eq!(m.s_tnr.value(), 1.0);
    }

    #[test]
    fn perfect_estimate() {
        let part = HemispherePartition::new(6).unwrap();
        let truth: EdgeSet = [(1, 0), (4, 3), (5, 1)].into_iter().collect();
        let pairs: BTreeSet<_> = [(1, 0), (2, 2)].into_iter().collect();
        let m = metrics_from_sets(&part, &truth, &truth, &pairs, &pairs);
        for r in [m.e_ppv, m.e_tpr, m.e_tnr, m.s_ppv, m.s_tpr, m.s_tnr] {
            assert_eq!(r.value(), 1.0);
        }
    }

    #[test]
    fn table_one_precision() {
        let r = Ratio { num: 313, den: 558 };
        assert!((r.percent() - 56.09).abs() < 0.1);
    }

    #[test]
    fn pairs_from_model() {
        let part = HemispherePartition::new(4).unwrap();
        let m = ColoredModel::new(4, vec![vec![0, 2], vec![1], vec![3]], vec![vec![(1, 0), (3, 2)], vec![(3, 0)]]).unwrap();
        let pairs = tied_pairs(&m, &part);
        assert_eq!(pairs.into_iter().collect::<Vec<_>>(), vec![(0, 0), (1, 0)]);
    }
}
