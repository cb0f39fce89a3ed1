use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{HemispherePartition, SymMatrix};

/// Undirected edges `(i, j)` with `i > j`.
pub type EdgeSet = BTreeSet<(usize, usize)>;

fn edge_from_index(mut k: usize) -> (usize, usize) {
    // row i holds indices i(i-1)/2 .. i(i+1)/2
    let mut i = 1;
    while k >= i {
        k -= i;
        i += 1;
    }
    (i, k)
}

/// Uniform random graph with exactly `round(density * p(p-1)/2)` edges.
pub fn gen_graph<R: Rng + ?Sized>(p: usize, density: f64, rng: &mut R) -> Result<EdgeSet> {
    if p < 2 || !(density > 0.0 && density < 1.0) {
        return Err(Error::invalid(format!("need p >= 2 and 0 < density < 1, got p = {p}, density = {density}")));
    }
    let total = p * (p - 1) / 2;
    let m = (density * total as f64).round() as usize;
    Ok(sample(rng, total, m).into_iter().map(edge_from_index).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Realized graph; may differ from the input graph by homolog rewiring.
    pub graph: EdgeSet,
    pub theta: SymMatrix,
    /// Left-block positions `(i, j)`, `q > i >= j`, whose right homolog is exactly equal.
    /// Diagonal pairs appear as `(i, i)`.
    pub sym_pairs: BTreeSet<(usize, usize)>,
    /// Tied off-diagonal pairs requested.
    pub target_pairs: usize,
    /// Edges moved to create homolog pairs.
    pub rewired: usize,
}

impl GroundTruth {
    pub fn offdiag_pairs(&self) -> usize {
        self.sym_pairs.iter().filter(|(i, j)| i != j).count()
    }

    /// Tied off-diagonal pairs over the number of edges.
    pub fn realized_sym_fraction(&self) -> f64 {
        if self.graph.is_empty() {
            0.0
        } else {
            self.offdiag_pairs() as f64 / self.graph.len() as f64
        }
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i > j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Concentration matrix on `graph` with a `sym_fraction` share of tied homolog pairs.
///
/// The number of tied off-diagonal pairs is `round(sym_fraction * |E|)`.
/// Missing homolog partners are created by moving edges out of the
/// left-right block, keeping the edge count fixed.
pub fn gen_precision<R: Rng + ?Sized>(
    graph: &EdgeSet,
    part: &HemispherePartition,
    sym_fraction: f64,
    rng: &mut R,
) -> Result<GroundTruth> {
    let p = part.p();
    let q = part.q();
    if !(0.0..=1.0).contains(&sym_fraction) {
        return Err(Error::invalid(format!("sym_fraction must lie in [0, 1], got {sym_fraction}")));
    }
    if graph.iter().any(|&(i, j)| i <= j || i >= p) {
        return Err(Error::invalid("graph edges must be (i, j) with p > i > j"));
    }
    let mut edges = graph.clone();
    let mut both = Vec::new();
    let mut singles = Vec::new();
    for i in 0..q {
        for j in 0..i {
            match (edges.contains(&(i, j)), edges.contains(&(i + q, j + q))) {
                (true, true) => both.push((i, j)),
                (true, false) | (false, true) => singles.push((i, j)),
                _ => {}
            }
        }
    }
    let target = (sym_fraction * edges.len() as f64).round() as usize;
    let mut rewired = 0;
    while both.len() < target && !singles.is_empty() {
        let lr: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(i, j)| part.is_left(i) != part.is_left(j))
            .collect();
        if lr.is_empty() {
            break;
        }
        let (i, j) = singles.swap_remove(rng.random_range(0..singles.len()));
        edges.insert((i, j));
        edges.insert((i + q, j + q));
        edges.remove(&lr[rng.random_range(0..lr.len())]);
        both.push((i, j));
        rewired += 1;
    }
    both.sort_unstable();
    let k = target.min(both.len());
    if target > 0 && k < target {
        log::warn!("only {k} of {target} requested homolog pairs could be tied");
    }
    let mut sym_pairs: BTreeSet<(usize, usize)> = sample(rng, both.len(), k).into_iter().map(|a| both[a]).collect();

    let mut theta = SymMatrix::zeros(p);
    for &(i, j) in &edges {
        let magnitude = rng.random_range(0.3..0.7);
        let value = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        theta.set(i, j, value);
    }
    for &(i, j) in &sym_pairs {
        theta.set(i + q, j + q, theta.get(i, j));
    }
    for i in 0..p {
        let row: f64 = (0..p).filter(|&j| j != i).map(|j| theta.get(i, j).abs()).sum();
        theta.set(i, i, row + 0.5);
    }
    for i in 0..q {
        let fully_tied = (0..q)
            .filter(|&j| j != i)
            .all(|j| theta.get(i, j) == theta.get(i + q, j + q));
        let has_selected = sym_pairs.iter().any(|&(a, b)| a != b && (a == i || b == i));
        if fully_tied && has_selected {
            let v = theta.get(i, i).max(theta.get(i + q, i + q));
            theta.set(i, i, v);
            theta.set(i + q, i + q, v);
            sym_pairs.insert((i, i));
        }
    }
    if !theta.is_positive_definite() {
        return Err(Error::domain("generated matrix failed the Cholesky check"));
    }
    debug_assert!(edges.iter().all(|&(i, j)| ordered(i, j) == (i, j)));
    Ok(GroundTruth {
        graph: edges,
        theta,
        sym_pairs,
        target_pairs: target,
        rewired,
    })
}

/// `n` rows drawn i.i.d. from `N(0, Theta^{-1})`.
pub fn sample_mvn<R: Rng + ?Sized>(theta: &SymMatrix, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let l = theta
        .cholesky()
        .ok_or_else(|| Error::domain("concentration matrix is not positive definite"))?;
    let p = theta.dim();
    let mut z = DMatrix::<f64>::zeros(p, n);
    for r in 0..n {
        for c in 0..p {
            z[(c, r)] = rng.sample(StandardNormal);
        }
    }
    let x = l
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::domain("singular Cholesky factor"))?;
    Ok(x.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::second_moment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_to_edge_enumerates_lower_triangle() {
        let all: Vec<_> = (0..6).map(edge_from_index).collect();
        assert_eq!(all, vec![(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]);
    }

    #[test]
    fn full_scale_edge_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(gen_graph(70, 0.231, &mut rng).unwrap().len(), 558);
        assert_eq!(gen_graph(70, 0.316, &mut rng).unwrap().len(), 763);
        let g = gen_graph(4, 0.01, &mut rng).unwrap();
        assert!(g.is_empty());
        assert!(gen_graph(4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn no_symmetry_requested() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let part = HemispherePartition::new(20).unwrap();
        let g = gen_graph(20, 0.3, &mut rng).unwrap();
        let t = gen_precision(&g, &part, 0.0, &mut rng).unwrap();
        assert_eq!(t.offdiag_pairs(), 0);
        assert_eq!(t.graph, g);
        assert!(t.theta.is_positive_definite());
    }

    #[test]
    fn full_symmetry_on_mirrored_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let part = HemispherePartition::new(8).unwrap();
        let g: EdgeSet = [(1, 0), (5, 4), (3, 1), (7, 5), (6, 1)].into_iter().collect();
        let t = gen_precision(&g, &part, 1.0, &mut rng).unwrap();
        assert_eq!(t.graph, g);
        assert_eq!(t.offdiag_pairs(), 2);
        assert_eq!(t.theta.get(1, 0), t.theta.get(5, 4));
        assert_eq!(t.theta.get(3, 1), t.theta.get(7, 5));
        // rows 0, 1, 3 carry only tied within-block entries; row 2 has none
        for i in [0, 1, 3] {
            assert!(t.sym_pairs.contains(&(i, i)));
            assert_eq!(t.theta.get(i, i), t.theta.get(i + 4, i + 4));
        }
        assert!(!t.sym_pairs.contains(&(2, 2)));
        let row1 = t.theta.get(1, 0).abs() + t.theta.get(3, 1).abs() + t.theta.get(6, 1).abs();
        assert_eq!(t.theta.get(5, 5), row1 + 0.5);
    }

    #[test]
    fn scenario_a_symmetric_proportion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let part = HemispherePartition::new(70).unwrap();
        let g = gen_graph(70, 0.231, &mut rng).unwrap();
        let t = gen_precision(&g, &part, 0.108, &mut rng).unwrap();
        assert_eq!(t.graph.len(), 558);
        assert_eq!(t.offdiag_pairs(), 60);
        assert!((t.realized_sym_fraction() - 0.108).abs() < 0.5 / 558.0 + 1e-12);
        for &(i, j) in &t.sym_pairs {
            assert_eq!(t.theta.get(i, j), t.theta.get(i + 35, j + 35));
        }
        for i in 0..70 {
            for j in 0..i {
                assert_eq!(t.theta.get(i, j) != 0.0, t.graph.contains(&(i, j)));
            }
        }
    }

    #[test]
    fn sampling_matches_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = sample_mvn(&SymMatrix::identity(2), 100_000, &mut rng).unwrap();
        let s = second_moment(&x).unwrap();
        assert!(s.max_abs_diff(&SymMatrix::identity(2)) < 0.02);
        let one = sample_mvn(&SymMatrix::identity(3), 1, &mut rng).unwrap();
        assert_eq!(one.shape(), (1, 3));
        assert!(one.iter().all(|v| v.is_finite()));
        let bad = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(matches!(sample_mvn(&bad, 3, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let part = HemispherePartition::new(20).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let g = gen_graph(20, 0.25, &mut rng).unwrap();
            let t = gen_precision(&g, &part, 0.2, &mut rng).unwrap();
            let x = sample_mvn(&t.theta, 50, &mut rng).unwrap();
            (t, x)
        };
        assert_eq!(run(), run());
    }
}
