use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{HemispherePartition, SymMatrix};
use crate::solver::is_tied;

/// Graph plus color classes of tied concentration entries.
///
/// Edges are stored as `(i, j)` with `i > j`. Every vertex and every edge
/// belongs to exactly one class; each class carries one free parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredModel {
    p: usize,
    edges: Vec<(usize, usize)>,
    vertex_classes: Vec<Vec<usize>>,
    edge_classes: Vec<Vec<(usize, usize)>>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i >= j {
        (i, j)
    } else {
        (j, i)
    }
}

impl ColoredModel {
    pub fn new(p: usize, vertex_classes: Vec<Vec<usize>>, edge_classes: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("model needs at least one vertex"));
        }
        let mut seen = vec![false; p];
        for class in &vertex_classes {
            if class.is_empty() {
                return Err(Error::invalid("empty vertex class"));
            }
            for &v in class {
                if v >= p || seen[v] {
                    return Err(Error::invalid(format!("vertex {v} out of range or repeated")));
                }
                seen[v] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("vertex classes do not cover every vertex"));
        }
        let mut edge_set = BTreeSet::new();
        let mut classes = Vec::with_capacity(edge_classes.len());
        for class in edge_classes {
            if class.is_empty() {
                return Err(Error::invalid("empty edge class"));
            }
            let mut c = Vec::with_capacity(class.len());
            for (i, j) in class {
                let e = ordered(i, j);
                if e.0 == e.1 || e.0 >= p || !edge_set.insert(e) {
                    return Err(Error::invalid(format!("edge ({i}, {j}) invalid or repeated")));
                }
                c.push(e);
            }
            classes.push(c);
        }
        Ok(ColoredModel {
            p,
            edges: edge_set.into_iter().collect(),
            vertex_classes,
            edge_classes: classes,
        })
    }

    /// Complete graph, no ties.
    pub fn saturated(p: usize) -> Self {
        let edges = (0..p).flat_map(|i| (0..i).map(move |j| vec![(i, j)])).collect();
        Self::new(p, (0..p).map(|v| vec![v]).collect(), edges).expect("valid by construction")
    }

    /// Empty graph, no ties.
    pub fn independence(p: usize) -> Self {
        Self::new(p, (0..p).map(|v| vec![v]).collect(), Vec::new()).expect("valid by construction")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertex_classes(&self) -> &[Vec<usize>] {
        &self.vertex_classes
    }

    pub fn edge_classes(&self) -> &[Vec<(usize, usize)>] {
        &self.edge_classes
    }

    /// Number of free parameters.
    pub fn d(&self) -> usize {
        self.vertex_classes.len() + self.edge_classes.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&ordered(i, j)).is_ok()
    }

    /// Positions `(a, b)`, `a >= b`, of every class; vertex classes first.
    pub fn class_positions(&self) -> Vec<Vec<(usize, usize)>> {
        self.vertex_classes
            .iter()
            .map(|c| c.iter().map(|&v| (v, v)).collect())
            .chain(self.edge_classes.iter().cloned())
            .collect()
    }

    /// Symmetric 0/1 indicator of class `c`.
    pub fn basis(&self, c: usize) -> SymMatrix {
        let mut t = SymMatrix::zeros(self.p);
        for (a, b) in &self.class_positions()[c] {
            t.set(*a, *b, 1.0);
        }
        t
    }

    /// `sum_c eta_c T_c`.
    pub fn assemble(&self, eta: &[f64]) -> SymMatrix {
        let mut theta = SymMatrix::zeros(self.p);
        for (c, pos) in self.class_positions().iter().enumerate() {
            for &(a, b) in pos {
                theta.set(a, b, eta[c]);
            }
        }
        theta
    }

    /// Number of classes with more than one member, split as (vertex, edge).
    pub fn tied_class_counts(&self) -> (usize, usize) {
        (
            self.vertex_classes.iter().filter(|c| c.len() > 1).count(),
            self.edge_classes.iter().filter(|c| c.len() > 1).count(),
        )
    }
}

/// Reads graph and homolog ties off a penalized estimate.
pub fn extract_colored_model(
    theta: &SymMatrix,
    part: &HemispherePartition,
    zero_tol: f64,
    tie_tol: f64,
) -> Result<ColoredModel> {
    let p = part.p();
    if theta.dim() != p {
        return Err(Error::invalid(format!("matrix of dim {} vs partition of {p}", theta.dim())));
    }
    let q = part.q();
    let mut vertex_classes = Vec::with_capacity(p);
    for i in 0..q {
        if is_tied(theta.get(i, i), theta.get(i + q, i + q), tie_tol) {
            vertex_classes.push(vec![i, i + q]);
        } else {
            vertex_classes.push(vec![i]);
            vertex_classes.push(vec![i + q]);
        }
    }
    let present = |i: usize, j: usize| theta.get(i, j).abs() > zero_tol;
    let mut edge_classes = Vec::new();
    for i in 0..p {
        for j in 0..i {
            if !present(i, j) {
                continue;
            }
            let within = part.is_left(i) == part.is_left(j);
            if within && part.is_left(i) {
                let (hi, hj) = (i + q, j + q);
                if present(hi, hj) && is_tied(theta.get(i, j), theta.get(hi, hj), tie_tol) {
                    edge_classes.push(vec![(i, j), (hi, hj)]);
                    continue;
                }
            } else if within {
                let (li, lj) = (i - q, j - q);
                if present(li, lj) && is_tied(theta.get(li, lj), theta.get(i, j), tie_tol) {
                    // already paired from the left block
                    continue;
                }
            }
            edge_classes.push(vec![(i, j)]);
        }
    }
    ColoredModel::new(p, vertex_classes, edge_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ColoredModel::new(3, vec![vec![0], vec![1]], vec![]).is_err());
        assert!(ColoredModel::new(2, vec![vec![0], vec![1, 0]], vec![]).is_err());
        assert!(ColoredModel::new(2, vec![vec![0], vec![1]], vec![vec![(1, 0)], vec![(0, 1)]]).is_err());
        assert!(ColoredModel::new(2, vec![vec![0], vec![1]], vec![vec![(1, 1)]]).is_err());
        let m = ColoredModel::saturated(4);
        assert_eq!(m.d(), 10);
        assert_eq!(ColoredModel::independence(4).d(), 4);
    }

    #[test]
    fn basis_and_assembly() {
        let m = ColoredModel::new(4, vec![vec![0, 2], vec![1, 3]], vec![vec![(1, 0), (3, 2)]]).unwrap();
        let t = m.basis(2);
        assert_eq!(t.get(0, 1), 1.0);
        assert_eq!(t.get(2, 3), 1.0);
        assert_eq!(t.get(0, 0), 0.0);
        let theta = m.assemble(&[2.0, 3.0, -0.5]);
        assert_eq!(theta.get(2, 2), 2.0);
        assert_eq!(theta.get(3, 2), -0.5);
        assert_eq!(theta.get(2, 0), 0.0);
    }

    #[test]
    fn untied_estimate_gives_singletons() {
        let part = HemispherePartition::new(4).unwrap();
        let theta = SymMatrix::from_fn(4, |i, j| match (i, j) {
            (i, j) if i == j => 1.0 + i as f64 * 0.1,
            (1, 0) => 0.3,
            (3, 2) => 0.2,
            (2, 1) => 0.1,
            _ => 0.0,
        });
        let m = extract_colored_model(&theta, &part, 1e-9, 1e-9).unwrap();
        assert_eq!(m.edges().len(), 3);
        assert_eq!(m.d(), 4 + 3);
        assert_eq!(m.tied_class_counts(), (0, 0));
    }

    #[test]
    fn fused_estimate_gives_pairs() {
        let part = HemispherePartition::new(6).unwrap();
        let theta = SymMatrix::from_fn(6, |i, j| match (i, j) {
            (i, j) if i == j => 1.0,
            (1, 0) | (4, 3) => 0.25,
            (2, 0) => 0.1,
            (5, 3) => 0.15,
            (4, 1) => 0.05,
            _ => 0.0,
        });
        let m = extract_colored_model(&theta, &part, 1e-9, 1e-9).unwrap();
        assert_eq!(m.vertex_classes().len(), 3);
        assert_eq!(m.tied_class_counts(), (3, 1));
        assert_eq!(m.edges().len(), 5);
        assert_eq!(m.d(), 3 + 4);
    }
}
