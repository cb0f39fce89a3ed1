//! Selected-model JSON, model intersection and the symmetry graph in DOT.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use symgl_core::linalg::HemispherePartition;
use symgl_core::select::{extract_colored_model, ModelScore};
use symgl_core::solver::{symmetry_summary, SymmetrySummary, TIE_TOL, ZERO_TOL};
use symgl_core::SymMatrix;

use crate::error::{CliError, CliResult};
use crate::io::{read_text, write_text};

/// One stored concentration entry, `i >= j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// A fitted (or intersected) model in solver order.
///
/// Edge and pair indices refer to `names`; `permutation[k]` is the input
/// column moved to position `k`. Tied edge pairs are given by their
/// left-block position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub p: usize,
    pub names: Vec<String>,
    pub permutation: Vec<usize>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub criterion: Option<String>,
    pub gamma: Option<f64>,
    pub loglik: Option<f64>,
    pub d: Option<usize>,
    pub bic: Option<f64>,
    pub ebic: Option<f64>,
    pub edges: Vec<[usize; 2]>,
    pub sym_edges: usize,
    pub tied_edge_pairs: Vec<[usize; 2]>,
    pub tied_vertex_pairs: Vec<usize>,
    pub theta: Vec<ThetaEntry>,
}

/// Fit metadata carried into the JSON.
#[derive(Debug, Clone, Default)]
pub struct FitInfo {
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub criterion: Option<String>,
    pub score: Option<ModelScore>,
}

impl ModelJson {
    pub fn from_theta(
        theta: &SymMatrix,
        names: Vec<String>,
        permutation: Vec<usize>,
        info: FitInfo,
    ) -> CliResult<Self> {
        let p = theta.dim();
        if names.len() != p || permutation.len() != p {
            return Err(CliError::config("names and permutation must match the matrix dimension"));
        }
        let part = HemispherePartition::new(p)?;
        let model = extract_colored_model(theta, &part, ZERO_TOL, TIE_TOL)?;
        let q = part.q();
        let summary = symmetry_summary(theta, &part);
        let mut tied_edge_pairs = Vec::new();
        let mut tied_vertex_pairs = Vec::new();
        for c in model.vertex_classes() {
            if c.len() == 2 {
                tied_vertex_pairs.push(c[0].min(c[1]));
            }
        }
        for c in model.edge_classes() {
            if c.len() == 2 {
                let (i, j) = if c[0].0 < q { c[0] } else { c[1] };
                tied_edge_pairs.push([i, j]);
            }
        }
        tied_vertex_pairs.sort_unstable();
        tied_edge_pairs.sort_unstable();
        let mut entries = Vec::new();
        for i in 0..p {
            for j in 0..=i {
                let v = theta.get(i, j);
                if i == j || v.abs() > ZERO_TOL {
                    entries.push(ThetaEntry { i, j, value: v });
                }
            }
        }
        Ok(ModelJson {
            p,
            names,
            permutation,
            lambda1: info.lambda1,
            lambda2: info.lambda2,
            criterion: info.criterion,
            gamma: info.score.map(|s| s.gamma),
            loglik: info.score.map(|s| s.loglik),
            d: info.score.map(|s| s.d),
            bic: info.score.map(|s| s.bic),
            ebic: info.score.map(|s| s.ebic),
            edges: model.edges().iter().map(|&(i, j)| [i, j]).collect(),
            sym_edges: summary.sym_edges,
            tied_edge_pairs,
            tied_vertex_pairs,
            theta: entries,
        })
    }

    pub fn summary(&self) -> SymmetrySummary {
        SymmetrySummary {
            edges: self.edges.len(),
            sym_edges: self.sym_edges,
            sym_offdiag: self.tied_edge_pairs.len(),
            sym_diag: self.tied_vertex_pairs.len(),
        }
    }

    pub fn density(&self) -> f64 {
        self.edges.len() as f64 / (self.p * (self.p - 1) / 2) as f64
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let model = Self::from_json(&read_text(path)?).map_err(|e| CliError::parse(path, e.to_string()))?;
        model.check().map_err(|e| CliError::parse(path, e))?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_text(path, &self.to_json())
    }

    fn check(&self) -> Result<(), String> {
        if self.p < 2 || self.p % 2 != 0 || self.names.len() != self.p || self.permutation.len() != self.p {
            return Err("inconsistent dimensions".into());
        }
        let q = self.p / 2;
        let bad_edge = |&[i, j]: &[usize; 2]| i >= self.p || j >= i;
        if self.edges.iter().any(bad_edge) || self.tied_edge_pairs.iter().any(|&[i, j]| i >= q || j >= i) {
            return Err("edge index out of range".into());
        }
        if self.tied_vertex_pairs.iter().any(|&i| i >= q) {
            return Err("vertex pair index out of range".into());
        }
        Ok(())
    }
}

fn agree<T: PartialEq + Clone>(values: impl Iterator<Item = Option<T>>) -> Option<T> {
    let mut it = values;
    let first = it.next()??;
    it.all(|v| v.as_ref() == Some(&first)).then_some(first)
}

fn common<T: Ord + Clone>(sets: impl Iterator<Item = BTreeSet<T>>) -> BTreeSet<T> {
    sets.reduce(|a, b| a.intersection(&b).cloned().collect()).unwrap_or_default()
}

/// Shared graph and shared ties of several models fitted on the same regions.
///
/// Scalars survive only where every model agrees; concentration entries only
/// where every model stores the same value.
pub fn intersect_models(models: &[ModelJson]) -> CliResult<ModelJson> {
    let first = models.first().ok_or_else(|| CliError::config("nothing to intersect"))?;
    for m in &models[1..] {
        if m.p != first.p || m.names != first.names {
            return Err(CliError::config("models were fitted on different region maps"));
        }
    }
    let edges = common(models.iter().map(|m| m.edges.iter().copied().collect()));
    let pairs = common(models.iter().map(|m| m.tied_edge_pairs.iter().copied().collect()));
    let verts = common(models.iter().map(|m| m.tied_vertex_pairs.iter().copied().collect()));
    let theta_keys = common(models.iter().map(|m| {
        m.theta.iter().map(|t| (t.i, t.j, t.value.to_bits())).collect::<BTreeSet<_>>()
    }));
    let theta = first
        .theta
        .iter()
        .filter(|t| theta_keys.contains(&(t.i, t.j, t.value.to_bits())))
        .copied()
        .collect();
    let q = first.p / 2;
    let sym_edges = edges.iter().filter(|&&[i, j]| i < q && edges.contains(&[i + q, j + q])).count();
    Ok(ModelJson {
        p: first.p,
        names: first.names.clone(),
        permutation: first.permutation.clone(),
        lambda1: agree(models.iter().map(|m| m.lambda1)),
        lambda2: agree(models.iter().map(|m| m.lambda2)),
        criterion: agree(models.iter().map(|m| m.criterion.clone())),
        gamma: agree(models.iter().map(|m| m.gamma)),
        loglik: agree(models.iter().map(|m| m.loglik)),
        d: agree(models.iter().map(|m| m.d)),
        bic: agree(models.iter().map(|m| m.bic)),
        ebic: agree(models.iter().map(|m| m.ebic)),
        edges: edges.into_iter().collect(),
        sym_edges,
        tied_edge_pairs: pairs.into_iter().collect(),
        tied_vertex_pairs: verts.into_iter().collect(),
        theta,
    })
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Symmetry graph: one node per homolog pair, one edge per tied nonzero
/// off-diagonal pair, shaded nodes for tied diagonals.
pub fn symmetry_dot(model: &ModelJson) -> String {
    let q = model.p / 2;
    let shaded: BTreeSet<usize> = model.tied_vertex_pairs.iter().copied().collect();
    let label = |i: usize| quote(&format!("{}/{}", model.names[i], model.names[i + q]));
    let mut out = String::from("graph symmetry {\n  node [shape=circle];\n");
    for i in 0..q {
        if shaded.contains(&i) {
            let _ = writeln!(out, "  {} [style=filled, fillcolor=gray];", label(i));
        } else {
            let _ = writeln!(out, "  {};", label(i));
        }
    }
    for &[i, j] in &model.tied_edge_pairs {
        let _ = writeln!(out, "  {} -- {};", label(i), label(j));
    }
    out.push_str("}\n");
    out
}
