//! Synthetic series with planted left/right symmetry, written as the CLI expects them.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symgl_core::sim::{gen_graph, gen_precision, metrics_from_sets, sample_mvn, EdgeSet, GroundTruth, MetricsReport};
use symgl_core::HemispherePartition;

pub struct Planted {
    pub truth: GroundTruth,
    /// Solver-order names: `L1..Lq` then `R1..Rq`.
    pub names: Vec<String>,
    pub data: PathBuf,
    pub roi_map: PathBuf,
}

/// Writes `t` rows of i.i.d. draws with columns in shuffled order plus a region map.
pub fn planted(dir: &Path, p: usize, t: usize, density: f64, sym_fraction: f64, seed: u64) -> Planted {
    let q = p / 2;
    let part = HemispherePartition::new(p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = gen_graph(p, density, &mut rng).unwrap();
    let truth = gen_precision(&graph, &part, sym_fraction, &mut rng).unwrap();
    let x = sample_mvn(&truth.theta, t, &mut rng).unwrap();
    let names: Vec<String> = (1..=q).map(|i| format!("L{i}")).chain((1..=q).map(|i| format!("R{i}"))).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);

    let mut csv = order.iter().map(|&k| names[k].clone()).collect::<Vec<_>>().join(",");
    csv.push('\n');
    for r in 0..t {
        let row: Vec<String> = order.iter().map(|&k| x[(r, k)].to_string()).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let data = dir.join("series.csv");
    std::fs::write(&data, csv).unwrap();

    let mut map = String::from("name,hemisphere,homolog,lobe\n");
    for i in 1..=q {
        let _ = writeln!(map, "R{i},R,L{i},lobe{}", i % 3);
        let _ = writeln!(map, "L{i},L,R{i},lobe{}", i % 3);
    }
    let roi_map = dir.join("roi.csv");
    std::fs::write(&roi_map, map).unwrap();
    Planted {
        truth,
        names,
        data,
        roi_map,
    }
}

/// Tied pairs of a model JSON as left-block positions, diagonals as `(i, i)`.
pub fn model_pairs(model: &symgl_cli::ModelJson) -> BTreeSet<(usize, usize)> {
    model
        .tied_edge_pairs
        .iter()
        .map(|&[i, j]| (i, j))
        .chain(model.tied_vertex_pairs.iter().map(|&i| (i, i)))
        .collect()
}

/// Recovery metrics of a model JSON against the planted truth (both in solver order).
pub fn model_metrics(truth: &GroundTruth, model: &symgl_cli::ModelJson) -> MetricsReport {
    let part = HemispherePartition::new(model.p).unwrap();
    let edges: EdgeSet = model.edges.iter().map(|&[i, j]| (i, j)).collect();
    metrics_from_sets(&part, &truth.graph, &edges, &truth.sym_pairs, &model_pairs(model))
}
