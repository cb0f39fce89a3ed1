//! Synthetic ground truths and the oracle-tuned recovery benchmark.

mod metrics;
mod oracle;
mod truth;

pub use metrics::{compute_metrics, compute_metrics_theta, metrics_from_sets, tied_pairs, MetricsReport, Ratio};
pub use oracle::{
    oracle_experiment, oracle_replicate, MeanSd, Method, OracleResult, OracleRow, ReplicateResult, SimScenario,
    SummaryRow,
};
pub use truth::{gen_graph, gen_precision, sample_mvn, EdgeSet, GroundTruth};
