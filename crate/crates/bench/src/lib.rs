//! Fixtures shared by the benchmarks.

use linkpc_core::config::{LinkProbability, ScenarioConfig, Strategy};
use linkpc_core::NodeId;

/// Medium-sized lossy scenario used for end-to-end timing.
pub fn scenario(nodes: usize, strategy: Strategy) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(nodes, 1, strategy);
    c.duration = 60.0;
    c.report_interval = 5.0;
    c.query_period = Some(20.0);
    c.link_p_true = LinkProbability::Uniform { min: 0.6, max: 1.0 };
    c
}

/// `n` neighbor PTX values spread around `n_req`.
pub fn neighbor_ptx(n: usize, n_req: f64) -> Vec<(NodeId, f64)> {
    (0..n)
        .map(|i| (NodeId(i as u32), n_req * (0.25 + 1.5 * (i as f64 * 0.618_034).fract())))
        .collect()
}
