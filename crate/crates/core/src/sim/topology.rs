use rand::Rng;

use crate::config::{Placement, ScenarioConfig};
use crate::net::{ModelError, NetworkGraph, Position};

/// Redraw budget when a connected placement is required.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Result of placing a network. Node 0 is the sink.
#[derive(Debug, Clone)]
pub struct Topology {
    pub positions: Vec<Position>,
    pub graph: NetworkGraph,
    /// Random placements drawn, including the accepted one.
    pub attempts: usize,
}

fn center(cfg: &ScenarioConfig) -> Position {
    Position::new(cfg.field_width / 2.0, cfg.field_height / 2.0)
}

fn grid(cfg: &ScenarioConfig) -> Vec<Position> {
    let n = cfg.node_count;
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let step = |extent: f64, count: usize| if count > 1 { extent / (count - 1) as f64 } else { 0.0 };
    let (dx, dy) = (step(cfg.field_width, cols), step(cfg.field_height, rows));
    let mut pts: Vec<_> = (0..n)
        .map(|i| Position::new((i % cols) as f64 * dx, (i / cols) as f64 * dy))
        .collect();
    if cfg.sink_at_center {
        let c = center(cfg);
        let nearest = (0..n)
            .min_by(|&a, &b| pts[a].distance(&c).total_cmp(&pts[b].distance(&c)))
            .expect("non-empty");
        pts.swap(0, nearest);
    }
    pts
}

fn uniform<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<Position> {
    (0..cfg.node_count)
        .map(|i| {
            if i == 0 && cfg.sink_at_center {
                center(cfg)
            } else {
                Position::new(
                    rng.random_range(0.0..=cfg.field_width),
                    rng.random_range(0.0..=cfg.field_height),
                )
            }
        })
        .collect()
}

/// Places nodes per the config. With `require_connected`, random placements
/// are redrawn until connected or the budget runs out, in which case the last
/// draw is returned and the caller should warn.
pub fn place_nodes<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Topology, ModelError> {
    if cfg.placement == Placement::Grid {
        let positions = grid(cfg);
        let graph = NetworkGraph::from_positions(&positions, cfg.comm_range)?;
        return Ok(Topology { positions, graph, attempts: 1 });
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        let positions = uniform(cfg, rng);
        let graph = NetworkGraph::from_positions(&positions, cfg.comm_range)?;
        if !cfg.require_connected || graph.is_connected() || attempts >= MAX_PLACEMENT_ATTEMPTS {
            return Ok(Topology { positions, graph, attempts });
        }
    }
}
