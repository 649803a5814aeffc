//! Deterministic discrete-event simulation of a sensor field: periodic
//! probes, a flooded query, periodic reports toward the sink, Bernoulli link
//! loss and battery accounting.
//!
//! Three RNG streams are derived from the seed: placement, true link
//! probabilities and run dynamics. Strategies only touch the last one, so
//! runs that differ only in strategy share topology and channels.

mod channel;
mod engine;
mod event;
mod metrics;
mod node;
mod topology;

use thiserror::Error;

pub use channel::{EnergyLedger, Medium, SenderDepleted, TrueLinkModel};
pub use engine::{
    run_scenario, run_scenario_with_positions, DropCounts, LinkObservation, PacketCounts,
    RouteTrace, ScenarioOutcome, Simulator, DYNAMICS_STREAM, LINK_STREAM, PLACEMENT_STREAM,
};
pub use event::EventQueue;
pub use metrics::{delivery_ratio, report_quality_check, MetricsRow, MetricsSeries, CSV_HEADER};
pub use node::{Debit, NeighborRecord, NodeRuntime, NodeSnapshot};
pub use topology::{place_nodes, Topology, MAX_PLACEMENT_ATTEMPTS};

use crate::config::ConfigError;
use crate::net::ModelError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("expected {expected} positions, got {got}")]
    PositionCount { expected: usize, got: usize },
    #[error("strategy setup failed: {0}")]
    Strategy(String),
}
