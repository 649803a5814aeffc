//! Link-aware passive clustering for wireless sensor networks.
//!
//! Candidates for clusterhead and gateway roles rank themselves by the
//! predicted number of report transmissions (PTX) their best link can still
//! sustain, and defer accordingly. The crate carries the network and energy
//! model, the clustering state machine, comparison baselines, a deterministic
//! discrete-event simulator and the experiment harness used by the CLI.

pub mod baselines;
pub mod clustering;
pub mod config;
pub mod harness;
pub mod net;
pub mod sim;

pub use clustering::{ClusterMembership, ClusterState};
pub use config::{parse_config, ConfigError, ScenarioConfig, Strategy};
pub use net::{NetworkGraph, NodeId, Position, RadioParams};
pub use sim::{run_scenario, MetricsRow, MetricsSeries, ScenarioOutcome, SimError};
