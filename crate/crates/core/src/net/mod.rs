//! Network model: node placement, the unit-disk connectivity graph, the
//! first-order radio energy model and per-link quality statistics.

mod graph;
mod link;
mod radio;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{build_graph, NetworkGraph};
pub use link::{
    compute_etx, compute_ptx, Direction, LinkEstimate, LinkStatsWindow, NeighborEntry,
    ProbeOutcome, ProbeWindow,
};
pub use radio::{rx_energy, tx_energy, RadioParams};

/// Identifier of a sensor node. Unique within a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Planar location of a node in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// True when the point lies in the closed rectangle `[0, width] x [0, height]`.
    pub fn within(&self, width: f64, height: f64) -> bool {
        self.is_finite() && (0.0..=width).contains(&self.x) && (0.0..=height).contains(&self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("node {0} has a non-finite position")]
    NonFinitePosition(NodeId),
    #[error("communication range must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("delivery ratios must lie in (0, 1], got forward={fwd} reverse={rev}")]
    DeliveryRatio { fwd: f64, rev: f64 },
    #[error("ETX must be at least 1, got {0}")]
    EtxBelowOne(f64),
    #[error("per-transmission energy must be positive, got {0}")]
    NonPositiveTxEnergy(f64),
    #[error("residual energy must be non-negative, got {0}")]
    NegativeEnergy(f64),
    #[error("radio parameter `{name}` must be positive and finite, got {value}")]
    RadioParam { name: &'static str, value: f64 },
    #[error("threshold distance {given} does not match sqrt(eps_fs / eps_mp) = {derived}")]
    ThresholdMismatch { given: f64, derived: f64 },
}
