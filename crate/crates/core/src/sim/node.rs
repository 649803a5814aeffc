use std::collections::BTreeMap;

use serde::Serialize;

use crate::clustering::{ClusterMembership, ClusterState, Contention};
use crate::net::{LinkStatsWindow, NodeId, Position};

/// What a node knows about one neighbor.
#[derive(Debug, Clone)]
pub struct NeighborRecord {
    pub link: LinkStatsWindow,
    pub distance: f64,
    pub position: Position,
    /// Last cluster state and cluster the neighbor piggybacked on a data packet.
    pub heard: Option<(ClusterState, ClusterMembership)>,
}

/// Mutable per-node simulation state.
#[derive(Debug, Clone)]
pub struct NodeRuntime {
    pub id: NodeId,
    pub position: Position,
    pub e_ini: f64,
    pub e_res: f64,
    /// Draws no battery energy and never dies.
    pub mains: bool,
    pub alive: bool,
    pub died_at: Option<f64>,
    pub state: ClusterState,
    pub membership: ClusterMembership,
    pub neighbors: BTreeMap<NodeId, NeighborRecord>,
    pub contention: Option<Contention>,
}

/// Result of charging energy to a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Debit {
    Charged(f64),
    /// The node could not afford the charge; it gave up this much and died.
    Depleted(f64),
}

impl NodeRuntime {
    pub fn new(id: NodeId, position: Position, e_ini: f64, mains: bool) -> Self {
        Self {
            id,
            position,
            e_ini,
            e_res: e_ini,
            mains,
            alive: true,
            died_at: None,
            state: ClusterState::Initial,
            membership: ClusterMembership::none(),
            neighbors: BTreeMap::new(),
            contention: None,
        }
    }

    pub fn consumed(&self) -> f64 {
        self.e_ini - self.e_res
    }

    /// Charges `amount` joules. A battery node that cannot pay in full spends
    /// nothing on the operation, drops to zero and dies at `now`.
    pub fn debit(&mut self, amount: f64, now: f64) -> Debit {
        debug_assert!(self.alive);
        if self.mains {
            return Debit::Charged(0.0);
        }
        if amount < self.e_res {
            self.e_res -= amount;
            return Debit::Charged(amount);
        }
        let lost = self.e_res;
        self.e_res = 0.0;
        self.alive = false;
        self.died_at = Some(now);
        self.contention = None;
        Debit::Depleted(lost)
    }

    /// Neighbors whose link estimate is usable in both directions.
    pub fn usable_neighbors(&self) -> impl Iterator<Item = (NodeId, &NeighborRecord)> {
        self.neighbors
            .iter()
            .filter(|(_, r)| r.link.estimate().is_usable())
            .map(|(&id, r)| (id, r))
    }

    /// Neighbors heard at least once within the current probe window.
    pub fn heard_neighbors(&self) -> impl Iterator<Item = (NodeId, &NeighborRecord)> {
        self.neighbors
            .iter()
            .filter(|(_, r)| r.link.rev.received() > 0)
            .map(|(&id, r)| (id, r))
    }

    /// Same-cluster gateways this node has heard from.
    pub fn known_gateways(&self, cluster: ClusterMembership) -> Vec<NodeId> {
        if cluster.id().is_none() {
            return Vec::new();
        }
        self.neighbors
            .iter()
            .filter(|(_, r)| matches!(r.heard, Some((s, c)) if s.is_gateway() && c == cluster))
            .map(|(&id, _)| id)
            .collect()
    }
}

/// End-of-run view of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeSnapshot {
    pub id: NodeId,
    pub position: Position,
    pub e_res: f64,
    pub alive: bool,
    pub died_at: Option<f64>,
    pub state: ClusterState,
    pub cluster: Option<NodeId>,
}

impl From<&NodeRuntime> for NodeSnapshot {
    fn from(n: &NodeRuntime) -> Self {
        Self {
            id: n.id,
            position: n.position,
            e_res: n.e_res,
            alive: n.alive,
            died_at: n.died_at,
            state: n.state,
            cluster: n.membership.id(),
        }
    }
}
