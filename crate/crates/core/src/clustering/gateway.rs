use std::collections::BTreeMap;

use serde::Serialize;

use super::{ClusterMembership, ClusterState, GATEWAY_QUOTA};
use crate::net::{NetworkGraph, NodeId};

/// One member of a cluster as seen by the census.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusMember {
    pub id: NodeId,
    pub state: ClusterState,
    /// Has at least one neighbor belonging to a different cluster.
    pub bridges: bool,
}

/// Members grouped by cluster id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterCensus {
    pub clusters: BTreeMap<NodeId, Vec<CensusMember>>,
}

impl ClusterCensus {
    /// Groups nodes by cluster. Nodes without a cluster, in `IN` or in an
    /// internal state are not members of anything. `include` filters nodes
    /// out entirely (e.g. dead ones).
    pub fn from_assignment(
        graph: &NetworkGraph,
        assignment: &BTreeMap<NodeId, (ClusterState, ClusterMembership)>,
        include: impl Fn(NodeId) -> bool,
    ) -> Self {
        let cluster_of = |id: NodeId| -> Option<NodeId> {
            if !include(id) {
                return None;
            }
            let (state, m) = assignment.get(&id)?;
            if *state == ClusterState::Initial || state.is_internal() {
                return None;
            }
            m.id()
        };
        let mut clusters: BTreeMap<NodeId, Vec<CensusMember>> = BTreeMap::new();
        for (&id, &(state, _)) in assignment {
            let Some(c) = cluster_of(id) else { continue };
            let bridges = graph
                .neighbors(id)
                .iter()
                .any(|&n| matches!(cluster_of(n), Some(other) if other != c));
            clusters.entry(c).or_default().push(CensusMember { id, state, bridges });
        }
        Self { clusters }
    }

    pub fn has_foreign_contact(&self, cluster: NodeId) -> bool {
        self.clusters
            .get(&cluster)
            .is_some_and(|m| m.iter().any(|x| x.bridges))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GatewayViolation {
    pub cluster: NodeId,
    pub gateways: usize,
    pub required: usize,
}

/// Clusters holding fewer gateways (`GW` or `D_GW`) than the heuristic asks.
///
/// A cluster is only held to as many gateways as it has non-clusterhead
/// members touching another cluster, capped at [`GATEWAY_QUOTA`]. An isolated
/// cluster therefore never violates.
pub fn check_gateway_heuristic(census: &ClusterCensus) -> Vec<GatewayViolation> {
    census
        .clusters
        .iter()
        .filter_map(|(&cluster, members)| {
            let gateways = members.iter().filter(|m| m.state.is_gateway()).count();
            let bridgeable = members
                .iter()
                .filter(|m| m.bridges && m.state != ClusterState::ClusterHead)
                .count();
            let required = bridgeable.min(GATEWAY_QUOTA);
            (gateways < required).then_some(GatewayViolation {
                cluster,
                gateways,
                required,
            })
        })
        .collect()
}
