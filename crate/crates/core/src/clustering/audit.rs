use std::collections::BTreeMap;

use serde::Serialize;

use super::{check_gateway_heuristic, ClusterCensus, ClusterMembership, ClusterState, GatewayViolation};
use crate::net::{NetworkGraph, NodeId};

/// Structural check of a cluster assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClusterAudit {
    /// Neighboring pairs that are both clusterheads.
    pub adjacent_heads: Vec<(NodeId, NodeId)>,
    /// Ordinary nodes with no clusterhead of their own cluster in range.
    pub orphans: Vec<NodeId>,
    /// Gateway shortfalls in clusters that touch another cluster.
    pub violations_with_contact: Vec<GatewayViolation>,
    /// Gateway shortfalls in clusters with no foreign contact.
    pub isolated_violations: Vec<GatewayViolation>,
}

impl ClusterAudit {
    pub fn is_clean(&self) -> bool {
        self.adjacent_heads.is_empty() && self.orphans.is_empty() && self.violations_with_contact.is_empty()
    }
}

/// Audits the assignment of the nodes accepted by `include`.
pub fn audit_clusters(
    graph: &NetworkGraph,
    assignment: &BTreeMap<NodeId, (ClusterState, ClusterMembership)>,
    include: impl Fn(NodeId) -> bool + Copy,
) -> ClusterAudit {
    let state = |id: NodeId| assignment.get(&id).filter(|_| include(id)).copied();
    let mut audit = ClusterAudit::default();
    for (&id, &(s, m)) in assignment {
        if !include(id) {
            continue;
        }
        match s {
            ClusterState::ClusterHead => {
                for &n in graph.neighbors(id) {
                    if n > id && matches!(state(n), Some((ClusterState::ClusterHead, _))) {
                        audit.adjacent_heads.push((id, n));
                    }
                }
            }
            ClusterState::Ordinary => {
                let served = m.id().is_some_and(|c| {
                    graph.has_edge(id, c) && matches!(state(c), Some((ClusterState::ClusterHead, _)))
                });
                if !served {
                    audit.orphans.push(id);
                }
            }
            _ => {}
        }
    }
    let census = ClusterCensus::from_assignment(graph, assignment, include);
    for v in check_gateway_heuristic(&census) {
        if census.has_foreign_contact(v.cluster) {
            audit.violations_with_contact.push(v);
        } else {
            audit.isolated_violations.push(v);
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Position;
    use ClusterState::*;

    #[test]
    fn flags_adjacent_heads_and_orphans() {
        let pts = [Position::new(0.0, 0.0), Position::new(10.0, 0.0), Position::new(50.0, 0.0)];
        let g = NetworkGraph::from_positions(&pts, 30.0).unwrap();
        let m = |c: u32| ClusterMembership::of(NodeId(c));
        let a: BTreeMap<_, _> = [
            (NodeId(0), (ClusterHead, m(0))),
            (NodeId(1), (ClusterHead, m(1))),
            (NodeId(2), (Ordinary, m(0))),
        ]
        .into();
        let audit = audit_clusters(&g, &a, |_| true);
        assert_eq!(audit.adjacent_heads, vec![(NodeId(0), NodeId(1))]);
        assert_eq!(audit.orphans, vec![NodeId(2)]);
        assert!(!audit.is_clean());
    }
}
