use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::net::NodeId;

/// Cluster role of a node. `ChReady` and `GwReady` are internal candidate
/// states and are never seen on the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClusterState {
    #[serde(rename = "IN")]
    Initial,
    #[serde(rename = "OD")]
    Ordinary,
    #[serde(rename = "CH")]
    ClusterHead,
    #[serde(rename = "GW")]
    Gateway,
    #[serde(rename = "D_GW")]
    DistributedGateway,
    #[serde(rename = "CH_R")]
    ChReady,
    #[serde(rename = "GW_R")]
    GwReady,
}

impl ClusterState {
    pub const ALL: [ClusterState; 7] = [
        ClusterState::Initial,
        ClusterState::Ordinary,
        ClusterState::ClusterHead,
        ClusterState::Gateway,
        ClusterState::DistributedGateway,
        ClusterState::ChReady,
        ClusterState::GwReady,
    ];

    pub fn is_internal(self) -> bool {
        matches!(self, ClusterState::ChReady | ClusterState::GwReady)
    }

    pub fn is_external(self) -> bool {
        !self.is_internal()
    }

    pub fn is_gateway(self) -> bool {
        matches!(self, ClusterState::Gateway | ClusterState::DistributedGateway)
    }

    /// External state a candidate commits to when it wins contention.
    pub fn committed(self) -> ClusterState {
        match self {
            ClusterState::ChReady => ClusterState::ClusterHead,
            ClusterState::GwReady => ClusterState::Gateway,
            other => other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ClusterState::Initial => "IN",
            ClusterState::Ordinary => "OD",
            ClusterState::ClusterHead => "CH",
            ClusterState::Gateway => "GW",
            ClusterState::DistributedGateway => "D_GW",
            ClusterState::ChReady => "CH_R",
            ClusterState::GwReady => "GW_R",
        }
    }
}

impl fmt::Display for ClusterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Cluster a node belongs to: the id of the owning clusterhead, if known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterMembership(pub Option<NodeId>);

impl ClusterMembership {
    pub fn none() -> Self {
        Self(None)
    }

    pub fn of(id: NodeId) -> Self {
        Self(Some(id))
    }

    pub fn id(&self) -> Option<NodeId> {
        self.0
    }
}

/// Result of reacting to a received data packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub state: ClusterState,
    pub membership: ClusterMembership,
    /// The node just became a candidate and must start contention.
    pub contend: bool,
}

impl Transition {
    fn unchanged(state: ClusterState, membership: ClusterMembership) -> Self {
        Self {
            state,
            membership,
            contend: false,
        }
    }
}

/// Reaction of a node to a data packet overheard from a neighbor.
///
/// An initial node adopts the sender's cluster and becomes a gateway
/// candidate when the sender is a clusterhead, or a clusterhead candidate when
/// the sender is a gateway. An ordinary node hearing its own clusterhead
/// becomes a gateway candidate. Everything else leaves the node unchanged;
/// candidates react through [`super::Contention`] instead.
pub fn on_receive_report(
    state: ClusterState,
    membership: ClusterMembership,
    sender_state: ClusterState,
    sender_cluster: ClusterMembership,
) -> Result<Transition, ProtocolError> {
    if sender_state.is_internal() {
        return Err(ProtocolError::InternalSender(sender_state));
    }
    let out = match state {
        ClusterState::Initial => match sender_state {
            ClusterState::ClusterHead => Transition {
                state: ClusterState::GwReady,
                membership: sender_cluster,
                contend: true,
            },
            ClusterState::Gateway => Transition {
                state: ClusterState::ChReady,
                membership: sender_cluster,
                contend: true,
            },
            _ => Transition::unchanged(state, sender_cluster),
        },
        ClusterState::Ordinary
            if sender_state == ClusterState::ClusterHead
                && membership.id().is_some()
                && membership == sender_cluster =>
        {
            Transition {
                state: ClusterState::GwReady,
                membership,
                contend: true,
            }
        }
        _ => Transition::unchanged(state, membership),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClusterState::*;

    fn m(id: u32) -> ClusterMembership {
        ClusterMembership::of(NodeId(id))
    }

    #[test]
    fn initial_hearing_clusterhead() {
        let t = on_receive_report(Initial, ClusterMembership::none(), ClusterHead, m(7)).unwrap();
        assert_eq!(t, Transition { state: GwReady, membership: m(7), contend: true });
    }

    #[test]
    fn initial_hearing_gateway() {
        let t = on_receive_report(Initial, ClusterMembership::none(), Gateway, m(2)).unwrap();
        assert_eq!(t, Transition { state: ChReady, membership: m(2), contend: true });
    }

    #[test]
    fn initial_adopts_id_from_any_sender() {
        let t = on_receive_report(Initial, ClusterMembership::none(), Ordinary, m(4)).unwrap();
        assert_eq!(t, Transition { state: Initial, membership: m(4), contend: false });
    }

    #[test]
    fn ordinary_hearing_ordinary_is_unchanged() {
        let t = on_receive_report(Ordinary, m(3), Ordinary, m(3)).unwrap();
        assert_eq!(t, Transition { state: Ordinary, membership: m(3), contend: false });
    }

    #[test]
    fn ordinary_hearing_own_clusterhead() {
        let t = on_receive_report(Ordinary, m(3), ClusterHead, m(3)).unwrap();
        assert_eq!(t, Transition { state: GwReady, membership: m(3), contend: true });
        let t = on_receive_report(Ordinary, m(3), ClusterHead, m(8)).unwrap();
        assert_eq!(t.state, Ordinary);
        assert!(!t.contend);
    }

    #[test]
    fn clusterhead_ignores_gateway() {
        let t = on_receive_report(ClusterHead, m(5), Gateway, m(5)).unwrap();
        assert_eq!(t, Transition { state: ClusterHead, membership: m(5), contend: false });
    }

    #[test]
    fn internal_sender_is_a_protocol_violation() {
        for s in [ChReady, GwReady] {
            assert_eq!(
                on_receive_report(Initial, ClusterMembership::none(), s, m(1)),
                Err(ProtocolError::InternalSender(s))
            );
        }
    }

    #[test]
    fn every_other_combination_keeps_state() {
        for st in [ClusterHead, Gateway, DistributedGateway, ChReady, GwReady] {
            for sender in ClusterState::ALL.iter().copied().filter(|s| s.is_external()) {
                let t = on_receive_report(st, m(1), sender, m(1)).unwrap();
                assert_eq!(t.state, st);
                assert_eq!(t.membership, m(1));
                assert!(!t.contend);
            }
        }
    }
}
