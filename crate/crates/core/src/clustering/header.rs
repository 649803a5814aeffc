use serde::{Deserialize, Serialize};

use super::{ClusterMembership, ClusterState, ProtocolError};
use crate::net::{NodeId, Position};

/// Packet kinds on the air. There is deliberately no cluster-control kind:
/// cluster information only ever rides on data packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    /// Periodic link-quality probe (also serves as position beacon).
    Probe,
    /// Query flooded from the sink.
    Query,
    /// Sensed report travelling toward the sink.
    Report,
    /// Link-layer acknowledgement of a unicast report.
    Ack,
}

impl PacketKind {
    /// Data packets carry cluster state and drive state transitions.
    pub fn is_data(self) -> bool {
        matches!(self, PacketKind::Query | PacketKind::Report)
    }
}

/// In-simulator packet header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketHeader {
    pub kind: PacketKind,
    pub src: NodeId,
    /// Intended next hop for unicast packets.
    pub dst: Option<NodeId>,
    pub sender_state: ClusterState,
    pub sender_cluster: ClusterMembership,
    pub seq: u64,
    /// Report requirement, carried by queries only.
    pub n_req: Option<f64>,
    /// Destination coordinates for geographic forwarding.
    pub dest_position: Option<Position>,
}

impl PacketHeader {
    pub fn new(kind: PacketKind, src: NodeId, seq: u64) -> Self {
        Self {
            kind,
            src,
            dst: None,
            sender_state: ClusterState::Initial,
            sender_cluster: ClusterMembership::none(),
            seq,
            n_req: None,
            dest_position: None,
        }
    }
}

/// Stamps the sender's external state and cluster onto an outgoing header.
pub fn piggyback_state(
    mut header: PacketHeader,
    state: ClusterState,
    cluster: ClusterMembership,
) -> Result<PacketHeader, ProtocolError> {
    if state.is_internal() {
        return Err(ProtocolError::InternalPiggyback(state));
    }
    header.sender_state = state;
    header.sender_cluster = cluster;
    Ok(header)
}
