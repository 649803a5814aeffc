//! Passive clustering with link-aware candidate priority.
//!
//! Nodes never send cluster-control packets. Every data packet carries the
//! sender's cluster state and cluster id in its header, and receivers update
//! their own state from what they overhear. Candidates (`CH_R`, `GW_R`)
//! defer their next transmission by a priority-derived backoff; the first
//! candidate to transmit within range claims the role.
//!
//! ```text
//!        hear CH                  hear GW
//!   IN ---------> GW_R      IN ---------> CH_R
//!   OD --(own CH)--> GW_R
//!
//!   CH_R --deadline--> CH        CH_R --hear CH--> OD
//!   GW_R --deadline--> GW        GW_R --2 cluster GWs--> OD
//!   GW_R --hear foreign GW, deadline--> D_GW
//! ```

mod audit;
mod contention;
mod gateway;
mod header;
mod priority;
mod state;

use thiserror::Error;

pub use audit::{audit_clusters, ClusterAudit};
pub use contention::{
    run_contention, Contention, ContentionOutcome, ContentionRecord, Overheard, Verdict,
    GATEWAY_QUOTA,
};
pub use gateway::{check_gateway_heuristic, CensusMember, ClusterCensus, GatewayViolation};
pub use header::{piggyback_state, PacketHeader, PacketKind};
pub use priority::{
    backoff_base, backoff_wait, calc_priority, scaled_backoff_wait, select_priority_link,
    split_by_requirement, PrioritySplit,
};
pub use state::{on_receive_report, ClusterMembership, ClusterState, Transition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("sender reported internal state {0}; only external states are transmitted")]
    InternalSender(ClusterState),
    #[error("state {0} cannot be piggybacked; a node must commit to an external state before transmitting")]
    InternalPiggyback(ClusterState),
    #[error("contention requires a candidate state (CH_R or GW_R), node is {0}")]
    NotCandidate(ClusterState),
    #[error("candidate has no measurable neighbors; priority is undefined")]
    NoNeighbors,
    #[error("report requirement must be positive, got {0}")]
    InvalidRequirement(f64),
    #[error("priority must be positive and finite, got {0}")]
    InvalidPriority(f64),
    #[error("time slot must be positive and finite, got {0}")]
    InvalidSlot(f64),
}
