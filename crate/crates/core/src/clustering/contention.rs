use std::collections::BTreeSet;

use super::{ClusterMembership, ClusterState, ProtocolError};
use crate::net::NodeId;

/// Gateways a cluster should keep for connectivity. A gateway candidate that
/// knows this many gateways of its own cluster yields.
pub const GATEWAY_QUOTA: usize = 2;

/// Timing of one contention round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentionRecord {
    pub rho: f64,
    pub t_slot: f64,
    pub wait: f64,
    pub start: f64,
    pub deadline: f64,
    /// `ClusterHead` or `Gateway`.
    pub desired_role: ClusterState,
    pub new_state_determined: bool,
}

impl ContentionRecord {
    pub fn new(desired_role: ClusterState, rho: f64, t_slot: f64, start: f64, wait: f64) -> Self {
        Self {
            rho,
            t_slot,
            wait,
            start,
            deadline: start + wait,
            desired_role,
            new_state_determined: false,
        }
    }
}

/// A data packet header heard while contending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overheard {
    pub at: f64,
    pub sender: NodeId,
    pub state: ClusterState,
    pub cluster: ClusterMembership,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Continue,
    /// The candidate lost and is now ordinary; contention is over.
    Lost,
}

/// Final state of a contention round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentionOutcome {
    pub state: ClusterState,
    pub membership: ClusterMembership,
    /// Foreign-cluster gateway this node pairs with when it becomes `D_GW`.
    pub partner: Option<NodeId>,
    pub decided_at: f64,
}

/// A running contention for one candidate node.
#[derive(Debug, Clone)]
pub struct Contention {
    candidate: ClusterState,
    membership: ClusterMembership,
    record: ContentionRecord,
    gateways: BTreeSet<NodeId>,
    heard_clusterhead: bool,
    determined: Option<ContentionOutcome>,
}

impl Contention {
    /// Starts contention. `known_gateways` are same-cluster gateways the node
    /// already learned from earlier headers.
    pub fn begin(
        candidate: ClusterState,
        membership: ClusterMembership,
        record: ContentionRecord,
        known_gateways: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self, ProtocolError> {
        if !candidate.is_internal() {
            return Err(ProtocolError::NotCandidate(candidate));
        }
        let mut c = Self {
            candidate,
            membership,
            record,
            gateways: BTreeSet::new(),
            heard_clusterhead: false,
            determined: None,
        };
        if candidate == ClusterState::GwReady {
            c.gateways.extend(known_gateways);
            if c.gateways.len() >= GATEWAY_QUOTA {
                c.decide(ClusterState::Ordinary, membership, None, record.start);
            }
        }
        Ok(c)
    }

    pub fn candidate(&self) -> ClusterState {
        self.candidate
    }

    pub fn membership(&self) -> ClusterMembership {
        self.membership
    }

    pub fn record(&self) -> &ContentionRecord {
        &self.record
    }

    pub fn deadline(&self) -> f64 {
        self.record.deadline
    }

    pub fn heard_clusterhead(&self) -> bool {
        self.heard_clusterhead
    }

    /// True once the node has lost and already holds `OD`.
    pub fn is_lost(&self) -> bool {
        matches!(self.determined, Some(o) if o.state == ClusterState::Ordinary)
    }

    pub fn determined(&self) -> Option<&ContentionOutcome> {
        self.determined.as_ref()
    }

    /// Pushes the deadline back, e.g. while the channel is busy.
    pub fn defer_to(&mut self, t: f64) {
        if t > self.record.deadline {
            self.record.deadline = t;
        }
    }

    fn decide(&mut self, state: ClusterState, membership: ClusterMembership, partner: Option<NodeId>, at: f64) {
        self.record.new_state_determined = true;
        self.determined = Some(ContentionOutcome {
            state,
            membership,
            partner,
            decided_at: at,
        });
    }

    /// Feeds one overheard header. Headers at or after the deadline, and any
    /// header once the new state is determined, are ignored.
    pub fn observe(&mut self, heard: &Overheard) -> Verdict {
        if self.determined.is_some() || heard.at >= self.record.deadline || heard.state.is_internal() {
            return if self.is_lost() { Verdict::Lost } else { Verdict::Continue };
        }
        let same_cluster = heard.cluster.id().is_some() && heard.cluster == self.membership;
        match (self.candidate, heard.state) {
            // First declaration wins: any clusterhead in range beats a clusterhead candidate,
            // which joins the winner's cluster.
            (ClusterState::ChReady, ClusterState::ClusterHead) => {
                self.decide(ClusterState::Ordinary, ClusterMembership::of(heard.sender), None, heard.at);
            }
            (ClusterState::GwReady, ClusterState::ClusterHead) => {
                if same_cluster {
                    self.heard_clusterhead = true;
                }
            }
            (ClusterState::GwReady, ClusterState::Gateway | ClusterState::DistributedGateway) if same_cluster => {
                self.gateways.insert(heard.sender);
                if self.gateways.len() >= GATEWAY_QUOTA {
                    self.decide(ClusterState::Ordinary, self.membership, None, heard.at);
                }
            }
            (ClusterState::GwReady, ClusterState::Gateway) if heard.cluster.id().is_some() => {
                self.decide(ClusterState::DistributedGateway, self.membership, Some(heard.sender), heard.at);
            }
            _ => {}
        }
        if self.is_lost() {
            Verdict::Lost
        } else {
            Verdict::Continue
        }
    }

    /// Resolves the round at its deadline. A determined state stands;
    /// otherwise the candidate commits to its desired role. A node that
    /// commits to `CH` heads its own cluster; the owner relabels its
    /// membership since the round does not know the node's id.
    pub fn expire(&self) -> ContentionOutcome {
        if let Some(o) = self.determined {
            return o;
        }
        ContentionOutcome {
            state: self.candidate.committed(),
            membership: self.membership,
            partner: None,
            decided_at: self.record.deadline,
        }
    }
}

/// Runs a whole contention round against the headers heard before the
/// deadline and returns the node's final external state.
pub fn run_contention(
    state: ClusterState,
    membership: ClusterMembership,
    record: ContentionRecord,
    known_gateways: &[NodeId],
    events: &[Overheard],
) -> Result<ContentionOutcome, ProtocolError> {
    let mut c = Contention::begin(state, membership, record, known_gateways.iter().copied())?;
    let mut ordered: Vec<_> = events.to_vec();
    ordered.sort_by(|a, b| a.at.total_cmp(&b.at).then(a.sender.cmp(&b.sender)));
    for e in &ordered {
        if c.observe(e) == Verdict::Lost {
            break;
        }
    }
    Ok(c.expire())
}
