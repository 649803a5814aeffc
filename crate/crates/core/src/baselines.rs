//! Comparison election rules and greedy geographic forwarding.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{NodeId, Position};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElectionError {
    #[error("no candidates to elect from")]
    NoCandidates,
    #[error("residual energy {e_res} outside [0, {e_ini}]")]
    EnergyOutOfRange { e_res: f64, e_ini: f64 },
    #[error("invalid HEED parameters: c_prob={c_prob}, e_ini={e_ini}")]
    InvalidHeedParams { c_prob: f64, e_ini: f64 },
}

/// Lowest-ID clustering: the smallest id wins.
pub fn lic_elect(candidates: &BTreeSet<NodeId>) -> Result<NodeId, ElectionError> {
    candidates.first().copied().ok_or(ElectionError::NoCandidates)
}

/// Highest-connectivity clustering: the largest degree wins, lower id on ties.
pub fn hcc_elect(degrees: &BTreeMap<NodeId, usize>) -> Result<NodeId, ElectionError> {
    degrees
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&id, _)| id)
        .ok_or(ElectionError::NoCandidates)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeedParams {
    /// Initial fraction of clusterheads.
    pub c_prob: f64,
    /// Full-charge energy, J.
    pub e_ini: f64,
}

impl HeedParams {
    pub fn new(c_prob: f64, e_ini: f64) -> Result<Self, ElectionError> {
        if !(c_prob > 0.0 && c_prob <= 1.0) || !(e_ini > 0.0 && e_ini.is_finite()) {
            return Err(ElectionError::InvalidHeedParams { c_prob, e_ini });
        }
        Ok(Self { c_prob, e_ini })
    }
}

/// Clusterhead probability `c_prob * e_res / e_ini`.
pub fn heed_ch_prob(params: &HeedParams, e_res: f64) -> Result<f64, ElectionError> {
    if !(0.0..=params.e_ini).contains(&e_res) {
        return Err(ElectionError::EnergyOutOfRange { e_res, e_ini: params.e_ini });
    }
    Ok(params.c_prob * e_res / params.e_ini)
}

/// Uniform random pick, as plain passive clustering does.
pub fn random_pc_select<R: Rng + ?Sized>(candidates: &BTreeSet<NodeId>, rng: &mut R) -> Result<NodeId, ElectionError> {
    if candidates.is_empty() {
        return Err(ElectionError::NoCandidates);
    }
    let k = rng.random_range(0..candidates.len());
    Ok(*candidates.iter().nth(k).expect("index in range"))
}

/// Outcome of one greedy forwarding decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextHop {
    Forward(NodeId),
    /// No neighbor is strictly closer to the destination than this node.
    VoidRegion,
}

/// Greedy geographic forwarding: the neighbor closest to `dest`, if it is
/// strictly closer than the current node. Equal distances go to the lower id.
pub fn gpsr_greedy_next_hop(current: Position, neighbors: &[(NodeId, Position)], dest: Position) -> NextHop {
    let here = current.distance(&dest);
    neighbors
        .iter()
        .map(|(id, p)| (*id, p.distance(&dest)))
        .filter(|&(_, d)| d < here)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map_or(NextHop::VoidRegion, |(id, _)| NextHop::Forward(id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteStatus {
    Delivered,
    Void,
}

/// Hop sequence produced by repeated greedy forwarding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyRoute {
    pub hops: Vec<NodeId>,
    pub status: RouteStatus,
}

/// Traces a greedy route over a static neighbor relation.
///
/// `neighbors_of` lists `(id, position)` pairs adjacent to a node. Distance
/// to the destination strictly decreases every hop, so the walk ends within
/// `max_hops` on any finite graph; `max_hops` is a guard only.
pub fn greedy_route<F>(
    source: NodeId,
    destination: NodeId,
    position_of: impl Fn(NodeId) -> Position,
    neighbors_of: F,
    max_hops: usize,
) -> GreedyRoute
where
    F: Fn(NodeId) -> Vec<(NodeId, Position)>,
{
    let dest = position_of(destination);
    let mut hops = vec![source];
    let mut current = source;
    while current != destination && hops.len() <= max_hops {
        match gpsr_greedy_next_hop(position_of(current), &neighbors_of(current), dest) {
            NextHop::Forward(next) => {
                hops.push(next);
                current = next;
            }
            NextHop::VoidRegion => break,
        }
    }
    let status = if current == destination {
        RouteStatus::Delivered
    } else {
        RouteStatus::Void
    };
    GreedyRoute { hops, status }
}
