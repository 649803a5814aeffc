use rand::Rng;

use super::ProtocolError;
use crate::net::NodeId;

/// Neighbor links partitioned by whether their PTX meets the report
/// requirement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrioritySplit {
    pub sat: Vec<(NodeId, f64)>,
    pub unsat: Vec<(NodeId, f64)>,
}

pub fn split_by_requirement(neighbor_ptx: &[(NodeId, f64)], n_req: f64) -> PrioritySplit {
    let (sat, unsat) = neighbor_ptx.iter().copied().partition(|&(_, ptx)| ptx >= n_req);
    PrioritySplit { sat, unsat }
}

/// Picks the link that defines a candidate's priority: the weakest link that
/// still satisfies `n_req`, or, when none does, the strongest link overall.
/// Equal PTX values resolve to the lower neighbor id.
pub fn select_priority_link(
    neighbor_ptx: &[(NodeId, f64)],
    n_req: f64,
) -> Result<(NodeId, f64), ProtocolError> {
    if !(n_req > 0.0) || !n_req.is_finite() {
        return Err(ProtocolError::InvalidRequirement(n_req));
    }
    if neighbor_ptx.is_empty() {
        return Err(ProtocolError::NoNeighbors);
    }
    let split = split_by_requirement(neighbor_ptx, n_req);
    let by_ptx_then_id =
        |a: &&(NodeId, f64), b: &&(NodeId, f64)| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0));
    let chosen = if split.sat.is_empty() {
        split.unsat.iter().max_by(by_ptx_then_id)
    } else {
        split.sat.iter().min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    };
    Ok(*chosen.expect("non-empty partition"))
}

/// Candidate priority `rho` from the PTX of each measurable neighbor link.
pub fn calc_priority(neighbor_ptx: &[(NodeId, f64)], n_req: f64) -> Result<f64, ProtocolError> {
    select_priority_link(neighbor_ptx, n_req).map(|(_, ptx)| ptx)
}

/// Deterministic part of the backoff: `t_slot * floor(scale / rho)`.
pub fn backoff_base(rho: f64, t_slot: f64, scale: f64) -> Result<f64, ProtocolError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(ProtocolError::InvalidPriority(rho));
    }
    if !(t_slot > 0.0) || !t_slot.is_finite() {
        return Err(ProtocolError::InvalidSlot(t_slot));
    }
    Ok(t_slot * (scale / rho).floor())
}

/// Backoff with unit scale plus a uniform jitter in `[0, t_slot)`.
pub fn backoff_wait<R: Rng + ?Sized>(rho: f64, t_slot: f64, rng: &mut R) -> Result<f64, ProtocolError> {
    scaled_backoff_wait(rho, t_slot, 1.0, rng)
}

/// Backoff `t_slot * floor(scale / rho) + u`, `u ~ U[0, t_slot)`.
///
/// `scale = 1` is the literal rule. Because PTX values are usually far above
/// one, the floor term is then zero for every candidate and only the jitter
/// separates them; a larger scale spreads candidates over distinct slots.
pub fn scaled_backoff_wait<R: Rng + ?Sized>(
    rho: f64,
    t_slot: f64,
    scale: f64,
    rng: &mut R,
) -> Result<f64, ProtocolError> {
    let base = backoff_base(rho, t_slot, scale)?;
    Ok(base + rng.random::<f64>() * t_slot)
}
