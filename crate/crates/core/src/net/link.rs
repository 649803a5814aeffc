use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{ModelError, NodeId};

/// Expected bidirectional transmission count of a link, `1 / (p_fwd * p_rev)`.
pub fn compute_etx(p_fwd: f64, p_rev: f64) -> Result<f64, ModelError> {
    let valid = |p: f64| p > 0.0 && p <= 1.0;
    if !(valid(p_fwd) && valid(p_rev)) {
        return Err(ModelError::DeliveryRatio { fwd: p_fwd, rev: p_rev });
    }
    Ok(1.0 / (p_fwd * p_rev))
}

/// Predicted transmission count: how many reports the residual energy can
/// push across a link of the given ETX at `e_tx` joules per attempt.
pub fn compute_ptx(e_res: f64, etx: f64, e_tx: f64) -> Result<f64, ModelError> {
    if !(e_res >= 0.0) {
        return Err(ModelError::NegativeEnergy(e_res));
    }
    if !(etx >= 1.0) {
        return Err(ModelError::EtxBelowOne(etx));
    }
    if !(e_tx > 0.0) {
        return Err(ModelError::NonPositiveTxEnergy(e_tx));
    }
    Ok(e_res / (etx * e_tx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeOutcome {
    Received,
    Lost,
}

/// Link direction as seen from the node that owns the window.
///
/// `Forward` is this node to the neighbor (learned from the neighbor's probe
/// reports), `Reverse` is the neighbor to this node (measured directly).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Sliding record of the last `capacity` probe periods for one direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeWindow {
    capacity: usize,
    outcomes: VecDeque<bool>,
    received: usize,
}

impl ProbeWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "probe window needs at least one slot");
        Self {
            capacity,
            outcomes: VecDeque::with_capacity(capacity),
            received: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn record(&mut self, outcome: ProbeOutcome) {
        if self.outcomes.len() == self.capacity {
            if let Some(true) = self.outcomes.pop_front() {
                self.received -= 1;
            }
        }
        let got = outcome == ProbeOutcome::Received;
        self.outcomes.push_back(got);
        if got {
            self.received += 1;
        }
    }

    /// Probes expected within the window.
    pub fn sent(&self) -> usize {
        self.outcomes.len()
    }

    pub fn received(&self) -> usize {
        self.received
    }

    /// `received / sent`, or 0 before any probe period has elapsed.
    pub fn ratio(&self) -> f64 {
        if self.outcomes.is_empty() {
            0.0
        } else {
            self.received as f64 / self.outcomes.len() as f64
        }
    }
}

/// Current delivery-ratio estimate of a link. `etx` is `None` while either
/// direction has an estimated ratio of zero; such a link is unusable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEstimate {
    pub p_fwd: f64,
    pub p_rev: f64,
    pub etx: Option<f64>,
}

impl LinkEstimate {
    pub fn is_usable(&self) -> bool {
        self.etx.is_some()
    }
}

/// Per-neighbor probe statistics for both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkStatsWindow {
    pub fwd: ProbeWindow,
    pub rev: ProbeWindow,
}

impl LinkStatsWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            fwd: ProbeWindow::new(capacity),
            rev: ProbeWindow::new(capacity),
        }
    }

    /// Records one probe outcome and returns the re-estimated link.
    pub fn record(&mut self, direction: Direction, outcome: ProbeOutcome) -> LinkEstimate {
        match direction {
            Direction::Forward => self.fwd.record(outcome),
            Direction::Reverse => self.rev.record(outcome),
        }
        self.estimate()
    }

    /// Replaces the forward record with the neighbor's own reverse record,
    /// which its probes carry.
    pub fn sync_forward(&mut self, remote_reverse: &ProbeWindow) {
        self.fwd = remote_reverse.clone();
    }

    pub fn estimate(&self) -> LinkEstimate {
        let p_fwd = self.fwd.ratio();
        let p_rev = self.rev.ratio();
        LinkEstimate {
            p_fwd,
            p_rev,
            etx: compute_etx(p_fwd, p_rev).ok(),
        }
    }
}

/// Snapshot of a usable link as used for priority calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub neighbor: NodeId,
    pub distance: f64,
    pub p_fwd: f64,
    pub p_rev: f64,
    pub etx: f64,
    pub ptx: f64,
}

impl NeighborEntry {
    /// Builds an entry from a link estimate; `None` for unusable links.
    pub fn from_estimate(neighbor: NodeId, distance: f64, est: &LinkEstimate) -> Option<Self> {
        Some(Self {
            neighbor,
            distance,
            p_fwd: est.p_fwd,
            p_rev: est.p_rev,
            etx: est.etx?,
            ptx: 0.0,
        })
    }

    /// Refreshes `ptx` from the owner's residual energy and the per-attempt
    /// transmit energy over this link.
    pub fn update_ptx(&mut self, e_res: f64, e_tx: f64) -> Result<f64, ModelError> {
        self.ptx = compute_ptx(e_res, self.etx, e_tx)?;
        Ok(self.ptx)
    }
}
