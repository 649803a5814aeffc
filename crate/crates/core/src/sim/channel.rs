use rand::Rng;
use serde::Serialize;

use super::node::{Debit, NodeRuntime};
use crate::config::LinkProbability;
use crate::net::{NetworkGraph, NodeId, RadioParams};

/// Ground-truth delivery probability of every directed link, fixed for a run.
#[derive(Debug, Clone)]
pub struct TrueLinkModel {
    // Indexed like the graph adjacency: p[a][k] is for a -> neighbors(a)[k].
    p: Vec<Vec<f64>>,
}

impl TrueLinkModel {
    /// Draws one probability per directed edge, in (node, neighbor) order.
    pub fn draw<R: Rng + ?Sized>(graph: &NetworkGraph, spec: LinkProbability, rng: &mut R) -> Self {
        let p = graph
            .ids()
            .map(|a| {
                graph
                    .neighbors(a)
                    .iter()
                    .map(|_| match spec {
                        LinkProbability::Fixed(v) => v,
                        LinkProbability::Uniform { min, max } if min == max => min,
                        LinkProbability::Uniform { min, max } => rng.random_range(min..=max),
                    })
                    .collect()
            })
            .collect();
        Self { p }
    }

    pub fn uniform(graph: &NetworkGraph, p: f64) -> Self {
        Self {
            p: graph.ids().map(|a| vec![p; graph.degree(a)]).collect(),
        }
    }

    /// Probability that `from`'s transmission reaches `to`; zero off-graph.
    pub fn p(&self, graph: &NetworkGraph, from: NodeId, to: NodeId) -> f64 {
        graph
            .neighbors(from)
            .binary_search(&to)
            .map_or(0.0, |k| self.p[from.index()][k])
    }
}

/// Energy debits by cause, battery nodes only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub tx_j: f64,
    pub rx_j: f64,
    /// Residual energy given up by nodes that could not afford an operation.
    pub depleted_j: f64,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.tx_j + self.rx_j + self.depleted_j
    }

    fn record_tx(&mut self, d: Debit) {
        match d {
            Debit::Charged(e) => self.tx_j += e,
            Debit::Depleted(e) => self.depleted_j += e,
        }
    }

    fn record_rx(&mut self, d: Debit) {
        match d {
            Debit::Charged(e) => self.rx_j += e,
            Debit::Depleted(e) => self.depleted_j += e,
        }
    }
}

/// The sender could not afford the transmission and died.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SenderDepleted(pub NodeId);

/// Shared radio medium: connectivity, true link quality and energy model.
#[derive(Debug, Clone)]
pub struct Medium {
    pub graph: NetworkGraph,
    pub links: TrueLinkModel,
    pub radio: RadioParams,
}

impl Medium {
    /// One transmission of `bits` from `sender`, amplified for `distance`.
    ///
    /// Every graph neighbor gets an outcome. Alive neighbors receive
    /// independently with the true link probability and pay receive energy
    /// on success; a neighbor that cannot pay dies and does not receive.
    /// Dead neighbors never receive. Random draws are made for alive
    /// neighbors only, in id order.
    #[allow(clippy::too_many_arguments)]
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        nodes: &mut [NodeRuntime],
        ledger: &mut EnergyLedger,
        sender: NodeId,
        bits: u64,
        distance: f64,
        now: f64,
        rng: &mut R,
    ) -> Result<Vec<(NodeId, bool)>, SenderDepleted> {
        let s = &mut nodes[sender.index()];
        debug_assert!(s.alive, "dead node {sender} asked to transmit");
        let d = s.debit(self.radio.tx(bits, distance), now);
        ledger.record_tx(d);
        if matches!(d, Debit::Depleted(_)) {
            return Err(SenderDepleted(sender));
        }
        let rx = self.radio.rx(bits);
        let mut out = Vec::with_capacity(self.graph.degree(sender));
        for (k, &r) in self.graph.neighbors(sender).iter().enumerate() {
            let node = &mut nodes[r.index()];
            if !node.alive {
                out.push((r, false));
                continue;
            }
            let p = self.links.p[sender.index()][k];
            let hit = p >= 1.0 || rng.random::<f64>() < p;
            if !hit {
                out.push((r, false));
                continue;
            }
            let d = node.debit(rx, now);
            ledger.record_rx(d);
            out.push((r, matches!(d, Debit::Charged(_))));
        }
        Ok(out)
    }
}
