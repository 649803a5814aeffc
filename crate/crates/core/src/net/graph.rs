use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{ModelError, NodeId, Position};

/// Undirected unit-disk graph over stationary nodes.
///
/// Two nodes are linked iff their euclidean distance is at most the shared
/// communication range (closed ball).
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    nodes: Vec<(NodeId, Position)>,
    index: BTreeMap<NodeId, usize>,
    comm_range: f64,
    adjacency: Vec<Vec<NodeId>>,
}

/// Builds the unit-disk graph for `nodes` with the given range.
pub fn build_graph(nodes: &[(NodeId, Position)], comm_range: f64) -> Result<NetworkGraph, ModelError> {
    if nodes.is_empty() {
        return Err(ModelError::EmptyNetwork);
    }
    if !(comm_range > 0.0 && comm_range.is_finite()) {
        return Err(ModelError::InvalidRange(comm_range));
    }
    let mut index = BTreeMap::new();
    for (i, (id, pos)) in nodes.iter().enumerate() {
        if !pos.is_finite() {
            return Err(ModelError::NonFinitePosition(*id));
        }
        if index.insert(*id, i).is_some() {
            return Err(ModelError::DuplicateNode(*id));
        }
    }

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i].1.distance(&nodes[j].1) <= comm_range {
                adjacency[i].push(nodes[j].0);
                adjacency[j].push(nodes[i].0);
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    Ok(NetworkGraph {
        nodes: nodes.to_vec(),
        index,
        comm_range,
        adjacency,
    })
}

impl NetworkGraph {
    /// Convenience constructor assigning ids `0..n` in order.
    pub fn from_positions(positions: &[Position], comm_range: f64) -> Result<Self, ModelError> {
        let nodes: Vec<_> = positions
            .iter()
            .enumerate()
            .map(|(i, p)| (NodeId(i as u32), *p))
            .collect();
        build_graph(&nodes, comm_range)
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[(NodeId, Position)] {
        &self.nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|(id, _)| *id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn position(&self, id: NodeId) -> Option<Position> {
        self.index.get(&id).map(|&i| self.nodes[i].1)
    }

    /// Neighbor set of `id`, sorted by id. Empty for unknown ids.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        self.index
            .get(&id)
            .map(|&i| self.adjacency[i].as_slice())
            .unwrap_or(&[])
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> Option<f64> {
        Some(self.position(a)?.distance(&self.position(b)?))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Unordered edge list with `a < b`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, (a, _)) in self.nodes.iter().enumerate() {
            for b in &self.adjacency[i] {
                if a < b {
                    out.push((*a, *b));
                }
            }
        }
        out
    }

    /// Breadth-first reachability from `source`, including `source` itself.
    pub fn reachable_from(&self, source: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        if !self.contains(source) {
            return seen;
        }
        let mut queue = VecDeque::from([source]);
        seen.insert(source);
        while let Some(n) = queue.pop_front() {
            for &m in self.neighbors(n) {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        match self.nodes.first() {
            Some((first, _)) => self.reachable_from(*first).len() == self.nodes.len(),
            None => true,
        }
    }
}
