use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::channel::{EnergyLedger, Medium, SenderDepleted, TrueLinkModel};
use super::event::EventQueue;
use super::metrics::{delivery_ratio, MetricsRow, MetricsSeries};
use super::node::{NeighborRecord, NodeRuntime, NodeSnapshot};
use super::topology::{place_nodes, MAX_PLACEMENT_ATTEMPTS};
use super::SimError;
use crate::baselines::{gpsr_greedy_next_hop, heed_ch_prob, HeedParams, NextHop, RouteStatus};
use crate::clustering::{
    audit_clusters, calc_priority, on_receive_report, piggyback_state, scaled_backoff_wait, ClusterMembership,
    ClusterAudit, ClusterState, Contention, ContentionOutcome, ContentionRecord, Overheard, PacketHeader,
    PacketKind, Verdict,
};
use crate::config::{ScenarioConfig, Strategy};
use crate::net::{compute_ptx, LinkStatsWindow, NetworkGraph, NodeId, Position, ProbeOutcome, Direction};

/// RNG stream for node placement.
pub const PLACEMENT_STREAM: u64 = 0;
/// RNG stream for ground-truth link probabilities.
pub const LINK_STREAM: u64 = 1;
/// RNG stream for everything that happens during the run.
pub const DYNAMICS_STREAM: u64 = 2;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone)]
struct Packet {
    header: PacketHeader,
    /// Nodes that held the packet, source first. Reports only.
    hops: Vec<NodeId>,
}

enum Event {
    Probe(NodeId),
    Arrival { to: NodeId, packet: Rc<Packet> },
    ContentionDeadline { node: NodeId, epoch: u64 },
    ReportDue(NodeId),
    QueryStart,
    FloodForward { node: NodeId, packet: Packet },
    Sample(usize),
}

enum Outgoing {
    Query(Packet),
    Report(Packet),
}

/// Transmissions by packet kind. Retransmissions count individually.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PacketCounts {
    pub probes: u64,
    pub queries: u64,
    pub reports: u64,
    pub acks: u64,
    /// Packets sent only to maintain clusters. Nothing ever increments it.
    pub cluster_control: u64,
}

impl PacketCounts {
    pub fn total(&self) -> u64 {
        self.probes + self.queries + self.reports + self.acks + self.cluster_control
    }
}

/// Reports abandoned before reaching the sink, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DropCounts {
    /// Holder had no next hop toward the sink.
    pub no_route: u64,
    /// Greedy forwarding hit a local minimum.
    pub void_region: u64,
    /// No acknowledgement after all retries.
    pub unacknowledged: u64,
    /// Holder died with the report queued or while sending.
    pub holder_died: u64,
    /// Hop limit exceeded.
    pub hop_limit: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteTrace {
    pub report: u64,
    pub hops: Vec<NodeId>,
    pub status: RouteStatus,
}

/// Receiver-side estimate of one directed link at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkObservation {
    pub from: NodeId,
    pub to: NodeId,
    pub p_true: f64,
    pub p_est: f64,
    pub probes: usize,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub series: MetricsSeries,
    pub graph: NetworkGraph,
    pub nodes: Vec<NodeSnapshot>,
    pub ledger: EnergyLedger,
    pub packets: PacketCounts,
    pub drops: DropCounts,
    pub routes: Vec<RouteTrace>,
    pub warnings: Vec<String>,
    pub sources: BTreeSet<NodeId>,
    /// Nodes that received the first query, sink included.
    pub query_reached: BTreeSet<NodeId>,
    pub dgw_pairs: Vec<(NodeId, NodeId)>,
    pub terminated_early_at: Option<f64>,
    pub events_processed: u64,
    pub link_estimates: Vec<LinkObservation>,
}

impl ScenarioOutcome {
    /// Energy drawn from batteries, per node state.
    pub fn energy_consumed(&self) -> f64 {
        self.nodes
            .iter()
            .zip(self.battery_mask())
            .filter(|(_, b)| *b)
            .map(|(n, _)| self.config.e_ini - n.e_res)
            .sum()
    }

    fn battery_mask(&self) -> impl Iterator<Item = bool> + '_ {
        let mains_sink = self.config.sink_mains_powered;
        (0..self.nodes.len()).map(move |i| !(i == 0 && mains_sink))
    }

    /// Relative gap between per-node consumption and recorded debits.
    pub fn conservation_error(&self) -> f64 {
        let consumed = self.energy_consumed();
        let recorded = self.ledger.total();
        let scale = consumed.abs().max(recorded.abs());
        if scale == 0.0 {
            0.0
        } else {
            (consumed - recorded).abs() / scale
        }
    }

    /// Time of the first battery death.
    pub fn first_death(&self) -> Option<f64> {
        self.nodes
            .iter()
            .filter_map(|n| n.died_at)
            .min_by(f64::total_cmp)
    }

    pub fn deaths(&self) -> usize {
        self.nodes.iter().filter(|n| !n.alive).count()
    }

    /// Final state and cluster of every node.
    pub fn assignment(&self) -> BTreeMap<NodeId, (ClusterState, ClusterMembership)> {
        self.nodes
            .iter()
            .map(|n| (n.id, (n.state, ClusterMembership(n.cluster))))
            .collect()
    }

    /// Audits the final clusters among nodes still alive.
    pub fn audit(&self) -> ClusterAudit {
        let alive: Vec<bool> = self.nodes.iter().map(|n| n.alive).collect();
        audit_clusters(&self.graph, &self.assignment(), |id| alive[id.index()])
    }

    pub fn reports_delivered(&self) -> u64 {
        self.series.last().map_or(0, |r| r.reports_delivered)
    }
}

/// Runs one scenario with placement drawn from the config.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome, SimError> {
    Ok(Simulator::new(config)?.run())
}

/// Runs one scenario on fixed positions; node 0 is the sink.
pub fn run_scenario_with_positions(config: &ScenarioConfig, positions: &[Position]) -> Result<ScenarioOutcome, SimError> {
    Ok(Simulator::with_positions(config, positions)?.run())
}

/// Single-threaded discrete-event simulator for one run.
pub struct Simulator {
    cfg: ScenarioConfig,
    medium: Medium,
    nodes: Vec<NodeRuntime>,
    ledger: EnergyLedger,
    queue: EventQueue<Event>,
    rng: ChaCha8Rng,
    now: f64,
    sink: NodeId,
    sink_pos: Position,
    clustering: bool,
    heed: HeedParams,
    hop_limit: usize,
    sample_count: usize,
    draining: bool,

    busy_until: Vec<f64>,
    outbox: Vec<Vec<Outgoing>>,
    /// Deadline passed with nothing to send: the candidate keeps listening
    /// and commits when it next transmits.
    armed: Vec<bool>,
    epoch: Vec<u64>,
    parent: Vec<Option<NodeId>>,
    parent_rank: Vec<u8>,
    /// Last query sequence this node rebroadcast.
    forwarded: Vec<Option<u64>>,
    last_query: Vec<Option<u64>>,
    n_req: Vec<f64>,
    death_seen: Vec<bool>,

    next_query: u64,
    next_report: u64,
    reports_sent: u64,
    delivered: HashSet<u64>,
    sources: BTreeSet<NodeId>,
    query_reached: BTreeSet<NodeId>,
    packets: PacketCounts,
    drops: DropCounts,
    routes: Vec<RouteTrace>,
    dgw_pairs: Vec<(NodeId, NodeId)>,
    warnings: Vec<String>,
    series: MetricsSeries,
    zero_streak: u32,
    terminated_at: Option<f64>,
    events_processed: u64,
}

impl Simulator {
    pub fn new(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let topo = place_nodes(config, &mut stream(config.seed, PLACEMENT_STREAM))?;
        let mut warnings = Vec::new();
        if config.require_connected && !topo.graph.is_connected() {
            warnings.push(format!(
                "no connected placement found in {MAX_PLACEMENT_ATTEMPTS} draws; running on a disconnected network"
            ));
        }
        Self::build(config, topo.graph, warnings)
    }

    pub fn with_positions(config: &ScenarioConfig, positions: &[Position]) -> Result<Self, SimError> {
        config.validate()?;
        if positions.len() != config.node_count {
            return Err(SimError::PositionCount {
                expected: config.node_count,
                got: positions.len(),
            });
        }
        let graph = NetworkGraph::from_positions(positions, config.comm_range)?;
        Self::build(config, graph, Vec::new())
    }

    fn build(config: &ScenarioConfig, graph: NetworkGraph, mut warnings: Vec<String>) -> Result<Self, SimError> {
        let radio = config.radio_params()?;
        let links = TrueLinkModel::draw(&graph, config.link_p_true, &mut stream(config.seed, LINK_STREAM));
        let n = graph.len();
        let sink = NodeId(0);
        let sink_pos = graph.position(sink).expect("sink exists");
        let nodes: Vec<_> = graph
            .nodes()
            .iter()
            .map(|&(id, pos)| NodeRuntime::new(id, pos, config.e_ini, id == sink && config.sink_mains_powered))
            .collect();

        let in_region: Vec<NodeId> = nodes
            .iter()
            .filter(|nd| nd.id != sink && config.region.is_none_or(|r| r.contains(&nd.position)))
            .map(|nd| nd.id)
            .collect();
        if in_region.is_empty() {
            warnings.push("query region contains no sensor nodes; there will be no sources".into());
        }
        let reach = graph.reachable_from(sink);
        let cut_off = in_region.iter().filter(|id| !reach.contains(id)).count();
        if cut_off > 0 {
            warnings.push(format!("{cut_off} prospective source(s) have no path to the sink at t=0"));
        }
        if config.query_start > config.duration {
            warnings.push("query_start is after the end of the run; no query is issued".into());
        }

        let heed = HeedParams::new(config.heed_c_prob, config.e_ini).map_err(|e| SimError::Strategy(e.to_string()))?;
        let sample_count = (config.duration / config.sampling_interval + 1e-9).floor() as usize + 1;
        Ok(Self {
            medium: Medium { graph, links, radio },
            nodes,
            ledger: EnergyLedger::default(),
            queue: EventQueue::new(),
            rng: stream(config.seed, DYNAMICS_STREAM),
            now: 0.0,
            sink,
            sink_pos,
            clustering: config.strategy.uses_clustering(),
            heed,
            hop_limit: 4 * n + 4,
            sample_count,
            draining: false,
            busy_until: vec![0.0; n],
            outbox: (0..n).map(|_| Vec::new()).collect(),
            armed: vec![false; n],
            epoch: vec![0; n],
            parent: vec![None; n],
            parent_rank: vec![u8::MAX; n],
            forwarded: vec![None; n],
            last_query: vec![None; n],
            n_req: vec![config.n_req; n],
            death_seen: vec![false; n],
            next_query: 0,
            next_report: 0,
            reports_sent: 0,
            delivered: HashSet::new(),
            sources: BTreeSet::new(),
            query_reached: BTreeSet::new(),
            packets: PacketCounts::default(),
            drops: DropCounts::default(),
            routes: Vec::new(),
            dgw_pairs: Vec::new(),
            warnings,
            series: MetricsSeries::default(),
            zero_streak: 0,
            terminated_at: None,
            events_processed: 0,
            cfg: config.clone(),
        })
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.medium.graph
    }

    pub fn run(mut self) -> ScenarioOutcome {
        self.bootstrap();
        let duration = self.cfg.duration;
        while let Some(t) = self.queue.peek_time() {
            if t > duration || self.terminated_at.is_some() {
                break;
            }
            let (t, _, ev) = self.queue.pop().expect("peeked");
            self.now = t;
            self.events_processed += 1;
            self.handle(ev);
        }

        // Let reports already on the air settle; nothing new is generated.
        self.draining = true;
        let limit = self.terminated_at.unwrap_or(duration) + self.cfg.drain_limit;
        while let Some((t, _, ev)) = self.queue.pop() {
            if t > limit {
                break;
            }
            if matches!(ev, Event::Arrival { .. } | Event::ContentionDeadline { .. }) {
                self.now = t;
                self.events_processed += 1;
                self.handle(ev);
            }
        }

        while self.series.len() < self.sample_count {
            let k = self.series.len();
            let row = self.snapshot(k as f64 * self.cfg.sampling_interval);
            self.series.rows.push(row);
        }
        self.finish()
    }

    fn finish(self) -> ScenarioOutcome {
        let link_estimates = self
            .nodes
            .iter()
            .flat_map(|r| {
                r.neighbors.iter().map(|(&s, rec)| LinkObservation {
                    from: s,
                    to: r.id,
                    p_true: self.medium.links.p(&self.medium.graph, s, r.id),
                    p_est: rec.link.rev.ratio(),
                    probes: rec.link.rev.sent(),
                })
            })
            .collect();
        ScenarioOutcome {
            nodes: self.nodes.iter().map(NodeSnapshot::from).collect(),
            series: self.series,
            graph: self.medium.graph,
            ledger: self.ledger,
            packets: self.packets,
            drops: self.drops,
            routes: self.routes,
            warnings: self.warnings,
            sources: self.sources,
            query_reached: self.query_reached,
            dgw_pairs: self.dgw_pairs,
            terminated_early_at: self.terminated_at,
            events_processed: self.events_processed,
            link_estimates,
            config: self.cfg,
        }
    }

    fn bootstrap(&mut self) {
        let period = self.cfg.probe_period;
        for i in 0..self.nodes.len() {
            let phase = self.rng.random::<f64>() * period;
            self.queue.push(phase, Event::Probe(NodeId(i as u32)));
        }
        self.queue.push(self.cfg.query_start, Event::QueryStart);
        if self.sample_count > 1 {
            self.queue.push(0.0, Event::Sample(0));
        }
    }

    fn handle(&mut self, ev: Event) {
        match ev {
            Event::Probe(i) => self.on_probe(i),
            Event::Arrival { to, packet } => self.on_arrival(to, &packet),
            Event::ContentionDeadline { node, epoch } => self.on_deadline(node, epoch),
            Event::ReportDue(i) => self.on_report_due(i),
            Event::QueryStart => self.on_query_start(),
            Event::FloodForward { node, packet } => self.dispatch(node, Outgoing::Query(packet)),
            Event::Sample(k) => self.on_sample(k),
        }
    }

    fn alive(&self, id: NodeId) -> bool {
        self.nodes[id.index()].alive
    }

    // ---- physical layer -------------------------------------------------

    fn transmit(&mut self, sender: NodeId, bits: u64, distance: f64) -> Result<Vec<(NodeId, bool)>, SenderDepleted> {
        let r = self.medium.transmit(
            &mut self.nodes,
            &mut self.ledger,
            sender,
            bits,
            distance,
            self.now,
            &mut self.rng,
        );
        match &r {
            Ok(out) => {
                for &(n, _) in out {
                    self.note_death(n);
                }
            }
            Err(_) => self.note_death(sender),
        }
        r
    }

    fn note_death(&mut self, id: NodeId) {
        let i = id.index();
        if self.nodes[i].alive || self.death_seen[i] {
            return;
        }
        self.death_seen[i] = true;
        self.epoch[i] += 1;
        self.armed[i] = false;
        for item in std::mem::take(&mut self.outbox[i]) {
            if matches!(item, Outgoing::Report(_)) {
                self.drops.holder_died += 1;
            }
        }
    }

    fn schedule_arrival(&mut self, to: NodeId, packet: Rc<Packet>) {
        let t = self.now + self.cfg.hop_delay;
        let b = &mut self.busy_until[to.index()];
        if t > *b {
            *b = t;
        }
        self.queue.push(t, Event::Arrival { to, packet });
    }

    // ---- probes ---------------------------------------------------------

    fn on_probe(&mut self, i: NodeId) {
        if !self.alive(i) {
            return;
        }
        let (bits, range) = (self.cfg.packets.probe_bits, self.cfg.comm_range);
        let Ok(out) = self.transmit(i, bits, range) else { return };
        self.packets.probes += 1;
        let window = self.cfg.link_window;
        let sender_pos = self.nodes[i.index()].position;
        for (r, ok) in out {
            if !self.alive(r) {
                continue;
            }
            if ok {
                let carried = self.nodes[i.index()].neighbors.get(&r).map(|e| e.link.rev.clone());
                let receiver = &mut self.nodes[r.index()];
                let distance = receiver.position.distance(&sender_pos);
                let entry = receiver.neighbors.entry(i).or_insert_with(|| NeighborRecord {
                    link: LinkStatsWindow::new(window),
                    distance,
                    position: sender_pos,
                    heard: None,
                });
                entry.link.record(Direction::Reverse, ProbeOutcome::Received);
                if let Some(w) = carried {
                    entry.link.sync_forward(&w);
                }
            } else if let Some(entry) = self.nodes[r.index()].neighbors.get_mut(&i) {
                entry.link.record(Direction::Reverse, ProbeOutcome::Lost);
            }
        }
        if !self.draining {
            self.queue.push(self.now + self.cfg.probe_period, Event::Probe(i));
        }
    }

    // ---- clustering -----------------------------------------------------

    /// Candidate priority and backoff for the configured strategy, or `None`
    /// when the node has no usable link to rank itself by.
    fn contention_wait(&mut self, i: NodeId) -> Option<(f64, f64)> {
        let slot = self.cfg.t_slot;
        let count = self.cfg.node_count as f64;
        let node = &self.nodes[i.index()];
        let usable: Vec<(NodeId, f64, f64)> = node
            .usable_neighbors()
            .filter_map(|(id, r)| r.link.estimate().etx.map(|etx| (id, r.distance, etx)))
            .collect();
        if usable.is_empty() {
            return None;
        }
        match self.cfg.strategy {
            Strategy::LinkPtx => {
                let bits = self.cfg.packets.report_bits;
                let ptx: Vec<(NodeId, f64)> = usable
                    .iter()
                    .filter_map(|&(id, d, etx)| {
                        compute_ptx(node.e_res, etx, self.medium.radio.tx(bits, d))
                            .ok()
                            .map(|p| (id, p))
                    })
                    .collect();
                let rho = calc_priority(&ptx, self.n_req[i.index()]).ok()?;
                let wait = scaled_backoff_wait(rho, slot, self.cfg.backoff_scale, &mut self.rng).ok()?;
                Some((rho, wait))
            }
            Strategy::RandomPc => Some((0.0, self.rng.random::<f64>() * slot)),
            Strategy::Lic => Some((i.0 as f64, slot * i.0 as f64 / count)),
            Strategy::Hcc => {
                let deg = usable.len() as f64;
                let key = (count - deg) * count + i.0 as f64;
                Some((deg, slot * key / (count * count)))
            }
            Strategy::Heed => {
                let p = heed_ch_prob(&self.heed, node.e_res.min(self.heed.e_ini)).ok()?;
                let tentative = self.rng.random::<f64>() < p;
                let u = self.rng.random::<f64>() * slot;
                Some((p, if tentative { u } else { slot + u }))
            }
            Strategy::Gpsr => None,
        }
    }

    /// Enters a candidate state. Returns false, leaving the node untouched,
    /// when it cannot rank itself.
    fn start_contention(&mut self, i: NodeId, candidate: ClusterState, membership: ClusterMembership) -> bool {
        let Some((rho, wait)) = self.contention_wait(i) else {
            return false;
        };
        let record = ContentionRecord::new(candidate, rho, self.cfg.t_slot, self.now, wait);
        let known = self.nodes[i.index()].known_gateways(membership);
        let c = Contention::begin(candidate, membership, record, known).expect("candidate state");
        let ix = i.index();
        self.epoch[ix] += 1;
        self.armed[ix] = false;
        let lost = c.is_lost();
        let outcome = c.expire();
        let node = &mut self.nodes[ix];
        node.state = candidate;
        node.membership = membership;
        node.contention = Some(c);
        if lost {
            self.commit(i, outcome);
        } else {
            let epoch = self.epoch[ix];
            self.queue.push(record.deadline, Event::ContentionDeadline { node: i, epoch });
        }
        true
    }

    /// Leaves contention with `outcome` and sends anything that was waiting.
    fn commit(&mut self, i: NodeId, outcome: ContentionOutcome) {
        let ix = i.index();
        self.epoch[ix] += 1;
        self.armed[ix] = false;
        let node = &mut self.nodes[ix];
        node.contention = None;
        node.state = outcome.state;
        node.membership = if outcome.state == ClusterState::ClusterHead {
            ClusterMembership::of(i)
        } else {
            outcome.membership
        };
        if let (ClusterState::DistributedGateway, Some(p)) = (outcome.state, outcome.partner) {
            self.dgw_pairs.push((i, p));
        }
        for item in std::mem::take(&mut self.outbox[ix]) {
            self.send_now(i, item);
        }
    }

    fn hold(&mut self, i: NodeId) {
        if let Some(c) = self.nodes[i.index()].contention.as_mut() {
            c.defer_to(f64::INFINITY);
        }
        self.armed[i.index()] = true;
    }

    fn on_deadline(&mut self, i: NodeId, epoch: u64) {
        let ix = i.index();
        if epoch != self.epoch[ix] || !self.alive(i) || self.nodes[ix].contention.is_none() {
            return;
        }
        if self.busy_until[ix] > self.now {
            self.hold(i);
            self.queue.push(self.busy_until[ix], Event::ContentionDeadline { node: i, epoch });
            return;
        }
        if self.outbox[ix].is_empty() {
            self.hold(i);
            return;
        }
        let outcome = self.nodes[ix].contention.as_ref().expect("checked").expire();
        self.commit(i, outcome);
    }

    fn react(&mut self, i: NodeId, h: &PacketHeader) {
        let ix = i.index();
        if let Some(c) = self.nodes[ix].contention.as_mut() {
            let heard = Overheard {
                at: self.now,
                sender: h.src,
                state: h.sender_state,
                cluster: h.sender_cluster,
            };
            if c.observe(&heard) == Verdict::Lost {
                let outcome = c.expire();
                self.commit(i, outcome);
            }
            return;
        }
        let node = &self.nodes[ix];
        let t = on_receive_report(node.state, node.membership, h.sender_state, h.sender_cluster)
            .expect("headers only carry external states");
        if t.contend {
            self.start_contention(i, t.state, t.membership);
        } else {
            let node = &mut self.nodes[ix];
            node.state = t.state;
            node.membership = t.membership;
        }
    }

    // ---- data plane -----------------------------------------------------

    fn dispatch(&mut self, i: NodeId, item: Outgoing) {
        let ix = i.index();
        if !self.alive(i) {
            if matches!(item, Outgoing::Report(_)) {
                self.drops.holder_died += 1;
            }
            return;
        }
        if self.clustering {
            if self.nodes[ix].contention.is_some() {
                if !self.armed[ix] {
                    self.outbox[ix].push(item);
                    return;
                }
                if self.busy_until[ix] > self.now {
                    self.outbox[ix].push(item);
                    let epoch = self.epoch[ix];
                    self.queue.push(self.busy_until[ix], Event::ContentionDeadline { node: i, epoch });
                    return;
                }
                let outcome = self.nodes[ix].contention.as_ref().expect("checked").expire();
                self.commit(i, outcome);
            } else if self.nodes[ix].state == ClusterState::Initial && i != self.sink {
                let membership = self.nodes[ix].membership;
                if self.start_contention(i, ClusterState::ChReady, membership) && self.nodes[ix].contention.is_some() {
                    self.outbox[ix].push(item);
                    return;
                }
            }
        }
        self.send_now(i, item);
    }

    fn stamp(&self, i: NodeId, mut header: PacketHeader) -> PacketHeader {
        let node = &self.nodes[i.index()];
        header.src = i;
        piggyback_state(header, node.state, node.membership).expect("a transmitting node holds an external state")
    }

    fn send_now(&mut self, i: NodeId, item: Outgoing) {
        if !self.alive(i) {
            if matches!(item, Outgoing::Report(_)) {
                self.drops.holder_died += 1;
            }
            return;
        }
        match item {
            Outgoing::Query(mut p) => {
                p.header = self.stamp(i, p.header);
                self.forwarded[i.index()] = Some(p.header.seq);
                let (bits, range) = (self.cfg.packets.query_bits, self.cfg.comm_range);
                let Ok(out) = self.transmit(i, bits, range) else { return };
                self.packets.queries += 1;
                let pkt = Rc::new(p);
                for (r, ok) in out {
                    if ok && self.alive(r) {
                        self.schedule_arrival(r, Rc::clone(&pkt));
                    }
                }
            }
            Outgoing::Report(p) => self.unicast_report(i, p),
        }
    }

    fn log_route(&mut self, p: &Packet, status: RouteStatus) {
        if self.cfg.trace_routes {
            self.routes.push(RouteTrace {
                report: p.header.seq,
                hops: p.hops.clone(),
                status,
            });
        }
    }

    fn next_hop(&self, i: NodeId) -> Result<NodeId, RouteStatus> {
        if self.clustering {
            return self.parent[i.index()].ok_or(RouteStatus::Void);
        }
        let node = &self.nodes[i.index()];
        let known: Vec<(NodeId, Position)> = node.heard_neighbors().map(|(id, r)| (id, r.position)).collect();
        match gpsr_greedy_next_hop(node.position, &known, self.sink_pos) {
            NextHop::Forward(n) => Ok(n),
            NextHop::VoidRegion => Err(RouteStatus::Void),
        }
    }

    fn unicast_report(&mut self, i: NodeId, mut p: Packet) {
        if p.hops.len() > self.hop_limit {
            self.drops.hop_limit += 1;
            return;
        }
        let next = match self.next_hop(i) {
            Ok(n) => n,
            Err(status) => {
                if self.clustering {
                    self.drops.no_route += 1;
                } else {
                    self.drops.void_region += 1;
                }
                self.log_route(&p, status);
                return;
            }
        };
        p.header.dst = Some(next);
        p.header.dest_position = Some(self.sink_pos);
        p.header = self.stamp(i, p.header);
        let distance = self.medium.graph.distance(i, next).expect("next hop is a graph neighbor");
        let (bits, ack_bits) = (self.cfg.packets.report_bits, self.cfg.packets.ack_bits);
        let pkt = Rc::new(p);
        let mut reached: Vec<NodeId> = Vec::new();
        for _ in 0..=self.cfg.max_retries {
            let Ok(out) = self.transmit(i, bits, distance) else {
                self.drops.holder_died += 1;
                return;
            };
            self.packets.reports += 1;
            let mut got = false;
            for (r, ok) in out {
                if !ok || !self.alive(r) {
                    continue;
                }
                got |= r == next;
                if (self.clustering || r == next) && !reached.contains(&r) {
                    reached.push(r);
                    self.schedule_arrival(r, Rc::clone(&pkt));
                }
            }
            if !got || !self.alive(next) {
                continue;
            }
            let Ok(ack) = self.transmit(next, ack_bits, distance) else { break };
            self.packets.acks += 1;
            let acked = ack.iter().any(|&(r, ok)| r == i && ok);
            if !self.alive(i) || acked {
                return;
            }
        }
        self.drops.unacknowledged += 1;
    }

    fn on_arrival(&mut self, i: NodeId, pkt: &Rc<Packet>) {
        if !self.alive(i) {
            return;
        }
        let h = pkt.header;
        if h.kind.is_data() {
            let window = self.cfg.link_window;
            let sender_pos = self.medium.graph.position(h.src).expect("sender exists");
            let node = &mut self.nodes[i.index()];
            let distance = node.position.distance(&sender_pos);
            let entry = node.neighbors.entry(h.src).or_insert_with(|| NeighborRecord {
                link: LinkStatsWindow::new(window),
                distance,
                position: sender_pos,
                heard: None,
            });
            entry.heard = Some((h.sender_state, h.sender_cluster));
            if self.clustering {
                self.react(i, &h);
            }
        }
        match h.kind {
            PacketKind::Query => self.on_query(i, pkt),
            PacketKind::Report if h.dst == Some(i) => self.on_report(i, pkt),
            _ => {}
        }
    }

    /// Preference of a query sender as next hop toward the sink.
    fn backbone_rank(state: ClusterState) -> u8 {
        match state {
            ClusterState::ClusterHead => 0,
            ClusterState::Gateway | ClusterState::DistributedGateway => 1,
            _ => 2,
        }
    }

    fn on_query(&mut self, i: NodeId, pkt: &Packet) {
        let ix = i.index();
        let seq = pkt.header.seq;
        let rank = Self::backbone_rank(pkt.header.sender_state);
        if self.last_query[ix].is_some_and(|s| s >= seq) {
            // Copies heard before our own rebroadcast may offer a better
            // parent. Later ones may come from our own children.
            if self.last_query[ix] == Some(seq)
                && self.forwarded[ix] != Some(seq)
                && i != self.sink
                && rank < self.parent_rank[ix]
            {
                self.parent[ix] = Some(pkt.header.src);
                self.parent_rank[ix] = rank;
            }
            return;
        }
        self.last_query[ix] = Some(seq);
        self.parent[ix] = Some(pkt.header.src);
        self.parent_rank[ix] = rank;
        if let Some(n) = pkt.header.n_req {
            self.n_req[ix] = n;
        }
        if seq == 0 {
            self.query_reached.insert(i);
        }
        let pos = self.nodes[ix].position;
        if i != self.sink
            && !self.sources.contains(&i)
            && self.cfg.region.is_none_or(|r| r.contains(&pos))
        {
            self.sources.insert(i);
            let first = self.now + self.rng.random::<f64>() * self.cfg.report_interval;
            self.queue.push(first, Event::ReportDue(i));
        }
        let fwd = pkt.clone();
        if self.clustering && self.nodes[ix].contention.is_some() {
            self.dispatch(i, Outgoing::Query(fwd));
        } else {
            let jitter = self.rng.random::<f64>() * self.cfg.t_slot;
            self.queue.push(self.now + jitter, Event::FloodForward { node: i, packet: fwd });
        }
    }

    fn on_report(&mut self, i: NodeId, pkt: &Packet) {
        let mut p = pkt.clone();
        p.hops.push(i);
        if i == self.sink {
            if self.delivered.insert(p.header.seq) {
                self.log_route(&p, RouteStatus::Delivered);
            }
            return;
        }
        self.dispatch(i, Outgoing::Report(p));
    }

    fn on_query_start(&mut self) {
        let s = self.sink;
        let seq = self.next_query;
        self.next_query += 1;
        if self.clustering && self.nodes[s.index()].state == ClusterState::Initial {
            let node = &mut self.nodes[s.index()];
            node.state = ClusterState::ClusterHead;
            node.membership = ClusterMembership::of(s);
        }
        self.last_query[s.index()] = Some(seq);
        self.forwarded[s.index()] = Some(seq);
        if seq == 0 {
            self.query_reached.insert(s);
        }
        let mut header = PacketHeader::new(PacketKind::Query, s, seq);
        header.n_req = Some(self.cfg.n_req);
        header.dest_position = Some(self.sink_pos);
        self.dispatch(s, Outgoing::Query(Packet { header, hops: Vec::new() }));
        if let Some(period) = self.cfg.query_period {
            self.queue.push(self.now + period, Event::QueryStart);
        }
    }

    fn on_report_due(&mut self, i: NodeId) {
        if !self.alive(i) {
            return;
        }
        let seq = self.next_report;
        self.next_report += 1;
        self.reports_sent += 1;
        let header = PacketHeader::new(PacketKind::Report, i, seq);
        self.dispatch(i, Outgoing::Report(Packet { header, hops: vec![i] }));
        self.queue.push(self.now + self.cfg.report_interval, Event::ReportDue(i));
    }

    // ---- metrics --------------------------------------------------------

    fn snapshot(&self, time_s: f64) -> MetricsRow {
        let mut row = MetricsRow {
            time_s,
            total_energy_j: 0.0,
            active_nodes: 0,
            reports_sent: self.reports_sent,
            reports_delivered: self.delivered.len() as u64,
            delivery_ratio: delivery_ratio(self.reports_sent, self.delivered.len() as u64),
            ch_count: 0,
            gw_count: 0,
            dgw_count: 0,
        };
        for n in &self.nodes {
            if !n.mains {
                row.total_energy_j += n.consumed();
            }
            if !n.alive {
                continue;
            }
            row.active_nodes += 1;
            match n.state {
                ClusterState::ClusterHead => row.ch_count += 1,
                ClusterState::Gateway => row.gw_count += 1,
                ClusterState::DistributedGateway => row.dgw_count += 1,
                _ => {}
            }
        }
        row
    }

    fn on_sample(&mut self, k: usize) {
        let row = self.snapshot(k as f64 * self.cfg.sampling_interval);
        if let Some(prev) = self.series.last() {
            let sent = row.reports_sent - prev.reports_sent;
            let delivered = row.reports_delivered - prev.reports_delivered;
            if sent > 0 && delivered == 0 {
                self.zero_streak += 1;
            } else if delivered > 0 {
                self.zero_streak = 0;
            }
        }
        let sources_gone = !self.sources.is_empty() && self.sources.iter().all(|&s| !self.alive(s));
        self.series.rows.push(row);
        if self.zero_streak >= self.cfg.zero_delivery_windows || sources_gone {
            self.terminated_at = Some(self.now);
            return;
        }
        if k + 1 < self.sample_count - 1 {
            let t = (k + 1) as f64 * self.cfg.sampling_interval;
            self.queue.push(t, Event::Sample(k + 1));
        }
    }
}
