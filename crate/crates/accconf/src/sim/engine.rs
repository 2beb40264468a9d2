//! Event-driven simulation core.
//!
//! Interests travel hop by hop toward the provider and are answered by
//! the first cache hit (caching stacks) or only by the provider (the
//! no-cache baseline). Data retraces the interest path, populating every
//! router cache it crosses. Latency is store-and-forward per hop:
//! payload_bits/bandwidth + propagation, no queueing.
//!
//! Clients are closed-loop: as soon as an object completes they draw the
//! next rank from the popularity law. The access-control stack fetches
//! all enabling-block chunks before the content chunks and pays exactly
//! the block's byte overhead per object.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::lru::LruCache;
use super::report::{ClientReport, LatencySample, RouterReport, SimReport};
use super::topology::{NodeId, NodeKind, TopoSpec, Topology};
use super::workload::ZipfMandelbrot;
use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stack {
    #[serde(rename = "AccConF")]
    AccConF,
    #[serde(rename = "NDN")]
    Ndn,
    #[serde(rename = "UDP")]
    Udp,
}

impl Stack {
    pub fn caches(self) -> bool {
        !matches!(self, Stack::Udp)
    }

    pub fn fetches_enabling_block(self) -> bool {
        matches!(self, Stack::AccConF)
    }

    pub fn label(self) -> &'static str {
        match self {
            Stack::AccConF => "AccConF",
            Stack::Ndn => "NDN",
            Stack::Udp => "UDP",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSpec {
    pub n_contents: usize,
    pub q: f64,
    pub s: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec { n_contents: 100, q: 1.0, s: 2.0 }
    }
}

/// Declarative experiment description; the JSON document the CLI consumes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub topology: TopoSpec,
    pub workload: WorkloadSpec,
    pub stack: Stack,
    pub seed: u64,
    pub duration_secs: f64,
    pub cache_fraction: f64,
    pub chunk_size_bytes: u32,
    pub object_size_bytes: u64,
    pub enabling_block_bytes: u64,
    /// Sequential chunk numbering enables interest aggregation; random
    /// numbering disables it.
    pub sequential_numbering: bool,
    pub interest_size_bytes: u32,
    /// Router-side expiry for cached enabling-block chunks; 0 = never.
    pub eb_timeout_secs: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            topology: TopoSpec::default(),
            workload: WorkloadSpec::default(),
            stack: Stack::Ndn,
            seed: 1,
            duration_secs: 300.0,
            cache_fraction: 0.05,
            chunk_size_bytes: 1436,
            object_size_bytes: 3_000_000,
            enabling_block_bytes: 120_000,
            sequential_numbering: true,
            interest_size_bytes: 50,
            eb_timeout_secs: 0.0,
        }
    }
}

const EB_BIT: u64 = 1 << 32;

fn chunk_key(content: u32, is_eb: bool, idx: u32) -> u64 {
    ((content as u64) << 33) | if is_eb { EB_BIT } else { 0 } | idx as u64
}

pub(super) fn split_key(key: u64) -> (u32, bool, u32) {
    ((key >> 33) as u32, key & EB_BIT != 0, (key & 0xffff_ffff) as u32)
}

/// Chunk count and tail size for one segment (content or block).
#[derive(Clone, Copy)]
struct Segment {
    chunks: u32,
    full_size: u32,
    last_size: u32,
}

impl Segment {
    fn new(total_bytes: u64, chunk_size: u32) -> Self {
        let chunks = total_bytes.div_ceil(chunk_size as u64).max(1) as u32;
        let last = total_bytes - (chunks as u64 - 1) * chunk_size as u64;
        Segment {
            chunks,
            full_size: chunk_size,
            last_size: last as u32,
        }
    }

    fn size_of(&self, idx: u32) -> u32 {
        if idx + 1 == self.chunks {
            self.last_size
        } else {
            self.full_size
        }
    }
}

struct Pending {
    name: u64,
    sent_at: u64,
}

struct ClientState {
    node: NodeId,
    edge: NodeId,
    rng: ChaCha20Rng,
    content: u32,
    in_eb_phase: bool,
    idx: u32,
    pending: Option<Pending>,
    downloads: u64,
    bytes_completed: u64,
    bytes_partial: u64,
}

#[derive(PartialEq, Eq)]
struct Scheduled {
    at: u64,
    seq: u64,
    node: NodeId,
    from: NodeId,
    name: u64,
    is_data: bool,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Engine<'a> {
    topo: &'a Topology,
    interest_bits: u64,
    stack: Stack,
    aggregation: bool,
    data_seg: Segment,
    eb_seg: Segment,
    duration_ns: u64,
    eb_timeout_ns: u64,
    now: u64,
    seq: u64,
    heap: BinaryHeap<Reverse<Scheduled>>,
    caches: Vec<Option<LruCache>>,
    pit: Vec<HashMap<u64, Vec<NodeId>>>,
    clients: Vec<ClientState>,
    client_of_node: HashMap<NodeId, usize>,
    samples: Vec<LatencySample>,
}

impl<'a> Engine<'a> {
    fn chunk_size(&self, name: u64) -> u32 {
        let (_, is_eb, idx) = split_key(name);
        if is_eb {
            self.eb_seg.size_of(idx)
        } else {
            self.data_seg.size_of(idx)
        }
    }

    fn send(&mut self, from: NodeId, to: NodeId, name: u64, is_data: bool) {
        let link = self.topo.adj[from]
            .iter()
            .find(|l| l.to == to)
            .expect("send over an existing link");
        let bits = if is_data {
            self.chunk_size(name) as u64 * 8
        } else {
            self.interest_bits
        };
        let tx_ns = bits * 1_000_000_000 / link.bandwidth_bps;
        let at = self.now + tx_ns + link.delay_ns;
        if at > self.duration_ns {
            return;
        }
        self.seq += 1;
        self.heap.push(Reverse(Scheduled {
            at,
            seq: self.seq,
            node: to,
            from,
            name,
            is_data,
        }));
    }

    fn start_object(&mut self, client_idx: usize, workload: &ZipfMandelbrot) {
        let eb_first = self.stack.fetches_enabling_block();
        let client = &mut self.clients[client_idx];
        client.content = (workload.sample(&mut client.rng) - 1) as u32;
        client.in_eb_phase = eb_first;
        client.idx = 0;
        self.send_current_interest(client_idx);
    }

    fn send_current_interest(&mut self, client_idx: usize) {
        let now = self.now;
        let client = &mut self.clients[client_idx];
        let name = chunk_key(client.content, client.in_eb_phase, client.idx);
        client.pending = Some(Pending { name, sent_at: now });
        let (node, edge) = (client.node, client.edge);
        self.send(node, edge, name, false);
    }

    fn on_interest(&mut self, node: NodeId, from: NodeId, name: u64) {
        match self.topo.kinds[node] {
            NodeKind::Provider => {
                self.send(node, from, name, true);
            }
            NodeKind::Router => {
                let now = self.now;
                if let Some(cache) = self.caches[node].as_mut() {
                    if cache.lookup(name, now) {
                        self.send(node, from, name, true);
                        return;
                    }
                }
                let pending = self.pit[node].entry(name).or_default();
                pending.push(from);
                let suppress = self.aggregation && pending.len() > 1;
                if !suppress {
                    let next = self.topo.next_hop_to_provider[node];
                    self.send(node, next, name, false);
                }
            }
            NodeKind::Client => {} // clients never answer interests
        }
    }

    fn on_data(&mut self, node: NodeId, name: u64, workload: &ZipfMandelbrot) {
        match self.topo.kinds[node] {
            NodeKind::Router => self.router_data(node, name),
            NodeKind::Client => self.client_data(node, name, workload),
            NodeKind::Provider => {}
        }
    }

    fn router_data(&mut self, node: NodeId, name: u64) {
        let now = self.now;
        let size = self.chunk_size(name) as u64;
        let (_, is_eb, _) = split_key(name);
        if let Some(cache) = self.caches[node].as_mut() {
            let expires = if is_eb && self.eb_timeout_ns > 0 {
                Some(now + self.eb_timeout_ns)
            } else {
                None
            };
            cache.insert(name, size, expires);
        }
        if !self.pit[node].contains_key(&name) {
            return; // stale copy with nobody waiting
        }
        if self.aggregation {
            let faces = self.pit[node].remove(&name).expect("checked above");
            for face in faces {
                self.send(node, face, name, true);
            }
        } else {
            // One data copy satisfies exactly one forwarded interest.
            let pending = self.pit[node].get_mut(&name).expect("checked above");
            let face = pending.remove(0);
            let now_empty = pending.is_empty();
            if now_empty {
                self.pit[node].remove(&name);
            }
            self.send(node, face, name, true);
        }
    }

    fn client_data(&mut self, node: NodeId, name: u64, workload: &ZipfMandelbrot) {
        let client_idx = self.client_of_node[&node];
        let sent_at = match &self.clients[client_idx].pending {
            Some(p) if p.name == name => p.sent_at,
            _ => return,
        };
        self.samples.push(LatencySample {
            client: client_idx as u32,
            name_key: name,
            latency_ns: self.now - sent_at,
        });
        let (_, is_eb, idx) = split_key(name);
        let size = if is_eb {
            self.eb_seg.size_of(idx)
        } else {
            self.data_seg.size_of(idx)
        } as u64;
        let eb_chunks = self.eb_seg.chunks;
        let data_chunks = self.data_seg.chunks;
        let completed = {
            let client = &mut self.clients[client_idx];
            client.pending = None;
            client.bytes_partial += size;
            if is_eb && idx + 1 < eb_chunks {
                client.idx = idx + 1;
                false
            } else if is_eb {
                client.in_eb_phase = false;
                client.idx = 0;
                false
            } else if idx + 1 < data_chunks {
                client.idx = idx + 1;
                false
            } else {
                client.downloads += 1;
                client.bytes_completed += client.bytes_partial;
                client.bytes_partial = 0;
                true
            }
        };
        if completed {
            self.start_object(client_idx, workload);
        } else {
            self.send_current_interest(client_idx);
        }
    }
}

/// Run one experiment over a prebuilt topology.
pub fn run_simulation(topo: &Topology, cfg: &SimConfig) -> Result<SimReport, SimError> {
    if cfg.chunk_size_bytes == 0 {
        return Err(SimError::Config("chunk size must be positive"));
    }
    if cfg.object_size_bytes == 0 {
        return Err(SimError::Config("object size must be positive"));
    }
    if !cfg.cache_fraction.is_finite() || cfg.cache_fraction < 0.0 {
        return Err(SimError::Config("cache fraction must be finite and nonnegative"));
    }
    if cfg.duration_secs <= 0.0 || !cfg.duration_secs.is_finite() {
        return Err(SimError::Config("duration must be positive"));
    }
    if cfg.stack.fetches_enabling_block() && cfg.enabling_block_bytes == 0 {
        return Err(SimError::Config("enabling block size must be positive"));
    }
    let workload = ZipfMandelbrot::new(cfg.workload.n_contents, cfg.workload.q, cfg.workload.s)?;

    let catalog_bytes = cfg.workload.n_contents as u64 * cfg.object_size_bytes;
    let cache_bytes = (catalog_bytes as f64 * cfg.cache_fraction) as u64;
    let caches: Vec<Option<LruCache>> = topo
        .kinds
        .iter()
        .map(|kind| match kind {
            NodeKind::Router if cfg.stack.caches() && cache_bytes > 0 => {
                Some(LruCache::new(cache_bytes))
            }
            _ => None,
        })
        .collect();

    let clients: Vec<ClientState> = topo
        .clients
        .iter()
        .enumerate()
        .map(|(i, &node)| ClientState {
            node,
            edge: topo.adj[node][0].to,
            rng: crate::rng::substream(cfg.seed, &format!("client-{i}")),
            content: 0,
            in_eb_phase: false,
            idx: 0,
            pending: None,
            downloads: 0,
            bytes_completed: 0,
            bytes_partial: 0,
        })
        .collect();
    let client_of_node: HashMap<NodeId, usize> =
        clients.iter().enumerate().map(|(i, c)| (c.node, i)).collect();

    let mut engine = Engine {
        topo,
        interest_bits: cfg.interest_size_bytes as u64 * 8,
        stack: cfg.stack,
        aggregation: cfg.stack.caches() && cfg.sequential_numbering,
        data_seg: Segment::new(cfg.object_size_bytes, cfg.chunk_size_bytes),
        eb_seg: Segment::new(cfg.enabling_block_bytes.max(1), cfg.chunk_size_bytes),
        duration_ns: (cfg.duration_secs * 1e9) as u64,
        eb_timeout_ns: (cfg.eb_timeout_secs * 1e9) as u64,
        now: 0,
        seq: 0,
        heap: BinaryHeap::new(),
        caches,
        pit: vec![HashMap::new(); topo.kinds.len()],
        clients,
        client_of_node,
        samples: Vec::new(),
    };

    for i in 0..engine.clients.len() {
        engine.start_object(i, &workload);
    }
    while let Some(Reverse(ev)) = engine.heap.pop() {
        engine.now = ev.at;
        if ev.is_data {
            engine.on_data(ev.node, ev.name, &workload);
        } else {
            engine.on_interest(ev.node, ev.from, ev.name);
        }
    }

    let client_reports = engine
        .clients
        .iter()
        .enumerate()
        .map(|(i, c)| ClientReport {
            client_index: i,
            downloads: c.downloads,
            bytes_completed: c.bytes_completed,
            bytes_partial: c.bytes_partial,
        })
        .collect();
    let router_reports = engine
        .caches
        .iter()
        .enumerate()
        .filter_map(|(node, cache)| {
            cache.as_ref().map(|c| RouterReport {
                node,
                hits: c.hits,
                misses: c.misses,
            })
        })
        .collect();
    Ok(SimReport {
        stack: cfg.stack,
        seed: cfg.seed,
        clients: client_reports,
        routers: router_reports,
        samples: engine.samples,
        warnings: topo.warnings.clone(),
    })
}

/// Generate the topology named in the config, then run.
pub fn run_from_config(cfg: &SimConfig) -> Result<SimReport, SimError> {
    let topo = super::topology::generate_topology(&cfg.topology)?;
    run_simulation(&topo, cfg)
}

#[cfg(test)]
mod tests {
    use super::super::topology::Link;
    use super::*;

    /// client(0) -- 20 Mbps/1 ms -- router(1) -- 1 Gbps/5 ms -- provider(2)
    fn line_topology() -> Topology {
        let links = |pairs: Vec<(NodeId, u64, u64)>| {
            pairs
                .into_iter()
                .map(|(to, bw, delay)| Link { to, bandwidth_bps: bw, delay_ns: delay })
                .collect::<Vec<_>>()
        };
        Topology {
            kinds: vec![NodeKind::Client, NodeKind::Router, NodeKind::Provider],
            adj: vec![
                links(vec![(1, 20_000_000, 1_000_000)]),
                links(vec![
                    (0, 20_000_000, 1_000_000),
                    (2, 1_000_000_000, 5_000_000),
                ]),
                links(vec![(1, 1_000_000_000, 5_000_000)]),
            ],
            provider: 2,
            edge_routers: vec![1],
            clients: vec![0],
            next_hop_to_provider: vec![1, 2, 2],
            warnings: Vec::new(),
        }
    }

    fn line_config(stack: Stack) -> SimConfig {
        SimConfig {
            stack,
            seed: 5,
            duration_secs: 10.0,
            chunk_size_bytes: 1436,
            object_size_bytes: 2 * 1436 + 100,
            enabling_block_bytes: 1436,
            workload: WorkloadSpec { n_contents: 1, q: 1.0, s: 2.0 },
            interest_size_bytes: 50,
            // Big enough for the whole object plus its enabling block.
            cache_fraction: 2.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn first_chunk_latency_matches_hand_computed_path_sum() {
        let topo = line_topology();
        let report = run_simulation(&topo, &line_config(Stack::Ndn)).unwrap();
        // interest client->router: 400 bits / 20 Mbps + 1 ms   = 1_020_000 ns
        // interest router->provider: 400 bits / 1 Gbps + 5 ms  = 5_000_400 ns
        // data provider->router: 11488 bits / 1 Gbps + 5 ms    = 5_011_488 ns
        // data router->client: 11488 bits / 20 Mbps + 1 ms     = 1_574_400 ns
        let expected = 1_020_000 + 5_000_400 + 5_011_488 + 1_574_400u64;
        assert_eq!(report.samples[0].latency_ns, expected);
    }

    #[test]
    fn cached_chunk_costs_only_the_edge_round_trip() {
        let topo = line_topology();
        let report = run_simulation(&topo, &line_config(Stack::Ndn)).unwrap();
        // One object = 3 chunks; the second download of the single catalog
        // object is served entirely from the router cache.
        let edge_round_trip = 1_020_000 + 1_574_400u64;
        assert_eq!(report.samples[3].latency_ns, edge_round_trip);
        assert_eq!(report.samples[4].latency_ns, edge_round_trip);
    }

    #[test]
    fn udp_stack_never_hits_a_cache() {
        let topo = line_topology();
        let report = run_simulation(&topo, &line_config(Stack::Udp)).unwrap();
        assert!(report.routers.iter().all(|r| r.hits == 0 && r.misses == 0));
        // Every chunk keeps paying the full provider round trip, except the
        // shorter tail chunk of each object.
        let full = 1_020_000 + 5_000_400 + 5_011_488 + 1_574_400u64;
        assert_eq!(report.samples[0].latency_ns, full);
        assert_eq!(report.samples[3].latency_ns, full);
    }

    #[test]
    fn accconf_fetches_block_chunks_before_content() {
        let topo = line_topology();
        let report = run_simulation(&topo, &line_config(Stack::AccConF)).unwrap();
        let (_, first_is_eb, _) = split_key(report.samples[0].name_key);
        assert!(first_is_eb);
        let (_, second_is_eb, _) = split_key(report.samples[1].name_key);
        assert!(!second_is_eb, "single eb chunk, then content");
        // Completed objects account for content plus the enabling block.
        let c = &report.clients[0];
        assert_eq!(c.bytes_completed, c.downloads * (2 * 1436 + 100 + 1436) as u64);
    }

    #[test]
    fn byte_conservation_per_client() {
        let topo = line_topology();
        for stack in [Stack::Ndn, Stack::Udp, Stack::AccConF] {
            let cfg = line_config(stack);
            let report = run_simulation(&topo, &cfg).unwrap();
            let eb = if stack.fetches_enabling_block() { 1436 } else { 0 };
            for c in &report.clients {
                assert_eq!(
                    c.bytes_completed,
                    c.downloads * (cfg.object_size_bytes + eb),
                    "{stack:?}"
                );
            }
        }
    }

    #[test]
    fn expired_cached_block_chunks_miss_again() {
        let topo = line_topology();
        let mut cfg = line_config(Stack::AccConF);
        cfg.eb_timeout_secs = 0.001; // expire almost immediately
        let with_expiry = run_simulation(&topo, &cfg).unwrap();
        cfg.eb_timeout_secs = 0.0;
        let without = run_simulation(&topo, &cfg).unwrap();
        let eb_hits = |r: &SimReport| {
            // Count eb chunks served faster than the provider round trip.
            r.samples
                .iter()
                .filter(|s| split_key(s.name_key).1 && s.latency_ns < 5_000_000)
                .count()
        };
        assert!(eb_hits(&with_expiry) < eb_hits(&without));
    }

    #[test]
    fn identical_seeds_identical_reports() {
        let cfg = SimConfig {
            duration_secs: 2.0,
            object_size_bytes: 20_000,
            enabling_block_bytes: 2_000,
            stack: Stack::AccConF,
            seed: 11,
            ..SimConfig::default()
        };
        let a = run_from_config(&cfg).unwrap();
        let b = run_from_config(&cfg).unwrap();
        assert_eq!(a.to_csv_bytes(), b.to_csv_bytes());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let topo = line_topology();
        let mut cfg = line_config(Stack::Ndn);
        cfg.chunk_size_bytes = 0;
        assert!(run_simulation(&topo, &cfg).is_err());
        let mut cfg = line_config(Stack::Ndn);
        cfg.cache_fraction = -0.1;
        assert!(run_simulation(&topo, &cfg).is_err());
        let mut cfg = line_config(Stack::AccConF);
        cfg.enabling_block_bytes = 0;
        assert!(run_simulation(&topo, &cfg).is_err());
    }
}
