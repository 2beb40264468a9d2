//! Synthetic two-layer topology generation.
//!
//! The AS layer is a Waxman random graph over points in the unit square;
//! each AS internally is a Barabási-Albert preferential-attachment graph.
//! Edge routers serve closed-loop clients over slow access links, and the
//! provider is attached 6-8 hops away from the edge routers when the
//! graph allows it.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::SimError;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Router,
    Client,
    Provider,
}

/// One directed half of an undirected link.
#[derive(Clone, Copy, Debug)]
pub struct Link {
    pub to: NodeId,
    pub bandwidth_bps: u64,
    pub delay_ns: u64,
}

#[derive(Clone, Debug)]
pub struct Topology {
    pub kinds: Vec<NodeKind>,
    pub adj: Vec<Vec<Link>>,
    pub provider: NodeId,
    pub edge_routers: Vec<NodeId>,
    pub clients: Vec<NodeId>,
    /// Next hop toward the provider for every node (provider maps to itself).
    pub next_hop_to_provider: Vec<NodeId>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TopoSpec {
    pub n_as: usize,
    pub routers_per_as: usize,
    pub edge_router_count: usize,
    pub clients_per_edge: usize,
    pub seed: u64,
    pub waxman_alpha: f64,
    pub waxman_beta: f64,
    pub ba_m: usize,
    pub core_bw_min_bps: u64,
    pub core_bw_max_bps: u64,
    pub client_bw_bps: u64,
    pub provider_bw_bps: u64,
    pub intra_delay_min_ns: u64,
    pub intra_delay_max_ns: u64,
    pub inter_delay_min_ns: u64,
    pub inter_delay_max_ns: u64,
    pub client_delay_ns: u64,
    pub provider_delay_ns: u64,
    pub provider_hop_min: usize,
    pub provider_hop_max: usize,
}

impl Default for TopoSpec {
    fn default() -> Self {
        TopoSpec {
            n_as: 5,
            routers_per_as: 20,
            edge_router_count: 2,
            clients_per_edge: 5,
            seed: 1,
            waxman_alpha: 0.15,
            waxman_beta: 0.2,
            ba_m: 2,
            core_bw_min_bps: 1_000_000_000,
            core_bw_max_bps: 4_000_000_000,
            client_bw_bps: 20_000_000,
            provider_bw_bps: 4_000_000_000,
            intra_delay_min_ns: 100_000,
            intra_delay_max_ns: 500_000,
            inter_delay_min_ns: 500_000,
            inter_delay_max_ns: 3_000_000,
            client_delay_ns: 200_000,
            provider_delay_ns: 500_000,
            provider_hop_min: 6,
            provider_hop_max: 8,
        }
    }
}

struct Builder {
    kinds: Vec<NodeKind>,
    adj: Vec<Vec<Link>>,
}

impl Builder {
    fn add_node(&mut self, kind: NodeKind) -> NodeId {
        self.kinds.push(kind);
        self.adj.push(Vec::new());
        self.kinds.len() - 1
    }

    fn connect(&mut self, a: NodeId, b: NodeId, bandwidth_bps: u64, delay_ns: u64) {
        self.adj[a].push(Link { to: b, bandwidth_bps, delay_ns });
        self.adj[b].push(Link { to: a, bandwidth_bps, delay_ns });
    }

    fn connected(&self, a: NodeId, b: NodeId) -> bool {
        self.adj[a].iter().any(|l| l.to == b)
    }
}

/// Hop counts from `from` over the undirected graph; None = unreachable.
pub fn hop_distances(topo_adj: &[Vec<Link>], from: NodeId) -> Vec<Option<usize>> {
    let mut dist = vec![None; topo_adj.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[from] = Some(0);
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for link in &topo_adj[u] {
            if dist[link.to].is_none() {
                dist[link.to] = Some(du + 1);
                queue.push_back(link.to);
            }
        }
    }
    dist
}

pub fn generate_topology(spec: &TopoSpec) -> Result<Topology, SimError> {
    if spec.n_as == 0 || spec.routers_per_as == 0 {
        return Err(SimError::Config("n_as and routers_per_as must be >= 1"));
    }
    if spec.edge_router_count == 0 || spec.clients_per_edge == 0 {
        return Err(SimError::Config("need at least one edge router and client"));
    }
    if spec.core_bw_min_bps == 0 || spec.client_bw_bps == 0 || spec.provider_bw_bps == 0 {
        return Err(SimError::Config("bandwidths must be positive"));
    }
    let total_routers = spec.n_as * spec.routers_per_as;
    if spec.edge_router_count > total_routers {
        return Err(SimError::Config("more edge routers than routers"));
    }
    let mut rng = crate::rng::substream(spec.seed, "topology");
    let mut warnings = Vec::new();
    let mut b = Builder { kinds: Vec::new(), adj: Vec::new() };

    // Router layer: one BA graph per AS.
    let mut as_routers: Vec<Vec<NodeId>> = Vec::with_capacity(spec.n_as);
    for _ in 0..spec.n_as {
        let ids: Vec<NodeId> = (0..spec.routers_per_as)
            .map(|_| b.add_node(NodeKind::Router))
            .collect();
        barabasi_albert(&mut b, &ids, spec, &mut rng);
        as_routers.push(ids);
    }

    // AS layer: Waxman over random positions in the unit square.
    let positions: Vec<(f64, f64)> = (0..spec.n_as)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let mut max_d = 0f64;
    for i in 0..spec.n_as {
        for j in i + 1..spec.n_as {
            max_d = max_d.max(dist(positions[i], positions[j]));
        }
    }
    let max_d = if max_d > 0.0 { max_d } else { 1.0 };
    let mut as_adj = vec![Vec::new(); spec.n_as];
    for i in 0..spec.n_as {
        for j in i + 1..spec.n_as {
            let p = spec.waxman_alpha * (-dist(positions[i], positions[j]) / (spec.waxman_beta * max_d)).exp();
            if rng.gen::<f64>() < p {
                as_adj[i].push(j);
                as_adj[j].push(i);
            }
        }
    }
    // Waxman graphs are not connected by construction; stitch components
    // together along their closest AS pairs.
    loop {
        let comp = components(&as_adj);
        if comp.iter().max().copied().unwrap_or(0) == 0 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..spec.n_as {
            for j in 0..spec.n_as {
                if comp[i] == 0 && comp[j] != 0 {
                    let d = dist(positions[i], positions[j]);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        let (_, i, j) = best.expect("disconnected component must have a bridge");
        as_adj[i].push(j);
        as_adj[j].push(i);
    }

    // Realize each AS-AS edge between random member routers.
    for i in 0..spec.n_as {
        for &j in &as_adj[i] {
            if j <= i {
                continue;
            }
            let a = as_routers[i][rng.gen_range(0..spec.routers_per_as)];
            let c = as_routers[j][rng.gen_range(0..spec.routers_per_as)];
            let bw = rng.gen_range(spec.core_bw_min_bps..=spec.core_bw_max_bps);
            let delay = rng.gen_range(spec.inter_delay_min_ns..=spec.inter_delay_max_ns);
            if !b.connected(a, c) {
                b.connect(a, c, bw, delay);
            }
        }
    }

    // Edge routers and the provider attachment point are chosen jointly:
    // redraw the edge set until some router sits in the requested hop
    // band from every edge router, falling back to the farthest router
    // after a bounded number of attempts.
    let lo = spec.provider_hop_min.saturating_sub(1);
    let hi = spec.provider_hop_max.saturating_sub(1);
    let mut edge_routers = Vec::new();
    let mut attach = None;
    let mut fallback: Option<(usize, Vec<NodeId>, NodeId)> = None;
    for _ in 0..64 {
        let mut edges = Vec::with_capacity(spec.edge_router_count);
        while edges.len() < spec.edge_router_count {
            let candidate = rng.gen_range(0..total_routers);
            if !edges.contains(&candidate) {
                edges.push(candidate);
            }
        }
        let dists: Vec<Vec<Option<usize>>> =
            edges.iter().map(|&e| hop_distances(&b.adj, e)).collect();
        let candidates: Vec<NodeId> = (0..total_routers)
            .filter(|&x| {
                dists
                    .iter()
                    .all(|d| d[x].is_some_and(|h| (lo..=hi).contains(&h)))
            })
            .collect();
        if !candidates.is_empty() {
            edge_routers = edges;
            attach = Some(candidates[rng.gen_range(0..candidates.len())]);
            break;
        }
        // Remember the best fallback seen: the router maximizing the
        // minimum distance to the edge set.
        let best = (0..total_routers)
            .max_by_key(|&x| dists.iter().map(|d| d[x].unwrap_or(0)).min().unwrap_or(0))
            .expect("at least one router");
        let score = dists.iter().map(|d| d[best].unwrap_or(0)).min().unwrap_or(0);
        if fallback.as_ref().is_none_or(|(s, _, _)| score > *s) {
            fallback = Some((score, edges, best));
        }
    }
    let attach = match attach {
        Some(attach) => attach,
        None => {
            let (hops, edges, best) = fallback.expect("at least one attempt ran");
            warnings.push(format!(
                "no router lies {}..{} hops from every edge router; provider placed {} hops out at router {best}",
                spec.provider_hop_min,
                spec.provider_hop_max,
                hops + 1
            ));
            edge_routers = edges;
            best
        }
    };
    let mut clients = Vec::new();
    for &edge in &edge_routers {
        for _ in 0..spec.clients_per_edge {
            let client = b.add_node(NodeKind::Client);
            b.connect(client, edge, spec.client_bw_bps, spec.client_delay_ns);
            clients.push(client);
        }
    }
    let provider = b.add_node(NodeKind::Provider);
    b.connect(provider, attach, spec.provider_bw_bps, spec.provider_delay_ns);

    // Shortest-path routing toward the provider, lowest node id on ties.
    let dist_to_provider = hop_distances(&b.adj, provider);
    let mut next_hop = vec![provider; b.kinds.len()];
    for node in 0..b.kinds.len() {
        if node == provider {
            continue;
        }
        let Some(dn) = dist_to_provider[node] else {
            return Err(SimError::Config("generated topology is not connected"));
        };
        let mut best: Option<NodeId> = None;
        for link in &b.adj[node] {
            if dist_to_provider[link.to] == Some(dn - 1)
                && best.is_none_or(|prev| link.to < prev)
            {
                best = Some(link.to);
            }
        }
        next_hop[node] = best.expect("shortest-path predecessor exists");
    }

    Ok(Topology {
        kinds: b.kinds,
        adj: b.adj,
        provider,
        edge_routers,
        clients,
        next_hop_to_provider: next_hop,
        warnings,
    })
}

/// Preferential attachment with `ba_m` links per new node.
fn barabasi_albert<R: RngCore>(b: &mut Builder, ids: &[NodeId], spec: &TopoSpec, rng: &mut R) {
    let m = spec.ba_m.max(1);
    let seed_count = (m + 1).min(ids.len());
    // Start from a clique of m+1 nodes; endpoints repeats make later
    // draws degree-proportional.
    let mut endpoints: Vec<NodeId> = Vec::new();
    for i in 0..seed_count {
        for j in i + 1..seed_count {
            let (bw, delay) = core_link(spec, rng);
            b.connect(ids[i], ids[j], bw, delay);
            endpoints.push(ids[i]);
            endpoints.push(ids[j]);
        }
    }
    for &new in ids.iter().skip(seed_count) {
        let mut targets: Vec<NodeId> = Vec::with_capacity(m);
        let mut guard = 0;
        while targets.len() < m && guard < 10_000 {
            guard += 1;
            let pick = endpoints[rng.gen_range(0..endpoints.len())];
            if pick != new && !targets.contains(&pick) {
                targets.push(pick);
            }
        }
        for target in targets {
            let (bw, delay) = core_link(spec, rng);
            b.connect(new, target, bw, delay);
            endpoints.push(new);
            endpoints.push(target);
        }
    }
}

fn core_link<R: RngCore>(spec: &TopoSpec, rng: &mut R) -> (u64, u64) {
    let bw = rng.gen_range(spec.core_bw_min_bps..=spec.core_bw_max_bps);
    let delay = rng.gen_range(spec.intra_delay_min_ns..=spec.intra_delay_max_ns);
    (bw, delay)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Component label per node, 0 being the first node's component.
fn components(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut label = vec![usize::MAX; adj.len()];
    let mut next = 0;
    for start in 0..adj.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}
