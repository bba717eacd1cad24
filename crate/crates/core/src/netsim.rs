//! Synchronous slice-by-slice random linear network coding over an acyclic graph.
//!
//! Each column of Alice's `b x n` matrix is one slice. For every slice the
//! source emits a random linear combination of the slice's `b` symbols on each
//! outgoing edge, and every internal node emits random combinations of the
//! symbols on its incoming edges. Slices never mix. Controlled edges hand their
//! coded symbol to the adversary, which may replace it before it propagates.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::adversary::{validate_controlled, Adversary, AdversaryView};
use crate::gf::Field;
use crate::linalg::FieldMatrix;
use crate::rng::{component_rng, Component};

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct TopologyError {
    pub line: Option<usize>,
    pub message: String,
}

impl TopologyError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("sink {0} is unreachable from the source")]
    Unreachable(u64),
    #[error("configuration: {0}")]
    Config(String),
    #[error("adversary strategy read column {column} at slice {slice}, beyond its knowledge window")]
    KnowledgeViolation { slice: usize, column: usize },
    #[error("adversary controls {controlled} edges but z = {z}")]
    TooManyEdges { controlled: usize, z: usize },
}

/// Validated directed acyclic graph with one source and one or more sinks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    labels: Vec<u64>,
    edges: Vec<(NodeId, NodeId)>,
    source: NodeId,
    sinks: Vec<NodeId>,
    in_edges: Vec<Vec<EdgeId>>,
    out_edges: Vec<Vec<EdgeId>>,
    order: Vec<NodeId>,
}

impl Topology {
    /// Parses the text format: `source <id>`, `sink <id>` (repeatable) and
    /// `<u> <v>` edge lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut labels: Vec<u64> = Vec::new();
        let mut index: HashMap<u64, NodeId> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_lines = Vec::new();
        let mut source: Option<(u64, usize)> = None;
        let mut sinks: Vec<(u64, usize)> = Vec::new();

        let mut intern = |label: u64, labels: &mut Vec<u64>| -> NodeId {
            *index.entry(label).or_insert_with(|| {
                labels.push(label);
                labels.len() - 1
            })
        };

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_id = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| TopologyError::at(line_no, format!("expected a node id, found `{s}`")))
            };
            match fields.as_slice() {
                ["source", id] => {
                    if source.is_some() {
                        return Err(TopologyError::at(line_no, "duplicate source line"));
                    }
                    source = Some((parse_id(id)?, line_no));
                }
                ["sink", id] => sinks.push((parse_id(id)?, line_no)),
                [u, v] => {
                    let (u, v) = (parse_id(u)?, parse_id(v)?);
                    let a = intern(u, &mut labels);
                    let b = intern(v, &mut labels);
                    edges.push((a, b));
                    edge_lines.push(line_no);
                }
                _ => return Err(TopologyError::at(line_no, format!("cannot parse `{line}`"))),
            }
        }

        let (src_label, src_line) = source.ok_or_else(|| TopologyError::global("missing `source` line"))?;
        if sinks.is_empty() {
            return Err(TopologyError::global("missing `sink` line"));
        }
        let lookup = |label: u64, line: usize| {
            index
                .get(&label)
                .copied()
                .ok_or_else(|| TopologyError::at(line, format!("unknown node {label}")))
        };
        let source = lookup(src_label, src_line)?;
        let mut sink_ids = Vec::new();
        for &(label, line) in &sinks {
            let s = lookup(label, line)?;
            if s == source {
                return Err(TopologyError::at(line, "sink equals source"));
            }
            if sink_ids.contains(&s) {
                return Err(TopologyError::at(line, format!("duplicate sink {label}")));
            }
            sink_ids.push(s);
        }
        if let Some(pos) = edges.iter().position(|&(_, v)| v == source) {
            return Err(TopologyError::at(edge_lines[pos], "edge into the source"));
        }
        Self::build(labels, edges, source, sink_ids, Some(&edge_lines))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| TopologyError::global(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Builds a topology over nodes `0..node_count` from an edge list.
    pub fn from_edges(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        source: NodeId,
        sinks: &[NodeId],
    ) -> Result<Self, TopologyError> {
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= node_count || v >= node_count) {
            return Err(TopologyError::global(format!("edge {u}->{v} references an unknown node")));
        }
        if source >= node_count || sinks.iter().any(|&s| s >= node_count || s == source) || sinks.is_empty() {
            return Err(TopologyError::global("invalid source/sink"));
        }
        if edges.iter().any(|&(_, v)| v == source) {
            return Err(TopologyError::global("edge into the source"));
        }
        Self::build((0..node_count as u64).collect(), edges.to_vec(), source, sinks.to_vec(), None)
    }

    fn build(
        labels: Vec<u64>,
        edges: Vec<(NodeId, NodeId)>,
        source: NodeId,
        sinks: Vec<NodeId>,
        edge_lines: Option<&[usize]>,
    ) -> Result<Self, TopologyError> {
        let n = labels.len();
        let mut in_edges = vec![Vec::new(); n];
        let mut out_edges = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            out_edges[u].push(e);
            in_edges[v].push(e);
        }
        // Kahn's algorithm; leftovers sit on or behind a cycle.
        let mut indeg: Vec<usize> = in_edges.iter().map(Vec::len).collect();
        let mut queue: VecDeque<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &e in &out_edges[u] {
                let v = edges[e].1;
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        if order.len() < n {
            let e = (0..edges.len())
                .find(|&e| indeg[edges[e].0] > 0 && indeg[edges[e].1] > 0)
                .expect("a cycle has an edge between unprocessed nodes");
            let (u, v) = edges[e];
            let msg = format!("cycle detected through edge {} -> {}", labels[u], labels[v]);
            return Err(match edge_lines {
                Some(lines) => TopologyError::at(lines[e], msg),
                None => TopologyError::global(msg),
            });
        }
        Ok(Self { labels, edges, source, sinks, in_edges, out_edges, order })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn sinks(&self) -> &[NodeId] {
        &self.sinks
    }

    pub fn label(&self, node: NodeId) -> u64 {
        self.labels[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node]
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node]
    }

    /// Nodes in topological order.
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    /// Number of coefficients edge `e` combines: `b` at the source, the tail's indegree elsewhere.
    pub fn coefficient_count(&self, e: EdgeId, b: usize) -> usize {
        let tail = self.edges[e].0;
        if tail == self.source {
            b
        } else {
            self.in_edges[tail].len()
        }
    }

    /// Unit-capacity max flow from the source to `sink`, with the edges of the
    /// minimum cut closest to the source.
    pub fn max_flow(&self, sink: NodeId) -> (usize, Vec<EdgeId>) {
        let n = self.node_count();
        let mut flow = vec![0i8; self.edges.len()];
        let mut value = 0;
        loop {
            // BFS over the residual graph; parent stores (edge, forward?).
            let mut parent: Vec<Option<(EdgeId, bool)>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[self.source] = true;
            let mut queue = VecDeque::from([self.source]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.out_edges[u] {
                    let v = self.edges[e].1;
                    if !seen[v] && flow[e] == 0 {
                        seen[v] = true;
                        parent[v] = Some((e, true));
                        queue.push_back(v);
                    }
                }
                for &e in &self.in_edges[u] {
                    let v = self.edges[e].0;
                    if !seen[v] && flow[e] == 1 {
                        seen[v] = true;
                        parent[v] = Some((e, false));
                        queue.push_back(v);
                    }
                }
            }
            if !seen[sink] {
                let cut = (0..self.edges.len())
                    .filter(|&e| seen[self.edges[e].0] && !seen[self.edges[e].1])
                    .collect();
                return (value, cut);
            }
            let mut v = sink;
            while v != self.source {
                let (e, forward) = parent[v].expect("path back to source");
                if forward {
                    flow[e] = 1;
                    v = self.edges[e].0;
                } else {
                    flow[e] = 0;
                    v = self.edges[e].1;
                }
            }
            value += 1;
        }
    }

    /// Longest and shortest path lengths (in edges) from the source to every node;
    /// `None` for unreachable nodes.
    fn path_lengths(&self) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let n = self.node_count();
        let mut longest = vec![None; n];
        let mut shortest = vec![None; n];
        longest[self.source] = Some(0);
        shortest[self.source] = Some(0);
        for &u in &self.order {
            let (Some(lo), Some(sh)) = (longest[u], shortest[u]) else { continue };
            for &e in &self.out_edges[u] {
                let v = self.edges[e].1;
                longest[v] = Some(longest[v].map_or(lo + 1, |x: usize| x.max(lo + 1)));
                shortest[v] = Some(shortest[v].map_or(sh + 1, |x: usize| x.min(sh + 1)));
            }
        }
        (longest, shortest)
    }

    /// Serializes back to the text format (labels preserved).
    pub fn to_text(&self) -> String {
        let mut s = format!("source {}\n", self.labels[self.source]);
        for &t in &self.sinks {
            s.push_str(&format!("sink {}\n", self.labels[t]));
        }
        for &(u, v) in &self.edges {
            s.push_str(&format!("{} {}\n", self.labels[u], self.labels[v]));
        }
        s
    }
}

/// Which latency bound a scheme should use as its knowledge window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DeltaMode {
    /// Longest minus shortest source-to-sink path.
    Skew,
    /// Deepest edge's distance from the source: how many slices Alice is ahead of
    /// the symbol on that edge.
    #[default]
    Lookahead,
    /// The edge count, the coarse bound.
    Edges,
}

impl DeltaMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "skew" => Some(Self::Skew),
            "lookahead" => Some(Self::Lookahead),
            "edges" => Some(Self::Edges),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Skew => "skew",
            Self::Lookahead => "lookahead",
            Self::Edges => "edges",
        }
    }
}

/// Capacity and latency parameters derived from a topology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkProfile {
    /// Min over sinks of the source-sink min cut.
    pub capacity: usize,
    pub sink_capacities: Vec<usize>,
    /// Path-length skew: longest minus shortest source-to-sink path.
    pub delta: usize,
    pub lookahead: usize,
    pub edge_count: usize,
}

impl NetworkProfile {
    pub fn delta_for(&self, mode: DeltaMode) -> usize {
        match mode {
            DeltaMode::Skew => self.delta,
            DeltaMode::Lookahead => self.lookahead.max(self.delta),
            DeltaMode::Edges => self.edge_count,
        }
    }
}

pub fn profile(topology: &Topology) -> Result<NetworkProfile, SimError> {
    let (longest, shortest) = topology.path_lengths();
    let mut sink_capacities = Vec::new();
    let (mut max_long, mut min_short) = (0, usize::MAX);
    for &t in topology.sinks() {
        let (Some(lo), Some(sh)) = (longest[t], shortest[t]) else {
            return Err(SimError::Unreachable(topology.label(t)));
        };
        max_long = max_long.max(lo);
        min_short = min_short.min(sh);
        sink_capacities.push(topology.max_flow(t).0);
    }
    let lookahead = topology
        .edges()
        .iter()
        .filter_map(|&(u, _)| longest[u])
        .max()
        .unwrap_or(0);
    let edge_count = topology.edge_count();
    Ok(NetworkProfile {
        capacity: *sink_capacities.iter().min().expect("at least one sink"),
        sink_capacities,
        delta: (max_long - min_short).min(edge_count),
        lookahead: lookahead.min(edge_count),
        edge_count,
    })
}

/// Per-edge random coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkCode {
    pub b: usize,
    pub seed: u64,
    pub coefficients: Vec<Vec<u32>>,
}

pub fn generate_code(
    topology: &Topology,
    field: Field,
    b: usize,
    capacity: usize,
    seed: u64,
) -> Result<NetworkCode, SimError> {
    if b == 0 || b > capacity {
        return Err(SimError::Config(format!("b = {b} packets must lie in 1..={capacity} (the capacity)")));
    }
    let mut rng = component_rng(seed, Component::NetworkCode);
    let coefficients = (0..topology.edge_count())
        .map(|e| {
            (0..topology.coefficient_count(e, b))
                .map(|_| rng.gen_range(0..field.q()))
                .collect()
        })
        .collect();
    Ok(NetworkCode { b, seed, coefficients })
}

/// Global encoding vectors: row `e` maps Alice's `b` packets to edge `e`'s symbol.
pub fn global_vectors(topology: &Topology, code: &NetworkCode, field: Field) -> FieldMatrix {
    let b = code.b;
    let mut g = FieldMatrix::zeros(field, topology.edge_count(), b);
    for &u in topology.order() {
        for &e in topology.out_edges(u) {
            let coeffs = &code.coefficients[e];
            for col in 0..b {
                let v = if u == topology.source() {
                    coeffs[col]
                } else {
                    topology
                        .in_edges(u)
                        .iter()
                        .zip(coeffs)
                        .fold(0, |acc, (&ie, &c)| field.mul_add(acc, c, g.get(ie, col)))
                };
                g.set(e, col, v);
            }
        }
    }
    g
}

/// Transfer matrix from Alice's packets to `sink`'s incoming edges.
pub fn transfer_matrix(topology: &Topology, code: &NetworkCode, field: Field, sink: NodeId) -> FieldMatrix {
    global_vectors(topology, code, field).select_rows(topology.in_edges(sink))
}

/// Everything that crossed every edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceTranscript {
    /// `carried[e][t]`: symbol on edge `e` for slice `t`.
    pub carried: Vec<Vec<u32>>,
    /// `honest[e][t]`: what the network code produced before any replacement.
    pub honest: Vec<Vec<u32>>,
    pub corrupted: Vec<Vec<bool>>,
}

impl SliceTranscript {
    fn new(edges: usize, n: usize) -> Self {
        Self {
            carried: vec![vec![0; n]; edges],
            honest: vec![vec![0; n]; edges],
            corrupted: vec![vec![false; n]; edges],
        }
    }

    /// Edges with at least one replaced symbol.
    pub fn corrupted_edges(&self) -> Vec<EdgeId> {
        (0..self.corrupted.len()).filter(|&e| self.corrupted[e].iter().any(|&c| c)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Transmission {
    /// One `indegree x n` matrix per sink, in topology sink order.
    pub received: Vec<FieldMatrix>,
    pub transcript: SliceTranscript,
}

/// Pushes the `b x n` matrix `x` through the network, slice by slice.
pub fn transmit(
    topology: &Topology,
    code: &NetworkCode,
    x: &FieldMatrix,
    mut adversary: Option<&mut Adversary>,
) -> Result<Transmission, SimError> {
    let field = x.field();
    if x.rows() != code.b {
        return Err(SimError::Config(format!("X has {} rows, the code expects {}", x.rows(), code.b)));
    }
    if let Some(adv) = adversary.as_deref() {
        validate_controlled(topology, adv.controlled(), adv.z())?;
    }
    let n = x.cols();
    let mut transcript = SliceTranscript::new(topology.edge_count(), n);
    let mut inputs = Vec::new();
    for t in 0..n {
        for &u in topology.order() {
            inputs.clear();
            if u == topology.source() {
                inputs.extend((0..x.rows()).map(|r| x.get(r, t)));
            } else {
                inputs.extend(topology.in_edges(u).iter().map(|&e| transcript.carried[e][t]));
            }
            for &e in topology.out_edges(u) {
                let coded = code.coefficients[e]
                    .iter()
                    .zip(&inputs)
                    .fold(0, |acc, (&c, &s)| field.mul_add(acc, c, s));
                transcript.honest[e][t] = coded;
                let mut carried = coded;
                if let Some(adv) = adversary.as_deref_mut() {
                    if adv.controls(e) {
                        let (ctx, strategy) = adv.split();
                        let view = AdversaryView::new(topology, code, &transcript, x, t, ctx);
                        let injection = strategy.inject(&view, t, e, coded);
                        if let Some(column) = view.violation() {
                            return Err(SimError::KnowledgeViolation { slice: t, column });
                        }
                        if let Some(v) = injection {
                            carried = v % field.q();
                            transcript.corrupted[e][t] = carried != coded;
                        }
                    }
                }
                transcript.carried[e][t] = carried;
            }
        }
    }
    let received = topology
        .sinks()
        .iter()
        .map(|&s| {
            let rows = topology.in_edges(s);
            FieldMatrix::from_fn(field, rows.len(), n, |r, t| transcript.carried[rows[r]][t] as u64)
        })
        .collect();
    Ok(Transmission { received, transcript })
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
