//! Trial configuration and its validation into a runnable [`Plan`].

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::adversary::{place_edges, validate_controlled, KnowledgeModel, StrategyKind};
use crate::blocks::OmnCode;
use crate::cryptokit::CryptoError;
use crate::gf::{Field, DEFAULT_Q};
use crate::netsim::{profile, DeltaMode, EdgeId, NetworkProfile, SimError, Topology, TopologyError};
use crate::schemes::co::CoLayout;
use crate::schemes::pk::PkLayout;
use crate::schemes::rs::{message_width, tag_columns};
use crate::schemes::{omn_packets, SchemeError, SchemeKind};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("sweep grid: {0}")]
    Grid(String),
}

impl HarnessError {
    /// Whether the error stems from the configuration rather than from a fault while running.
    pub fn is_config(&self) -> bool {
        !matches!(self, Self::Sim(SimError::KnowledgeViolation { .. }))
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}

/// Requested knowledge model; `Auto` picks the scheme's natural adversary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KnowledgeChoice {
    #[default]
    Auto,
    Omniscient,
    Causal,
    SecretExcluded,
}

impl KnowledgeChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Self::Auto),
            "omniscient" => Some(Self::Omniscient),
            "causal" => Some(Self::Causal),
            "secret-excluded" => Some(Self::SecretExcluded),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Omniscient => "omniscient",
            Self::Causal => "causal",
            Self::SecretExcluded => "secret-excluded",
        }
    }

    pub fn resolve(self, scheme: SchemeKind, delta: usize) -> KnowledgeModel {
        match (self, scheme) {
            (Self::Omniscient, _) | (Self::Auto, SchemeKind::Omn) => KnowledgeModel::Omniscient,
            (Self::Causal, _) | (Self::Auto, SchemeKind::Co) => KnowledgeModel::Causal(delta),
            _ => KnowledgeModel::SecretExcluded,
        }
    }
}

impl fmt::Display for KnowledgeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything needed to reproduce a run. Serialized into every report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialConfig {
    pub scheme: SchemeKind,
    /// Canonical topology text; empty until one is set.
    pub topology: String,
    /// Where the topology came from, informational only.
    pub topology_path: Option<String>,
    pub q: u32,
    /// Packets per slice; `None` means `C - z`.
    pub b: Option<usize>,
    pub n: usize,
    pub z: usize,
    pub adversaries: Vec<StrategyKind>,
    pub knowledge: KnowledgeChoice,
    pub delta_mode: DeltaMode,
    /// Explicit controlled edges; `None` places them greedily on min cuts.
    pub edges: Option<Vec<EdgeId>>,
    pub trials: u64,
    pub seed: u64,
    /// Executions per trial for the session scheme.
    pub sessions: usize,
    /// Multicast random-secret receivers do not know their index.
    pub index_free: bool,
    pub pke_k: u32,
    /// Hand the message to the adversary.
    pub expose_message: bool,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Rs,
            topology: String::new(),
            topology_path: None,
            q: DEFAULT_Q,
            b: None,
            n: 64,
            z: 1,
            adversaries: vec![StrategyKind::Random],
            knowledge: KnowledgeChoice::Auto,
            delta_mode: DeltaMode::default(),
            edges: None,
            trials: 100,
            seed: 0,
            sessions: 1,
            index_free: false,
            pke_k: 61,
            expose_message: true,
        }
    }
}

/// Keys accepted by [`TrialConfig::set`], in report order.
pub const CONFIG_KEYS: [&str; 17] = [
    "scheme",
    "topology_path",
    "topology",
    "q",
    "b",
    "n",
    "z",
    "adversary",
    "knowledge",
    "delta_mode",
    "edges",
    "trials",
    "seed",
    "sessions",
    "index_free",
    "pke_k",
    "expose_message",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::config(format!("{key}: `{value}` is not a valid number")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(HarnessError::config(format!("{key}: expected true or false, got `{other}`"))),
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl TrialConfig {
    pub fn with_topology(scheme: SchemeKind, topology: &Topology) -> Self {
        Self { scheme, topology: topology.to_text(), ..Self::default() }
    }

    pub fn set_topology(&mut self, topology: &Topology) {
        self.topology = topology.to_text();
    }

    pub fn load_topology(&mut self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
        let topo = Topology::parse(&text)?;
        self.set_topology(&topo);
        self.topology_path = Some(path.display().to_string());
        Ok(())
    }

    /// Sets one field from its textual form. `topology` takes inline text with `;` as line separator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let v = value.trim();
        match key {
            "scheme" => {
                self.scheme = SchemeKind::parse(v)
                    .ok_or_else(|| HarnessError::config(format!("unknown scheme `{v}` (omn|sc|rs|co|pk|session)")))?
            }
            "topology_path" => self.topology_path = (v != "-").then(|| v.to_string()),
            "topology" => {
                let topo = Topology::parse(&v.replace(';', "\n"))?;
                self.set_topology(&topo);
            }
            "topology_file" => self.load_topology(v)?,
            "q" => self.q = parse_num(key, v)?,
            "b" => self.b = if v == "auto" { None } else { Some(parse_num(key, v)?) },
            "n" => self.n = parse_num(key, v)?,
            "z" => self.z = parse_num(key, v)?,
            "adversary" => {
                self.adversaries = split_list(v)
                    .map(|s| {
                        StrategyKind::parse(s).ok_or_else(|| {
                            HarnessError::config(format!(
                                "unknown adversary `{s}` (null|random|additive|replay|forger)"
                            ))
                        })
                    })
                    .collect::<Result<_, _>>()?
            }
            "knowledge" => {
                self.knowledge = KnowledgeChoice::parse(v).ok_or_else(|| {
                    HarnessError::config(format!(
                        "unknown knowledge model `{v}` (auto|omniscient|causal|secret-excluded)"
                    ))
                })?
            }
            "delta_mode" => {
                self.delta_mode = DeltaMode::parse(v)
                    .ok_or_else(|| HarnessError::config(format!("unknown delta mode `{v}` (skew|lookahead|edges)")))?
            }
            "edges" => {
                self.edges = if v == "auto" {
                    None
                } else {
                    Some(split_list(v).map(|e| parse_num("edges", e)).collect::<Result<_, _>>()?)
                }
            }
            "trials" => self.trials = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "sessions" => self.sessions = parse_num(key, v)?,
            "index_free" => self.index_free = parse_bool(key, v)?,
            "pke_k" => self.pke_k = parse_num(key, v)?,
            "expose_message" => self.expose_message = parse_bool(key, v)?,
            other => return Err(HarnessError::config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in [`CONFIG_KEYS`] order; [`set`](Self::set) reads every one back.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let join = |v: Vec<String>| v.join(",");
        let topology = self.topology.lines().collect::<Vec<_>>().join("; ");
        CONFIG_KEYS
            .iter()
            .map(|&k| {
                let v = match k {
                    "scheme" => self.scheme.name().to_string(),
                    "topology_path" => self.topology_path.clone().unwrap_or_else(|| "-".into()),
                    "topology" => topology.clone(),
                    "q" => self.q.to_string(),
                    "b" => self.b.map_or_else(|| "auto".into(), |b| b.to_string()),
                    "n" => self.n.to_string(),
                    "z" => self.z.to_string(),
                    "adversary" => join(self.adversaries.iter().map(|a| a.name().to_string()).collect()),
                    "knowledge" => self.knowledge.to_string(),
                    "delta_mode" => self.delta_mode.as_str().to_string(),
                    "edges" => self
                        .edges
                        .as_ref()
                        .map_or_else(|| "auto".into(), |e| join(e.iter().map(|x| x.to_string()).collect())),
                    "trials" => self.trials.to_string(),
                    "seed" => self.seed.to_string(),
                    "sessions" => self.sessions.to_string(),
                    "index_free" => self.index_free.to_string(),
                    "pke_k" => self.pke_k.to_string(),
                    "expose_message" => self.expose_message.to_string(),
                    _ => unreachable!("every key is listed"),
                };
                (k, v)
            })
            .collect()
    }
}

/// How `X` is laid out for the configured scheme.
#[derive(Clone, Debug)]
pub enum Layout {
    Omn(OmnCode),
    Sc { message_cols: usize },
    /// Random-secret and session schemes.
    Rs { message_cols: usize, tag_cols: usize },
    Co(CoLayout),
    Pk(PkLayout),
}

/// A validated configuration with every derived quantity resolved.
#[derive(Clone, Debug)]
pub struct Plan {
    pub config: TrialConfig,
    pub topology: Topology,
    pub profile: NetworkProfile,
    pub field: Field,
    pub b: usize,
    /// Latency bound in slices, per the configured delta mode.
    pub delta: usize,
    pub knowledge: KnowledgeModel,
    pub controlled: Vec<EdgeId>,
    pub receivers: usize,
    pub layout: Layout,
}

impl Plan {
    /// Checks every precondition before a single trial runs.
    pub fn new(config: &TrialConfig) -> Result<Self, HarnessError> {
        if config.topology.trim().is_empty() {
            return Err(HarnessError::config("no topology given"));
        }
        let topology = Topology::parse(&config.topology)?;
        let profile = profile(&topology)?;
        let field = Field::new(config.q).map_err(|e| HarnessError::config(format!("q: {e}")))?;
        let capacity = profile.capacity;
        let (scheme, z, n) = (config.scheme, config.z, config.n);
        if capacity < scheme.min_capacity(z) {
            let rule = if scheme.min_capacity(z) > z + 1 { "C > 2z" } else { "C > z" };
            return Err(HarnessError::config(format!(
                "scheme {scheme} needs {rule}, but the topology has C = {capacity} and z = {z}"
            )));
        }
        let b = config.b.unwrap_or(capacity - z);
        if b == 0 || b > capacity {
            return Err(HarnessError::config(format!("b = {b} must lie in 1..={capacity} (C)")));
        }
        if config.adversaries.is_empty() {
            return Err(HarnessError::config("at least one adversary strategy is required (null for none)"));
        }
        if config.index_free && scheme != SchemeKind::Rs {
            return Err(HarnessError::config("index_free applies to the rs scheme only"));
        }
        if scheme == SchemeKind::Session && config.sessions == 0 {
            return Err(HarnessError::config("sessions must be at least 1"));
        }
        if scheme == SchemeKind::Pk && !(8..=61).contains(&config.pke_k) {
            return Err(CryptoError::UnsupportedK(config.pke_k).into());
        }
        let controlled = match &config.edges {
            Some(edges) => edges.clone(),
            None => place_edges(&topology, z),
        };
        validate_controlled(&topology, &controlled, z)?;
        let delta = profile.delta_for(config.delta_mode);
        let receivers = topology.sinks().len();
        let no_room = |what: &str| HarnessError::config(format!("n = {n} is too small for {what}"));
        let layout = match scheme {
            SchemeKind::Omn => {
                let code = OmnCode::with_packets(field, omn_packets(capacity, z, b)?, z, n)
                    .map_err(SchemeError::from)?;
                if code.capacity() == 0 {
                    return Err(no_room("any omniscient payload"));
                }
                Layout::Omn(code)
            }
            SchemeKind::Sc => Layout::Sc {
                message_cols: n.checked_sub(b).filter(|&w| w > 0).ok_or_else(|| no_room("[M I]"))?,
            },
            SchemeKind::Rs | SchemeKind::Session => {
                let width = message_width(n, b, capacity, receivers).ok_or_else(|| no_room("[L M I]"))?;
                let tag_cols = if config.index_free { tag_columns(receivers, b) } else { 0 };
                let message_cols = width
                    .checked_sub(tag_cols)
                    .filter(|&w| w > 0)
                    .ok_or_else(|| no_room("the authenticator tags"))?;
                Layout::Rs { message_cols, tag_cols }
            }
            SchemeKind::Co => Layout::Co(CoLayout::new(field, n, capacity, z, delta, b)?),
            SchemeKind::Pk => Layout::Pk(PkLayout::new(field, n, capacity, z, receivers, b)?),
        };
        Ok(Self {
            config: config.clone(),
            knowledge: config.knowledge.resolve(scheme, delta),
            topology,
            profile,
            field,
            b,
            delta,
            controlled,
            receivers,
            layout,
        })
    }

    pub fn capacity(&self) -> usize {
        self.profile.capacity
    }

    pub fn rate_contract(&self) -> usize {
        self.config.scheme.rate_contract(self.capacity(), self.config.z)
    }

    /// Message symbols per slice at this block length.
    pub fn achieved_rate(&self) -> f64 {
        let n = self.config.n as f64;
        let symbols = match &self.layout {
            Layout::Omn(code) => code.capacity(),
            Layout::Sc { message_cols } | Layout::Rs { message_cols, .. } => self.b * message_cols,
            Layout::Co(l) => self.b * l.message_cols(),
            Layout::Pk(l) => self.b * l.message_cols(),
        };
        symbols as f64 / n
    }
}
