//! Calvin: adversaries that overwrite symbols on up to `z` controlled edges.
//!
//! A strategy sees the network only through an [`AdversaryView`], which
//! enforces the knowledge model. Reading a column of `X` outside the window is
//! recorded and turned into [`SimError::KnowledgeViolation`] by the simulator,
//! so a leaky strategy fails loudly instead of quietly winning.

use std::cell::Cell;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cryptokit::SecretKey;
use crate::gf::Field;
use crate::linalg::FieldMatrix;
use crate::netsim::{EdgeId, NetworkCode, SimError, SliceTranscript, Topology};
use crate::rng::{component_rng, Component};

/// What the injection callback may read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KnowledgeModel {
    /// Everything, secrets included.
    Omniscient,
    /// Columns `0..=t+delta` of `X` while working on slice `t`; no secrets.
    Causal(usize),
    /// All of `X`, no secrets.
    SecretExcluded,
}

impl KnowledgeModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::Omniscient => "omniscient",
            Self::Causal(_) => "causal",
            Self::SecretExcluded => "secret-excluded",
        }
    }
}

impl fmt::Display for KnowledgeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Causal(d) => write!(f, "causal({d})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Secrets shared between Alice and Bob. Only ever handed to an omniscient adversary.
#[derive(Clone, Debug, Default)]
pub struct SecretMaterial {
    pub parity: Option<Vec<u32>>,
    pub hash: Option<FieldMatrix>,
    pub secret_key: Option<SecretKey>,
}

/// Where the hash-protected block sits inside `X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForgeTarget {
    pub offset: usize,
    pub width: usize,
    pub b: usize,
    /// Number of parity symbols protecting the block.
    pub parity_len: usize,
}

/// Recovers the parity symbols from whatever the view exposes, if the scheme leaks them.
pub type ParityLeak = Box<dyn Fn(&AdversaryView<'_>) -> Option<Vec<u32>> + Send + Sync>;

/// Public scheme structure a strategy may exploit.
#[derive(Default)]
pub struct SchemeHints {
    pub target: Option<ForgeTarget>,
    pub leak: Option<ParityLeak>,
}

impl fmt::Debug for SchemeHints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchemeHints")
            .field("target", &self.target)
            .field("leak", &self.leak.is_some())
            .finish()
    }
}

#[derive(Debug)]
pub struct AdversaryContext {
    knowledge: KnowledgeModel,
    message: Option<FieldMatrix>,
    secret: Option<SecretMaterial>,
    hints: SchemeHints,
}

impl AdversaryContext {
    pub fn knowledge(&self) -> KnowledgeModel {
        self.knowledge
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column} lies outside the adversary's window (visible through {visible:?})")]
pub struct ViewError {
    pub column: usize,
    pub visible: Option<usize>,
}

/// The adversary's read-only window into one moment of the transmission.
pub struct AdversaryView<'a> {
    topology: &'a Topology,
    code: &'a NetworkCode,
    transcript: &'a SliceTranscript,
    x: &'a FieldMatrix,
    slice: usize,
    ctx: &'a AdversaryContext,
    violation: Cell<Option<usize>>,
}

impl<'a> AdversaryView<'a> {
    pub(crate) fn new(
        topology: &'a Topology,
        code: &'a NetworkCode,
        transcript: &'a SliceTranscript,
        x: &'a FieldMatrix,
        slice: usize,
        ctx: &'a AdversaryContext,
    ) -> Self {
        Self { topology, code, transcript, x, slice, ctx, violation: Cell::new(None) }
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    pub fn code(&self) -> &NetworkCode {
        self.code
    }

    pub fn field(&self) -> Field {
        self.x.field()
    }

    pub fn slice(&self) -> usize {
        self.slice
    }

    pub fn knowledge(&self) -> KnowledgeModel {
        self.ctx.knowledge
    }

    /// Width of `X`.
    pub fn block_length(&self) -> usize {
        self.x.cols()
    }

    pub fn packets(&self) -> usize {
        self.x.rows()
    }

    /// Last column of `X` the adversary may read right now.
    pub fn visible_through(&self) -> Option<usize> {
        let last = self.x.cols().checked_sub(1)?;
        Some(match self.ctx.knowledge {
            KnowledgeModel::Causal(delta) => (self.slice + delta).min(last),
            _ => last,
        })
    }

    /// Column `j` of Alice's matrix, if the knowledge model allows it.
    pub fn column(&self, j: usize) -> Result<Vec<u32>, ViewError> {
        let visible = self.visible_through();
        if visible.is_some_and(|v| j <= v) {
            return Ok(self.x.column(j));
        }
        if self.violation.get().is_none() {
            self.violation.set(Some(j));
        }
        Err(ViewError { column: j, visible })
    }

    /// Symbol the network code produced on `edge` for an earlier slice.
    pub fn honest_symbol(&self, edge: EdgeId, slice: usize) -> Option<u32> {
        (slice < self.slice).then(|| self.transcript.honest[edge][slice])
    }

    /// Symbol actually carried on `edge` for an earlier slice.
    pub fn carried_symbol(&self, edge: EdgeId, slice: usize) -> Option<u32> {
        (slice < self.slice).then(|| self.transcript.carried[edge][slice])
    }

    pub fn message(&self) -> Option<&FieldMatrix> {
        self.ctx.message.as_ref()
    }

    /// Shared secrets; `None` unless the model is omniscient.
    pub fn secret(&self) -> Option<&SecretMaterial> {
        self.ctx.secret.as_ref()
    }

    pub fn hints(&self) -> &SchemeHints {
        &self.ctx.hints
    }

    pub(crate) fn violation(&self) -> Option<usize> {
        self.violation.get()
    }
}

/// An injection policy. `None` leaves the coded symbol untouched.
pub trait Strategy: Send {
    fn name(&self) -> &'static str;
    fn inject(&mut self, view: &AdversaryView<'_>, slice: usize, edge: EdgeId, coded: u32) -> Option<u32>;
}

pub struct Adversary {
    controlled: Vec<EdgeId>,
    z: usize,
    ctx: AdversaryContext,
    strategy: Box<dyn Strategy>,
}

impl fmt::Debug for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Adversary")
            .field("controlled", &self.controlled)
            .field("z", &self.z)
            .field("knowledge", &self.ctx.knowledge)
            .field("strategy", &self.strategy.name())
            .finish()
    }
}

impl Adversary {
    /// `secret` is dropped unless `knowledge` is omniscient.
    pub fn new(
        controlled: Vec<EdgeId>,
        z: usize,
        knowledge: KnowledgeModel,
        strategy: Box<dyn Strategy>,
        message: Option<FieldMatrix>,
        secret: Option<SecretMaterial>,
        hints: SchemeHints,
    ) -> Self {
        let secret = match knowledge {
            KnowledgeModel::Omniscient => secret,
            _ => None,
        };
        Self { controlled, z, ctx: AdversaryContext { knowledge, message, secret, hints }, strategy }
    }

    pub fn controlled(&self) -> &[EdgeId] {
        &self.controlled
    }

    pub fn controls(&self, edge: EdgeId) -> bool {
        self.controlled.contains(&edge)
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn knowledge(&self) -> KnowledgeModel {
        self.ctx.knowledge
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    pub(crate) fn split(&mut self) -> (&AdversaryContext, &mut dyn Strategy) {
        (&self.ctx, self.strategy.as_mut())
    }

    #[cfg(test)]
    pub(crate) fn has_secret(&self) -> bool {
        self.ctx.secret.is_some()
    }
}

/// Picks `z` edges on source-side minimum cuts, favouring edges shared by the most sinks.
pub fn place_edges(topology: &Topology, z: usize) -> Vec<EdgeId> {
    let mut score = vec![0usize; topology.edge_count()];
    for &sink in topology.sinks() {
        for e in topology.max_flow(sink).1 {
            score[e] += 1;
        }
    }
    let mut ranked: Vec<EdgeId> = (0..topology.edge_count()).collect();
    ranked.sort_by_key(|&e| (std::cmp::Reverse(score[e]), e));
    ranked.truncate(z);
    ranked
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Null,
    Random,
    Additive,
    Replay,
    Forger,
}

impl StrategyKind {
    pub const ALL: [Self; 5] = [Self::Null, Self::Random, Self::Additive, Self::Replay, Self::Forger];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Null => "null",
            Self::Random => "random",
            Self::Additive => "additive",
            Self::Replay => "replay",
            Self::Forger => "forger",
        }
    }

    /// Builds the strategy, seeded from the trial seed.
    pub fn build(self, seed: u64, field: Field) -> Box<dyn Strategy> {
        let rng = component_rng(seed, Component::Adversary);
        match self {
            Self::Null => Box::new(NullStrategy),
            Self::Random => Box::new(RandomStrategy { rng, field }),
            Self::Additive => Box::new(AdditiveStrategy { rng, field }),
            Self::Replay => Box::new(ReplayStrategy),
            Self::Forger => Box::new(HashForger::new(rng, field)),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub struct NullStrategy;

impl Strategy for NullStrategy {
    fn name(&self) -> &'static str {
        "null"
    }

    fn inject(&mut self, _: &AdversaryView<'_>, _: usize, _: EdgeId, _: u32) -> Option<u32> {
        None
    }
}

/// Replaces every symbol with a uniform one.
pub struct RandomStrategy {
    rng: ChaCha8Rng,
    field: Field,
}

impl Strategy for RandomStrategy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn inject(&mut self, _: &AdversaryView<'_>, _: usize, _: EdgeId, _: u32) -> Option<u32> {
        Some(self.rng.gen_range(0..self.field.q()))
    }
}

/// Adds a uniform nonzero offset to the coded symbol.
pub struct AdditiveStrategy {
    rng: ChaCha8Rng,
    field: Field,
}

impl Strategy for AdditiveStrategy {
    fn name(&self) -> &'static str {
        "additive"
    }

    fn inject(&mut self, _: &AdversaryView<'_>, _: usize, _: EdgeId, coded: u32) -> Option<u32> {
        let offset = self.rng.gen_range(1..self.field.q());
        Some(self.field.add(coded, offset))
    }
}

/// Re-sends the edge's honest symbol from the previous slice.
pub struct ReplayStrategy;

impl Strategy for ReplayStrategy {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn inject(&mut self, view: &AdversaryView<'_>, slice: usize, edge: EdgeId, _: u32) -> Option<u32> {
        slice.checked_sub(1).and_then(|prev| view.honest_symbol(edge, prev))
    }
}

/// Adds an error row `e` to the hash-protected block such that `e * P = 0`
/// whenever every parity symbol is a root of `x * g(x)`.
///
/// With the true parity symbols the hash check is blind to the error; without
/// them the forger guesses and the roots miss with high probability.
pub struct HashForger {
    rng: ChaCha8Rng,
    field: Field,
    plan: Option<Option<(ForgeTarget, Vec<u32>)>>,
    used_parity: bool,
}

impl HashForger {
    pub fn new(rng: ChaCha8Rng, field: Field) -> Self {
        Self { rng, field, plan: None, used_parity: false }
    }

    /// Whether the last plan was built from real parity symbols rather than guesses.
    pub fn used_parity(&self) -> bool {
        self.used_parity
    }

    fn make_plan(&mut self, view: &AdversaryView<'_>) -> Option<(ForgeTarget, Vec<u32>)> {
        let target = view.hints().target?;
        let q = self.field.q();
        let free = target.width.checked_sub(target.b + 1)?;
        let roots_wanted = free.min(q as usize - 1);
        let known = view
            .secret()
            .and_then(|s| s.parity.clone())
            .or_else(|| view.hints().leak.as_ref().and_then(|leak| leak(view)));
        self.used_parity = known.is_some();
        let mut roots: Vec<u32> = Vec::with_capacity(roots_wanted);
        for r in known.unwrap_or_default() {
            if r != 0 && !roots.contains(&r) && roots.len() < roots_wanted {
                roots.push(r);
            }
        }
        while roots.len() < roots_wanted {
            let r = self.rng.gen_range(1..q);
            if !roots.contains(&r) {
                roots.push(r);
            }
        }
        // coefficients of x * prod (x - a), lowest degree first
        let mut poly = vec![0u32, 1];
        for &a in &roots {
            let mut next = vec![0u32; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i + 1] = self.field.add(next[i + 1], c);
                next[i] = self.field.sub(next[i], self.field.mul(a, c));
            }
            poly = next;
        }
        // column i of the block pairs with the power x^(i+1)
        let error: Vec<u32> = poly[1..].to_vec();
        debug_assert_eq!(error.len(), roots_wanted + 1);
        Some((target, error))
    }
}

impl Strategy for HashForger {
    fn name(&self) -> &'static str {
        "forger"
    }

    fn inject(&mut self, view: &AdversaryView<'_>, slice: usize, _: EdgeId, coded: u32) -> Option<u32> {
        if self.plan.is_none() {
            self.plan = Some(self.make_plan(view));
        }
        let (target, error) = self.plan.as_ref()?.as_ref()?;
        let i = slice.checked_sub(target.offset)?;
        let offset = *error.get(i)?;
        Some(self.field.add(coded, offset))
    }
}

/// Test strategy: records, per slice, the highest column it managed to read.
/// With `overreach` it also tries one column past its window.
pub struct ProbeStrategy {
    pub log: Arc<Mutex<Vec<(usize, usize)>>>,
    pub overreach: bool,
}

impl Strategy for ProbeStrategy {
    fn name(&self) -> &'static str {
        "probe"
    }

    fn inject(&mut self, view: &AdversaryView<'_>, slice: usize, _: EdgeId, _: u32) -> Option<u32> {
        let last = view.visible_through()?;
        let mut highest = 0;
        for j in 0..=last {
            if view.column(j).is_ok() {
                highest = j;
            }
        }
        if self.overreach && last + 1 < view.block_length() {
            let _ = view.column(last + 1);
        }
        self.log.lock().expect("probe log").push((slice, highest));
        None
    }
}

/// Checks that `controlled` respects `z` and names real edges.
pub fn validate_controlled(topology: &Topology, controlled: &[EdgeId], z: usize) -> Result<(), SimError> {
    if controlled.len() > z {
        return Err(SimError::TooManyEdges { controlled: controlled.len(), z });
    }
    if let Some(&e) = controlled.iter().find(|&&e| e >= topology.edge_count()) {
        return Err(SimError::Config(format!("controlled edge {e} does not exist")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{generate_code, transmit};

    fn field() -> Field {
        Field::new(251).unwrap()
    }

    fn chain() -> Topology {
        Topology::parse("source 0\nsink 3\n0 1\n1 2\n2 3\n").unwrap()
    }

    fn x(cols: usize) -> FieldMatrix {
        FieldMatrix::from_fn(field(), 1, cols, |_, c| c as u64 + 1)
    }

    fn adversary(edges: Vec<EdgeId>, z: usize, k: KnowledgeModel, s: Box<dyn Strategy>) -> Adversary {
        Adversary::new(edges, z, k, s, None, None, SchemeHints::default())
    }

    #[test]
    fn null_strategy_leaves_the_channel_clean() {
        let t = chain();
        let code = generate_code(&t, field(), 1, 1, 4).unwrap();
        let clean = transmit(&t, &code, &x(8), None).unwrap();
        let mut adv = adversary(vec![1], 1, KnowledgeModel::SecretExcluded, Box::new(NullStrategy));
        let out = transmit(&t, &code, &x(8), Some(&mut adv)).unwrap();
        assert_eq!(out.received, clean.received);
    }

    #[test]
    fn replacing_the_only_edge_delivers_the_injected_symbols() {
        let t = Topology::parse("source 0\nsink 1\n0 1\n").unwrap();
        let code = generate_code(&t, field(), 1, 1, 4).unwrap();
        let mut adv = adversary(vec![0], 1, KnowledgeModel::SecretExcluded, StrategyKind::Random.build(3, field()));
        let out = transmit(&t, &code, &x(6), Some(&mut adv)).unwrap();
        let mut rng = component_rng(3, Component::Adversary);
        let expected: Vec<u32> = (0..6).map(|_| rng.gen_range(0..251)).collect();
        assert_eq!(out.received[0].row(0), expected.as_slice());
    }

    #[test]
    fn additive_with_no_edges_is_null() {
        let t = chain();
        let code = generate_code(&t, field(), 1, 1, 4).unwrap();
        let clean = transmit(&t, &code, &x(5), None).unwrap();
        let mut adv = adversary(vec![], 0, KnowledgeModel::SecretExcluded, StrategyKind::Additive.build(1, field()));
        let out = transmit(&t, &code, &x(5), Some(&mut adv)).unwrap();
        assert_eq!(out.received, clean.received);
        assert!(out.transcript.corrupted_edges().is_empty());
    }

    #[test]
    fn replay_resends_previous_honest_symbol() {
        let t = Topology::parse("source 0\nsink 1\n0 1\n").unwrap();
        let code = generate_code(&t, field(), 1, 1, 4).unwrap();
        let mut adv = adversary(vec![0], 1, KnowledgeModel::SecretExcluded, Box::new(ReplayStrategy));
        let out = transmit(&t, &code, &x(5), Some(&mut adv)).unwrap();
        let honest = &out.transcript.honest[0];
        assert_eq!(out.transcript.carried[0][0], honest[0]);
        for t in 1..5 {
            assert_eq!(out.transcript.carried[0][t], honest[t - 1]);
        }
    }

    #[test]
    fn causal_probe_never_sees_past_its_window() {
        let t = chain();
        let code = generate_code(&t, field(), 1, 1, 4).unwrap();
        for delta in 0..4 {
            let log = Arc::new(Mutex::new(Vec::new()));
            let probe = ProbeStrategy { log: log.clone(), overreach: false };
            let mut adv = adversary(vec![0, 2], 2, KnowledgeModel::Causal(delta), Box::new(probe));
            transmit(&t, &code, &x(10), Some(&mut adv)).unwrap();
            let log = log.lock().unwrap();
            assert_eq!(log.len(), 20);
            for &(slice, highest) in log.iter() {
                assert_eq!(highest, (slice + delta).min(9));
            }
        }
    }

    #[test]
    fn reading_beyond_the_window_is_a_framework_fault() {
        let t = chain();
        let code = generate_code(&t, field(), 1, 1, 4).unwrap();
        let probe = ProbeStrategy { log: Arc::default(), overreach: true };
        let mut adv = adversary(vec![1], 1, KnowledgeModel::Causal(2), Box::new(probe));
        let err = transmit(&t, &code, &x(10), Some(&mut adv)).unwrap_err();
        assert_eq!(err, SimError::KnowledgeViolation { slice: 0, column: 3 });
    }

    #[test]
    fn secrets_only_reach_an_omniscient_adversary() {
        let secret = SecretMaterial { parity: Some(vec![1, 2]), ..Default::default() };
        for (k, expected) in [
            (KnowledgeModel::Omniscient, true),
            (KnowledgeModel::SecretExcluded, false),
            (KnowledgeModel::Causal(3), false),
        ] {
            let adv = Adversary::new(
                vec![],
                0,
                k,
                Box::new(NullStrategy),
                None,
                Some(secret.clone()),
                SchemeHints::default(),
            );
            assert_eq!(adv.has_secret(), expected, "{k}");
        }
    }

    #[test]
    fn too_many_edges_is_rejected() {
        let t = chain();
        let code = generate_code(&t, field(), 1, 1, 4).unwrap();
        let mut adv = adversary(vec![0, 1], 1, KnowledgeModel::SecretExcluded, Box::new(NullStrategy));
        assert_eq!(
            transmit(&t, &code, &x(3), Some(&mut adv)).unwrap_err(),
            SimError::TooManyEdges { controlled: 2, z: 1 }
        );
    }

    #[test]
    fn placement_prefers_shared_cut_edges() {
        let bf = Topology::parse(
            "source 0\nsink 5\nsink 6\n0 1\n0 2\n1 3\n2 3\n3 4\n1 5\n4 5\n2 6\n4 6\n",
        )
        .unwrap();
        // the source edges cut both sinks
        assert_eq!(place_edges(&bf, 1), vec![0]);
        assert_eq!(place_edges(&bf, 2), vec![0, 1]);
        assert!(place_edges(&bf, 0).is_empty());
    }

    #[test]
    fn forger_error_vanishes_under_known_parity() {
        let f = field();
        let parity = vec![3u32, 77, 190];
        let target = ForgeTarget { offset: 0, width: 12, b: 2, parity_len: 3 };
        let secret = SecretMaterial { parity: Some(parity.clone()), ..Default::default() };
        let ctx = AdversaryContext {
            knowledge: KnowledgeModel::Omniscient,
            message: None,
            secret: Some(secret),
            hints: SchemeHints { target: Some(target), leak: None },
        };
        let t = chain();
        let code = generate_code(&t, f, 1, 1, 0).unwrap();
        let xm = x(12);
        let transcript = SliceTranscript {
            carried: vec![vec![0; 12]; 3],
            honest: vec![vec![0; 12]; 3],
            corrupted: vec![vec![false; 12]; 3],
        };
        let view = AdversaryView::new(&t, &code, &transcript, &xm, 0, &ctx);
        let mut forger = HashForger::new(component_rng(1, Component::Adversary), f);
        let (_, error) = forger.make_plan(&view).unwrap();
        assert!(forger.used_parity());
        assert_eq!(error.len(), 10);
        let p = crate::linalg::vandermonde(f, &parity, 12).unwrap();
        let mut row = error.clone();
        row.extend([0, 0]);
        let e = FieldMatrix::from_rows(f, &[row]).unwrap();
        assert!(e.mat_mul(&p).unwrap().is_zero());
        assert!(!e.is_zero());
    }
}
