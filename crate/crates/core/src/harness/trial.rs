//! One seeded trial of a configured scheme against one adversary strategy.

use rand::Rng;

use super::config::{HarnessError, Layout, Plan};
use crate::adversary::{Adversary, ForgeTarget, SchemeHints, SecretMaterial, StrategyKind};
use crate::blocks::{sc_compose_secret, sc_decode, sc_encode, SecretPackage};
use crate::cryptokit::{pke_keygen, SEED_LEN};
use crate::gf::Field;
use crate::linalg::FieldMatrix;
use crate::netsim::{generate_code, transmit, NetworkCode, Transmission};
use crate::rng::{component_rng, trial_seed, Component};
use crate::schemes::co::{self, co_decode, co_encode};
use crate::schemes::pk::{self, pk_decode, pk_encode};
use crate::schemes::rs::{
    authenticates, rs_decode_index_free, rs_decode_multi, rs_encode_index_free, rs_encode_multi,
    rs_generate_secret, rs_is_bad, tag_region, Authenticator, IndexFreeSecret, RsSecret,
};
use crate::schemes::session::SessionKeys;
use crate::schemes::{pad_rows, SchemeError, SchemeKind, Stage, StagedFailure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Correct,
    DecodeFailure,
    WrongMessage,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Self::Correct => "correct",
            Self::DecodeFailure => "decode-failure",
            Self::WrongMessage => "wrong-message",
        }
    }
}

/// What one trial produced. The outcome is the worst over all receivers and executions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub index: u64,
    pub outcome: Outcome,
    pub e_bad: bool,
    /// Stage of the first decode failure, if any.
    pub failure_stage: Option<Stage>,
    pub executions: usize,
    pub executions_correct: usize,
    /// Index-free multicast: decodes under some other receiver's `L_j` that gave a wrong message.
    pub forced_wrong_decodes: usize,
    /// ... and of those, how many passed the receiver's own authenticator.
    pub forced_wrong_authenticated: usize,
    pub corrupted_symbols: usize,
}

impl TrialRecord {
    fn new(index: u64) -> Self {
        Self {
            index,
            outcome: Outcome::Correct,
            e_bad: false,
            failure_stage: None,
            executions: 0,
            executions_correct: 0,
            forced_wrong_decodes: 0,
            forced_wrong_authenticated: 0,
            corrupted_symbols: 0,
        }
    }

    fn note(&mut self, decoded: Result<FieldMatrix, StagedFailure>, expected: &FieldMatrix) -> Outcome {
        let outcome = match decoded {
            Ok(m) if &m == expected => Outcome::Correct,
            Ok(_) => Outcome::WrongMessage,
            Err(f) => {
                self.failure_stage.get_or_insert(f.stage);
                Outcome::DecodeFailure
            }
        };
        self.outcome = self.outcome.max(outcome);
        outcome
    }
}

fn random_matrix(field: Field, rows: usize, cols: usize, rng: &mut impl Rng) -> FieldMatrix {
    FieldMatrix::from_fn(field, rows, cols, |_, _| rng.gen_range(0..field.q()) as u64)
}

fn material(secret: &SecretPackage) -> SecretMaterial {
    SecretMaterial { parity: Some(secret.parity.clone()), hash: Some(secret.hash.clone()), secret_key: None }
}

struct Run<'a> {
    plan: &'a Plan,
    strategy: StrategyKind,
    seed: u64,
    code: NetworkCode,
}

impl Run<'_> {
    fn hints(&self, offset: usize, width: usize) -> SchemeHints {
        let target = ForgeTarget { offset, width, b: self.plan.b, parity_len: self.plan.capacity() };
        SchemeHints { target: Some(target), leak: None }
    }

    fn send(
        &self,
        x: &FieldMatrix,
        adversary_seed: u64,
        message: &FieldMatrix,
        secret: SecretMaterial,
        hints: SchemeHints,
        record: &mut TrialRecord,
    ) -> Result<Transmission, HarnessError> {
        let plan = self.plan;
        let mut adversary = Adversary::new(
            plan.controlled.clone(),
            plan.config.z,
            plan.knowledge,
            self.strategy.build(adversary_seed, plan.field),
            plan.config.expose_message.then(|| message.clone()),
            Some(secret),
            hints,
        );
        let out = transmit(&plan.topology, &self.code, x, Some(&mut adversary))?;
        record.corrupted_symbols += out.transcript.corrupted.iter().flatten().filter(|&&c| c).count();
        Ok(out)
    }
}

/// Runs trial `index` of `plan` against `strategy`. Every stochastic input derives from
/// `base_seed ^ index`.
pub fn run_trial(plan: &Plan, strategy: StrategyKind, index: u64) -> Result<TrialRecord, HarnessError> {
    let seed = trial_seed(plan.config.seed, index);
    let code = generate_code(&plan.topology, plan.field, plan.b, plan.capacity(), seed)?;
    let run = Run { plan, strategy, seed, code };
    let mut record = TrialRecord::new(index);
    match &plan.layout {
        Layout::Omn(omn) => {
            let mut rng = component_rng(seed, Component::Message);
            let payload: Vec<u32> = (0..omn.capacity()).map(|_| rng.gen_range(0..plan.field.q())).collect();
            let x = pad_rows(omn.encode(&payload).map_err(SchemeError::from)?, plan.b);
            let message = FieldMatrix::from_vec(plan.field, 1, payload.len(), payload.clone())
                .map_err(SchemeError::from)?;
            let out = run.send(&x, seed, &message, SecretMaterial::default(), SchemeHints::default(), &mut record)?;
            for y in &out.received {
                let decoded = omn
                    .decode(y)
                    .map(|p| FieldMatrix::from_vec(plan.field, 1, p.len(), p).expect("sized"))
                    .map_err(StagedFailure::at(Stage::Omn));
                record.note(decoded, &message);
            }
        }
        Layout::Sc { message_cols } => {
            let m = random_matrix(plan.field, plan.b, *message_cols, &mut component_rng(seed, Component::Message));
            let x = sc_encode(&m);
            let secret = sc_compose_secret(&x, plan.capacity(), &mut component_rng(seed, Component::Secret))
                .map_err(SchemeError::from)?;
            record.e_bad = rs_is_bad(&secret.parity);
            let out = run.send(&x, seed, &m, material(&secret), run.hints(0, x.cols()), &mut record)?;
            for y in &out.received {
                let decoded = sc_decode(y, &secret, plan.b, plan.config.z).map_err(StagedFailure::at(Stage::Sc));
                record.note(decoded, &m);
            }
        }
        Layout::Rs { message_cols, .. } if plan.config.scheme == SchemeKind::Session => {
            run_session(&run, *message_cols, &mut record)?;
        }
        Layout::Rs { message_cols, .. } => run_rs(&run, *message_cols, &mut record)?,
        Layout::Co(layout) => {
            let m =
                random_matrix(plan.field, plan.b, layout.message_cols(), &mut component_rng(seed, Component::Message));
            let (x, secret) = co_encode(&m, layout, &mut component_rng(seed, Component::Secret))?;
            record.e_bad = rs_is_bad(&secret.parity);
            let mut hints = run.hints(0, layout.n_m);
            hints.leak = Some(co::parity_leak(layout.clone()));
            let out = run.send(&x, seed, &m, material(&secret), hints, &mut record)?;
            for y in &out.received {
                record.note(co_decode(y, layout), &m);
            }
        }
        Layout::Pk(layout) => {
            let mut key_rng = component_rng(seed, Component::Keys);
            let keys = (0..plan.receivers)
                .map(|_| pke_keygen(plan.config.pke_k, &mut key_rng))
                .collect::<Result<Vec<_>, _>>()?;
            let pks: Vec<_> = keys.iter().map(|(_, pk)| pk.clone()).collect();
            let m =
                random_matrix(plan.field, plan.b, layout.message_cols(), &mut component_rng(seed, Component::Message));
            let (x, secret) = pk_encode(&m, &pks, layout, &mut component_rng(seed, Component::Encryption))?;
            record.e_bad = rs_is_bad(&secret.parity);
            let mut hints = run.hints(0, layout.n_m);
            hints.leak = Some(pk::parity_leak(layout.clone()));
            let mut secret_material = material(&secret);
            secret_material.secret_key = Some(keys[0].0.clone());
            let out = run.send(&x, seed, &m, secret_material, hints, &mut record)?;
            for (y, (sk, _)) in out.received.iter().zip(&keys) {
                record.note(pk_decode(y, sk, layout), &m);
            }
        }
    }
    Ok(record)
}

fn run_rs(run: &Run<'_>, message_cols: usize, record: &mut TrialRecord) -> Result<(), HarnessError> {
    let plan = run.plan;
    let (c, b, z, k) = (plan.capacity(), plan.b, plan.config.z, plan.receivers);
    let m = random_matrix(plan.field, b, message_cols, &mut component_rng(run.seed, Component::Message));
    let mut secret_rng = component_rng(run.seed, Component::Secret);
    let secrets: Vec<RsSecret> = (0..k).map(|_| rs_generate_secret(plan.field, c, b, &mut secret_rng)).collect();
    record.e_bad = secrets.iter().any(|s| rs_is_bad(&s.parity));
    let hints = run.hints(k * c, plan.config.n - k * c);
    if !plan.config.index_free {
        let x = rs_encode_multi(&m, &secrets)?;
        let out = run.send(&x, run.seed, &m, material(&secrets[0]), hints, record)?;
        for (i, y) in out.received.iter().enumerate() {
            let decoded = rs_decode_multi(y, &secrets[i], i, k, b, z).map_err(StagedFailure::at(Stage::Sc));
            record.note(decoded, &m);
        }
        return Ok(());
    }
    let keyed: Vec<IndexFreeSecret> = secrets
        .into_iter()
        .map(|secret| IndexFreeSecret { secret, auth: Authenticator::generate(plan.field, &mut secret_rng) })
        .collect();
    let x = rs_encode_index_free(&m, &keyed)?;
    let out = run.send(&x, run.seed, &m, material(&keyed[0].secret), hints, record)?;
    for (i, y) in out.received.iter().enumerate() {
        let own = &keyed[i];
        let decoded = rs_decode_index_free(y, own, k, message_cols, b, z).map(|d| d.message);
        record.note(decoded, &m);
        // force every wrong-index decode and check it never authenticates
        for j in (0..k).filter(|&j| j != i) {
            if let Ok(aug) = rs_decode_multi(y, &own.secret, j, k, b, z) {
                let candidate = aug.columns(0..message_cols);
                if candidate != m {
                    record.forced_wrong_decodes += 1;
                    if authenticates(&own.auth, &candidate, &tag_region(&aug, message_cols), k) {
                        record.forced_wrong_authenticated += 1;
                    }
                }
            }
        }
    }
    Ok(())
}

fn run_session(run: &Run<'_>, message_cols: usize, record: &mut TrialRecord) -> Result<(), HarnessError> {
    let plan = run.plan;
    let (c, b, z, k) = (plan.capacity(), plan.b, plan.config.z, plan.receivers);
    let mut key_rng = component_rng(run.seed, Component::SessionKey);
    let mut keys: Vec<SessionKeys> = (0..k)
        .map(|_| SessionKeys::new(key_rng.gen::<[u8; SEED_LEN]>(), plan.field, c, b))
        .collect();
    let mut msg_rng = component_rng(run.seed, Component::Message);
    for exec in 0..plan.config.sessions {
        let m = random_matrix(plan.field, b, message_cols, &mut msg_rng);
        let secrets: Vec<RsSecret> = keys.iter_mut().map(|s| s.next_secret().0).collect();
        record.e_bad |= secrets.iter().any(|s| rs_is_bad(&s.parity));
        let x = rs_encode_multi(&m, &secrets)?;
        let adversary_seed = run.seed ^ ((exec as u64) << 40);
        let hints = run.hints(k * c, plan.config.n - k * c);
        let out = run.send(&x, adversary_seed, &m, material(&secrets[0]), hints, record)?;
        let mut worst = Outcome::Correct;
        for (i, y) in out.received.iter().enumerate() {
            let decoded = rs_decode_multi(y, &secrets[i], i, k, b, z).map_err(StagedFailure::at(Stage::Sc));
            worst = worst.max(record.note(decoded, &m));
        }
        record.executions += 1;
        record.executions_correct += usize::from(worst == Outcome::Correct);
    }
    Ok(())
}
