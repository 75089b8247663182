//! Value-level synchronous runner with Byzantine corruption.
//!
//! The binary engine in the parent module records formally checkable
//! executions under omission schedules. This runner trades that record for
//! generality: machines exchange arbitrary payloads, decide arbitrary
//! values, and corrupted processes run attacker-supplied behaviors instead
//! of the machine. Signatures are idealized through a shared oracle that
//! remembers every (signer, digest) pair ever produced, so verification
//! reduces to membership and forgery is impossible by construction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::AlgoError;
use crate::model::{Bytes, Message, ProcessId, Round};
use crate::validity::Value;

/// Unforgeable signature: the signer together with the digest it signed.
/// Valid exactly when the oracle issued it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignatureToken {
    pub signer: ProcessId,
    pub digest: Bytes,
}

/// Shared signing oracle. Signing registers the pair; verification checks
/// registration.
#[derive(Debug, Default)]
pub struct SignatureOracle {
    issued: Mutex<BTreeSet<(ProcessId, Bytes)>>,
}

impl SignatureOracle {
    pub fn new() -> SignatureOracle {
        SignatureOracle::default()
    }

    fn sign(&self, signer: ProcessId, digest: Bytes) -> SignatureToken {
        self.issued
            .lock()
            .expect("oracle lock")
            .insert((signer, digest.clone()));
        SignatureToken { signer, digest }
    }

    fn verify(&self, token: &SignatureToken) -> bool {
        self.issued
            .lock()
            .expect("oracle lock")
            .contains(&(token.signer, token.digest.clone()))
    }

    fn snapshot(&self) -> BTreeSet<(ProcessId, Bytes)> {
        self.issued.lock().expect("oracle lock").clone()
    }
}

/// Per-process view of the oracle: signs only as the owning process,
/// verifies anything.
pub struct ValueCtx<'a> {
    pub n: u32,
    pub t: u32,
    pub me: ProcessId,
    oracle: &'a SignatureOracle,
}

impl<'a> ValueCtx<'a> {
    pub(crate) fn attach(
        n: u32,
        t: u32,
        me: ProcessId,
        oracle: &'a SignatureOracle,
    ) -> ValueCtx<'a> {
        ValueCtx { n, t, me, oracle }
    }

    pub fn sign(&self, digest: Bytes) -> SignatureToken {
        self.oracle.sign(self.me, digest)
    }

    pub fn verify(&self, token: &SignatureToken) -> bool {
        self.oracle.verify(token)
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.n).map(ProcessId)
    }

    pub fn others(&self) -> impl Iterator<Item = ProcessId> + '_ {
        let me = self.me;
        self.processes().filter(move |p| *p != me)
    }
}

/// Corrupted-process view: the whole coalition's keys are compromised, so
/// signing works as any corrupted process, but honest keys stay out of
/// reach.
pub struct AttackCtx<'a> {
    inner: &'a ValueCtx<'a>,
    corrupted: &'a BTreeSet<ProcessId>,
}

impl AttackCtx<'_> {
    pub fn n(&self) -> u32 {
        self.inner.n
    }

    pub fn t(&self) -> u32 {
        self.inner.t
    }

    pub fn me(&self) -> ProcessId {
        self.inner.me
    }

    pub fn corrupted(&self) -> &BTreeSet<ProcessId> {
        self.corrupted
    }

    /// `None` when `signer` is honest; forging honest signatures is
    /// impossible by construction.
    pub fn sign_as(&self, signer: ProcessId, digest: Bytes) -> Option<SignatureToken> {
        self.corrupted
            .contains(&signer)
            .then(|| self.inner.oracle.sign(signer, digest))
    }

    pub fn verify(&self, token: &SignatureToken) -> bool {
        self.inner.verify(token)
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.inner.n).map(ProcessId)
    }
}

/// What a machine produces in one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VmOutput {
    pub state: Bytes,
    pub decision: Option<Value>,
    pub sends: Vec<(ProcessId, Bytes)>,
}

impl VmOutput {
    pub fn new(state: Bytes) -> VmOutput {
        VmOutput {
            state,
            decision: None,
            sends: Vec::new(),
        }
    }

    pub fn decide(mut self, v: Value) -> VmOutput {
        self.decision = Some(v);
        self
    }

    pub fn send(mut self, to: ProcessId, payload: Bytes) -> VmOutput {
        self.sends.push((to, payload));
        self
    }
}

/// A deterministic machine over arbitrary values. State is serialized bytes
/// so runs can be logged and replayed without trait objects in the record.
pub trait ValueMachine: Send + Sync {
    fn id(&self) -> String;

    /// Initial state and round-1 sends from the proposal alone.
    fn init(&self, ctx: &ValueCtx<'_>, proposal: &Value) -> Result<VmOutput, AlgoError>;

    /// One transition: state after round `round` given everything delivered
    /// in that round, plus the sends for the next round.
    fn step(
        &self,
        ctx: &ValueCtx<'_>,
        round: Round,
        state: &[u8],
        inbox: &BTreeSet<Message>,
    ) -> Result<VmOutput, AlgoError>;
}

/// Attacker program for one corrupted process. Invoked once per round to
/// emit that round's messages; state threads through serialized bytes.
///
/// `state` is `None` in round 1. `inbox` holds everything delivered to the
/// process in earlier rounds. Under rushing, `preview` additionally exposes
/// the current round's honest messages addressed to this process before the
/// behavior commits its own sends.
pub trait ByzantineBehavior: Send + Sync {
    fn id(&self) -> String;

    fn act(
        &self,
        ctx: &AttackCtx<'_>,
        round: Round,
        state: Option<&[u8]>,
        proposal: &Value,
        inbox: &BTreeSet<Message>,
        preview: Option<&BTreeSet<Message>>,
    ) -> Result<(Bytes, Vec<(ProcessId, Bytes)>), AlgoError>;
}

#[derive(Debug, Error)]
pub enum ValueEngineError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("expected {expected} proposals, got {got}")]
    ProposalCount { expected: u32, got: usize },
    #[error("corrupted process {process} outside p1..p{n}")]
    CorruptOutOfRange { process: ProcessId, n: u32 },
    #[error("{got} corrupted processes exceed t = {t}")]
    TooManyCorrupted { got: usize, t: u32 },
    #[error("{process} at round {round}: {source}")]
    Machine {
        process: ProcessId,
        round: Round,
        source: AlgoError,
    },
    #[error("{process} sent to itself at round {round}")]
    SelfSend { process: ProcessId, round: Round },
    #[error("{process} sent twice to {receiver} at round {round}")]
    DuplicateSend {
        process: ProcessId,
        receiver: ProcessId,
        round: Round,
    },
    #[error("{process} sent outside p1..p{n} at round {round}")]
    UnknownReceiver {
        process: ProcessId,
        n: u32,
        round: Round,
    },
    #[error("{process} changed its decision at round {round}")]
    DecisionChanged { process: ProcessId, round: Round },
}

/// Parameters of a value-level run.
#[derive(Clone, Debug)]
pub struct ValueRunConfig {
    pub n: u32,
    pub t: u32,
    pub horizon: Round,
    /// Corrupted processes observe the current round's honest messages
    /// addressed to them before choosing their own sends.
    pub rushing: bool,
}

/// Record of a value-level run.
#[derive(Clone, Debug)]
pub struct ValueRun {
    pub n: u32,
    pub t: u32,
    pub horizon: Round,
    pub proposals: Vec<Value>,
    pub corrupted: BTreeMap<ProcessId, String>,
    /// Honest decisions with the round each was first produced.
    pub decisions: BTreeMap<ProcessId, (Value, Round)>,
    /// Every message actually sent, in delivery order.
    pub messages: Vec<Message>,
    /// Final per-process machine states (honest processes only).
    pub states: BTreeMap<ProcessId, Bytes>,
    /// Everything the oracle signed during the run.
    pub issued_signatures: BTreeSet<(ProcessId, Bytes)>,
}

impl ValueRun {
    pub fn honest(&self) -> impl Iterator<Item = ProcessId> + '_ {
        (1..=self.n)
            .map(ProcessId)
            .filter(move |p| !self.corrupted.contains_key(p))
    }

    pub fn decision(&self, p: ProcessId) -> Option<&Value> {
        self.decisions.get(&p).map(|(v, _)| v)
    }

    /// Messages sent by honest processes.
    pub fn honest_message_count(&self) -> u64 {
        self.messages
            .iter()
            .filter(|m| !self.corrupted.contains_key(&m.sender))
            .count() as u64
    }

    /// Proposals of the honest processes as an input configuration map.
    pub fn honest_inputs(&self) -> BTreeMap<ProcessId, Value> {
        self.honest()
            .map(|p| (p, self.proposals[(p.0 - 1) as usize].clone()))
            .collect()
    }
}

/// Run a machine under Byzantine corruption for a fixed horizon.
///
/// Honest sends are validated strictly; behavior sends are clamped
/// deterministically instead (self-sends and out-of-range receivers are
/// dropped, later duplicates to the same receiver are dropped).
pub fn run_values(
    machine: &dyn ValueMachine,
    proposals: &[Value],
    corrupt: &BTreeMap<ProcessId, Arc<dyn ByzantineBehavior>>,
    cfg: &ValueRunConfig,
) -> Result<ValueRun, ValueEngineError> {
    if cfg.horizon == 0 {
        return Err(ValueEngineError::ZeroHorizon);
    }
    if proposals.len() as u32 != cfg.n {
        return Err(ValueEngineError::ProposalCount {
            expected: cfg.n,
            got: proposals.len(),
        });
    }
    for p in corrupt.keys() {
        if p.0 == 0 || p.0 > cfg.n {
            return Err(ValueEngineError::CorruptOutOfRange {
                process: *p,
                n: cfg.n,
            });
        }
    }
    if corrupt.len() as u32 > cfg.t {
        return Err(ValueEngineError::TooManyCorrupted {
            got: corrupt.len(),
            t: cfg.t,
        });
    }

    let oracle = SignatureOracle::new();
    let corrupted_ids: BTreeSet<ProcessId> = corrupt.keys().copied().collect();
    let ctx_for = |me: ProcessId| ValueCtx {
        n: cfg.n,
        t: cfg.t,
        me,
        oracle: &oracle,
    };

    let mut states: BTreeMap<ProcessId, Bytes> = BTreeMap::new();
    let mut byz_states: BTreeMap<ProcessId, Bytes> = BTreeMap::new();
    let mut byz_inbox: BTreeMap<ProcessId, BTreeSet<Message>> = BTreeMap::new();
    let mut pending: BTreeMap<ProcessId, Vec<(ProcessId, Bytes)>> = BTreeMap::new();
    let mut decisions: BTreeMap<ProcessId, (Value, Round)> = BTreeMap::new();
    let mut log: Vec<Message> = Vec::new();

    // Round-1 sends of honest processes come from the proposal alone.
    for i in 1..=cfg.n {
        let p = ProcessId(i);
        if corrupt.contains_key(&p) {
            byz_inbox.insert(p, BTreeSet::new());
            continue;
        }
        let ctx = ctx_for(p);
        let out = machine
            .init(&ctx, &proposals[(i - 1) as usize])
            .map_err(|source| ValueEngineError::Machine {
                process: p,
                round: 1,
                source,
            })?;
        check_honest_sends(p, 1, cfg.n, &out.sends)?;
        if let Some(v) = out.decision {
            decisions.insert(p, (v, 1));
        }
        states.insert(p, out.state);
        pending.insert(p, out.sends);
    }

    for round in 1..=cfg.horizon {
        // Honest messages of this round were fixed at the end of the
        // previous one.
        let mut honest_msgs: Vec<Message> = Vec::new();
        for (sender, sends) in pending.iter() {
            for (to, payload) in sends {
                honest_msgs.push(Message {
                    sender: *sender,
                    receiver: *to,
                    round,
                    payload: payload.clone(),
                });
            }
        }
        pending.clear();

        // Corrupted processes choose theirs now, optionally after peeking
        // at what the honest processes are sending them this round.
        let mut byz_msgs: Vec<Message> = Vec::new();
        for (p, behavior) in corrupt {
            let preview: Option<BTreeSet<Message>> = cfg.rushing.then(|| {
                honest_msgs
                    .iter()
                    .filter(|m| m.receiver == *p)
                    .cloned()
                    .collect()
            });
            let ctx = ctx_for(*p);
            let attack = AttackCtx {
                inner: &ctx,
                corrupted: &corrupted_ids,
            };
            let state = byz_states.get(p).map(|b| b.as_ref().to_vec());
            let inbox = byz_inbox.entry(*p).or_default().clone();
            let (next_state, sends) = behavior
                .act(
                    &attack,
                    round,
                    state.as_deref(),
                    &proposals[(p.0 - 1) as usize],
                    &inbox,
                    preview.as_ref(),
                )
                .map_err(|source| ValueEngineError::Machine {
                    process: *p,
                    round,
                    source,
                })?;
            byz_states.insert(*p, next_state);
            let mut seen: BTreeSet<ProcessId> = BTreeSet::new();
            for (to, payload) in sends {
                if to == *p || to.0 == 0 || to.0 > cfg.n || !seen.insert(to) {
                    continue;
                }
                byz_msgs.push(Message {
                    sender: *p,
                    receiver: to,
                    round,
                    payload,
                });
            }
        }

        let mut delivered: Vec<Message> = honest_msgs;
        delivered.append(&mut byz_msgs);
        delivered.sort();
        log.extend(delivered.iter().cloned());

        let mut inboxes: BTreeMap<ProcessId, BTreeSet<Message>> = BTreeMap::new();
        for m in delivered {
            inboxes.entry(m.receiver).or_default().insert(m);
        }
        for (p, inbox) in &inboxes {
            if corrupt.contains_key(p) {
                byz_inbox.entry(*p).or_default().extend(inbox.iter().cloned());
            }
        }

        // Honest transitions close the round; sends they emit belong to the
        // next round and are dropped at the horizon.
        for i in 1..=cfg.n {
            let p = ProcessId(i);
            if corrupt.contains_key(&p) {
                continue;
            }
            let ctx = ctx_for(p);
            let empty = BTreeSet::new();
            let inbox = inboxes.get(&p).unwrap_or(&empty);
            let state = states.get(&p).expect("honest state present").clone();
            let out = machine
                .step(&ctx, round, state.as_ref(), inbox)
                .map_err(|source| ValueEngineError::Machine {
                    process: p,
                    round,
                    source,
                })?;
            if round < cfg.horizon {
                check_honest_sends(p, round + 1, cfg.n, &out.sends)?;
            }
            if let Some(v) = out.decision {
                match decisions.get(&p) {
                    None => {
                        decisions.insert(p, (v, round));
                    }
                    Some((prev, _)) if *prev == v => {}
                    Some(_) => {
                        return Err(ValueEngineError::DecisionChanged { process: p, round })
                    }
                }
            }
            states.insert(p, out.state);
            if round < cfg.horizon {
                pending.insert(p, out.sends);
            }
        }
    }

    Ok(ValueRun {
        n: cfg.n,
        t: cfg.t,
        horizon: cfg.horizon,
        proposals: proposals.to_vec(),
        corrupted: corrupt
            .iter()
            .map(|(p, b)| (*p, b.id()))
            .collect(),
        decisions,
        messages: log,
        states,
        issued_signatures: oracle.snapshot(),
    })
}

fn check_honest_sends(
    process: ProcessId,
    round: Round,
    n: u32,
    sends: &[(ProcessId, Bytes)],
) -> Result<(), ValueEngineError> {
    let mut seen: BTreeSet<ProcessId> = BTreeSet::new();
    for (to, _) in sends {
        if *to == process {
            return Err(ValueEngineError::SelfSend { process, round });
        }
        if to.0 == 0 || to.0 > n {
            return Err(ValueEngineError::UnknownReceiver { process, n, round });
        }
        if !seen.insert(*to) {
            return Err(ValueEngineError::DuplicateSend {
                process,
                receiver: *to,
                round,
            });
        }
    }
    Ok(())
}
