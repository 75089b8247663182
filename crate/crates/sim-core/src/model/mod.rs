//! Core objects of the synchronous round model: messages, per-round process
//! fragments, per-process behaviors, and whole executions, together with the
//! view projection used for indistinguishability arguments.
//!
//! A fragment records one process's round: its state at the start of the
//! round and four message sets (sent, send-omitted, received,
//! receive-omitted). A behavior is the per-round fragment sequence of one
//! process, and an execution bundles the behaviors of all `n` processes with
//! the set of corrupted processes. Validation of these objects lives in
//! [`validate`].

pub mod validate;

mod view;

pub use view::{indistinguishable, indistinguishable_up_to, View, ViewError, ViewRound};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One-based process identifier; processes are `p1 .. pn`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Debug for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// One-based round number.
pub type Round = u32;

/// Binary proposal/decision value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn flip(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Bit> {
        match v {
            0 => Some(Bit::Zero),
            1 => Some(Bit::One),
            _ => None,
        }
    }
}

impl fmt::Debug for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl Serialize for Bit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Bit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Bit::from_u8(v).ok_or_else(|| serde::de::Error::custom(format!("bit out of range: {v}")))
    }
}

/// Immutable byte string shared between the copies of a message that appear
/// in sender and receiver fragments. Ordered and compared by content.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bytes(Arc<[u8]>);

impl Bytes {
    pub fn new(data: impl Into<Vec<u8>>) -> Bytes {
        Bytes(Arc::from(data.into().into_boxed_slice()))
    }

    pub fn empty() -> Bytes {
        Bytes(Arc::from(Vec::new().into_boxed_slice()))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Bytes, hex::FromHexError> {
        Ok(Bytes::new(hex::decode(s)?))
    }
}

impl AsRef<[u8]> for Bytes {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl std::ops::Deref for Bytes {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Bytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() <= 16 {
            write!(f, "0x{}", hex::encode(&self.0))
        } else {
            write!(f, "0x{}..({}B)", hex::encode(&self.0[..16]), self.0.len())
        }
    }
}

impl Serialize for Bytes {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Bytes {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bytes::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Identity of a message for the structural set conditions: sender, receiver
/// and round. Payloads are compared separately where content matters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MessageKey {
    pub sender: ProcessId,
    pub receiver: ProcessId,
    pub round: Round,
}

/// A message of a specific round, carrying an opaque payload.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub sender: ProcessId,
    pub receiver: ProcessId,
    pub round: Round,
    pub payload: Bytes,
}

impl Message {
    pub fn key(&self) -> MessageKey {
        MessageKey {
            sender: self.sender,
            receiver: self.receiver,
            round: self.round,
        }
    }
}

impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}->{}@{} {:?}",
            self.sender, self.receiver, self.round, self.payload
        )
    }
}

/// Per-process state at the start of a round.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProcState {
    pub process: ProcessId,
    pub round: Round,
    pub proposal: Bit,
    /// `None` renders the undecided state.
    pub decision: Option<Bit>,
    /// Algorithm-specific serialized state.
    pub internal: Bytes,
}

/// One process round: the state entering the round and the four message sets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fragment {
    pub state: ProcState,
    pub sent: BTreeSet<Message>,
    pub send_omitted: BTreeSet<Message>,
    pub received: BTreeSet<Message>,
    pub receive_omitted: BTreeSet<Message>,
}

impl Fragment {
    /// Messages the process attempted to send this round, whether or not the
    /// send was omitted.
    pub fn outgoing(&self) -> BTreeSet<Message> {
        self.sent.union(&self.send_omitted).cloned().collect()
    }

    /// Messages addressed to the process this round, whether received or
    /// receive-omitted.
    pub fn incoming(&self) -> BTreeSet<Message> {
        self.received.union(&self.receive_omitted).cloned().collect()
    }
}

/// Error raised by accessors addressed outside `[1, horizon]` or at an
/// unknown process.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccessError {
    #[error("round {round} outside [1, {horizon}]")]
    RoundOutOfRange { round: Round, horizon: Round },
    #[error("unknown process {process}")]
    UnknownProcess { process: ProcessId },
}

/// The full per-round record of one process across an execution.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Behavior {
    fragments: Vec<Fragment>,
}

impl Behavior {
    pub fn new(fragments: Vec<Fragment>) -> Behavior {
        Behavior { fragments }
    }

    /// Number of recorded rounds.
    pub fn rounds(&self) -> Round {
        self.fragments.len() as Round
    }

    pub fn fragment(&self, round: Round) -> Result<&Fragment, AccessError> {
        if round == 0 || round > self.rounds() {
            return Err(AccessError::RoundOutOfRange {
                round,
                horizon: self.rounds(),
            });
        }
        Ok(&self.fragments[(round - 1) as usize])
    }

    pub fn fragments(&self) -> &[Fragment] {
        &self.fragments
    }

    pub fn state(&self, round: Round) -> Result<&ProcState, AccessError> {
        Ok(&self.fragment(round)?.state)
    }

    pub fn sent(&self, round: Round) -> Result<&BTreeSet<Message>, AccessError> {
        Ok(&self.fragment(round)?.sent)
    }

    pub fn send_omitted(&self, round: Round) -> Result<&BTreeSet<Message>, AccessError> {
        Ok(&self.fragment(round)?.send_omitted)
    }

    pub fn received(&self, round: Round) -> Result<&BTreeSet<Message>, AccessError> {
        Ok(&self.fragment(round)?.received)
    }

    pub fn receive_omitted(&self, round: Round) -> Result<&BTreeSet<Message>, AccessError> {
        Ok(&self.fragment(round)?.receive_omitted)
    }

    pub fn all_sent(&self) -> BTreeSet<Message> {
        self.fragments.iter().flat_map(|f| f.sent.iter().cloned()).collect()
    }

    pub fn all_send_omitted(&self) -> BTreeSet<Message> {
        self.fragments
            .iter()
            .flat_map(|f| f.send_omitted.iter().cloned())
            .collect()
    }

    pub fn all_receive_omitted(&self) -> BTreeSet<Message> {
        self.fragments
            .iter()
            .flat_map(|f| f.receive_omitted.iter().cloned())
            .collect()
    }

    /// The proposal carried by every state of the behavior.
    pub fn proposal(&self) -> Option<Bit> {
        self.fragments.first().map(|f| f.state.proposal)
    }

    /// Decision visible in the last recorded state.
    pub fn decision(&self) -> Option<Bit> {
        self.fragments.last().and_then(|f| f.state.decision)
    }

    /// First round whose entering state already carries a decision.
    pub fn first_decided_round(&self) -> Option<Round> {
        self.fragments
            .iter()
            .position(|f| f.state.decision.is_some())
            .map(|i| (i + 1) as Round)
    }
}

/// Error raised when assembling an execution from inconsistent parts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecutionShapeError {
    #[error("n must be at least 2, got {n}")]
    TooFewProcesses { n: u32 },
    #[error("behavior map must cover exactly p1..p{n}, problem at {process}")]
    BehaviorCoverage { n: u32, process: ProcessId },
    #[error("behavior of {process} records {got} rounds, horizon is {horizon}")]
    HorizonMismatch {
        process: ProcessId,
        got: Round,
        horizon: Round,
    },
    #[error("faulty process {process} outside p1..p{n}")]
    FaultyOutOfRange { process: ProcessId, n: u32 },
}

/// A complete execution: the corrupted set and one behavior per process.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Execution {
    n: u32,
    t: u32,
    faulty: BTreeSet<ProcessId>,
    behaviors: BTreeMap<ProcessId, Behavior>,
    horizon: Round,
}

impl Execution {
    pub fn new(
        n: u32,
        t: u32,
        faulty: BTreeSet<ProcessId>,
        behaviors: BTreeMap<ProcessId, Behavior>,
        horizon: Round,
    ) -> Result<Execution, ExecutionShapeError> {
        if n < 2 {
            return Err(ExecutionShapeError::TooFewProcesses { n });
        }
        for p in &faulty {
            if p.0 == 0 || p.0 > n {
                return Err(ExecutionShapeError::FaultyOutOfRange { process: *p, n });
            }
        }
        for idx in 1..=n {
            let p = ProcessId(idx);
            match behaviors.get(&p) {
                None => return Err(ExecutionShapeError::BehaviorCoverage { n, process: p }),
                Some(b) if b.rounds() != horizon => {
                    return Err(ExecutionShapeError::HorizonMismatch {
                        process: p,
                        got: b.rounds(),
                        horizon,
                    })
                }
                Some(_) => {}
            }
        }
        if behaviors.len() as u32 != n {
            let stray = behaviors
                .keys()
                .find(|p| p.0 == 0 || p.0 > n)
                .copied()
                .unwrap_or(ProcessId(0));
            return Err(ExecutionShapeError::BehaviorCoverage { n, process: stray });
        }
        Ok(Execution {
            n,
            t,
            faulty,
            behaviors,
            horizon,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn horizon(&self) -> Round {
        self.horizon
    }

    pub fn faulty(&self) -> &BTreeSet<ProcessId> {
        &self.faulty
    }

    pub fn is_correct(&self, p: ProcessId) -> bool {
        !self.faulty.contains(&p)
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> + '_ {
        (1..=self.n).map(ProcessId)
    }

    pub fn correct_processes(&self) -> impl Iterator<Item = ProcessId> + '_ {
        self.processes().filter(move |p| self.is_correct(*p))
    }

    pub fn behavior(&self, p: ProcessId) -> Result<&Behavior, AccessError> {
        self.behaviors
            .get(&p)
            .ok_or(AccessError::UnknownProcess { process: p })
    }

    pub fn behaviors(&self) -> &BTreeMap<ProcessId, Behavior> {
        &self.behaviors
    }

    /// Rebuilds the execution with replacement parts; shape is re-checked.
    pub fn rebuild(
        &self,
        faulty: BTreeSet<ProcessId>,
        behaviors: BTreeMap<ProcessId, Behavior>,
    ) -> Result<Execution, ExecutionShapeError> {
        Execution::new(self.n, self.t, faulty, behaviors, self.horizon)
    }

    /// Union of all successful sends across all behaviors.
    pub fn all_sent(&self) -> BTreeSet<Message> {
        self.behaviors.values().flat_map(|b| b.all_sent()).collect()
    }
}
