//! The deterministic state-machine interface run by the round engine.
//!
//! An algorithm is a pure transition function: given the state entering a
//! round and the messages received during it, produce the state entering the
//! next round, an optional decision, and the messages to send in the next
//! round. First-round sends depend only on the process's proposal. All
//! algorithm-specific state is carried as serialized bytes so executions can
//! be recorded, hashed, and replayed.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Bit, Bytes, Message, ProcessId, Round};

/// Static parameters visible to an algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlgoContext {
    pub n: u32,
    pub t: u32,
}

impl AlgoContext {
    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.n).map(ProcessId)
    }

    /// Everyone except `me`, in id order.
    pub fn others(&self, me: ProcessId) -> impl Iterator<Item = ProcessId> {
        self.processes().filter(move |p| *p != me)
    }
}

/// Read-only slice of a process state handed to the transition function.
#[derive(Clone, Copy, Debug)]
pub struct StateView<'a> {
    pub round: Round,
    pub proposal: Bit,
    pub decision: Option<Bit>,
    pub internal: &'a [u8],
}

/// Output of one application of the transition function: the next internal
/// state, an optional (new) decision, and the sends of the following round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgoOutput {
    pub internal: Bytes,
    pub decision: Option<Bit>,
    pub sends: Vec<(ProcessId, Bytes)>,
}

impl AlgoOutput {
    pub fn quiet(internal: Bytes) -> AlgoOutput {
        AlgoOutput {
            internal,
            decision: None,
            sends: Vec::new(),
        }
    }
}

/// Internal failure of an algorithm, e.g. a corrupt serialized state.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct AlgoError(pub String);

impl AlgoError {
    pub fn state(e: impl std::fmt::Display) -> AlgoError {
        AlgoError(format!("bad internal state: {e}"))
    }

    pub fn payload(e: impl std::fmt::Display) -> AlgoError {
        AlgoError(format!("bad message payload: {e}"))
    }
}

/// A deterministic round-based algorithm with binary proposals.
pub trait Algorithm: Send + Sync {
    /// Stable identifier used in traces and the candidate registry.
    fn id(&self) -> String;

    /// Initial internal state, immediate decision if any, and first-round
    /// sends, as a function of the proposal alone.
    fn round_one(
        &self,
        ctx: &AlgoContext,
        me: ProcessId,
        proposal: Bit,
    ) -> Result<AlgoOutput, AlgoError>;

    /// One transition: state entering `state.round` plus the messages
    /// received in it yield the next state and the sends of round
    /// `state.round + 1`.
    fn transition(
        &self,
        ctx: &AlgoContext,
        me: ProcessId,
        state: &StateView<'_>,
        received: &BTreeSet<Message>,
    ) -> Result<AlgoOutput, AlgoError>;

    /// Round by which all correct processes decide in fault-free runs, if
    /// known. Used only to pick starting horizons.
    fn decision_round_hint(&self, _n: u32, _t: u32) -> Option<Round> {
        None
    }
}
