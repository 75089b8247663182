//! Per-process views and indistinguishability.
//!
//! A process's view of an execution is its proposal plus, for each round, the
//! messages it received and the state it entered the round with. Omission
//! fields are deliberately absent: a faulty process is unaware of its own
//! omissions, so two executions look the same to it exactly when proposal and
//! per-round received sets (payloads included) coincide.

use thiserror::Error;

use super::{AccessError, Bit, Execution, Message, ProcState, ProcessId, Round};

use std::collections::BTreeSet;

/// One round of a view: entering state plus the received messages.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ViewRound {
    pub state: ProcState,
    pub received: BTreeSet<Message>,
}

/// Everything a process observes across an execution.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct View {
    pub process: ProcessId,
    pub proposal: Bit,
    pub rounds: Vec<ViewRound>,
}

impl View {
    /// True when the observable part (proposal and received messages) equals
    /// the other view's. States are excluded: they are derived data.
    pub fn same_observation(&self, other: &View) -> bool {
        self.process == other.process
            && self.proposal == other.proposal
            && self.rounds.len() == other.rounds.len()
            && self
                .rounds
                .iter()
                .zip(other.rounds.iter())
                .all(|(a, b)| a.received == b.received)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error("horizon mismatch: {left} vs {right}; pass an explicit comparison horizon")]
    HorizonMismatch { left: Round, right: Round },
    #[error("comparison horizon {horizon} exceeds a recorded horizon ({left}, {right})")]
    HorizonTooLarge {
        horizon: Round,
        left: Round,
        right: Round,
    },
}

impl Execution {
    /// Projects the view of `p`.
    pub fn view(&self, p: ProcessId) -> Result<View, AccessError> {
        let b = self.behavior(p)?;
        let proposal = b.state(1)?.proposal;
        let rounds = b
            .fragments()
            .iter()
            .map(|f| ViewRound {
                state: f.state.clone(),
                received: f.received.clone(),
            })
            .collect();
        Ok(View {
            process: p,
            proposal,
            rounds,
        })
    }
}

/// Whether `p` observes the same proposal and per-round received messages in
/// both executions. Horizon differences are reported as an error rather than
/// silently truncated.
pub fn indistinguishable(e1: &Execution, e2: &Execution, p: ProcessId) -> Result<bool, ViewError> {
    if e1.horizon() != e2.horizon() {
        return Err(ViewError::HorizonMismatch {
            left: e1.horizon(),
            right: e2.horizon(),
        });
    }
    indistinguishable_up_to(e1, e2, p, e1.horizon())
}

/// Indistinguishability restricted to rounds `1..=horizon`.
pub fn indistinguishable_up_to(
    e1: &Execution,
    e2: &Execution,
    p: ProcessId,
    horizon: Round,
) -> Result<bool, ViewError> {
    if horizon > e1.horizon() || horizon > e2.horizon() {
        return Err(ViewError::HorizonTooLarge {
            horizon,
            left: e1.horizon(),
            right: e2.horizon(),
        });
    }
    let b1 = e1.behavior(p)?;
    let b2 = e2.behavior(p)?;
    if b1.state(1)?.proposal != b2.state(1)?.proposal {
        return Ok(false);
    }
    for r in 1..=horizon {
        if b1.received(r)? != b2.received(r)? {
            return Ok(false);
        }
    }
    Ok(true)
}
