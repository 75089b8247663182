//! Declarative fault plans: who is corrupted and which omissions occur.
//!
//! A schedule lists the faulty set, isolation directives (a group stops
//! receiving from outside itself from a given round on), targeted per-message
//! omissions, and Byzantine behavior bindings. The omission-mode engine
//! accepts schedules without Byzantine bindings; bindings are consumed by the
//! value-level Byzantine runner.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ProcessId, Round};

/// A group that, from `from_round` on, receive-omits every message sent to
/// it from outside the group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationDirective {
    pub group: BTreeSet<ProcessId>,
    pub from_round: Round,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmissionKind {
    Send,
    Receive,
}

/// Omission of one specific message, identified by sender, receiver, and
/// round. A directive for a message that is never sent is a no-op.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmissionDirective {
    pub from: ProcessId,
    pub to: ProcessId,
    pub round: Round,
    pub kind: OmissionKind,
}

/// Assignment of a named Byzantine behavior to a corrupted process.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByzantineBinding {
    pub process: ProcessId,
    pub behavior: String,
}

/// Complete fault plan for one run.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AdversarySchedule {
    #[serde(default)]
    pub faulty: BTreeSet<ProcessId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub isolate: Vec<IsolationDirective>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omissions: Vec<OmissionDirective>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub byzantine: Vec<ByzantineBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("process {process} outside p1..p{n}")]
    ProcessOutOfRange { process: ProcessId, n: u32 },
    #[error("{count} faulty processes exceeds t = {t}")]
    TooManyFaulty { count: usize, t: u32 },
    #[error("isolation group is empty")]
    EmptyIsolationGroup,
    #[error("isolated process {process} not listed as faulty")]
    IsolatedNotFaulty { process: ProcessId },
    #[error("isolation starts at round 0")]
    IsolationRoundZero,
    #[error("send omission by {process} requires it to be faulty")]
    SendOmitterNotFaulty { process: ProcessId },
    #[error("receive omission by {process} requires it to be faulty")]
    ReceiveOmitterNotFaulty { process: ProcessId },
    #[error("omission directive for round 0")]
    OmissionRoundZero,
    #[error("self-addressed omission directive at {process}")]
    SelfOmission { process: ProcessId },
    #[error("Byzantine process {process} not listed as faulty")]
    ByzantineNotFaulty { process: ProcessId },
}

impl AdversarySchedule {
    /// The empty plan: everyone correct.
    pub fn fault_free() -> AdversarySchedule {
        AdversarySchedule::default()
    }

    /// Plan that isolates `group` from `from_round` on; the group is the
    /// faulty set.
    pub fn isolation(group: BTreeSet<ProcessId>, from_round: Round) -> AdversarySchedule {
        AdversarySchedule {
            faulty: group.clone(),
            isolate: vec![IsolationDirective { group, from_round }],
            omissions: Vec::new(),
            byzantine: Vec::new(),
        }
    }

    pub fn validate(&self, n: u32, t: u32) -> Result<(), ScheduleError> {
        let in_range = |p: ProcessId| p.0 >= 1 && p.0 <= n;
        for p in &self.faulty {
            if !in_range(*p) {
                return Err(ScheduleError::ProcessOutOfRange { process: *p, n });
            }
        }
        if self.faulty.len() > t as usize {
            return Err(ScheduleError::TooManyFaulty {
                count: self.faulty.len(),
                t,
            });
        }
        for d in &self.isolate {
            if d.group.is_empty() {
                return Err(ScheduleError::EmptyIsolationGroup);
            }
            if d.from_round == 0 {
                return Err(ScheduleError::IsolationRoundZero);
            }
            for p in &d.group {
                if !in_range(*p) {
                    return Err(ScheduleError::ProcessOutOfRange { process: *p, n });
                }
                if !self.faulty.contains(p) {
                    return Err(ScheduleError::IsolatedNotFaulty { process: *p });
                }
            }
        }
        for o in &self.omissions {
            if !in_range(o.from) {
                return Err(ScheduleError::ProcessOutOfRange { process: o.from, n });
            }
            if !in_range(o.to) {
                return Err(ScheduleError::ProcessOutOfRange { process: o.to, n });
            }
            if o.round == 0 {
                return Err(ScheduleError::OmissionRoundZero);
            }
            if o.from == o.to {
                return Err(ScheduleError::SelfOmission { process: o.from });
            }
            match o.kind {
                OmissionKind::Send if !self.faulty.contains(&o.from) => {
                    return Err(ScheduleError::SendOmitterNotFaulty { process: o.from })
                }
                OmissionKind::Receive if !self.faulty.contains(&o.to) => {
                    return Err(ScheduleError::ReceiveOmitterNotFaulty { process: o.to })
                }
                _ => {}
            }
        }
        for b in &self.byzantine {
            if !in_range(b.process) {
                return Err(ScheduleError::ProcessOutOfRange {
                    process: b.process,
                    n,
                });
            }
            if !self.faulty.contains(&b.process) {
                return Err(ScheduleError::ByzantineNotFaulty { process: b.process });
            }
        }
        Ok(())
    }
}
