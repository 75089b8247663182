//! On-disk trace format for executions.
//!
//! A trace document is a faithful JSON projection of an execution: header,
//! then per-process rounds with the entering state and the four message
//! sets. Internal states are recorded as digests by default so traces stay
//! small; with full states the document converts back into an execution
//! that validators can replay. Serialization is canonical, so a parsed
//! document re-serializes to the exact bytes it came from.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::engine::AdversarySchedule;
use crate::model::{
    Behavior, Bit, Bytes, Execution, ExecutionShapeError, Fragment, Message, ProcState, ProcessId,
    Round,
};

pub const TRACE_FORMAT: &str = "trace-v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub format: String,
    pub n: u32,
    pub t: u32,
    pub horizon: Round,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    pub faulty: Vec<ProcessId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<AdversarySchedule>,
    pub processes: Vec<TraceProcess>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceProcess {
    pub process: ProcessId,
    pub proposal: Bit,
    pub rounds: Vec<TraceRound>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRound {
    pub round: Round,
    /// Decision carried by the state entering this round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Bit>,
    /// Full serialized internal state, kept only on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal: Option<Bytes>,
    /// SHA-256 of the internal state, always present.
    pub internal_hash: String,
    pub sent: Vec<TraceSend>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub send_omitted: Vec<TraceSend>,
    pub received: Vec<TraceRecv>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub receive_omitted: Vec<TraceRecv>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSend {
    pub to: ProcessId,
    pub payload: Bytes,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecv {
    pub from: ProcessId,
    pub payload: Bytes,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("not a trace document: {0}")]
    Parse(String),
    #[error("unsupported format tag {got:?}, expected {TRACE_FORMAT:?}")]
    Format { got: String },
    #[error("{process} round {round}: internal state is only a digest; full states are required here")]
    HashedState { process: ProcessId, round: Round },
    #[error("{process}: round entry {got} where {expected} was expected")]
    RoundOrder {
        process: ProcessId,
        expected: Round,
        got: Round,
    },
    #[error("{process} round {round}: stored digest does not match the internal state")]
    DigestMismatch { process: ProcessId, round: Round },
    #[error("document does not assemble into an execution: {0}")]
    Shape(#[from] ExecutionShapeError),
}

/// Hex SHA-256 of a byte string.
pub fn digest_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// What to include when projecting an execution into a document.
#[derive(Clone, Debug, Default)]
pub struct TraceOptions {
    /// Record full internal states instead of digests only.
    pub full_state: bool,
    pub algorithm: Option<String>,
    pub schedule: Option<AdversarySchedule>,
}

impl TraceDoc {
    pub fn from_execution(e: &Execution, opts: &TraceOptions) -> TraceDoc {
        let processes = e
            .processes()
            .map(|p| {
                let b = e.behavior(p).expect("shape-checked");
                TraceProcess {
                    process: p,
                    proposal: b.proposal().expect("non-empty behavior"),
                    rounds: b
                        .fragments()
                        .iter()
                        .enumerate()
                        .map(|(i, f)| TraceRound {
                            round: (i + 1) as Round,
                            decision: f.state.decision,
                            internal: opts.full_state.then(|| f.state.internal.clone()),
                            internal_hash: digest_hex(f.state.internal.as_slice()),
                            sent: sends_of(&f.sent),
                            send_omitted: sends_of(&f.send_omitted),
                            received: recvs_of(&f.received),
                            receive_omitted: recvs_of(&f.receive_omitted),
                        })
                        .collect(),
                }
            })
            .collect();
        TraceDoc {
            format: TRACE_FORMAT.to_string(),
            n: e.n(),
            t: e.t(),
            horizon: e.horizon(),
            algorithm: opts.algorithm.clone(),
            faulty: e.faulty().iter().copied().collect(),
            schedule: opts.schedule.clone(),
            processes,
        }
    }

    /// Reassembles the execution. Requires full internal states whose
    /// digests match; use [`TraceDoc::to_execution_lossy`] for digest-only
    /// documents.
    pub fn to_execution(&self) -> Result<Execution, TraceError> {
        self.assemble(true)
    }

    /// Reassembles the execution with empty internal states wherever the
    /// document carries only a digest. The result supports structural
    /// validation but not algorithm replay.
    pub fn to_execution_lossy(&self) -> Result<Execution, TraceError> {
        self.assemble(false)
    }

    fn assemble(&self, strict_states: bool) -> Result<Execution, TraceError> {
        let mut behaviors: BTreeMap<ProcessId, Behavior> = BTreeMap::new();
        for tp in &self.processes {
            let mut fragments = Vec::with_capacity(tp.rounds.len());
            for (i, tr) in tp.rounds.iter().enumerate() {
                let expected = (i + 1) as Round;
                if tr.round != expected {
                    return Err(TraceError::RoundOrder {
                        process: tp.process,
                        expected,
                        got: tr.round,
                    });
                }
                let internal = match &tr.internal {
                    Some(bytes) => {
                        if digest_hex(bytes.as_slice()) != tr.internal_hash {
                            return Err(TraceError::DigestMismatch {
                                process: tp.process,
                                round: tr.round,
                            });
                        }
                        bytes.clone()
                    }
                    None if strict_states => {
                        return Err(TraceError::HashedState {
                            process: tp.process,
                            round: tr.round,
                        })
                    }
                    None => Bytes::empty(),
                };
                fragments.push(Fragment {
                    state: ProcState {
                        process: tp.process,
                        round: tr.round,
                        proposal: tp.proposal,
                        decision: tr.decision,
                        internal,
                    },
                    sent: tr
                        .sent
                        .iter()
                        .map(|s| message(tp.process, s.to, tr.round, &s.payload))
                        .collect(),
                    send_omitted: tr
                        .send_omitted
                        .iter()
                        .map(|s| message(tp.process, s.to, tr.round, &s.payload))
                        .collect(),
                    received: tr
                        .received
                        .iter()
                        .map(|r| message(r.from, tp.process, tr.round, &r.payload))
                        .collect(),
                    receive_omitted: tr
                        .receive_omitted
                        .iter()
                        .map(|r| message(r.from, tp.process, tr.round, &r.payload))
                        .collect(),
                });
            }
            behaviors.insert(tp.process, Behavior::new(fragments));
        }
        Ok(Execution::new(
            self.n,
            self.t,
            self.faulty.iter().copied().collect(),
            behaviors,
            self.horizon,
        )?)
    }

    /// Whether every round of every process carries its full internal state.
    pub fn has_full_states(&self) -> bool {
        self.processes
            .iter()
            .all(|p| p.rounds.iter().all(|r| r.internal.is_some()))
    }

    /// Canonical serialization: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<TraceDoc, TraceError> {
        let doc: TraceDoc =
            serde_json::from_str(text).map_err(|e| TraceError::Parse(e.to_string()))?;
        if doc.format != TRACE_FORMAT {
            return Err(TraceError::Format { got: doc.format });
        }
        Ok(doc)
    }
}

fn message(sender: ProcessId, receiver: ProcessId, round: Round, payload: &Bytes) -> Message {
    Message {
        sender,
        receiver,
        round,
        payload: payload.clone(),
    }
}

fn sends_of(set: &std::collections::BTreeSet<Message>) -> Vec<TraceSend> {
    set.iter()
        .map(|m| TraceSend {
            to: m.receiver,
            payload: m.payload.clone(),
        })
        .collect()
}

fn recvs_of(set: &std::collections::BTreeSet<Message>) -> Vec<TraceRecv> {
    set.iter()
        .map(|m| TraceRecv {
            from: m.sender,
            payload: m.payload.clone(),
        })
        .collect()
}
