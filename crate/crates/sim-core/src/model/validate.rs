//! Structural validators for fragments, behaviors, and executions.
//!
//! Validators return violations as data instead of failing fast: each call
//! collects every violated condition so callers can report, assert, or
//! triage. A fragment is checked in isolation; a behavior additionally
//! replays the algorithm's transition function round by round; an execution
//! cross-checks the message sets of senders and receivers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::engine::{AlgoContext, Algorithm, StateView};

use super::{Behavior, Bit, Bytes, Execution, Fragment, MessageKey, ProcessId, Round};

/// Violation of a single-fragment condition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentViolation {
    #[error("state belongs to {got}, fragment owner is {expected}")]
    OwnerMismatch { expected: ProcessId, got: ProcessId },
    #[error("state is for round {got}, fragment covers round {expected}")]
    RoundMismatch { expected: Round, got: Round },
    #[error("message {message:?} tagged for a round other than {expected}")]
    MessageRound { message: MessageKey, expected: Round },
    #[error("message {message:?} is both sent and send-omitted")]
    SentAndOmitted { message: MessageKey },
    #[error("message {message:?} is both received and receive-omitted")]
    ReceivedAndOmitted { message: MessageKey },
    #[error("outgoing message {message:?} not from the fragment owner")]
    ForeignSender { message: MessageKey },
    #[error("incoming message {message:?} not addressed to the fragment owner")]
    ForeignReceiver { message: MessageKey },
    #[error("message {message:?} addressed by the owner to itself")]
    SelfAddressed { message: MessageKey },
    #[error("two outgoing messages for receiver {receiver} in round {round}")]
    DuplicateReceiver { receiver: ProcessId, round: Round },
    #[error("two incoming messages from sender {sender} in round {round}")]
    DuplicateSender { sender: ProcessId, round: Round },
}

/// Difference found when replaying the transition function over a behavior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransitionDiff {
    Internal,
    Decision {
        expected: Option<Bit>,
        got: Option<Bit>,
    },
    Sends {
        missing: Vec<MessageKey>,
        unexpected: Vec<MessageKey>,
    },
}

impl fmt::Display for TransitionDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionDiff::Internal => write!(f, "internal state differs from replay"),
            TransitionDiff::Decision { expected, got } => {
                write!(f, "decision {got:?} where replay produced {expected:?}")
            }
            TransitionDiff::Sends { missing, unexpected } => write!(
                f,
                "send set differs from replay (missing {missing:?}, unexpected {unexpected:?})"
            ),
        }
    }
}

/// Violation of a behavior condition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorViolation {
    #[error("behavior records no rounds")]
    Empty,
    #[error("round {round}: {violation}")]
    Fragment {
        round: Round,
        violation: FragmentViolation,
    },
    #[error("first state is for round {got}, expected round 1")]
    FirstStateRound { got: Round },
    #[error("initial state or first-round sends differ from the algorithm: {diff}")]
    InitialMismatch { diff: TransitionDiff },
    #[error("proposal changes at round {round}: {got} after {expected}")]
    ProposalChanged {
        round: Round,
        expected: Bit,
        got: Bit,
    },
    #[error("decision regresses at round {round}: {from:?} -> {to:?}")]
    DecisionRegressed {
        round: Round,
        from: Option<Bit>,
        to: Option<Bit>,
    },
    #[error("round {round} -> {next}: transition replay disagrees: {diff}", next = round + 1)]
    TransitionMismatch { round: Round, diff: TransitionDiff },
    #[error("algorithm failed during replay of round {round}: {detail}")]
    Replay { round: Round, detail: String },
}

/// Violation of an execution guarantee.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecutionViolation {
    #[error("{count} faulty processes exceeds t = {t}")]
    TooManyFaulty { count: usize, t: u32 },
    #[error("{process}: {violation}")]
    Behavior {
        process: ProcessId,
        violation: BehaviorViolation,
    },
    #[error("sent message {message:?} neither received nor receive-omitted by its receiver{}", if *payload_mismatch { " (payload differs)" } else { "" })]
    SendValidity {
        message: MessageKey,
        payload_mismatch: bool,
    },
    #[error("incoming message {message:?} was never successfully sent{}", if *payload_mismatch { " (payload differs)" } else { "" })]
    ReceiveValidity {
        message: MessageKey,
        payload_mismatch: bool,
    },
    #[error("correct process {process} commits an omission in round {round}")]
    OmissionValidity { process: ProcessId, round: Round },
}

/// Checks the ten structural conditions of a fragment owned by `owner`
/// covering `round`.
pub fn validate_fragment(f: &Fragment, owner: ProcessId, round: Round) -> Vec<FragmentViolation> {
    let mut out = Vec::new();
    if f.state.process != owner {
        out.push(FragmentViolation::OwnerMismatch {
            expected: owner,
            got: f.state.process,
        });
    }
    if f.state.round != round {
        out.push(FragmentViolation::RoundMismatch {
            expected: round,
            got: f.state.round,
        });
    }
    let all = f
        .sent
        .iter()
        .chain(f.send_omitted.iter())
        .chain(f.received.iter())
        .chain(f.receive_omitted.iter());
    for m in all {
        if m.round != round {
            out.push(FragmentViolation::MessageRound {
                message: m.key(),
                expected: round,
            });
        }
        if m.sender == m.receiver && (m.sender == owner || m.receiver == owner) {
            out.push(FragmentViolation::SelfAddressed { message: m.key() });
        }
    }
    let sent_keys: BTreeSet<MessageKey> = f.sent.iter().map(|m| m.key()).collect();
    for m in &f.send_omitted {
        if sent_keys.contains(&m.key()) {
            out.push(FragmentViolation::SentAndOmitted { message: m.key() });
        }
    }
    let recv_keys: BTreeSet<MessageKey> = f.received.iter().map(|m| m.key()).collect();
    for m in &f.receive_omitted {
        if recv_keys.contains(&m.key()) {
            out.push(FragmentViolation::ReceivedAndOmitted { message: m.key() });
        }
    }
    for m in f.sent.iter().chain(f.send_omitted.iter()) {
        if m.sender != owner {
            out.push(FragmentViolation::ForeignSender { message: m.key() });
        }
    }
    for m in f.received.iter().chain(f.receive_omitted.iter()) {
        if m.receiver != owner {
            out.push(FragmentViolation::ForeignReceiver { message: m.key() });
        }
    }
    let mut receivers: BTreeSet<ProcessId> = BTreeSet::new();
    for m in f.sent.iter().chain(f.send_omitted.iter()) {
        if !receivers.insert(m.receiver) {
            out.push(FragmentViolation::DuplicateReceiver {
                receiver: m.receiver,
                round,
            });
        }
    }
    let mut senders: BTreeSet<ProcessId> = BTreeSet::new();
    for m in f.received.iter().chain(f.receive_omitted.iter()) {
        if !senders.insert(m.sender) {
            out.push(FragmentViolation::DuplicateSender {
                sender: m.sender,
                round,
            });
        }
    }
    out
}

fn outgoing_pairs(f: &Fragment) -> BTreeMap<ProcessId, Bytes> {
    f.sent
        .iter()
        .chain(f.send_omitted.iter())
        .map(|m| (m.receiver, m.payload.clone()))
        .collect()
}

fn diff_sends(
    expected: &BTreeMap<ProcessId, Bytes>,
    got: &BTreeMap<ProcessId, Bytes>,
    owner: ProcessId,
    round: Round,
) -> Option<TransitionDiff> {
    if expected == got {
        return None;
    }
    let key = |p: &ProcessId| MessageKey {
        sender: owner,
        receiver: *p,
        round,
    };
    let missing = expected
        .iter()
        .filter(|(p, payload)| got.get(p) != Some(payload))
        .map(|(p, _)| key(p))
        .collect();
    let unexpected = got
        .iter()
        .filter(|(p, payload)| expected.get(p) != Some(payload))
        .map(|(p, _)| key(p))
        .collect();
    Some(TransitionDiff::Sends {
        missing,
        unexpected,
    })
}

/// Checks the replay-free behavior conditions: fragment structure, a round-1
/// start, constant proposal, and monotone decisions.
pub fn validate_behavior_structure(b: &Behavior, owner: ProcessId) -> Vec<BehaviorViolation> {
    let mut out = Vec::new();
    if b.fragments().is_empty() {
        out.push(BehaviorViolation::Empty);
        return out;
    }
    for (i, f) in b.fragments().iter().enumerate() {
        let round = (i + 1) as Round;
        for v in validate_fragment(f, owner, round) {
            out.push(BehaviorViolation::Fragment {
                round,
                violation: v,
            });
        }
    }
    let first = &b.fragments()[0];
    if first.state.round != 1 {
        out.push(BehaviorViolation::FirstStateRound {
            got: first.state.round,
        });
    }
    let proposal = first.state.proposal;
    for i in 1..b.fragments().len() {
        let round = (i + 1) as Round;
        let prev = &b.fragments()[i - 1];
        let cur = &b.fragments()[i];
        if cur.state.proposal != proposal {
            out.push(BehaviorViolation::ProposalChanged {
                round,
                expected: proposal,
                got: cur.state.proposal,
            });
        }
        if let Some(d) = prev.state.decision {
            if cur.state.decision != Some(d) {
                out.push(BehaviorViolation::DecisionRegressed {
                    round,
                    from: prev.state.decision,
                    to: cur.state.decision,
                });
            }
        }
    }
    out
}

/// Checks the behavior conditions of `b` as the record of `owner`, replaying
/// `algo` to verify initial sends and every round transition.
pub fn validate_behavior(
    b: &Behavior,
    owner: ProcessId,
    algo: &dyn Algorithm,
    ctx: &AlgoContext,
) -> Vec<BehaviorViolation> {
    let mut out = validate_behavior_structure(b, owner);
    out.extend(validate_behavior_replay(b, owner, algo, ctx));
    out
}

/// The replay half of behavior validation: divergences between the record
/// and what the algorithm would have done.
fn validate_behavior_replay(
    b: &Behavior,
    owner: ProcessId,
    algo: &dyn Algorithm,
    ctx: &AlgoContext,
) -> Vec<BehaviorViolation> {
    let mut out = Vec::new();
    if b.fragments().is_empty() {
        return out;
    }
    let first = &b.fragments()[0];
    let proposal = first.state.proposal;
    match algo.round_one(ctx, owner, proposal) {
        Err(e) => out.push(BehaviorViolation::Replay {
            round: 1,
            detail: e.to_string(),
        }),
        Ok(init) => {
            if init.internal != first.state.internal {
                out.push(BehaviorViolation::InitialMismatch {
                    diff: TransitionDiff::Internal,
                });
            }
            if init.decision != first.state.decision {
                out.push(BehaviorViolation::InitialMismatch {
                    diff: TransitionDiff::Decision {
                        expected: init.decision,
                        got: first.state.decision,
                    },
                });
            }
            let expected: BTreeMap<ProcessId, Bytes> = init.sends.into_iter().collect();
            if let Some(diff) = diff_sends(&expected, &outgoing_pairs(first), owner, 1) {
                out.push(BehaviorViolation::InitialMismatch { diff });
            }
        }
    }
    for i in 1..b.fragments().len() {
        let round = (i + 1) as Round;
        let prev = &b.fragments()[i - 1];
        let cur = &b.fragments()[i];
        let view = StateView {
            round: prev.state.round,
            proposal: prev.state.proposal,
            decision: prev.state.decision,
            internal: prev.state.internal.as_slice(),
        };
        match algo.transition(ctx, owner, &view, &prev.received) {
            Err(e) => out.push(BehaviorViolation::Replay {
                round: round - 1,
                detail: e.to_string(),
            }),
            Ok(step) => {
                if step.internal != cur.state.internal {
                    out.push(BehaviorViolation::TransitionMismatch {
                        round: round - 1,
                        diff: TransitionDiff::Internal,
                    });
                }
                let expected_decision = step.decision.or(prev.state.decision);
                if expected_decision != cur.state.decision {
                    out.push(BehaviorViolation::TransitionMismatch {
                        round: round - 1,
                        diff: TransitionDiff::Decision {
                            expected: expected_decision,
                            got: cur.state.decision,
                        },
                    });
                }
                let expected: BTreeMap<ProcessId, Bytes> = step.sends.into_iter().collect();
                if let Some(diff) = diff_sends(&expected, &outgoing_pairs(cur), owner, round) {
                    out.push(BehaviorViolation::TransitionMismatch {
                        round: round - 1,
                        diff,
                    });
                }
            }
        }
    }
    out
}

/// Checks every execution guarantee that does not need the algorithm: the
/// faulty bound, fragment structure, send- and receive-validity of every
/// message, and that every omission is committed by a faulty process.
pub fn validate_structure(e: &Execution) -> Vec<ExecutionViolation> {
    let mut out = Vec::new();
    if e.faulty().len() > e.t() as usize {
        out.push(ExecutionViolation::TooManyFaulty {
            count: e.faulty().len(),
            t: e.t(),
        });
    }
    for p in e.processes() {
        let b = e.behavior(p).expect("shape-checked");
        for v in validate_behavior_structure(b, p) {
            out.push(ExecutionViolation::Behavior {
                process: p,
                violation: v,
            });
        }
        if e.is_correct(p) {
            for (i, f) in b.fragments().iter().enumerate() {
                if !f.send_omitted.is_empty() || !f.receive_omitted.is_empty() {
                    out.push(ExecutionViolation::OmissionValidity {
                        process: p,
                        round: (i + 1) as Round,
                    });
                }
            }
        }
    }
    // Index of successful sends: key -> payload.
    let mut sent_index: BTreeMap<MessageKey, Bytes> = BTreeMap::new();
    for p in e.processes() {
        let b = e.behavior(p).expect("shape-checked");
        for f in b.fragments() {
            for m in &f.sent {
                sent_index.insert(m.key(), m.payload.clone());
            }
        }
    }
    for p in e.processes() {
        let b = e.behavior(p).expect("shape-checked");
        for f in b.fragments() {
            // Send-validity: every successful send appears at its receiver.
            for m in &f.sent {
                let r = m.receiver;
                let landed = e
                    .behavior(r)
                    .ok()
                    .and_then(|rb| rb.fragment(m.round).ok())
                    .map(|rf| {
                        if rf.received.contains(m) || rf.receive_omitted.contains(m) {
                            (true, false)
                        } else {
                            let key_present = rf
                                .received
                                .iter()
                                .chain(rf.receive_omitted.iter())
                                .any(|x| x.key() == m.key());
                            (false, key_present)
                        }
                    });
                match landed {
                    Some((true, _)) => {}
                    Some((false, key_present)) => out.push(ExecutionViolation::SendValidity {
                        message: m.key(),
                        payload_mismatch: key_present,
                    }),
                    None => out.push(ExecutionViolation::SendValidity {
                        message: m.key(),
                        payload_mismatch: false,
                    }),
                }
            }
            // Receive-validity: every incoming message was successfully sent.
            for m in f.received.iter().chain(f.receive_omitted.iter()) {
                match sent_index.get(&m.key()) {
                    Some(payload) if *payload == m.payload => {}
                    Some(_) => out.push(ExecutionViolation::ReceiveValidity {
                        message: m.key(),
                        payload_mismatch: true,
                    }),
                    None => out.push(ExecutionViolation::ReceiveValidity {
                        message: m.key(),
                        payload_mismatch: false,
                    }),
                }
            }
        }
    }
    out
}

/// Checks every execution guarantee: the structural checks of
/// [`validate_structure`] plus replay of each behavior against `algo`.
pub fn validate_execution(e: &Execution, algo: &dyn Algorithm) -> Vec<ExecutionViolation> {
    let mut out = validate_structure(e);
    let ctx = AlgoContext { n: e.n(), t: e.t() };
    for p in e.processes() {
        let b = e.behavior(p).expect("shape-checked");
        for v in validate_behavior_replay(b, p, algo, &ctx) {
            out.push(ExecutionViolation::Behavior {
                process: p,
                violation: v,
            });
        }
    }
    out
}
