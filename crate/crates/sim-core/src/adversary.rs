//! Structured adversaries over recorded executions.
//!
//! Three constructions operate on complete executions rather than on live
//! runs: checking that a group is cleanly isolated behind receive omissions
//! from some round on, swapping one process's receive omissions into send
//! omissions of the senders (which leaves every view untouched but moves
//! the fault budget around), and merging two isolated executions into one
//! in which each group still observes its own source execution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::engine::{AlgoContext, AlgoError, Algorithm, StateView};
use crate::model::{
    AccessError, Behavior, Bit, Execution, ExecutionShapeError, Fragment, Message, MessageKey,
    ProcState, ProcessId, Round,
};

/// The canonical three-way split used by the falsification harness: a large
/// correct remainder and two candidate fault groups of `t/4` processes each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub a: BTreeSet<ProcessId>,
    pub b: BTreeSet<ProcessId>,
    pub c: BTreeSet<ProcessId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("t must be a positive multiple of 4, got {t}")]
    BadFaultBound { t: u32 },
    #[error("need t < n, got n = {n}, t = {t}")]
    FaultBoundTooLarge { n: u32, t: u32 },
}

impl Partition {
    /// `a` takes `p1 .. p(n - t/2)`, `b` the next `t/4` processes, `c` the
    /// last `t/4`.
    pub fn canonical(n: u32, t: u32) -> Result<Partition, PartitionError> {
        if t == 0 || t % 4 != 0 {
            return Err(PartitionError::BadFaultBound { t });
        }
        if t >= n {
            return Err(PartitionError::FaultBoundTooLarge { n, t });
        }
        let a_end = n - t / 2;
        let b_end = a_end + t / 4;
        Ok(Partition {
            a: (1..=a_end).map(ProcessId).collect(),
            b: (a_end + 1..=b_end).map(ProcessId).collect(),
            c: (b_end + 1..=n).map(ProcessId).collect(),
        })
    }
}

/// Which source an execution plays in a merge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

/// An execution together with the isolation family it is claimed to belong
/// to: every process proposes `bit`, and exactly the processes of `group`
/// are faulty, receive-omitting everything that crosses into the group from
/// round `from_round` on.
#[derive(Clone, Debug)]
pub struct TaggedExecution {
    pub execution: Execution,
    pub group: BTreeSet<ProcessId>,
    pub from_round: Round,
    pub bit: Bit,
}

impl TaggedExecution {
    /// Checks the execution against its tag.
    pub fn check(&self) -> Result<(), IsolationViolation> {
        for p in self.execution.processes() {
            let b = self.execution.behavior(p)?;
            if b.proposal() != Some(self.bit) {
                return Err(IsolationViolation::ProposalMismatch {
                    process: p,
                    expected: self.bit,
                });
            }
        }
        check_isolated(&self.execution, &self.group, self.from_round)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsolationViolation {
    #[error("isolated group is empty")]
    EmptyGroup,
    #[error("isolated group covers every process")]
    NoOutsiders,
    #[error("isolation cannot start at round 0")]
    RoundZero,
    #[error("isolated member {process} is not in the faulty set")]
    FaultyMismatch { process: ProcessId },
    #[error("{process} has send omissions")]
    SendOmission { process: ProcessId },
    #[error("{process} proposes something other than {expected}")]
    ProposalMismatch { process: ProcessId, expected: Bit },
    #[error(
        "{process} round {round}: receive omissions diverge from the \
         isolation pattern ({missing} missing, {unexpected} unexpected)"
    )]
    WrongReceiveOmissions {
        process: ProcessId,
        round: Round,
        missing: usize,
        unexpected: usize,
    },
    #[error("record access failed: {0}")]
    Access(#[from] AccessError),
}

/// Verifies that `group` is isolated from round `from_round` on: every
/// member is faulty, no member send-omits anything, and each member
/// receive-omits precisely the successfully sent messages that cross into
/// the group at or after `from_round`. The faulty set may extend beyond the
/// group; a merged execution isolates both of its groups at once.
pub fn check_isolated(
    e: &Execution,
    group: &BTreeSet<ProcessId>,
    from_round: Round,
) -> Result<(), IsolationViolation> {
    if group.is_empty() {
        return Err(IsolationViolation::EmptyGroup);
    }
    if group.len() as u32 == e.n() {
        return Err(IsolationViolation::NoOutsiders);
    }
    if from_round == 0 {
        return Err(IsolationViolation::RoundZero);
    }
    if let Some(p) = group.iter().find(|p| !e.faulty().contains(p)) {
        return Err(IsolationViolation::FaultyMismatch { process: *p });
    }

    // Successfully sent cross-boundary messages addressed into the group.
    let mut crossing: BTreeMap<ProcessId, BTreeMap<Round, BTreeSet<MessageKey>>> = BTreeMap::new();
    for sender in e.processes() {
        if group.contains(&sender) {
            continue;
        }
        for m in e.behavior(sender)?.all_sent() {
            if group.contains(&m.receiver) && m.round >= from_round {
                crossing
                    .entry(m.receiver)
                    .or_default()
                    .entry(m.round)
                    .or_default()
                    .insert(m.key());
            }
        }
    }

    for p in group {
        let b = e.behavior(*p)?;
        if !b.all_send_omitted().is_empty() {
            return Err(IsolationViolation::SendOmission { process: *p });
        }
        let empty = BTreeMap::new();
        let expected_by_round = crossing.get(p).unwrap_or(&empty);
        for round in 1..=e.horizon() {
            let actual: BTreeSet<MessageKey> =
                b.receive_omitted(round)?.iter().map(Message::key).collect();
            let none = BTreeSet::new();
            let expected = expected_by_round.get(&round).unwrap_or(&none);
            if &actual != expected {
                return Err(IsolationViolation::WrongReceiveOmissions {
                    process: *p,
                    round,
                    missing: expected.difference(&actual).count(),
                    unexpected: actual.difference(expected).count(),
                });
            }
        }
    }
    Ok(())
}

/// Number of messages `p` receive-omits whose sender lies in `senders`.
pub fn receive_omissions_from(
    e: &Execution,
    p: ProcessId,
    senders: &BTreeSet<ProcessId>,
) -> Result<u64, AccessError> {
    Ok(e.behavior(p)?
        .all_receive_omitted()
        .iter()
        .filter(|m| senders.contains(&m.sender))
        .count() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwapError {
    #[error("receive-omitted message {key:?} was never successfully sent")]
    NotSent { key: MessageKey },
    #[error("record access failed: {0}")]
    Access(#[from] AccessError),
    #[error("rebuilt execution lost its shape: {0}")]
    Shape(#[from] ExecutionShapeError),
}

/// Result of an omission swap: the processes that carry omissions
/// afterwards, and the rebuilt execution when they still fit under `t`.
#[derive(Clone, Debug)]
pub struct SwapOutcome {
    pub new_faulty: BTreeSet<ProcessId>,
    pub execution: Option<Execution>,
}

impl SwapOutcome {
    pub fn within_bound(&self) -> bool {
        self.execution.is_some()
    }
}

/// Converts every receive omission of `p` into a send omission of the
/// matching sender. No state, send, or received set changes anywhere, so
/// every process keeps its exact view; only the omission bookkeeping moves.
/// The faulty set becomes the set of processes that still carry omissions,
/// which excludes `p` whenever `p` had no send omissions of its own.
pub fn swap_omission(e: &Execution, p: ProcessId) -> Result<SwapOutcome, SwapError> {
    let pb = e.behavior(p)?;
    let mut fragments: BTreeMap<ProcessId, Vec<Fragment>> = e
        .processes()
        .map(|q| Ok((q, e.behavior(q)?.fragments().to_vec())))
        .collect::<Result<_, AccessError>>()?;

    let omitted: Vec<Message> = pb.all_receive_omitted().into_iter().collect();
    for m in &omitted {
        let sender_frags = fragments.get_mut(&m.sender).expect("covered");
        let frag = &mut sender_frags[(m.round - 1) as usize];
        let stored = frag
            .sent
            .iter()
            .find(|s| s.key() == m.key())
            .cloned()
            .ok_or(SwapError::NotSent { key: m.key() })?;
        frag.sent.remove(&stored);
        frag.send_omitted.insert(stored);
    }
    for frag in fragments.get_mut(&p).expect("covered") {
        frag.receive_omitted.clear();
    }

    let new_faulty: BTreeSet<ProcessId> = fragments
        .iter()
        .filter(|(_, frags)| {
            frags
                .iter()
                .any(|f| !f.send_omitted.is_empty() || !f.receive_omitted.is_empty())
        })
        .map(|(q, _)| *q)
        .collect();

    let execution = if new_faulty.len() as u32 <= e.t() {
        let behaviors = fragments
            .into_iter()
            .map(|(q, frags)| (q, Behavior::new(frags)))
            .collect();
        Some(e.rebuild(new_faulty.clone(), behaviors)?)
    } else {
        None
    };
    Ok(SwapOutcome {
        new_faulty,
        execution,
    })
}

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("executions disagree on {what}")]
    SystemMismatch { what: &'static str },
    #[error("isolation groups overlap at {process}")]
    GroupsOverlap { process: ProcessId },
    #[error("{side} execution fails its isolation tag: {source}")]
    NotIsolated {
        side: Side,
        source: IsolationViolation,
    },
    #[error(
        "tags are not mergeable: rounds {k1} and {k2}, bits {b1} and {b2} \
         (need both rounds 1, or equal bits with rounds within 1)"
    )]
    NotMergeable { k1: Round, k2: Round, b1: Bit, b2: Bit },
    #[error("combined groups hold {total} processes, the bound is {t}")]
    TooManyFaulty { total: usize, t: u32 },
    #[error("no process remains outside the groups")]
    NoCorrectRemainder,
    #[error("{process} round {round}: algorithm failed during replay: {source}")]
    Replay {
        process: ProcessId,
        round: Round,
        source: AlgoError,
    },
    #[error("{process} round {round}: decision changed during replay")]
    DecisionChanged { process: ProcessId, round: Round },
    #[error("record access failed: {0}")]
    Access(#[from] AccessError),
    #[error("merged execution lost its shape: {0}")]
    Shape(#[from] ExecutionShapeError),
}

/// Tags may merge when both isolations start at round 1, or when the start
/// rounds differ by at most one and the proposal bits agree.
pub fn mergeable(left: &TaggedExecution, right: &TaggedExecution) -> bool {
    let (k1, k2) = (left.from_round, right.from_round);
    (k1 == 1 && k2 == 1) || (k1.abs_diff(k2) <= 1 && left.bit == right.bit)
}

/// Merges two isolated executions into one in which both groups are faulty
/// together.
///
/// Group members replay their source fragments verbatim: same states,
/// sends, and received sets, with receive omissions recomputed against the
/// merged message flow. Processes outside both groups run `algo` live on
/// the full merged flow, proposing the left bit. The horizon is the shorter
/// of the two sources. Each group member's view then matches its source
/// execution exactly, which is what the mergeability condition guarantees
/// payload-consistent.
pub fn merge(
    algo: &dyn Algorithm,
    left: &TaggedExecution,
    right: &TaggedExecution,
) -> Result<Execution, MergeError> {
    let (el, er) = (&left.execution, &right.execution);
    if el.n() != er.n() {
        return Err(MergeError::SystemMismatch { what: "n" });
    }
    if el.t() != er.t() {
        return Err(MergeError::SystemMismatch { what: "t" });
    }
    if let Some(p) = left.group.intersection(&right.group).next() {
        return Err(MergeError::GroupsOverlap { process: *p });
    }
    left.check().map_err(|source| MergeError::NotIsolated {
        side: Side::Left,
        source,
    })?;
    right.check().map_err(|source| MergeError::NotIsolated {
        side: Side::Right,
        source,
    })?;
    if !mergeable(left, right) {
        return Err(MergeError::NotMergeable {
            k1: left.from_round,
            k2: right.from_round,
            b1: left.bit,
            b2: right.bit,
        });
    }
    let n = el.n();
    let t = el.t();
    let faulty: BTreeSet<ProcessId> = left.group.union(&right.group).copied().collect();
    if faulty.len() as u32 > t {
        return Err(MergeError::TooManyFaulty {
            total: faulty.len(),
            t,
        });
    }
    if faulty.len() as u32 == n {
        return Err(MergeError::NoCorrectRemainder);
    }
    let horizon = el.horizon().min(er.horizon());
    let ctx = AlgoContext { n, t };

    let source_of = |p: ProcessId| -> Option<&Execution> {
        if left.group.contains(&p) {
            Some(el)
        } else if right.group.contains(&p) {
            Some(er)
        } else {
            None
        }
    };

    struct Live {
        state: ProcState,
        pending: Vec<(ProcessId, crate::model::Bytes)>,
    }
    let mut live: BTreeMap<ProcessId, Live> = BTreeMap::new();
    for p in el.processes() {
        if source_of(p).is_some() {
            continue;
        }
        let out = algo
            .round_one(&ctx, p, left.bit)
            .map_err(|source| MergeError::Replay {
                process: p,
                round: 1,
                source,
            })?;
        live.insert(
            p,
            Live {
                state: ProcState {
                    process: p,
                    round: 1,
                    proposal: left.bit,
                    decision: out.decision,
                    internal: out.internal,
                },
                pending: out.sends,
            },
        );
    }

    let mut fragments: BTreeMap<ProcessId, Vec<Fragment>> =
        el.processes().map(|p| (p, Vec::new())).collect();

    for r in 1..=horizon {
        // The merged flow of round r: live sends plus the groups' source
        // sends, none of them omitted.
        let mut flow: BTreeMap<ProcessId, BTreeSet<Message>> = BTreeMap::new();
        for p in el.processes() {
            let sent: BTreeSet<Message> = match source_of(p) {
                Some(src) => src.behavior(p)?.sent(r)?.clone(),
                None => live[&p]
                    .pending
                    .iter()
                    .map(|(to, payload)| Message {
                        sender: p,
                        receiver: *to,
                        round: r,
                        payload: payload.clone(),
                    })
                    .collect(),
            };
            for m in &sent {
                flow.entry(m.receiver).or_default().insert(m.clone());
            }
            fragments.get_mut(&p).expect("covered").push(Fragment {
                state: ProcState {
                    process: p,
                    round: r,
                    proposal: Bit::Zero,
                    decision: None,
                    internal: crate::model::Bytes::empty(),
                },
                sent,
                send_omitted: BTreeSet::new(),
                received: BTreeSet::new(),
                receive_omitted: BTreeSet::new(),
            });
        }

        // Fill in states and received sets.
        for p in el.processes() {
            let addressed = flow.remove(&p).unwrap_or_default();
            let frag = fragments
                .get_mut(&p)
                .expect("covered")
                .last_mut()
                .expect("pushed");
            match source_of(p) {
                Some(src) => {
                    let b = src.behavior(p)?;
                    frag.state = b.state(r)?.clone();
                    frag.received = b.received(r)?.clone();
                    let received_keys: BTreeSet<MessageKey> =
                        frag.received.iter().map(Message::key).collect();
                    frag.receive_omitted = addressed
                        .into_iter()
                        .filter(|m| !received_keys.contains(&m.key()))
                        .collect();
                }
                None => {
                    let cell = live.get_mut(&p).expect("live");
                    frag.state = cell.state.clone();
                    frag.received = addressed;
                }
            }
        }

        if r == horizon {
            break;
        }
        for (p, cell) in live.iter_mut() {
            let frag = fragments[p].last().expect("pushed");
            let view = StateView {
                round: cell.state.round,
                proposal: cell.state.proposal,
                decision: cell.state.decision,
                internal: cell.state.internal.as_slice(),
            };
            let out = algo
                .transition(&ctx, *p, &view, &frag.received)
                .map_err(|source| MergeError::Replay {
                    process: *p,
                    round: r,
                    source,
                })?;
            let decision = match (cell.state.decision, out.decision) {
                (Some(old), Some(new)) if old != new => {
                    return Err(MergeError::DecisionChanged {
                        process: *p,
                        round: r,
                    })
                }
                (Some(old), _) => Some(old),
                (None, d) => d,
            };
            cell.state = ProcState {
                process: *p,
                round: r + 1,
                proposal: cell.state.proposal,
                decision,
                internal: out.internal,
            };
            cell.pending = out.sends;
        }
    }

    let behaviors = fragments
        .into_iter()
        .map(|(p, frags)| (p, Behavior::new(frags)))
        .collect();
    Ok(Execution::new(n, t, faulty, behaviors, horizon)?)
}
