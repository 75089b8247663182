//! Synchronous round engine.
//!
//! Drives a deterministic algorithm through compute/send/receive rounds under
//! a declarative fault plan and records the complete execution: every state,
//! send, omission, and receipt of every process. Identical inputs produce
//! byte-identical executions; nothing here draws randomness.

mod algorithm;
mod candidates;
mod schedule;
pub mod values;

pub use algorithm::{AlgoContext, AlgoError, AlgoOutput, Algorithm, StateView};
pub use candidates::{FloodEcho, SilentDefault, StarLeader};
pub use schedule::{
    AdversarySchedule, ByzantineBinding, IsolationDirective, OmissionDirective, OmissionKind,
    ScheduleError,
};
pub use values::{
    run_values, AttackCtx, ByzantineBehavior, SignatureOracle, SignatureToken, ValueCtx,
    ValueEngineError, ValueMachine, ValueRun, ValueRunConfig, VmOutput,
};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{
    Behavior, Bit, Bytes, Execution, ExecutionShapeError, Fragment, Message, ProcState, ProcessId,
    Round,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("{got} proposals for n = {n}")]
    ProposalCount { n: u32, got: usize },
    #[error("schedule rejected: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("schedule binds Byzantine behaviors; the omission engine cannot apply them")]
    ByzantineUnsupported,
    #[error("{process} round {round}: algorithm failed: {source}")]
    Algo {
        process: ProcessId,
        round: Round,
        source: AlgoError,
    },
    #[error("{process} round {round}: send to itself")]
    SelfSend { process: ProcessId, round: Round },
    #[error("{process} round {round}: duplicate send to {receiver}")]
    DuplicateSend {
        process: ProcessId,
        round: Round,
        receiver: ProcessId,
    },
    #[error("{process} round {round}: send to unknown process {receiver}")]
    UnknownReceiver {
        process: ProcessId,
        round: Round,
        receiver: ProcessId,
    },
    #[error("{process} round {round}: decision changed from {from} to {to}")]
    DecisionFlip {
        process: ProcessId,
        round: Round,
        from: Bit,
        to: Bit,
    },
    #[error("internal shape error: {0}")]
    Shape(#[from] ExecutionShapeError),
}

/// Parameters of one engine run.
#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub n: u32,
    pub t: u32,
    pub horizon: Round,
    /// Abort once correct processes have sent this many messages; the
    /// execution is truncated after the round that crossed the bound.
    pub budget_abort: Option<u64>,
}

impl RunConfig {
    pub fn new(n: u32, t: u32, horizon: Round) -> RunConfig {
        RunConfig {
            n,
            t,
            horizon,
            budget_abort: None,
        }
    }
}

/// Result of a run, with the correct-sent message count and whether the run
/// covered the full horizon or stopped at the budget.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub execution: Execution,
    pub correct_sent: u64,
    pub complete: bool,
}

/// Runs `algo` under `schedule` and returns the full execution.
pub fn run(
    algo: &dyn Algorithm,
    proposals: &[Bit],
    schedule: &AdversarySchedule,
    config: RunConfig,
) -> Result<Execution, EngineError> {
    Ok(run_with_outcome(algo, proposals, schedule, config)?.execution)
}

/// As [`run`], but also reports message counts and budget truncation.
pub fn run_with_outcome(
    algo: &dyn Algorithm,
    proposals: &[Bit],
    schedule: &AdversarySchedule,
    config: RunConfig,
) -> Result<RunOutcome, EngineError> {
    let RunConfig { n, t, horizon, .. } = config;
    if horizon == 0 {
        return Err(EngineError::ZeroHorizon);
    }
    if proposals.len() != n as usize {
        return Err(EngineError::ProposalCount {
            n,
            got: proposals.len(),
        });
    }
    schedule.validate(n, t)?;
    if !schedule.byzantine.is_empty() {
        return Err(EngineError::ByzantineUnsupported);
    }
    let ctx = AlgoContext { n, t };

    let mut send_om: BTreeSet<(ProcessId, ProcessId, Round)> = BTreeSet::new();
    let mut recv_om: BTreeSet<(ProcessId, ProcessId, Round)> = BTreeSet::new();
    for o in &schedule.omissions {
        match o.kind {
            OmissionKind::Send => send_om.insert((o.from, o.to, o.round)),
            OmissionKind::Receive => recv_om.insert((o.from, o.to, o.round)),
        };
    }
    let isolated_from = |receiver: ProcessId, sender: ProcessId, round: Round| {
        schedule.isolate.iter().any(|d| {
            round >= d.from_round && d.group.contains(&receiver) && !d.group.contains(&sender)
        })
    };

    struct Cell {
        state: ProcState,
        pending: Vec<(ProcessId, Bytes)>,
        fragments: Vec<Fragment>,
    }
    let mut cells: BTreeMap<ProcessId, Cell> = BTreeMap::new();
    for idx in 1..=n {
        let p = ProcessId(idx);
        let proposal = proposals[(idx - 1) as usize];
        let out = algo
            .round_one(&ctx, p, proposal)
            .map_err(|source| EngineError::Algo {
                process: p,
                round: 1,
                source,
            })?;
        check_sends(&out.sends, p, 1, n)?;
        cells.insert(
            p,
            Cell {
                state: ProcState {
                    process: p,
                    round: 1,
                    proposal,
                    decision: out.decision,
                    internal: out.internal,
                },
                pending: out.sends,
                fragments: Vec::new(),
            },
        );
    }

    let mut correct_sent: u64 = 0;
    let mut recorded: Round = 0;
    for r in 1..=horizon {
        // Classify this round's sends and queue deliveries.
        let mut deliveries: BTreeMap<ProcessId, BTreeSet<Message>> = BTreeMap::new();
        for idx in 1..=n {
            let p = ProcessId(idx);
            let cell = cells.get_mut(&p).expect("cell");
            let mut sent = BTreeSet::new();
            let mut send_omitted = BTreeSet::new();
            for (to, payload) in cell.pending.drain(..) {
                let m = Message {
                    sender: p,
                    receiver: to,
                    round: r,
                    payload,
                };
                if send_om.contains(&(p, to, r)) {
                    send_omitted.insert(m);
                } else {
                    deliveries.entry(to).or_default().insert(m.clone());
                    sent.insert(m);
                }
            }
            if !schedule.faulty.contains(&p) {
                correct_sent += sent.len() as u64;
            }
            cell.fragments.push(Fragment {
                state: cell.state.clone(),
                sent,
                send_omitted,
                received: BTreeSet::new(),
                receive_omitted: BTreeSet::new(),
            });
        }
        // Deliver, applying receive omissions and isolation.
        for (p, incoming) in deliveries {
            let cell = cells.get_mut(&p).expect("cell");
            let frag = cell.fragments.last_mut().expect("fragment");
            for m in incoming {
                if recv_om.contains(&(m.sender, p, r)) || isolated_from(p, m.sender, r) {
                    frag.receive_omitted.insert(m);
                } else {
                    frag.received.insert(m);
                }
            }
        }
        recorded = r;
        if let Some(budget) = config.budget_abort {
            if correct_sent >= budget {
                break;
            }
        }
        if r == horizon {
            break;
        }
        // Transition into round r + 1.
        for idx in 1..=n {
            let p = ProcessId(idx);
            let cell = cells.get_mut(&p).expect("cell");
            let frag = cell.fragments.last().expect("fragment");
            let view = StateView {
                round: cell.state.round,
                proposal: cell.state.proposal,
                decision: cell.state.decision,
                internal: cell.state.internal.as_slice(),
            };
            let out =
                algo.transition(&ctx, p, &view, &frag.received)
                    .map_err(|source| EngineError::Algo {
                        process: p,
                        round: r,
                        source,
                    })?;
            check_sends(&out.sends, p, r + 1, n)?;
            let decision = match (cell.state.decision, out.decision) {
                (Some(old), Some(new)) if old != new => {
                    return Err(EngineError::DecisionFlip {
                        process: p,
                        round: r,
                        from: old,
                        to: new,
                    })
                }
                (Some(old), _) => Some(old),
                (None, d) => d,
            };
            let internal = if out.internal == cell.state.internal {
                cell.state.internal.clone()
            } else {
                out.internal
            };
            cell.state = ProcState {
                process: p,
                round: r + 1,
                proposal: cell.state.proposal,
                decision,
                internal,
            };
            cell.pending = out.sends;
        }
    }

    let behaviors: BTreeMap<ProcessId, Behavior> = cells
        .into_iter()
        .map(|(p, cell)| (p, Behavior::new(cell.fragments)))
        .collect();
    let execution = Execution::new(n, t, schedule.faulty.clone(), behaviors, recorded)?;
    Ok(RunOutcome {
        complete: recorded == horizon,
        correct_sent,
        execution,
    })
}

fn check_sends(
    sends: &[(ProcessId, Bytes)],
    p: ProcessId,
    round: Round,
    n: u32,
) -> Result<(), EngineError> {
    let mut seen = BTreeSet::new();
    for (to, _) in sends {
        if *to == p {
            return Err(EngineError::SelfSend { process: p, round });
        }
        if to.0 == 0 || to.0 > n {
            return Err(EngineError::UnknownReceiver {
                process: p,
                round,
                receiver: *to,
            });
        }
        if !seen.insert(*to) {
            return Err(EngineError::DuplicateSend {
                process: p,
                round,
                receiver: *to,
            });
        }
    }
    Ok(())
}

/// Number of messages sent by correct processes.
pub fn message_complexity(e: &Execution) -> u64 {
    e.correct_processes()
        .map(|p| {
            e.behavior(p)
                .expect("shape-checked")
                .fragments()
                .iter()
                .map(|f| f.sent.len() as u64)
                .sum::<u64>()
        })
        .sum()
}

/// Decision of one process, with the first round whose entering state
/// carries it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecisionEntry {
    pub decision: Option<Bit>,
    pub decided_round: Option<Round>,
}

/// Per-process decision summary of an execution.
#[derive(Clone, Debug)]
pub struct DecisionTable {
    entries: BTreeMap<ProcessId, DecisionEntry>,
    faulty: BTreeSet<ProcessId>,
}

impl DecisionTable {
    pub fn entry(&self, p: ProcessId) -> Option<DecisionEntry> {
        self.entries.get(&p).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (ProcessId, DecisionEntry)> + '_ {
        self.entries.iter().map(|(p, e)| (*p, *e))
    }

    pub fn correct_entries(&self) -> impl Iterator<Item = (ProcessId, DecisionEntry)> + '_ {
        self.entries()
            .filter(move |(p, _)| !self.faulty.contains(p))
    }

    /// Correct processes still undecided at the horizon.
    pub fn correct_undecided(&self) -> Vec<ProcessId> {
        self.correct_entries()
            .filter(|(_, e)| e.decision.is_none())
            .map(|(p, _)| p)
            .collect()
    }

    pub fn correct_all_decided(&self) -> bool {
        self.correct_entries().all(|(_, e)| e.decision.is_some())
    }

    /// `Some(b)` when every correct process decided `b`.
    pub fn correct_unanimous(&self) -> Option<Bit> {
        let mut value = None;
        for (_, e) in self.correct_entries() {
            match (value, e.decision?) {
                (None, b) => value = Some(b),
                (Some(v), b) if v != b => return None,
                _ => {}
            }
        }
        value
    }

    /// First pair of correct processes with conflicting decisions.
    pub fn correct_disagreement(&self) -> Option<(ProcessId, ProcessId)> {
        let decided: Vec<(ProcessId, Bit)> = self
            .correct_entries()
            .filter_map(|(p, e)| e.decision.map(|d| (p, d)))
            .collect();
        for (p, d) in &decided {
            for (q, e) in &decided {
                if d != e {
                    return Some((*p.min(q), *p.max(q)));
                }
            }
        }
        None
    }

    /// Latest first-decided round among correct processes; `None` while any
    /// correct process is undecided.
    pub fn max_correct_decided_round(&self) -> Option<Round> {
        let mut max = 0;
        for (_, e) in self.correct_entries() {
            max = max.max(e.decided_round?);
        }
        Some(max)
    }
}

/// Extracts the decision table of an execution.
pub fn decisions(e: &Execution) -> DecisionTable {
    let entries = e
        .processes()
        .map(|p| {
            let b = e.behavior(p).expect("shape-checked");
            (
                p,
                DecisionEntry {
                    decision: b.decision(),
                    decided_round: b.first_decided_round(),
                },
            )
        })
        .collect();
    DecisionTable {
        entries,
        faulty: e.faulty().clone(),
    }
}

/// `Some(d)` when every correct process has decided by round `d` and the
/// horizon leaves at least two rounds of slack after `d`, so the decision
/// prefix is complete in the record.
pub fn certified_decision_round(e: &Execution) -> Option<Round> {
    let d = decisions(e).max_correct_decided_round()?;
    if e.horizon() >= d + 2 {
        Some(d)
    } else {
        None
    }
}
