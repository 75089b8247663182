//! Falsification harness.
//!
//! Given a binary agreement candidate, the harness hunts for a concrete
//! counterexample execution while spending only a bounded number of correct
//! messages per probe. The hunt runs fault-free baselines, isolates two
//! canonical groups behind receive omissions at increasing start rounds,
//! merges isolated executions, and extracts disagreements by swapping one
//! group member's receive omissions into sender-side send omissions, which
//! makes that member correct without changing anyone's view. A candidate
//! that pushes every probe over the message budget is conceded: a final
//! unbudgeted audit with a single silenced link still has to come back
//! clean before the harness reports the budget as the only obstacle.

pub mod verifier;

pub use verifier::{verify_verdict, VerifyError};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    merge, receive_omissions_from, swap_omission, MergeError, Partition, PartitionError, SwapError,
    TaggedExecution,
};
use crate::engine::{
    decisions, message_complexity, run_with_outcome, AdversarySchedule, Algorithm, EngineError,
    OmissionDirective, OmissionKind, RunConfig,
};
use crate::model::{AccessError, Bit, Execution, ProcessId, Round};
use crate::trace::{TraceDoc, TraceOptions};

/// Environment variable overriding the probe horizon cap.
pub const HORIZON_CAP_ENV: &str = "SIM_HORIZON_CAP";
pub const DEFAULT_HORIZON_CAP: Round = 10_000;

/// Largest horizon a probe may grow to before the candidate is treated as
/// non-terminating.
pub fn horizon_cap() -> Round {
    std::env::var(HORIZON_CAP_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|v| *v >= 4)
        .unwrap_or(DEFAULT_HORIZON_CAP)
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("engine failed: {0}")]
    Engine(#[from] EngineError),
    #[error("omission swap failed: {0}")]
    Swap(#[from] SwapError),
    #[error("merge failed: {0}")]
    Merge(#[from] MergeError),
    #[error("record access failed: {0}")]
    Access(#[from] AccessError),
    #[error(
        "internal inconsistency: {0}; this state is unreachable for a candidate \
         that stays under the probe budget"
    )]
    InternalInconsistency(String),
}

/// Which agreement property a witness execution breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Agreement,
    Validity,
    Termination,
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Property::Agreement => write!(f, "agreement"),
            Property::Validity => write!(f, "validity"),
            Property::Termination => write!(f, "termination"),
        }
    }
}

/// A found counterexample: the property broken, the probe that produced the
/// witness, the processes exhibiting the break, and the full witness
/// execution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ViolationVerdict {
    pub property: Property,
    pub probe: String,
    pub offending: Vec<ProcessId>,
    pub detail: String,
    pub witness: TraceDoc,
}

/// One probe of the hunt, as reported in a budget verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub name: String,
    pub horizon: Round,
    pub correct_sent: u64,
    pub over_budget: bool,
}

/// The candidate exceeded the budget on every path the harness tried, and
/// the closing audit found nothing wrong.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetVerdict {
    pub budget: u64,
    pub first_over_budget: String,
    pub observed: u64,
    pub max_observed: u64,
    pub audit_clean: bool,
    pub probes: Vec<ProbeReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Violation(ViolationVerdict),
    BudgetExceeded(BudgetVerdict),
}

/// The per-probe message budget for the hunt at fault bound `t`.
pub fn probe_budget(t: u32) -> u64 {
    (t as u64 * t as u64) / 32
}

/// Hunts for a counterexample to `algo` being a correct weak binary
/// agreement algorithm at system size `n` with fault bound `t`.
///
/// Requires `t` to be a multiple of 8, at least 8, and below `n`; the group
/// arithmetic of the canonical partition and the budget both build on that
/// granularity.
pub fn falsify(algo: &dyn Algorithm, n: u32, t: u32) -> Result<Verdict, HarnessError> {
    let partition = checked_partition(n, t)?;
    let mut hunt = Hunt {
        algo,
        n,
        t,
        budget: probe_budget(t),
        cap: horizon_cap(),
        partition,
        probes: Vec::new(),
        max_observed: 0,
    };
    hunt.run()
}

/// What the fault-free all-zero baseline of a candidate shows.
#[derive(Debug)]
pub enum BaselineOutcome {
    /// Round by which every process had decided.
    Decided(Round),
    /// The baseline alone already breaks a property.
    Verdict(Box<Verdict>),
}

/// Measures the latest decision round of the fault-free all-zero run.
///
/// Every process proposes zero and no process fails, so weak validity
/// pins the outcome: a decision other than zero, or no decision at all,
/// is already a violation and comes back as an embedded verdict. The run
/// is not budgeted. Parameter requirements match [`falsify`].
pub fn find_decision_round(
    algo: &dyn Algorithm,
    n: u32,
    t: u32,
) -> Result<BaselineOutcome, HarnessError> {
    let partition = checked_partition(n, t)?;
    let mut hunt = Hunt {
        algo,
        n,
        t,
        budget: u64::MAX,
        cap: horizon_cap(),
        partition,
        probes: Vec::new(),
        max_observed: 0,
    };
    match hunt.probe(
        "baseline-0",
        Bit::Zero,
        &AdversarySchedule::fault_free(),
        Some(Bit::Zero),
        &[],
    )? {
        Flow::Go(e) => {
            let r = decisions(&e).max_correct_decided_round().unwrap_or(1);
            Ok(BaselineOutcome::Decided(r))
        }
        Flow::Stop(v) => Ok(BaselineOutcome::Verdict(Box::new(v))),
    }
}

fn checked_partition(n: u32, t: u32) -> Result<Partition, HarnessError> {
    if n < 2 {
        return Err(HarnessError::BadParameters(format!(
            "need at least two processes, got n = {n}"
        )));
    }
    if t < 8 || t % 8 != 0 {
        return Err(HarnessError::BadParameters(format!(
            "t must be a positive multiple of 8, got {t}"
        )));
    }
    if t >= n {
        return Err(HarnessError::BadParameters(format!(
            "need t < n, got n = {n}, t = {t}"
        )));
    }
    Ok(Partition::canonical(n, t)?)
}

/// Outcome of one probe attempt inside the chain.
enum Flow {
    Go(Execution),
    Stop(Verdict),
}

macro_rules! go {
    ($hunt:expr, $probe:expr) => {
        match $probe {
            Flow::Go(e) => e,
            Flow::Stop(v) => return Ok(v),
        }
    };
}

struct Hunt<'a> {
    algo: &'a dyn Algorithm,
    n: u32,
    t: u32,
    budget: u64,
    cap: Round,
    partition: Partition,
    probes: Vec<ProbeReport>,
    max_observed: u64,
}

impl Hunt<'_> {
    fn run(&mut self) -> Result<Verdict, HarnessError> {
        // Fault-free baselines pin down validity and the decision rounds.
        let base0 = go!(
            self,
            self.probe(
                "baseline-0",
                Bit::Zero,
                &AdversarySchedule::fault_free(),
                Some(Bit::Zero),
                &[],
            )?
        );
        let base1 = go!(
            self,
            self.probe(
                "baseline-1",
                Bit::One,
                &AdversarySchedule::fault_free(),
                Some(Bit::One),
                &[],
            )?
        );
        let r_max = [
            decisions(&base0).max_correct_decided_round().unwrap_or(1),
            decisions(&base1).max_correct_decided_round().unwrap_or(1),
        ];

        // Full isolation of each group under each uniform proposal.
        let b = self.partition.b.clone();
        let c = self.partition.c.clone();
        let mut iso1: BTreeMap<(Bit, char), Execution> = BTreeMap::new();
        for (bit, side) in [
            (Bit::Zero, 'b'),
            (Bit::Zero, 'c'),
            (Bit::One, 'b'),
            (Bit::One, 'c'),
        ] {
            let group = if side == 'b' { &b } else { &c };
            let e = go!(
                self,
                self.probe(
                    &iso_name(side, bit, 1),
                    bit,
                    &AdversarySchedule::isolation(group.clone(), 1),
                    None,
                    &[group],
                )?
            );
            iso1.insert((bit, side), e);
        }

        // Where the fully isolated groups land for each uniform proposal.
        let defaults: BTreeMap<(Bit, char), Option<Bit>> = iso1
            .iter()
            .map(|((bit, side), e)| {
                let group = if *side == 'b' { &b } else { &c };
                ((*bit, *side), group_decision(e, group))
            })
            .collect();

        // Any pair of differing group defaults merges into an execution in
        // which the two faulty groups disagree with each other, so at least
        // one disagrees with the correct remainder.
        for x in [Bit::Zero, Bit::One] {
            for y in [Bit::Zero, Bit::One] {
                let (db, dc) = (defaults[&(x, 'b')], defaults[&(y, 'c')]);
                let (Some(db), Some(dc)) = (db, dc) else {
                    continue;
                };
                if db == dc {
                    continue;
                }
                let left = tag(&iso1[&(x, 'b')], &b, 1, x);
                let right = tag(&iso1[&(y, 'c')], &c, 1, y);
                let name = format!("merge[{}+{}]", iso_name('b', x, 1), iso_name('c', y, 1));
                go!(self, self.merge_probe(&name, &left, &right)?);
            }
        }

        // Critical round scan: in the family whose uniform proposal differs
        // from the group default, the group's decision must flip as the
        // isolation start moves past the baseline decision rounds. The two
        // merges around the first flip trap the disagreement.
        let mut scanned = false;
        for a in [Bit::Zero, Bit::One] {
            let matches_default = defaults[&(a, 'b')] == Some(a);
            if matches_default {
                continue;
            }
            scanned = true;
            let cap_k = r_max[a.as_u8() as usize] + 1;
            if let Some(v) = self.critical_scan(a, cap_k, &iso1[&(a, 'b')])? {
                return Ok(v);
            }
        }
        let _ = scanned;

        Err(HarnessError::InternalInconsistency(
            "chain exhausted without a violation or an over-budget probe".to_string(),
        ))
    }

    /// Scans isolation starts `2..=cap_k` of group `b` under uniform
    /// proposal `a`, then merges around the first decision flip.
    fn critical_scan(
        &mut self,
        a: Bit,
        cap_k: Round,
        iso_b1: &Execution,
    ) -> Result<Option<Verdict>, HarnessError> {
        let b = self.partition.b.clone();
        let c = self.partition.c.clone();
        let mut prev: (Round, Execution) = (1, iso_b1.clone());
        let mut prev_dec = group_decision(iso_b1, &b);
        for k in 2..=cap_k {
            let e_k = match self.probe(
                &iso_name('b', a, k),
                a,
                &AdversarySchedule::isolation(b.clone(), k),
                None,
                &[&b],
            )? {
                Flow::Go(e) => e,
                Flow::Stop(v) => return Ok(Some(v)),
            };
            let dec_k = group_decision(&e_k, &b);
            if dec_k != prev_dec {
                let r = prev.0;
                let e_cr = match self.probe(
                    &iso_name('c', a, r),
                    a,
                    &AdversarySchedule::isolation(c.clone(), r),
                    None,
                    &[&c],
                )? {
                    Flow::Go(e) => e,
                    Flow::Stop(v) => return Ok(Some(v)),
                };
                let right = tag(&e_cr, &c, r, a);
                for (left_e, left_k, label) in [(&prev.1, r, "m1"), (&e_k, k, "m2")] {
                    let left = tag(left_e, &b, left_k, a);
                    let name = format!(
                        "{label}[{}+{}]",
                        iso_name('b', a, left_k),
                        iso_name('c', a, r)
                    );
                    if let Flow::Stop(v) = self.merge_probe(&name, &left, &right)? {
                        return Ok(Some(v));
                    }
                }
                return Ok(None);
            }
            prev = (k, e_k);
            prev_dec = dec_k;
        }
        Ok(None)
    }

    /// Runs one budgeted probe and applies the standard checks: direct
    /// disagreement, expected baseline decision, and the majority analysis
    /// of each listed group.
    fn probe(
        &mut self,
        name: &str,
        bit: Bit,
        schedule: &AdversarySchedule,
        expected: Option<Bit>,
        groups: &[&BTreeSet<ProcessId>],
    ) -> Result<Flow, HarnessError> {
        let proposals = vec![bit; self.n as usize];
        let status = self.run_probe(&proposals, schedule, Some(self.budget))?;
        match status {
            ProbeStatus::OverBudget { horizon, observed } => {
                self.log(name, horizon, observed, true);
                Ok(Flow::Stop(self.concede(name, observed)?))
            }
            ProbeStatus::NeverDecides {
                execution,
                correct_sent,
            } => {
                self.log(name, execution.horizon(), correct_sent, false);
                Ok(Flow::Stop(self.termination_verdict(name, &execution)))
            }
            ProbeStatus::Complete {
                execution,
                correct_sent,
            } => {
                self.log(name, execution.horizon(), correct_sent, false);
                self.checks(name, execution, expected, groups)
            }
        }
    }

    /// Merges two tagged executions and applies the same checks as a probe.
    fn merge_probe(
        &mut self,
        name: &str,
        left: &TaggedExecution,
        right: &TaggedExecution,
    ) -> Result<Flow, HarnessError> {
        let merged = merge(self.algo, left, right)?;
        let sent = message_complexity(&merged);
        let over = sent >= self.budget;
        self.log(name, merged.horizon(), sent, over);
        if over {
            return Ok(Flow::Stop(self.concede(name, sent)?));
        }
        let groups = [&left.group, &right.group];
        let group_refs: Vec<&BTreeSet<ProcessId>> = groups.to_vec();
        self.checks(name, merged, None, &group_refs)
    }

    fn checks(
        &mut self,
        name: &str,
        execution: Execution,
        expected: Option<Bit>,
        groups: &[&BTreeSet<ProcessId>],
    ) -> Result<Flow, HarnessError> {
        let table = decisions(&execution);
        if let Some((p, q)) = table.correct_disagreement() {
            let (dp, dq) = (
                table.entry(p).and_then(|e| e.decision),
                table.entry(q).and_then(|e| e.decision),
            );
            let detail = format!(
                "{p} decided {} while {q} decided {}",
                fmt_dec(dp),
                fmt_dec(dq)
            );
            return Ok(Flow::Stop(self.violation(
                Property::Agreement,
                name,
                vec![p, q],
                detail,
                &execution,
            )));
        }
        if let Some(want) = expected {
            let strays: Vec<ProcessId> = table
                .correct_entries()
                .filter(|(_, e)| e.decision != Some(want))
                .map(|(p, _)| p)
                .collect();
            if !strays.is_empty() {
                let first = strays[0];
                let got = table.entry(first).and_then(|e| e.decision);
                let detail = format!(
                    "every process proposed {want} yet {first} decided {}",
                    fmt_dec(got)
                );
                return Ok(Flow::Stop(self.violation(
                    Property::Validity,
                    name,
                    strays,
                    detail,
                    &execution,
                )));
            }
        }
        for group in groups {
            if let Some(v) = self.majority_check(name, &execution, group)? {
                return Ok(Flow::Stop(v));
            }
        }
        Ok(Flow::Go(execution))
    }

    /// The majority analysis: when the correct processes are unanimous but
    /// a swappable group member decided otherwise, swapping its receive
    /// omissions to the senders produces a legal execution in which that
    /// member is correct and still disagrees.
    ///
    /// Under the budget, a group with at most half its members on the
    /// unanimous value always contains a swappable member: if every
    /// conflicting member receive-omitted at least `t/2` correct messages,
    /// the correct processes alone would have sent over `t^2 / 16` of them,
    /// twice the budget.
    fn majority_check(
        &mut self,
        name: &str,
        e: &Execution,
        group: &BTreeSet<ProcessId>,
    ) -> Result<Option<Verdict>, HarnessError> {
        if message_complexity(e) >= self.budget {
            return Ok(None);
        }
        let table = decisions(e);
        let Some(b_x) = table.correct_unanimous() else {
            return Ok(None);
        };
        if !table.correct_undecided().is_empty() {
            return Ok(None);
        }
        let correct: BTreeSet<ProcessId> = e.correct_processes().collect();
        let mut conflicting: Vec<ProcessId> = Vec::new();
        let mut undecided: Vec<ProcessId> = Vec::new();
        let mut agreeing = 0usize;
        for p in group {
            match table.entry(*p).and_then(|en| en.decision) {
                Some(d) if d == b_x => agreeing += 1,
                Some(_) => conflicting.push(*p),
                None => undecided.push(*p),
            }
        }
        // The counting argument only guarantees a swappable member when at
        // most half the group sits on the unanimous value; conflicting
        // members are still tried opportunistically otherwise.
        let guaranteed = 2 * agreeing <= group.len();
        let candidates: Vec<ProcessId> =
            conflicting.into_iter().chain(undecided).collect();
        if candidates.is_empty() {
            return Ok(None);
        }
        for p in &candidates {
            let from_correct = receive_omissions_from(e, *p, &correct)?;
            if from_correct >= (self.t / 2) as u64 {
                continue;
            }
            let outcome = swap_omission(e, *p)?;
            if outcome.new_faulty.contains(p) {
                // Own send omissions keep the member faulty; no lever.
                continue;
            }
            let Some(swapped) = outcome.execution else {
                continue;
            };
            let p_dec = decisions(&swapped).entry(*p).and_then(|en| en.decision);
            let verdict = match p_dec {
                Some(d) => {
                    let partner = swapped
                        .correct_processes()
                        .find(|q| {
                            *q != *p
                                && decisions(&swapped).entry(*q).and_then(|en| en.decision)
                                    == Some(b_x)
                        })
                        .ok_or_else(|| {
                            HarnessError::InternalInconsistency(
                                "no correct partner survived the swap".to_string(),
                            )
                        })?;
                    let detail =
                        format!("after the swap, {p} decided {d} while {partner} decided {b_x}");
                    self.violation(
                        Property::Agreement,
                        name,
                        vec![*p, partner],
                        detail,
                        &swapped,
                    )
                }
                None => {
                    let detail = format!(
                        "after the swap, {p} is correct yet undecided at horizon {}",
                        swapped.horizon()
                    );
                    self.violation(Property::Termination, name, vec![*p], detail, &swapped)
                }
            };
            return Ok(Some(verdict));
        }
        if guaranteed {
            return Err(HarnessError::InternalInconsistency(format!(
                "probe {name}: no swappable member in a majority-conflicting group under budget"
            )));
        }
        Ok(None)
    }

    /// The closing audit once every budgeted path is exhausted: two full
    /// runs with one silenced link, no budget. Any disagreement or missing
    /// decision among correct processes is still a violation; otherwise the
    /// budget stands as the verdict.
    fn concede(&mut self, first_name: &str, observed: u64) -> Result<Verdict, HarnessError> {
        let pn = ProcessId(self.n);
        let p1 = ProcessId(1);
        let omissions: Vec<OmissionDirective> = (1..=self.cap)
            .map(|round| OmissionDirective {
                from: pn,
                to: p1,
                round,
                kind: OmissionKind::Send,
            })
            .collect();
        let schedule = AdversarySchedule {
            faulty: BTreeSet::from([pn]),
            isolate: Vec::new(),
            omissions,
            byzantine: Vec::new(),
        };
        for bit in [Bit::Zero, Bit::One] {
            let name = format!("audit-{bit}");
            let proposals = vec![bit; self.n as usize];
            let status = self.run_probe(&proposals, &schedule, None)?;
            match status {
                ProbeStatus::OverBudget { .. } => unreachable!("audit runs without a budget"),
                ProbeStatus::NeverDecides { execution, .. } => {
                    self.log(&name, execution.horizon(), 0, false);
                    return Ok(self.termination_verdict(&name, &execution));
                }
                ProbeStatus::Complete {
                    execution,
                    correct_sent,
                } => {
                    self.log(&name, execution.horizon(), correct_sent, false);
                    let table = decisions(&execution);
                    if let Some((p, q)) = table.correct_disagreement() {
                        let (dp, dq) = (
                            table.entry(p).and_then(|e| e.decision),
                            table.entry(q).and_then(|e| e.decision),
                        );
                        let detail = format!(
                            "{p} decided {} while {q} decided {}",
                            fmt_dec(dp),
                            fmt_dec(dq)
                        );
                        return Ok(self.violation(
                            Property::Agreement,
                            &name,
                            vec![p, q],
                            detail,
                            &execution,
                        ));
                    }
                }
            }
        }
        Ok(Verdict::BudgetExceeded(BudgetVerdict {
            budget: self.budget,
            first_over_budget: first_name.to_string(),
            observed,
            max_observed: self.max_observed,
            audit_clean: true,
            probes: self.probes.clone(),
        }))
    }

    fn termination_verdict(&self, name: &str, execution: &Execution) -> Verdict {
        let undecided = decisions(execution).correct_undecided();
        let first = undecided.first().copied().unwrap_or(ProcessId(1));
        let detail = format!(
            "{first} is correct yet undecided after {} rounds",
            execution.horizon()
        );
        self.violation(Property::Termination, name, undecided, detail, execution)
    }

    fn violation(
        &self,
        property: Property,
        probe: &str,
        offending: Vec<ProcessId>,
        detail: String,
        witness: &Execution,
    ) -> Verdict {
        Verdict::Violation(ViolationVerdict {
            property,
            probe: probe.to_string(),
            offending,
            detail,
            witness: TraceDoc::from_execution(
                witness,
                &TraceOptions {
                    full_state: true,
                    algorithm: Some(self.algo.id()),
                    schedule: None,
                },
            ),
        })
    }

    fn log(&mut self, name: &str, horizon: Round, correct_sent: u64, over_budget: bool) {
        self.max_observed = self.max_observed.max(correct_sent);
        self.probes.push(ProbeReport {
            name: name.to_string(),
            horizon,
            correct_sent,
            over_budget,
        });
    }

    /// Runs the engine, growing the horizon until every correct process has
    /// decided and the record extends two rounds past the last decision, or
    /// the cap intervenes.
    fn run_probe(
        &self,
        proposals: &[Bit],
        schedule: &AdversarySchedule,
        budget: Option<u64>,
    ) -> Result<ProbeStatus, HarnessError> {
        let hint = self
            .algo
            .decision_round_hint(self.n, self.t)
            .unwrap_or(2);
        let mut horizon = (hint + 2).max(4).min(self.cap);
        loop {
            let outcome = run_with_outcome(
                self.algo,
                proposals,
                schedule,
                RunConfig {
                    n: self.n,
                    t: self.t,
                    horizon,
                    budget_abort: budget,
                },
            )?;
            if !outcome.complete {
                return Ok(ProbeStatus::OverBudget {
                    horizon: outcome.execution.horizon(),
                    observed: outcome.correct_sent,
                });
            }
            let table = decisions(&outcome.execution);
            let correct_done = table.correct_undecided().is_empty();
            let last_decision = table
                .entries()
                .filter_map(|(_, e)| e.decided_round)
                .max()
                .unwrap_or(horizon);
            if correct_done && horizon >= last_decision.saturating_add(2) {
                return Ok(ProbeStatus::Complete {
                    execution: outcome.execution,
                    correct_sent: outcome.correct_sent,
                });
            }
            if horizon >= self.cap {
                return if correct_done {
                    Ok(ProbeStatus::Complete {
                        execution: outcome.execution,
                        correct_sent: outcome.correct_sent,
                    })
                } else {
                    Ok(ProbeStatus::NeverDecides {
                        execution: outcome.execution,
                        correct_sent: outcome.correct_sent,
                    })
                };
            }
            horizon = horizon.saturating_mul(2).min(self.cap);
        }
    }
}

enum ProbeStatus {
    Complete {
        execution: Execution,
        correct_sent: u64,
    },
    OverBudget {
        horizon: Round,
        observed: u64,
    },
    NeverDecides {
        execution: Execution,
        correct_sent: u64,
    },
}

fn iso_name(side: char, bit: Bit, k: Round) -> String {
    format!("iso-{side}{bit}k{k}")
}

fn fmt_dec(d: Option<Bit>) -> String {
    match d {
        Some(b) => b.to_string(),
        None => "nothing".to_string(),
    }
}

/// The unanimous decision of a group, when there is one.
fn group_decision(e: &Execution, group: &BTreeSet<ProcessId>) -> Option<Bit> {
    let table = decisions(e);
    let mut value: Option<Bit> = None;
    for p in group {
        let d = table.entry(*p).and_then(|en| en.decision)?;
        match value {
            None => value = Some(d),
            Some(v) if v != d => return None,
            _ => {}
        }
    }
    value
}

fn tag(e: &Execution, group: &BTreeSet<ProcessId>, k: Round, bit: Bit) -> TaggedExecution {
    TaggedExecution {
        execution: e.clone(),
        group: group.clone(),
        from_round: k,
        bit,
    }
}
