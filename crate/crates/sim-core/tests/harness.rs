//! End-to-end falsification runs against the built-in candidates, plus the
//! independent verdict verifier and its tamper resistance.

use std::collections::BTreeSet;

use sim_core::engine::{
    AlgoContext, AlgoError, AlgoOutput, Algorithm, FloodEcho, SilentDefault, StarLeader, StateView,
};
use sim_core::harness::{
    falsify, find_decision_round, probe_budget, verify_verdict, BaselineOutcome, HarnessError,
    Property, Verdict, VerifyError,
};
use sim_core::model::{Bit, Bytes, Message, ProcessId};
use sim_core::reductions::reference_weak;

#[test]
fn parameters_are_checked_up_front() {
    assert!(matches!(
        falsify(&SilentDefault, 9, 6),
        Err(HarnessError::BadParameters(_))
    ));
    assert!(matches!(
        falsify(&SilentDefault, 8, 8),
        Err(HarnessError::BadParameters(_))
    ));
    assert!(matches!(
        find_decision_round(&SilentDefault, 9, 7),
        Err(HarnessError::BadParameters(_))
    ));
}

#[test]
fn budget_arithmetic() {
    assert_eq!(probe_budget(128), 512);
    assert_eq!(probe_budget(8), 2);
}

/// Decides its own proposal immediately and never talks.
struct EchoProposal;

impl Algorithm for EchoProposal {
    fn id(&self) -> String {
        "echo-proposal".into()
    }
    fn round_one(
        &self,
        _ctx: &AlgoContext,
        _me: ProcessId,
        proposal: Bit,
    ) -> Result<AlgoOutput, AlgoError> {
        Ok(AlgoOutput {
            internal: Bytes::empty(),
            decision: Some(proposal),
            sends: Vec::new(),
        })
    }
    fn transition(
        &self,
        _ctx: &AlgoContext,
        _me: ProcessId,
        _state: &StateView<'_>,
        _received: &BTreeSet<Message>,
    ) -> Result<AlgoOutput, AlgoError> {
        Ok(AlgoOutput::quiet(Bytes::empty()))
    }
}

#[test]
fn baseline_decision_rounds() {
    match find_decision_round(&EchoProposal, 9, 8).unwrap() {
        BaselineOutcome::Decided(r) => assert_eq!(r, 1),
        other => panic!("expected a decision round, got {other:?}"),
    }
    match find_decision_round(&FloodEcho { k: 2 }, 9, 8).unwrap() {
        BaselineOutcome::Decided(r) => assert_eq!(r, 3),
        other => panic!("expected a decision round, got {other:?}"),
    }
}

#[test]
fn baseline_flags_default_deciders() {
    // silent-default ignores an all-zero electorate and decides 1, which the
    // all-zero baseline alone refutes.
    match find_decision_round(&SilentDefault, 9, 8).unwrap() {
        BaselineOutcome::Verdict(v) => match *v {
            Verdict::Violation(v) => {
                assert_eq!(v.property, Property::Validity);
                assert_eq!(v.probe, "baseline-0");
            }
            other => panic!("expected a violation, got {other:?}"),
        },
        other => panic!("expected a verdict, got {other:?}"),
    }
}

fn expect_violation(algo: &dyn Algorithm, n: u32, t: u32) -> sim_core::harness::ViolationVerdict {
    match falsify(algo, n, t).unwrap() {
        Verdict::Violation(v) => {
            verify_verdict(&Verdict::Violation(v.clone()), algo)
                .expect("verifier must confirm the harness's own witness");
            v
        }
        Verdict::BudgetExceeded(b) => panic!("expected a violation, got budget verdict {b:?}"),
    }
}

#[test]
fn star_leader_falls_to_the_isolation_swap() {
    let v = expect_violation(&StarLeader, 129, 128);
    assert_eq!(v.property, Property::Agreement);
    assert_eq!(v.probe, "iso-b0k1");
    assert!(v.witness.faulty.len() <= 128);
    // The witness pits a swapped-correct group member against the remainder.
    assert!(v.offending.iter().any(|q| q.0 >= 66 && q.0 <= 97));
}

#[test]
fn silent_default_falls_to_the_baseline() {
    let v = expect_violation(&SilentDefault, 129, 128);
    assert_eq!(v.property, Property::Validity);
    assert_eq!(v.probe, "baseline-0");
    assert!(v.witness.faulty.is_empty());
}

#[test]
fn flood_echo_falls_to_the_budget_audit() {
    let v = expect_violation(&FloodEcho { k: 1 }, 129, 128);
    assert_eq!(v.property, Property::Agreement);
    assert!(v.probe.starts_with("audit-"), "probe was {}", v.probe);
}

#[test]
fn small_scale_star_leader_exhausts_the_budget() {
    // At t = 8 the budget is 2 messages, which even the star topology blows
    // in its first probe; the closing audit finds nothing, so the hunt ends
    // in a budget verdict rather than a violation.
    match falsify(&StarLeader, 9, 8).unwrap() {
        Verdict::BudgetExceeded(b) => {
            assert_eq!(b.budget, 2);
            assert_eq!(b.first_over_budget, "baseline-0");
            assert!(b.audit_clean);
            assert!(b.observed > 2);
        }
        other => panic!("expected a budget verdict, got {other:?}"),
    }
}

#[test]
fn reference_algorithm_survives_with_a_budget_verdict() {
    let algo = reference_weak(129, 128);
    match falsify(&algo, 129, 128).unwrap() {
        Verdict::BudgetExceeded(b) => {
            assert_eq!(b.budget, 512);
            assert!(b.observed >= 512);
            assert!(b.max_observed >= b.observed);
            assert!(b.audit_clean);
            assert!(b.probes.iter().any(|p| p.name.starts_with("audit-")));
            let first = b.probes.iter().find(|p| p.name == b.first_over_budget);
            assert!(first.is_some_and(|p| p.over_budget && p.correct_sent == b.observed));
        }
        Verdict::Violation(v) => panic!(
            "reference algorithm refuted: {} violation at {} ({})",
            v.property, v.probe, v.detail
        ),
    }
}

#[test]
fn verifier_rejects_a_tampered_witness() {
    let algo = StarLeader;
    let mut v = expect_violation(&algo, 129, 128);
    let culprit = v.offending[0];
    let tp = v
        .witness
        .processes
        .iter_mut()
        .find(|tp| tp.process == culprit)
        .unwrap();
    for round in &mut tp.rounds {
        round.decision = round.decision.map(|b| b.flip());
    }
    let doctored = Verdict::Violation(v);
    assert!(matches!(
        verify_verdict(&doctored, &algo),
        Err(VerifyError::InvalidWitness { .. })
    ));
}

#[test]
fn verifier_rejects_a_mislabeled_property() {
    let algo = StarLeader;
    let mut v = expect_violation(&algo, 129, 128);
    v.property = Property::Termination;
    let mislabeled = Verdict::Violation(v);
    assert!(matches!(
        verify_verdict(&mislabeled, &algo),
        Err(VerifyError::NotViolated { .. })
    ));
}

#[test]
fn verdicts_round_trip_through_json() {
    let verdict = falsify(&StarLeader, 129, 128).unwrap();
    let json = serde_json::to_string_pretty(&verdict).unwrap();
    assert!(json.contains("\"verdict\": \"violation\""));
    assert!(json.contains("\"property\": \"agreement\""));
    let back: Verdict = serde_json::from_str(&json).unwrap();
    assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);
    verify_verdict(&back, &StarLeader).unwrap();
}

