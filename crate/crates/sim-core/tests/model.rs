//! Record-object checks: fragment and behavior conditions, execution
//! guarantees, view projection, and the trace format round trip.

use std::collections::{BTreeMap, BTreeSet};

use sim_core::engine::{
    run, AdversarySchedule, AlgoContext, FloodEcho, OmissionDirective, OmissionKind, RunConfig,
    SilentDefault, StarLeader,
};
use sim_core::model::validate::{
    validate_behavior, validate_execution, validate_fragment, validate_structure,
    BehaviorViolation, ExecutionViolation, FragmentViolation,
};
use sim_core::model::{
    indistinguishable, indistinguishable_up_to, AccessError, Behavior, Bit, Bytes, Execution,
    Fragment, Message, ProcState, ProcessId, Round, ViewError,
};
use sim_core::trace::{TraceDoc, TraceError, TraceOptions};

fn p(i: u32) -> ProcessId {
    ProcessId(i)
}

fn msg(sender: u32, receiver: u32, round: Round, payload: &[u8]) -> Message {
    Message {
        sender: p(sender),
        receiver: p(receiver),
        round,
        payload: Bytes::new(payload.to_vec()),
    }
}

fn state(owner: u32, round: Round, proposal: Bit, decision: Option<Bit>) -> ProcState {
    ProcState {
        process: p(owner),
        round,
        proposal,
        decision,
        internal: Bytes::empty(),
    }
}

fn bare_fragment(owner: u32, round: Round) -> Fragment {
    Fragment {
        state: state(owner, round, Bit::Zero, None),
        sent: BTreeSet::new(),
        send_omitted: BTreeSet::new(),
        received: BTreeSet::new(),
        receive_omitted: BTreeSet::new(),
    }
}

fn fault_free(algo: &dyn sim_core::engine::Algorithm, n: u32, t: u32, horizon: Round) -> Execution {
    let proposals = vec![Bit::Zero; n as usize];
    run(
        algo,
        &proposals,
        &AdversarySchedule::fault_free(),
        RunConfig::new(n, t, horizon),
    )
    .expect("fault-free run")
}

#[test]
fn fragment_with_empty_message_sets_is_valid() {
    let f = bare_fragment(1, 1);
    assert_eq!(validate_fragment(&f, p(1), 1), Vec::new());
}

#[test]
fn fragment_flags_message_both_sent_and_send_omitted() {
    let m = msg(1, 2, 1, b"");
    let mut f = bare_fragment(1, 1);
    f.sent.insert(m.clone());
    f.send_omitted.insert(m.clone());
    let violations = validate_fragment(&f, p(1), 1);
    assert!(
        violations.contains(&FragmentViolation::SentAndOmitted { message: m.key() }),
        "expected a sent-and-omitted violation, got {violations:?}"
    );
}

#[test]
fn fragment_flags_two_receipts_from_one_sender() {
    let mut f = bare_fragment(1, 1);
    f.received.insert(msg(2, 1, 1, b"a"));
    f.received.insert(msg(2, 1, 1, b"b"));
    let violations = validate_fragment(&f, p(1), 1);
    assert!(
        violations.contains(&FragmentViolation::DuplicateSender {
            sender: p(2),
            round: 1
        }),
        "expected a duplicate-sender violation, got {violations:?}"
    );
}

#[test]
fn fragment_flags_message_tagged_for_another_round() {
    let m = msg(1, 2, 3, b"");
    let mut f = bare_fragment(1, 1);
    f.sent.insert(m.clone());
    let violations = validate_fragment(&f, p(1), 1);
    assert!(
        violations.contains(&FragmentViolation::MessageRound {
            message: m.key(),
            expected: 1
        }),
        "expected a message-round violation, got {violations:?}"
    );
}

#[test]
fn engine_behaviors_replay_cleanly() {
    let e = fault_free(&StarLeader, 4, 1, 3);
    let ctx = AlgoContext { n: 4, t: 1 };
    for q in e.processes() {
        let b = e.behavior(q).unwrap();
        assert_eq!(validate_behavior(b, q, &StarLeader, &ctx), Vec::new());
    }
}

#[test]
fn behavior_flags_proposal_change() {
    // A proposal is fixed at round one. A record that silently rewrites it in
    // round 3 must be rejected even though every round is locally consistent.
    let mut f1 = bare_fragment(1, 1);
    f1.state.decision = Some(Bit::One);
    let mut f2 = bare_fragment(1, 2);
    f2.state.decision = Some(Bit::One);
    let mut f3 = bare_fragment(1, 3);
    f3.state.decision = Some(Bit::One);
    f3.state.proposal = Bit::One;
    let b = Behavior::new(vec![f1, f2, f3]);
    let ctx = AlgoContext { n: 3, t: 1 };
    let violations = validate_behavior(&b, p(1), &SilentDefault, &ctx);
    assert!(
        violations.contains(&BehaviorViolation::ProposalChanged {
            round: 3,
            expected: Bit::Zero,
            got: Bit::One
        }),
        "expected a proposal-change violation, got {violations:?}"
    );
}

#[test]
fn behavior_flags_decision_regression() {
    let mut f1 = bare_fragment(1, 1);
    f1.state.decision = Some(Bit::One);
    let f2 = bare_fragment(1, 2);
    let b = Behavior::new(vec![f1, f2]);
    let ctx = AlgoContext { n: 3, t: 1 };
    let violations = validate_behavior(&b, p(1), &SilentDefault, &ctx);
    assert!(
        violations.contains(&BehaviorViolation::DecisionRegressed {
            round: 2,
            from: Some(Bit::One),
            to: None
        }),
        "expected a decision-regression violation, got {violations:?}"
    );
}

#[test]
fn fault_free_run_validates_with_empty_omission_sets() {
    let e = fault_free(&FloodEcho { k: 2 }, 5, 1, 3);
    assert_eq!(validate_execution(&e, &FloodEcho { k: 2 }), Vec::new());
    for q in e.processes() {
        let b = e.behavior(q).unwrap();
        assert!(b.all_send_omitted().is_empty());
        assert!(b.all_receive_omitted().is_empty());
    }
}

#[test]
fn execution_flags_faulty_set_larger_than_t() {
    let behaviors: BTreeMap<ProcessId, Behavior> = (1..=2)
        .map(|i| (p(i), Behavior::new(vec![bare_fragment(i, 1)])))
        .collect();
    let faulty: BTreeSet<ProcessId> = [p(1), p(2)].into();
    let e = Execution::new(2, 1, faulty, behaviors, 1).unwrap();
    let violations = validate_structure(&e);
    assert!(
        violations.contains(&ExecutionViolation::TooManyFaulty { count: 2, t: 1 }),
        "expected a faulty-bound violation, got {violations:?}"
    );
}

#[test]
fn execution_flags_phantom_receipt() {
    // p1 records a receipt that p2 never sent. Receive-validity ties every
    // incoming message to a successful send of the same payload.
    let phantom = msg(2, 1, 1, b"x");
    let mut f1 = bare_fragment(1, 1);
    f1.received.insert(phantom.clone());
    f1.state.decision = Some(Bit::One);
    let mut f2 = bare_fragment(2, 1);
    f2.state.decision = Some(Bit::One);
    let behaviors: BTreeMap<ProcessId, Behavior> = [
        (p(1), Behavior::new(vec![f1])),
        (p(2), Behavior::new(vec![f2])),
    ]
    .into();
    let e = Execution::new(2, 1, BTreeSet::new(), behaviors, 1).unwrap();
    let violations = validate_execution(&e, &SilentDefault);
    assert!(
        violations.contains(&ExecutionViolation::ReceiveValidity {
            message: phantom.key(),
            payload_mismatch: false
        }),
        "expected a receive-validity violation, got {violations:?}"
    );
}

#[test]
fn execution_flags_unacknowledged_send() {
    let stray = msg(1, 2, 1, b"x");
    let mut f1 = bare_fragment(1, 1);
    f1.sent.insert(stray.clone());
    let f2 = bare_fragment(2, 1);
    let behaviors: BTreeMap<ProcessId, Behavior> = [
        (p(1), Behavior::new(vec![f1])),
        (p(2), Behavior::new(vec![f2])),
    ]
    .into();
    let e = Execution::new(2, 1, BTreeSet::new(), behaviors, 1).unwrap();
    let violations = validate_structure(&e);
    assert!(
        violations.contains(&ExecutionViolation::SendValidity {
            message: stray.key(),
            payload_mismatch: false
        }),
        "expected a send-validity violation, got {violations:?}"
    );
}

#[test]
fn silent_algorithm_sends_nothing_anywhere() {
    let e = fault_free(&SilentDefault, 4, 1, 2);
    assert!(e.all_sent().is_empty());
}

#[test]
fn round_one_sends_match_the_algorithm() {
    let e = fault_free(&StarLeader, 4, 1, 3);
    let sent = e.behavior(p(2)).unwrap().sent(1).unwrap();
    assert_eq!(sent, &BTreeSet::from([msg(2, 1, 1, &[0])]));
}

#[test]
fn round_access_is_range_checked() {
    let e = fault_free(&SilentDefault, 3, 1, 2);
    let b = e.behavior(p(1)).unwrap();
    assert!(matches!(b.sent(0), Err(AccessError::RoundOutOfRange { .. })));
    assert!(matches!(b.sent(3), Err(AccessError::RoundOutOfRange { .. })));
    assert!(matches!(
        e.behavior(p(9)),
        Err(AccessError::UnknownProcess { .. })
    ));
}

#[test]
fn isolated_process_receive_omits_exactly_the_crossing_messages() {
    let group: BTreeSet<ProcessId> = [p(4), p(5)].into();
    let schedule = AdversarySchedule::isolation(group.clone(), 1);
    let e = run(
        &FloodEcho { k: 1 },
        &[Bit::Zero; 5],
        &schedule,
        RunConfig::new(5, 2, 2),
    )
    .unwrap();
    for member in &group {
        let mut crossing = BTreeSet::new();
        for sender in e.processes().filter(|q| !group.contains(q)) {
            for m in e.behavior(sender).unwrap().all_sent() {
                if m.receiver == *member {
                    crossing.insert(m);
                }
            }
        }
        assert!(!crossing.is_empty());
        assert_eq!(e.behavior(*member).unwrap().all_receive_omitted(), crossing);
    }
}

#[test]
fn view_comparison_is_reflexive() {
    let e = fault_free(&FloodEcho { k: 1 }, 3, 1, 2);
    for q in e.processes() {
        assert!(indistinguishable(&e, &e, q).unwrap());
    }
}

#[test]
fn missing_message_distinguishes_only_its_receiver() {
    // Prediction: dropping p3's round-one message to p1 changes what p1
    // observes and nothing that p2 observes. If this fails, either views leak
    // state or omissions leak to bystanders.
    let algo = FloodEcho { k: 1 };
    let e1 = fault_free(&algo, 3, 1, 2);
    let schedule = AdversarySchedule {
        faulty: [p(3)].into(),
        omissions: vec![OmissionDirective {
            from: p(3),
            to: p(1),
            round: 1,
            kind: OmissionKind::Send,
        }],
        ..AdversarySchedule::default()
    };
    let e2 = run(&algo, &[Bit::Zero; 3], &schedule, RunConfig::new(3, 1, 2)).unwrap();
    assert!(!indistinguishable(&e1, &e2, p(1)).unwrap());
    assert!(indistinguishable(&e1, &e2, p(2)).unwrap());
    assert_eq!(
        indistinguishable(&e1, &e2, p(2)).unwrap(),
        indistinguishable(&e2, &e1, p(2)).unwrap()
    );
}

#[test]
fn view_comparison_requires_matching_horizons() {
    let algo = FloodEcho { k: 1 };
    let short = fault_free(&algo, 3, 1, 2);
    let long = fault_free(&algo, 3, 1, 4);
    assert!(matches!(
        indistinguishable(&short, &long, p(1)),
        Err(ViewError::HorizonMismatch { left: 2, right: 4 })
    ));
    assert!(indistinguishable_up_to(&short, &long, p(1), 2).unwrap());
    assert!(matches!(
        indistinguishable_up_to(&short, &long, p(1), 3),
        Err(ViewError::HorizonTooLarge { .. })
    ));
}

#[test]
fn trace_round_trip_is_byte_exact() {
    let e = fault_free(&StarLeader, 4, 1, 3);
    let opts = TraceOptions {
        full_state: true,
        algorithm: Some("star-leader".into()),
        schedule: None,
    };
    let doc = TraceDoc::from_execution(&e, &opts);
    let json = doc.to_json();
    let reparsed = TraceDoc::parse(&json).unwrap();
    assert_eq!(reparsed.to_json(), json);
    assert_eq!(reparsed.to_execution().unwrap(), e);
}

#[test]
fn trace_rejects_tampered_internal_state() {
    let e = fault_free(&FloodEcho { k: 1 }, 3, 1, 2);
    let opts = TraceOptions {
        full_state: true,
        ..TraceOptions::default()
    };
    let mut doc = TraceDoc::from_execution(&e, &opts);
    doc.processes[0].rounds[0].internal = Some(Bytes::new(vec![9]));
    assert!(matches!(
        doc.to_execution(),
        Err(TraceError::DigestMismatch { .. })
    ));
}

#[test]
fn digest_only_trace_supports_structural_checks_only() {
    let e = fault_free(&FloodEcho { k: 1 }, 3, 1, 2);
    let doc = TraceDoc::from_execution(&e, &TraceOptions::default());
    assert!(!doc.has_full_states());
    assert!(matches!(
        doc.to_execution(),
        Err(TraceError::HashedState { .. })
    ));
    let lossy = doc.to_execution_lossy().unwrap();
    assert_eq!(validate_structure(&lossy), Vec::new());
    assert_eq!(lossy.all_sent(), e.all_sent());
}

#[test]
fn message_identity_ignores_payload() {
    assert_eq!(msg(1, 2, 3, b"a").key(), msg(1, 2, 3, b"b").key());
    assert_ne!(msg(1, 2, 3, b"a"), msg(1, 2, 3, b"b"));
}
