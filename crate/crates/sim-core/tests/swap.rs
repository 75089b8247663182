//! The omission swap: receive omissions of one process become send omissions
//! of the matching senders. Checked on hand-built examples and a randomized
//! corpus: views never change, validity survives whenever the new faulty set
//! fits under t, and the target plus any untouched sender end up correct.

mod common;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sim_core::adversary::swap_omission;
use sim_core::engine::{
    run, AdversarySchedule, OmissionDirective, OmissionKind, RunConfig, StarLeader,
};
use sim_core::model::validate::validate_execution;
use sim_core::model::{indistinguishable, Bit, Execution, ProcessId};

fn p(i: u32) -> ProcessId {
    ProcessId(i)
}

#[test]
fn swap_on_fault_free_execution_is_identity() {
    let e = run(
        &StarLeader,
        &[Bit::Zero; 4],
        &AdversarySchedule::fault_free(),
        RunConfig::new(4, 1, 3),
    )
    .unwrap();
    let outcome = swap_omission(&e, p(1)).unwrap();
    assert!(outcome.new_faulty.is_empty());
    assert_eq!(outcome.execution.as_ref(), Some(&e));
}

#[test]
fn single_receive_omission_moves_to_the_sender() {
    // p3 receive-omits the leader's scatter. After the swap the same message
    // is a send omission of p1, p3 carries nothing, and nobody's view moved.
    let schedule = AdversarySchedule {
        faulty: [p(3)].into(),
        omissions: vec![OmissionDirective {
            from: p(1),
            to: p(3),
            round: 2,
            kind: OmissionKind::Receive,
        }],
        ..AdversarySchedule::default()
    };
    let e = run(&StarLeader, &[Bit::Zero; 3], &schedule, RunConfig::new(3, 1, 3)).unwrap();
    assert_eq!(e.behavior(p(3)).unwrap().all_receive_omitted().len(), 1);

    let outcome = swap_omission(&e, p(3)).unwrap();
    assert_eq!(outcome.new_faulty, BTreeSet::from([p(1)]));
    let swapped = outcome.execution.expect("one faulty process fits under t");
    let moved = swapped.behavior(p(1)).unwrap().send_omitted(2).unwrap();
    assert_eq!(moved.len(), 1);
    assert!(moved.iter().all(|m| m.receiver == p(3)));
    assert!(swapped.behavior(p(3)).unwrap().all_receive_omitted().is_empty());
    assert!(swapped.is_correct(p(3)));
    assert_eq!(validate_execution(&swapped, &StarLeader), Vec::new());
    for q in e.processes() {
        assert!(indistinguishable(&e, &swapped, q).unwrap());
    }
}

/// First process whose record carries a receive omission, if any.
fn swap_target(e: &Execution) -> Option<ProcessId> {
    e.processes()
        .find(|q| !e.behavior(*q).unwrap().all_receive_omitted().is_empty())
}

/// A process correct in `e` none of whose messages the target receive-omitted.
fn untouched_sender(e: &Execution, target: ProcessId) -> Option<ProcessId> {
    let omitted_senders: BTreeSet<ProcessId> = e
        .behavior(target)
        .unwrap()
        .all_receive_omitted()
        .iter()
        .map(|m| m.sender)
        .collect();
    e.correct_processes()
        .find(|q| *q != target && !omitted_senders.contains(q))
}

#[test]
fn randomized_swaps_preserve_views_and_validity() {
    // Prediction: across 1,000 random schedules the swap never changes any
    // view, never breaks validation while the new faulty set fits under t,
    // and is idempotent. A failure would sink every indistinguishability
    // argument that moves omissions across the fault boundary.
    let mut rng = ChaCha8Rng::seed_from_u64(0x54a9);
    let mut swapped_cases = 0u32;
    for i in 0..1_000 {
        let case = common::random_case(&mut rng, i);
        let e = case.run();
        let target = match swap_target(&e) {
            Some(q) => q,
            None => continue,
        };
        let outcome = swap_omission(&e, target).unwrap();
        let swapped = match outcome.execution {
            Some(s) => s,
            None => {
                assert!(
                    outcome.new_faulty.len() > case.t as usize,
                    "case {i}: execution withheld although |F'| <= t"
                );
                continue;
            }
        };
        swapped_cases += 1;
        assert!(outcome.new_faulty.len() <= case.t as usize);
        assert_eq!(swapped.faulty(), &outcome.new_faulty);

        for q in e.processes() {
            assert!(
                indistinguishable(&e, &swapped, q).unwrap(),
                "case {i}: view of {q} changed"
            );
            let before = e.behavior(q).unwrap();
            let after = swapped.behavior(q).unwrap();
            for r in 1..=e.horizon() {
                assert_eq!(
                    before.fragment(r).unwrap().outgoing(),
                    after.fragment(r).unwrap().outgoing(),
                    "case {i}: outgoing set of {q} changed in round {r}"
                );
            }
        }

        assert_eq!(
            validate_execution(&swapped, case.algo.as_ref()),
            Vec::new(),
            "case {i}: swapped execution fails validation"
        );

        let target_sends = !e.behavior(target).unwrap().all_send_omitted().is_empty();
        if !target_sends {
            assert!(
                !outcome.new_faulty.contains(&target),
                "case {i}: target {target} stayed faulty without own send omissions"
            );
        }
        if let Some(ph) = untouched_sender(&e, target) {
            assert!(
                !outcome.new_faulty.contains(&ph),
                "case {i}: untouched sender {ph} became faulty"
            );
        }

        let again = swap_omission(&swapped, target).unwrap();
        assert_eq!(again.new_faulty, outcome.new_faulty, "case {i}: swap not idempotent");
        assert_eq!(
            again.execution.as_ref(),
            Some(&swapped),
            "case {i}: second swap changed the execution"
        );
    }
    assert!(
        swapped_cases >= 100,
        "corpus too thin: only {swapped_cases} swaps exercised"
    );
}
