//! Merging two isolated executions: group members keep their exact source
//! views while the remainder runs live on the combined message flow. The
//! corpus walks the isolation family at n = 9, t = 8 for three candidate
//! algorithms and checks every pair, mergeable or not.

use std::collections::BTreeSet;

use sim_core::adversary::{check_isolated, merge, mergeable, MergeError, Partition, TaggedExecution};
use sim_core::engine::{
    decisions, run, AdversarySchedule, Algorithm, FloodEcho, RunConfig, StarLeader,
};
use sim_core::model::validate::validate_execution;
use sim_core::model::{indistinguishable, Bit, ProcessId, Round};

const N: u32 = 9;
const T: u32 = 8;

fn uniform(bit: Bit) -> Vec<Bit> {
    vec![bit; N as usize]
}

fn family_member(
    algo: &dyn Algorithm,
    group: &BTreeSet<ProcessId>,
    k: Round,
    bit: Bit,
    horizon: Round,
) -> TaggedExecution {
    let schedule = AdversarySchedule::isolation(group.clone(), k);
    let execution = run(algo, &uniform(bit), &schedule, RunConfig::new(N, T, horizon)).unwrap();
    TaggedExecution {
        execution,
        group: group.clone(),
        from_round: k,
        bit,
    }
}

fn last_decision_round(algo: &dyn Algorithm) -> Round {
    let e = run(
        algo,
        &uniform(Bit::Zero),
        &AdversarySchedule::fault_free(),
        RunConfig::new(N, T, 8),
    )
    .unwrap();
    decisions(&e)
        .max_correct_decided_round()
        .expect("candidate decides when fault-free")
}

fn candidates() -> Vec<Box<dyn Algorithm>> {
    vec![
        Box::new(StarLeader),
        Box::new(FloodEcho { k: 1 }),
        Box::new(FloodEcho { k: 2 }),
    ]
}

#[test]
fn every_family_pair_merges_or_is_rejected() {
    // Prediction: whenever the tags are compatible (both isolation rounds 1,
    // or equal bits with rounds within one) the merge validates, preserves
    // each group member's view of its own source, and isolates both groups
    // at once. Incompatible tags are always refused.
    let partition = Partition::canonical(N, T).unwrap();
    let bits = [Bit::Zero, Bit::One];
    for algo in candidates() {
        let r_max = last_decision_round(algo.as_ref());
        let horizon = r_max + 3;
        let mut merged_pairs = 0u32;
        for k1 in 1..=r_max + 1 {
            for b1 in bits {
                let left = family_member(algo.as_ref(), &partition.b, k1, b1, horizon);
                left.check().unwrap();
                for k2 in 1..=r_max + 1 {
                    for b2 in bits {
                        let right = family_member(algo.as_ref(), &partition.c, k2, b2, horizon);
                        let result = merge(algo.as_ref(), &left, &right);
                        if !mergeable(&left, &right) {
                            assert!(
                                matches!(result, Err(MergeError::NotMergeable { .. })),
                                "{}: ({k1},{b1}) x ({k2},{b2}) unexpectedly accepted",
                                algo.id()
                            );
                            continue;
                        }
                        let combined = result.unwrap_or_else(|e| {
                            panic!("{}: ({k1},{b1}) x ({k2},{b2}) failed: {e}", algo.id())
                        });
                        merged_pairs += 1;

                        assert_eq!(
                            validate_execution(&combined, algo.as_ref()),
                            Vec::new(),
                            "{}: merged ({k1},{b1}) x ({k2},{b2}) fails validation",
                            algo.id()
                        );
                        let faulty: BTreeSet<ProcessId> =
                            partition.b.union(&partition.c).copied().collect();
                        assert_eq!(combined.faulty(), &faulty);

                        for member in &partition.b {
                            assert!(
                                indistinguishable(&combined, &left.execution, *member).unwrap(),
                                "{}: {member} can tell the merge from its left source",
                                algo.id()
                            );
                        }
                        for member in &partition.c {
                            assert!(
                                indistinguishable(&combined, &right.execution, *member).unwrap(),
                                "{}: {member} can tell the merge from its right source",
                                algo.id()
                            );
                        }
                        check_isolated(&combined, &partition.b, k1).unwrap();
                        check_isolated(&combined, &partition.c, k2).unwrap();
                        for a in &partition.a {
                            let proposal = combined.behavior(*a).unwrap().proposal();
                            assert_eq!(proposal, Some(b1), "{}: remainder proposal", algo.id());
                        }
                    }
                }
            }
        }
        assert!(
            merged_pairs >= 15,
            "{}: only {merged_pairs} pairs merged",
            algo.id()
        );
    }
}

#[test]
fn merge_prefix_matches_the_common_fault_free_run() {
    // With equal isolation rounds and equal bits, nothing differs before the
    // isolation kicks in, so the merged record's prefix must equal the
    // fault-free record for every process.
    let partition = Partition::canonical(N, T).unwrap();
    let algo = FloodEcho { k: 2 };
    let k = 3;
    let horizon = 6;
    let left = family_member(&algo, &partition.b, k, Bit::Zero, horizon);
    let right = family_member(&algo, &partition.c, k, Bit::Zero, horizon);
    let combined = merge(&algo, &left, &right).unwrap();
    let baseline = run(
        &algo,
        &uniform(Bit::Zero),
        &AdversarySchedule::fault_free(),
        RunConfig::new(N, T, horizon),
    )
    .unwrap();
    for q in combined.processes() {
        for r in 1..k {
            assert_eq!(
                combined.behavior(q).unwrap().fragment(r).unwrap(),
                baseline.behavior(q).unwrap().fragment(r).unwrap(),
                "{q} diverges from the fault-free prefix in round {r}"
            );
        }
    }
}

#[test]
fn distant_isolation_rounds_with_equal_bits_are_rejected() {
    let partition = Partition::canonical(N, T).unwrap();
    let algo = FloodEcho { k: 2 };
    let left = family_member(&algo, &partition.b, 3, Bit::Zero, 6);
    let right = family_member(&algo, &partition.c, 1, Bit::Zero, 6);
    assert!(!mergeable(&left, &right));
    match merge(&algo, &left, &right) {
        Err(MergeError::NotMergeable { k1: 3, k2: 1, .. }) => {}
        other => panic!("expected a mergeability refusal, got {other:?}"),
    }
}
