//! Corpus check: every engine run under a randomized omission schedule yields
//! a record that passes full validation, keeps correct processes free of
//! omissions, and is reproduced byte for byte on a second run.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sim_core::model::validate::validate_execution;
use sim_core::trace::{TraceDoc, TraceOptions};

#[test]
fn randomized_runs_always_validate() {
    // Prediction: no reachable engine output violates a record condition. A
    // failure here means the engine itself can fabricate an inconsistent
    // execution, which would poison every argument built on top of it.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c105);
    for i in 0..10_000 {
        let case = common::random_case(&mut rng, i);
        let e = case.run();
        let violations = validate_execution(&e, case.algo.as_ref());
        assert_eq!(
            violations,
            Vec::new(),
            "case {i} ({}, n={}, t={}) produced violations",
            case.algo.id(),
            case.n,
            case.t
        );
        for q in e.correct_processes() {
            let b = e.behavior(q).unwrap();
            assert!(b.all_send_omitted().is_empty(), "case {i}: correct {q} send-omits");
            assert!(
                b.all_receive_omitted().is_empty(),
                "case {i}: correct {q} receive-omits"
            );
        }
    }
}

#[test]
fn identical_inputs_reproduce_identical_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd5ed_2);
    let opts = TraceOptions {
        full_state: true,
        ..TraceOptions::default()
    };
    for i in 0..1_000 {
        let case = common::random_case(&mut rng, i);
        let first = case.run();
        let second = case.run();
        assert_eq!(first, second, "case {i}: executions differ between runs");
        assert_eq!(
            TraceDoc::from_execution(&first, &opts).to_json(),
            TraceDoc::from_execution(&second, &opts).to_json(),
            "case {i}: serialized records differ between runs"
        );
    }
}
