//! The validity calculus: configuration containment, the containment
//! condition, triviality, selection, and solvability classification. The
//! derived machinery is cross-checked against a brute-force oracle on every
//! binary context up to n = 5.

use std::collections::{BTreeMap, BTreeSet};

use sim_core::model::ProcessId;
use sim_core::validity::{
    check_cc, check_trivial, classify_solvability, containment_set, EnumerationError, GammaTable,
    InputConfiguration, PropertyKind, Solvability, ValidityContext, ValidityProperty, Value,
    ENUMERATION_LIMIT,
};

fn p(i: u32) -> ProcessId {
    ProcessId(i)
}

fn config(entries: &[(u32, i64)]) -> InputConfiguration {
    InputConfiguration::new(
        entries
            .iter()
            .map(|(i, v)| (p(*i), Value::Int(*v)))
            .collect::<BTreeMap<_, _>>(),
    )
}

#[test]
fn containment_is_entrywise_agreement_on_the_smaller_support() {
    let triple = config(&[(1, 7), (2, 8), (3, 9)]);
    let pair = config(&[(1, 7), (3, 9)]);
    let altered = config(&[(1, 7), (3, 5)]);
    assert!(triple.contains(&pair));
    assert!(!triple.contains(&altered));
    assert!(triple.contains(&triple));
    assert!(!pair.contains(&triple));
}

#[test]
fn containment_set_sizes_match_the_combinatorics() {
    let ctx1 = ValidityContext::binary(4, 1);
    let minimal = config(&[(1, 0), (2, 0), (3, 1)]);
    assert_eq!(containment_set(&ctx1, &minimal), vec![minimal.clone()]);

    let full = config(&[(1, 0), (2, 0), (3, 1), (4, 1)]);
    let cnt1 = containment_set(&ctx1, &full);
    assert_eq!(cnt1.len(), 5);
    assert_eq!(cnt1[0], full);

    let ctx2 = ValidityContext::binary(4, 2);
    assert_eq!(containment_set(&ctx2, &full).len(), 11);
}

#[test]
fn strong_validity_fails_containment_at_the_split_configuration() {
    // Prediction: the first canonical configuration refuting the condition
    // is the 2+2 split, whose two unanimous pairs force disjoint singletons.
    let prop = ValidityProperty::strong_binary(4, 2);
    let report = check_cc(&prop).unwrap();
    assert!(!report.holds);
    let witness = report.witness.unwrap();
    assert_eq!(witness, config(&[(1, 0), (2, 0), (3, 1), (4, 1)]));

    let zeros = config(&[(1, 0), (2, 0)]);
    let ones = config(&[(3, 1), (4, 1)]);
    assert!(witness.contains(&zeros) && witness.contains(&ones));
    assert_eq!(prop.admissible(&zeros), BTreeSet::from([Value::Int(0)]));
    assert_eq!(prop.admissible(&ones), BTreeSet::from([Value::Int(1)]));
}

#[test]
fn strong_validity_holds_at_lower_fault_ratios() {
    assert!(check_cc(&ValidityProperty::strong_binary(5, 2)).unwrap().holds);
    assert!(check_cc(&ValidityProperty::strong_binary(4, 1)).unwrap().holds);
}

#[test]
fn weak_validity_holds_and_is_not_trivial() {
    let prop = ValidityProperty::weak_binary(4, 1);
    assert!(check_cc(&prop).unwrap().holds);
    let triviality = check_trivial(&prop).unwrap();
    assert!(!triviality.trivial);
    assert_eq!(triviality.witness, None);
}

#[test]
fn constant_properties_are_trivial_with_their_witness() {
    let prop = ValidityProperty::constant_binary(4, 1, Value::Int(0));
    let report = check_trivial(&prop).unwrap();
    assert!(report.trivial);
    assert_eq!(report.witness, Some(Value::Int(0)));
    let gamma = GammaTable::new(prop);
    let any = config(&[(1, 1), (2, 1), (3, 1), (4, 1)]);
    assert_eq!(gamma.select(&any).unwrap(), Value::Int(0));
}

#[test]
fn interactive_consistency_is_not_trivial() {
    let prop = ValidityProperty::ic_binary(4, 1);
    assert!(!check_trivial(&prop).unwrap().trivial);
    assert!(check_cc(&prop).unwrap().holds);
}

#[test]
fn solvability_classification_examples() {
    let strong42 = ValidityProperty::strong_binary(4, 2);
    assert!(matches!(
        classify_solvability(&strong42, true).unwrap(),
        Solvability::UnsolvableCc { .. }
    ));

    let strong52 = ValidityProperty::strong_binary(5, 2);
    assert_eq!(classify_solvability(&strong52, true).unwrap(), Solvability::Solvable);

    let weak41 = ValidityProperty::weak_binary(4, 1);
    assert_eq!(classify_solvability(&weak41, false).unwrap(), Solvability::Solvable);

    // n = 3, t = 1 sits on the unauthenticated resilience boundary: the
    // containment condition holds but n > 3t fails.
    let weak31 = ValidityProperty::weak_binary(3, 1);
    assert_eq!(
        classify_solvability(&weak31, false).unwrap(),
        Solvability::UnsolvableResilience
    );
    assert_eq!(classify_solvability(&weak31, true).unwrap(), Solvability::Solvable);
}

#[test]
fn containment_is_reflexive_and_transitive_on_an_enumerated_context() {
    let ctx = ValidityContext::binary(3, 1);
    let configs = ctx.enumerate_configs().unwrap();
    for a in &configs {
        assert!(a.contains(a));
        for b in &configs {
            for c in &configs {
                if a.contains(b) && b.contains(c) {
                    assert!(a.contains(c), "containment not transitive: {a} {b} {c}");
                }
            }
        }
    }
}

fn properties_for(n: u32, t: u32) -> Vec<ValidityProperty> {
    vec![
        ValidityProperty::weak_binary(n, t),
        ValidityProperty::strong_binary(n, t),
        ValidityProperty::ic_binary(n, t),
    ]
}

#[test]
fn derived_machinery_matches_a_brute_force_oracle() {
    // Prediction: on every binary context up to n = 5, the containment-set
    // generator, the containment condition, and the triviality check agree
    // with direct recomputation from the definitions. A mismatch means the
    // optimized paths have quietly diverged from the calculus they implement.
    for n in 2..=5u32 {
        for t in 1..n {
            let ctx = ValidityContext::binary(n, t);
            let configs = ctx.enumerate_configs().unwrap();
            assert_eq!(configs.len() as u128, ctx.config_count());

            for c in &configs {
                let expected: BTreeSet<&InputConfiguration> =
                    configs.iter().filter(|sub| c.contains(sub)).collect();
                let produced = containment_set(&ctx, c);
                let produced_set: BTreeSet<&InputConfiguration> = produced.iter().collect();
                assert_eq!(produced.len(), expected.len(), "duplicates in Cnt({c})");
                assert_eq!(produced_set, expected, "Cnt({c}) wrong at n={n}, t={t}");
                assert_eq!(produced[0], *c, "Cnt({c}) must list c first");
            }

            for prop in properties_for(n, t) {
                let mut oracle_holds = true;
                let mut oracle_witness = None;
                for c in &configs {
                    let mut common: Option<BTreeSet<Value>> = None;
                    for sub in configs.iter().filter(|sub| c.contains(sub)) {
                        let val = prop.admissible(sub);
                        common = Some(match common {
                            None => val,
                            Some(acc) => acc.intersection(&val).cloned().collect(),
                        });
                    }
                    if common.expect("c contains itself").is_empty() {
                        oracle_holds = false;
                        oracle_witness = Some(c.clone());
                        break;
                    }
                }
                let report = check_cc(&prop).unwrap();
                assert_eq!(
                    report.holds,
                    oracle_holds,
                    "{} at n={n}, t={t}",
                    prop.name()
                );
                assert_eq!(
                    report.witness,
                    oracle_witness,
                    "{} witness at n={n}, t={t}",
                    prop.name()
                );

                let mut shared: Option<BTreeSet<Value>> = None;
                for c in &configs {
                    let val = prop.admissible(c);
                    shared = Some(match shared {
                        None => val,
                        Some(acc) => acc.intersection(&val).cloned().collect(),
                    });
                }
                let shared = shared.unwrap();
                let triviality = check_trivial(&prop).unwrap();
                assert_eq!(triviality.trivial, !shared.is_empty());
                assert_eq!(triviality.witness, shared.into_iter().next());
            }
        }
    }
}

#[test]
fn gamma_selection_lands_in_the_common_admissible_set() {
    for (n, t) in [(4u32, 1u32), (4, 2), (5, 2)] {
        for prop in [
            ValidityProperty::weak_binary(n, t),
            ValidityProperty::ic_binary(n, t),
        ] {
            let configs = prop.ctx.enumerate_configs().unwrap();
            let gamma = GammaTable::new(prop.clone());
            for c in &configs {
                let picked = gamma.select(c).unwrap();
                for sub in containment_set(&prop.ctx, c) {
                    assert!(
                        prop.admissible(&sub).contains(&picked),
                        "{}: Gamma({c}) = {picked} not admissible under {sub}",
                        prop.name()
                    );
                }
            }
        }
    }
}

#[test]
fn oversized_spaces_are_refused_not_attempted() {
    let ctx = ValidityContext::binary(30, 29);
    assert!(ctx.config_count() > ENUMERATION_LIMIT);
    match ctx.enumerate_configs() {
        Err(EnumerationError::TooManyConfigurations { count, limit }) => {
            assert_eq!(limit, ENUMERATION_LIMIT);
            assert!(count > limit);
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
    let prop = ValidityProperty::weak_binary(30, 29);
    assert!(check_cc(&prop).is_err());
    assert!(check_trivial(&prop).is_err());
}

#[test]
fn table_properties_report_through_the_same_calculus() {
    // A hand-built table: unanimous pairs of a bit force that bit, everything
    // else stays free. The calculus must find it non-trivial and containment
    // must still hold at n = 3, t = 1.
    let ctx = ValidityContext::binary(3, 1);
    let overrides = vec![
        (config(&[(1, 0), (2, 0)]), BTreeSet::from([Value::Int(0)])),
        (config(&[(1, 1), (2, 1)]), BTreeSet::from([Value::Int(1)])),
    ];
    let prop = ValidityProperty {
        ctx,
        kind: PropertyKind::Table(sim_core::validity::TableProperty {
            default: BTreeSet::from([Value::Int(0), Value::Int(1)]),
            overrides,
        }),
    };
    assert!(!check_trivial(&prop).unwrap().trivial);
    assert!(check_cc(&prop).unwrap().holds);
}
