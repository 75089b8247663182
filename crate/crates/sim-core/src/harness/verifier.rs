//! Independent verdict checking.
//!
//! A violation verdict carries a full witness execution. The verifier
//! rebuilds that execution from the trace, replays every process against
//! the algorithm with the model-level validators, and then confirms the
//! claimed property break directly from the decision table. It shares no
//! code with the hunt that produced the verdict, so a bug in the harness
//! construction shows up here as a validation failure rather than a
//! confirmed counterexample.

use thiserror::Error;

use crate::engine::{decisions, Algorithm};
use crate::harness::{Property, Verdict, ViolationVerdict};
use crate::model::validate::validate_execution;
use crate::model::Bit;
use crate::trace::TraceError;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("witness trace cannot be rebuilt: {0}")]
    Trace(#[from] TraceError),
    #[error("witness is not a legal execution of {algorithm}: {first} ({count} findings)")]
    InvalidWitness {
        algorithm: String,
        first: String,
        count: usize,
    },
    #[error("witness does not break {property}: {reason}")]
    NotViolated { property: Property, reason: String },
}

/// Checks a verdict against the algorithm it accuses. Budget verdicts carry
/// no witness and pass trivially; violation verdicts must replay and must
/// actually exhibit the claimed property break.
pub fn verify_verdict(verdict: &Verdict, algo: &dyn Algorithm) -> Result<(), VerifyError> {
    match verdict {
        Verdict::BudgetExceeded(_) => Ok(()),
        Verdict::Violation(v) => verify_violation(v, algo),
    }
}

pub fn verify_violation(v: &ViolationVerdict, algo: &dyn Algorithm) -> Result<(), VerifyError> {
    let execution = v.witness.to_execution()?;
    let findings = validate_execution(&execution, algo);
    if !findings.is_empty() {
        return Err(VerifyError::InvalidWitness {
            algorithm: algo.id(),
            first: findings[0].to_string(),
            count: findings.len(),
        });
    }
    let table = decisions(&execution);
    match v.property {
        Property::Agreement => {
            if table.correct_disagreement().is_none() {
                return Err(VerifyError::NotViolated {
                    property: v.property,
                    reason: "every pair of correct processes that decided agrees".to_string(),
                });
            }
        }
        Property::Validity => {
            if !execution.faulty().is_empty() {
                return Err(VerifyError::NotViolated {
                    property: v.property,
                    reason: "validity witnesses must be fault-free".to_string(),
                });
            }
            let mut first: Option<Bit> = None;
            for p in execution.processes() {
                let bit = execution.behavior(p).ok().and_then(|b| b.proposal());
                let Some(bit) = bit else {
                    return Err(VerifyError::NotViolated {
                        property: v.property,
                        reason: format!("{p} has no recorded proposal"),
                    });
                };
                match first {
                    None => first = Some(bit),
                    Some(f) if f != bit => {
                        return Err(VerifyError::NotViolated {
                            property: v.property,
                            reason: "proposals are not unanimous".to_string(),
                        });
                    }
                    _ => {}
                }
            }
            let Some(first) = first else {
                return Err(VerifyError::NotViolated {
                    property: v.property,
                    reason: "witness has no processes".to_string(),
                });
            };
            let strayed = table
                .correct_entries()
                .any(|(_, e)| e.decision.is_some() && e.decision != Some(first));
            if !strayed {
                return Err(VerifyError::NotViolated {
                    property: v.property,
                    reason: format!("no correct process decided against the unanimous {first}"),
                });
            }
        }
        Property::Termination => {
            let undecided = table.correct_undecided();
            if undecided.is_empty() {
                return Err(VerifyError::NotViolated {
                    property: v.property,
                    reason: "every correct process decided".to_string(),
                });
            }
        }
    }
    Ok(())
}
