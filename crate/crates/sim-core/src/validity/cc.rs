//! Solvability analysis for validity properties.
//!
//! A property is trivial when one decision is admissible under every input
//! configuration. A non-trivial property is solvable only if every
//! configuration admits a decision compatible with all contained
//! configurations (the containment condition), and in the unauthenticated
//! setting additionally requires n > 3t.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::validity::{
    containment_set, EnumerationError, InputConfiguration, PropertyKind, ValidityProperty, Value,
};

/// Result of the triviality check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrivialityReport {
    pub trivial: bool,
    /// Smallest decision admissible under every configuration, when trivial.
    pub witness: Option<Value>,
}

/// Result of the containment-condition check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CcReport {
    pub holds: bool,
    /// First configuration in canonical order whose contained set forces an
    /// empty intersection, when the condition fails.
    pub witness: Option<InputConfiguration>,
}

/// One decision admissible under every configuration, or proof there is
/// none. Enumerates the full configuration space.
pub fn check_trivial(prop: &ValidityProperty) -> Result<TrivialityReport, EnumerationError> {
    let configs = prop.ctx.enumerate_configs()?;
    let mut common: Option<BTreeSet<Value>> = None;
    for c in &configs {
        let val = prop.admissible(c);
        common = Some(match common {
            None => val,
            Some(acc) => acc.intersection(&val).cloned().collect(),
        });
        if common.as_ref().is_some_and(BTreeSet::is_empty) {
            return Ok(TrivialityReport {
                trivial: false,
                witness: None,
            });
        }
    }
    let witness = common.and_then(|s| s.into_iter().next());
    Ok(TrivialityReport {
        trivial: witness.is_some(),
        witness,
    })
}

/// Check the containment condition by enumeration: every configuration must
/// admit a decision admissible under all configurations it contains.
pub fn check_cc(prop: &ValidityProperty) -> Result<CcReport, EnumerationError> {
    let configs = prop.ctx.enumerate_configs()?;
    for c in &configs {
        if common_admissible(prop, c).is_none() {
            return Ok(CcReport {
                holds: false,
                witness: Some(c.clone()),
            });
        }
    }
    Ok(CcReport {
        holds: true,
        witness: None,
    })
}

/// Smallest decision admissible under `c` and everything `c` contains, by
/// direct enumeration of the contained set.
fn common_admissible(prop: &ValidityProperty, c: &InputConfiguration) -> Option<Value> {
    let mut common: Option<BTreeSet<Value>> = None;
    for sub in containment_set(&prop.ctx, c) {
        let val = prop.admissible(&sub);
        common = Some(match common {
            None => val,
            Some(acc) => acc.intersection(&val).cloned().collect(),
        });
        if common.as_ref().is_some_and(BTreeSet::is_empty) {
            return None;
        }
    }
    common.and_then(|s| s.into_iter().next())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GammaError {
    #[error("no decision is admissible under everything contained in {config}")]
    Undefined { config: InputConfiguration },
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

/// The selection map of a property: for each configuration, the smallest
/// decision admissible under the whole contained set.
///
/// Selection is computed on demand. The built-in families use closed forms,
/// so selection stays cheap even when the configuration space is far beyond
/// enumeration; table properties fall back to enumerating the contained set.
#[derive(Clone, Debug)]
pub struct GammaTable {
    prop: ValidityProperty,
}

impl GammaTable {
    pub fn new(prop: ValidityProperty) -> GammaTable {
        GammaTable { prop }
    }

    pub fn property(&self) -> &ValidityProperty {
        &self.prop
    }

    pub fn select(&self, c: &InputConfiguration) -> Result<Value, GammaError> {
        let ctx = &self.prop.ctx;
        match &self.prop.kind {
            PropertyKind::Weak => {
                // Only the full unanimous configuration constrains anything,
                // and it contains no other constraining configuration.
                if c.is_full(ctx.n) {
                    if let Some(v) = c.unanimous() {
                        if ctx.outputs.contains(v) {
                            return Ok(v.clone());
                        }
                    }
                }
                Ok(ctx.outputs.first().cloned().expect("non-empty outputs"))
            }
            PropertyKind::Strong => {
                // A value is forced exactly when it has enough proposers to
                // form a contained unanimous configuration on its own.
                let min = ctx.min_support() as usize;
                let mut forced: Vec<&Value> = Vec::new();
                for v in &ctx.outputs {
                    let count = c.iter().filter(|(_, w)| *w == v).count();
                    if count >= min {
                        forced.push(v);
                    }
                }
                match forced.len() {
                    0 => Ok(ctx.outputs.first().cloned().expect("non-empty outputs")),
                    1 => Ok(forced[0].clone()),
                    _ => Err(GammaError::Undefined { config: c.clone() }),
                }
            }
            PropertyKind::InteractiveConsistency => {
                // Smallest full extension: fill the gaps with the smallest
                // input value.
                let fill = ctx.inputs.first().expect("non-empty inputs").clone();
                let full = c.extend_full(ctx.n, &fill);
                Ok(full.as_vector(ctx.n).expect("full by construction"))
            }
            PropertyKind::Constant(v) => Ok(v.clone()),
            PropertyKind::Table(_) => common_admissible(&self.prop, c)
                .ok_or_else(|| GammaError::Undefined { config: c.clone() }),
        }
    }
}

/// Overall solvability classification of a property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solvability {
    /// One decision fits every configuration; solvable without
    /// communication for any n and t.
    Trivial { witness: Value },
    Solvable,
    /// The containment condition fails at the witness configuration.
    UnsolvableCc { witness: InputConfiguration },
    /// Containment holds but the unauthenticated setting needs n > 3t.
    UnsolvableResilience,
}

/// Classify a property by enumeration: triviality first, then the
/// containment condition, then the resilience bound when no authentication
/// is available.
pub fn classify_solvability(
    prop: &ValidityProperty,
    authenticated: bool,
) -> Result<Solvability, EnumerationError> {
    let trivial = check_trivial(prop)?;
    if let Some(witness) = trivial.witness {
        return Ok(Solvability::Trivial { witness });
    }
    let cc = check_cc(prop)?;
    if !cc.holds {
        return Ok(Solvability::UnsolvableCc {
            witness: cc.witness.expect("witness accompanies failure"),
        });
    }
    if authenticated || prop.ctx.n > 3 * prop.ctx.t {
        Ok(Solvability::Solvable)
    } else {
        Ok(Solvability::UnsolvableResilience)
    }
}
