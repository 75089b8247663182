//! Anchor configurations for the binary overlay.
//!
//! The overlay turns any solver of a non-trivial property into a binary
//! agreement algorithm by mapping bit `b` to a fixed full input
//! configuration `c_b`. The anchors must split: the selection value of `c0`
//! must not be admissible under `c1`, so the two simulated runs are forced
//! to distinguishable outputs. Trivial properties admit no such split and
//! are refused.

use thiserror::Error;

use crate::validity::{
    check_trivial, EnumerationError, GammaError, GammaTable, InputConfiguration, PropertyKind,
    ValidityProperty, Value,
};

/// The two full configurations a binary overlay proposes, with their
/// selection values and the witness configuration that separates them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchorSet {
    pub c0: InputConfiguration,
    pub v0: Value,
    /// A configuration under which `v0` is not admissible; `c1` contains it.
    pub c1_star: InputConfiguration,
    pub c1: InputConfiguration,
    pub v1: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnchorError {
    #[error("the property is trivial; a constant decision needs no protocol")]
    Trivial,
    #[error("input domain has fewer than two values")]
    DomainTooSmall,
    #[error("no full configuration rejects the first selection value")]
    NoBinarySplit,
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

/// Derives anchors for a property.
///
/// The built-in families admit closed forms: two distinct uniform
/// configurations always split them, which keeps derivation independent of
/// the configuration space size. Table properties fall back to scanning the
/// enumerated space in canonical order.
pub fn derive_anchors(prop: &ValidityProperty) -> Result<AnchorSet, AnchorError> {
    let ctx = &prop.ctx;
    let gamma = GammaTable::new(prop.clone());
    match &prop.kind {
        PropertyKind::Weak | PropertyKind::Strong | PropertyKind::InteractiveConsistency => {
            if ctx.inputs.len() < 2 {
                return Err(AnchorError::DomainTooSmall);
            }
            let c0 = InputConfiguration::uniform(ctx.n, ctx.inputs[0].clone());
            let c1 = InputConfiguration::uniform(ctx.n, ctx.inputs[1].clone());
            let v0 = gamma.select(&c0)?;
            let v1 = gamma.select(&c1)?;
            if v0 == v1 {
                return Err(AnchorError::NoBinarySplit);
            }
            // The uniform configuration itself rejects v0 for these
            // families, so it doubles as the witness.
            Ok(AnchorSet {
                c0,
                v0,
                c1_star: c1.clone(),
                c1,
                v1,
            })
        }
        PropertyKind::Constant(_) => Err(AnchorError::Trivial),
        PropertyKind::Table(_) => {
            let trivial = check_trivial(prop)?;
            if trivial.trivial {
                return Err(AnchorError::Trivial);
            }
            let configs = ctx.enumerate_configs()?;
            let c0 = configs
                .iter()
                .find(|c| c.is_full(ctx.n))
                .cloned()
                .ok_or(AnchorError::NoBinarySplit)?;
            let v0 = gamma.select(&c0)?;
            // The witness may have partial support; the proposal side
            // extends it with the smallest input value.
            let c1_star = configs
                .iter()
                .find(|c| !prop.admissible(c).contains(&v0))
                .cloned()
                .ok_or(AnchorError::NoBinarySplit)?;
            let c1 = c1_star.extend_full(ctx.n, &ctx.inputs[0]);
            let v1 = gamma.select(&c1)?;
            if v1 == v0 {
                // Unreachable when the selection table is sound: the
                // selection for c1 is admissible under every contained
                // configuration, including the witness.
                return Err(AnchorError::NoBinarySplit);
            }
            Ok(AnchorSet {
                c0,
                v0,
                c1_star,
                c1,
                v1,
            })
        }
    }
}
