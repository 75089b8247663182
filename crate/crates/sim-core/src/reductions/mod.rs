//! Agreement-to-agreement reductions.
//!
//! The pipeline assembled here: a signed-chain interactive consistency
//! machine, a selection layer that collapses the agreed vector to one value
//! through a validity property's selection map, and a binary overlay that
//! anchors bits to full input configurations. Composed over weak binary
//! validity this yields the reference algorithm the falsification harness
//! treats as its honest subject.

pub mod adapter;
pub mod anchors;
pub mod ic;
pub mod menu;
pub mod overlay;

pub use adapter::BitAdapter;
pub use anchors::{derive_anchors, AnchorError, AnchorSet};
pub use ic::{chain_digest, Chain, DsIc, IcPayload};
pub use menu::{
    byzantine_behavior, Equivocator, LateInjector, SilentByz, Withholder, BEHAVIOR_IDS,
};
pub use overlay::{BinaryOverlay, IcThenSelect};

use crate::model::Round;
use crate::validity::{GammaTable, ValidityProperty, Value};

/// The reference weak binary agreement machine: interactive consistency,
/// then selection under weak validity, then the binary overlay.
pub fn reference_weak_machine(n: u32, t: u32) -> BinaryOverlay<IcThenSelect> {
    let prop = ValidityProperty::weak_binary(n, t);
    let anchors = derive_anchors(&prop).expect("weak binary validity always splits");
    let gamma = GammaTable::new(prop);
    let ic = DsIc::new(Value::Int(0));
    BinaryOverlay::new(IcThenSelect::new(ic, gamma), anchors, "reference-weak")
}

fn reference_weak_hint(_n: u32, t: u32) -> Round {
    // The machine decides in the transition of round t + 1; the decision
    // first shows in the state entering the round after.
    t + 2
}

/// [`reference_weak_machine`] bridged into the binary round engine.
pub fn reference_weak(n: u32, t: u32) -> BitAdapter<BinaryOverlay<IcThenSelect>> {
    BitAdapter::new(
        reference_weak_machine(n, t),
        "reference-weak",
        Some(reference_weak_hint),
    )
}
