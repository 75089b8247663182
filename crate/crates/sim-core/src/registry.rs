//! Candidate lookup by identifier.

use crate::engine::{Algorithm, FloodEcho, SilentDefault, StarLeader};
use crate::reductions::reference_weak;

/// Identifiers accepted by [`candidate`], for help text and error messages.
pub const CANDIDATE_IDS: &[&str] = &[
    "silent-default",
    "star-leader",
    "flood-echo-<k>",
    "reference-weak",
];

/// Builds a candidate algorithm by identifier. The system size and fault
/// bound only matter for candidates whose construction depends on them;
/// the rest ignore both.
pub fn candidate(id: &str, n: u32, t: u32) -> Option<Box<dyn Algorithm>> {
    match id {
        "silent-default" => Some(Box::new(SilentDefault)),
        "star-leader" => Some(Box::new(StarLeader)),
        "reference-weak" => Some(Box::new(reference_weak(n, t))),
        _ => {
            let k: u32 = id.strip_prefix("flood-echo-")?.parse().ok()?;
            if k == 0 {
                return None;
            }
            Some(Box::new(FloodEcho { k }))
        }
    }
}
