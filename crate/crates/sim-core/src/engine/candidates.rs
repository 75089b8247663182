//! Built-in candidate algorithms.
//!
//! These are deliberately simple test subjects for the harness, not serious
//! agreement protocols: a silent algorithm that decides a default
//! immediately, a two-round star topology around a leader, and a family of
//! k-round all-to-all view exchanges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Bit, Bytes, Message, ProcessId, Round};

use super::{AlgoContext, AlgoError, AlgoOutput, Algorithm, StateView};

/// Sends nothing and decides 1 immediately.
pub struct SilentDefault;

impl Algorithm for SilentDefault {
    fn id(&self) -> String {
        "silent-default".into()
    }

    fn round_one(
        &self,
        _ctx: &AlgoContext,
        _me: ProcessId,
        _proposal: Bit,
    ) -> Result<AlgoOutput, AlgoError> {
        Ok(AlgoOutput {
            internal: Bytes::empty(),
            decision: Some(Bit::One),
            sends: Vec::new(),
        })
    }

    fn transition(
        &self,
        _ctx: &AlgoContext,
        _me: ProcessId,
        _state: &StateView<'_>,
        _received: &BTreeSet<Message>,
    ) -> Result<AlgoOutput, AlgoError> {
        Ok(AlgoOutput::quiet(Bytes::empty()))
    }

    fn decision_round_hint(&self, _n: u32, _t: u32) -> Option<Round> {
        Some(1)
    }
}

/// One gather round into p1 and one scatter round out of it. The leader
/// decides 0 exactly when it holds all n proposals and they are all 0;
/// everyone else adopts the scattered bit, or falls back to 1 when the
/// scatter never arrives.
pub struct StarLeader;

const LEADER: ProcessId = ProcessId(1);

fn bit_payload(b: Bit) -> Bytes {
    Bytes::new(vec![b.as_u8()])
}

fn parse_bit_payload(payload: &Bytes) -> Result<Bit, AlgoError> {
    match payload.as_slice() {
        [v] => Bit::from_u8(*v).ok_or_else(|| AlgoError::payload("bit out of range")),
        _ => Err(AlgoError::payload("expected a single byte")),
    }
}

impl Algorithm for StarLeader {
    fn id(&self) -> String {
        "star-leader".into()
    }

    fn round_one(
        &self,
        _ctx: &AlgoContext,
        me: ProcessId,
        proposal: Bit,
    ) -> Result<AlgoOutput, AlgoError> {
        let sends = if me == LEADER {
            Vec::new()
        } else {
            vec![(LEADER, bit_payload(proposal))]
        };
        Ok(AlgoOutput {
            internal: Bytes::empty(),
            decision: None,
            sends,
        })
    }

    fn transition(
        &self,
        ctx: &AlgoContext,
        me: ProcessId,
        state: &StateView<'_>,
        received: &BTreeSet<Message>,
    ) -> Result<AlgoOutput, AlgoError> {
        match (state.round, me == LEADER) {
            (1, true) => {
                let mut all_zero = state.proposal == Bit::Zero;
                for m in received {
                    all_zero &= parse_bit_payload(&m.payload)? == Bit::Zero;
                }
                let complete = received.len() as u32 == ctx.n - 1;
                let b = if complete && all_zero { Bit::Zero } else { Bit::One };
                let sends = ctx.others(me).map(|p| (p, bit_payload(b))).collect();
                Ok(AlgoOutput {
                    internal: Bytes::empty(),
                    decision: Some(b),
                    sends,
                })
            }
            (2, false) => {
                let scattered = received.iter().find(|m| m.sender == LEADER);
                let b = match scattered {
                    Some(m) => parse_bit_payload(&m.payload)?,
                    None => Bit::One,
                };
                Ok(AlgoOutput {
                    internal: Bytes::empty(),
                    decision: Some(b),
                    sends: Vec::new(),
                })
            }
            _ => Ok(AlgoOutput::quiet(Bytes::empty())),
        }
    }

    fn decision_round_hint(&self, _n: u32, _t: u32) -> Option<Round> {
        Some(3)
    }
}

/// `k` rounds of all-to-all view exchange; decide 0 exactly when the local
/// view is complete, every relayed view was complete, and all proposals are
/// 0; otherwise decide 1.
pub struct FloodEcho {
    pub k: u32,
}

#[derive(Serialize, Deserialize, Clone, PartialEq, Eq)]
struct FloodView {
    known: BTreeMap<u32, u8>,
    ok: bool,
}

fn encode<T: Serialize>(v: &T) -> Bytes {
    Bytes::new(serde_json::to_vec(v).expect("serializable"))
}

fn decode_state(bytes: &[u8]) -> Result<FloodView, AlgoError> {
    serde_json::from_slice(bytes).map_err(AlgoError::state)
}

fn decode_wire(bytes: &[u8]) -> Result<FloodView, AlgoError> {
    serde_json::from_slice(bytes).map_err(AlgoError::payload)
}

impl FloodEcho {
    fn broadcast(&self, ctx: &AlgoContext, me: ProcessId, view: &FloodView) -> Vec<(ProcessId, Bytes)> {
        let wire = encode(view);
        ctx.others(me).map(|p| (p, wire.clone())).collect()
    }
}

impl Algorithm for FloodEcho {
    fn id(&self) -> String {
        format!("flood-echo-{}", self.k)
    }

    fn round_one(
        &self,
        ctx: &AlgoContext,
        me: ProcessId,
        proposal: Bit,
    ) -> Result<AlgoOutput, AlgoError> {
        let view = FloodView {
            known: BTreeMap::from([(me.0, proposal.as_u8())]),
            ok: true,
        };
        let sends = self.broadcast(ctx, me, &view);
        Ok(AlgoOutput {
            internal: encode(&view),
            decision: None,
            sends,
        })
    }

    fn transition(
        &self,
        ctx: &AlgoContext,
        me: ProcessId,
        state: &StateView<'_>,
        received: &BTreeSet<Message>,
    ) -> Result<AlgoOutput, AlgoError> {
        if state.round > self.k {
            return Ok(AlgoOutput::quiet(Bytes::new(state.internal.to_vec())));
        }
        let mut view = decode_state(state.internal)?;
        view.ok &= received.len() as u32 == ctx.n - 1;
        for m in received {
            let incoming = decode_wire(&m.payload)?;
            view.ok &= incoming.ok;
            for (p, b) in incoming.known {
                match view.known.insert(p, b) {
                    Some(prior) if prior != b => view.ok = false,
                    _ => {}
                }
            }
        }
        let decision = if state.round == self.k {
            let unanimous_zero =
                view.known.len() as u32 == ctx.n && view.known.values().all(|b| *b == 0);
            Some(if view.ok && unanimous_zero {
                Bit::Zero
            } else {
                Bit::One
            })
        } else {
            None
        };
        let sends = if state.round < self.k {
            self.broadcast(ctx, me, &view)
        } else {
            Vec::new()
        };
        Ok(AlgoOutput {
            internal: encode(&view),
            decision,
            sends,
        })
    }

    fn decision_round_hint(&self, _n: u32, _t: u32) -> Option<Round> {
        Some(self.k + 1)
    }
}
