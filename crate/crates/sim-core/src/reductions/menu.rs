//! Stock Byzantine behaviors for the value-level runner.
//!
//! All four target the signed-chain wire format. They are deterministic;
//! anything invalid they emit is rejected by honest chain verification, so
//! they double as forgery-resistance probes.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::engine::values::{AttackCtx, ByzantineBehavior};
use crate::engine::AlgoError;
use crate::model::{Bytes, Message, ProcessId, Round};
use crate::reductions::ic::{chain_digest, Chain, IcPayload};
use crate::validity::Value;

type Acted = Result<(Bytes, Vec<(ProcessId, Bytes)>), AlgoError>;

fn quiet() -> Acted {
    Ok((Bytes::empty(), Vec::new()))
}

/// Sends nothing, ever.
pub struct SilentByz;

impl ByzantineBehavior for SilentByz {
    fn id(&self) -> String {
        "silent".to_string()
    }

    fn act(
        &self,
        _ctx: &AttackCtx<'_>,
        _round: Round,
        _state: Option<&[u8]>,
        _proposal: &Value,
        _inbox: &BTreeSet<Message>,
        _preview: Option<&BTreeSet<Message>>,
    ) -> Acted {
        quiet()
    }
}

/// Builds a single-signature chain signed as `signer`, who must belong to
/// the corrupted coalition.
fn forged_start(ctx: &AttackCtx<'_>, signer: ProcessId, value: Value) -> Option<Chain> {
    let signers = [signer];
    let token = ctx.sign_as(signer, chain_digest(signer, &value, &signers))?;
    Some(Chain {
        origin: signer,
        value,
        signatures: vec![token],
    })
}

/// Round-1 equivocation: the lower half of the other processes receives one
/// value, the upper half the other. Silent afterwards.
pub struct Equivocator {
    pub low: Value,
    pub high: Value,
}

impl Default for Equivocator {
    fn default() -> Equivocator {
        Equivocator {
            low: Value::Int(0),
            high: Value::Int(1),
        }
    }
}

impl ByzantineBehavior for Equivocator {
    fn id(&self) -> String {
        "equivocate".to_string()
    }

    fn act(
        &self,
        ctx: &AttackCtx<'_>,
        round: Round,
        _state: Option<&[u8]>,
        _proposal: &Value,
        _inbox: &BTreeSet<Message>,
        _preview: Option<&BTreeSet<Message>>,
    ) -> Acted {
        if round != 1 {
            return quiet();
        }
        let me = ctx.me();
        let others: Vec<ProcessId> = ctx.processes().filter(|p| *p != me).collect();
        let low_chain = forged_start(ctx, me, self.low.clone()).expect("own key");
        let high_chain = forged_start(ctx, me, self.high.clone()).expect("own key");
        let low_payload = IcPayload {
            chains: vec![low_chain],
        }
        .encode();
        let high_payload = IcPayload {
            chains: vec![high_chain],
        }
        .encode();
        let half = others.len() / 2;
        let sends = others
            .iter()
            .enumerate()
            .map(|(i, to)| {
                let payload = if i < half {
                    low_payload.clone()
                } else {
                    high_payload.clone()
                };
                (*to, payload)
            })
            .collect();
        Ok((Bytes::empty(), sends))
    }
}

/// Broadcasts its proposal honestly except to the lowest-numbered honest
/// process, which never hears from it. Silent afterwards.
pub struct Withholder;

impl ByzantineBehavior for Withholder {
    fn id(&self) -> String {
        "withhold-first".to_string()
    }

    fn act(
        &self,
        ctx: &AttackCtx<'_>,
        round: Round,
        _state: Option<&[u8]>,
        proposal: &Value,
        _inbox: &BTreeSet<Message>,
        _preview: Option<&BTreeSet<Message>>,
    ) -> Acted {
        if round != 1 {
            return quiet();
        }
        let me = ctx.me();
        let victim = ctx
            .processes()
            .find(|p| !ctx.corrupted().contains(p));
        let chain = forged_start(ctx, me, proposal.clone()).expect("own key");
        let payload = IcPayload {
            chains: vec![chain],
        }
        .encode();
        let sends = ctx
            .processes()
            .filter(|p| *p != me && Some(*p) != victim)
            .map(|to| (to, payload.clone()))
            .collect();
        Ok((Bytes::empty(), sends))
    }
}

/// Stays silent until the final communication round, then broadcasts a
/// chain padded to full length with recycled coalition signatures. Honest
/// verification rejects it: the signer list repeats, and honest signatures
/// cannot be forged to fill it properly.
pub struct LateInjector {
    pub value: Value,
}

impl Default for LateInjector {
    fn default() -> LateInjector {
        LateInjector {
            value: Value::Int(1),
        }
    }
}

impl ByzantineBehavior for LateInjector {
    fn id(&self) -> String {
        "inject-late".to_string()
    }

    fn act(
        &self,
        ctx: &AttackCtx<'_>,
        round: Round,
        _state: Option<&[u8]>,
        _proposal: &Value,
        _inbox: &BTreeSet<Message>,
        _preview: Option<&BTreeSet<Message>>,
    ) -> Acted {
        let last = ctx.t() + 1;
        if round != last {
            return quiet();
        }
        let me = ctx.me();
        let coalition: Vec<ProcessId> = ctx.corrupted().iter().copied().collect();
        let signers: Vec<ProcessId> = (0..last as usize)
            .map(|i| {
                if i == 0 {
                    me
                } else {
                    coalition[i % coalition.len()]
                }
            })
            .collect();
        let mut signatures = Vec::with_capacity(signers.len());
        for i in 0..signers.len() {
            let token = ctx
                .sign_as(signers[i], chain_digest(me, &self.value, &signers[..=i]))
                .expect("coalition key");
            signatures.push(token);
        }
        let payload = IcPayload {
            chains: vec![Chain {
                origin: me,
                value: self.value.clone(),
                signatures,
            }],
        }
        .encode();
        let sends = ctx
            .processes()
            .filter(|p| *p != me)
            .map(|to| (to, payload.clone()))
            .collect();
        Ok((Bytes::empty(), sends))
    }
}

/// Identifiers of the stock behaviors, in lookup order.
pub const BEHAVIOR_IDS: &[&str] = &["silent", "equivocate", "withhold-first", "inject-late"];

/// Looks up a stock behavior by identifier.
pub fn byzantine_behavior(id: &str) -> Option<Arc<dyn ByzantineBehavior>> {
    match id {
        "silent" => Some(Arc::new(SilentByz)),
        "equivocate" => Some(Arc::new(Equivocator::default())),
        "withhold-first" => Some(Arc::new(Withholder)),
        "inject-late" => Some(Arc::new(LateInjector::default())),
        _ => None,
    }
}
