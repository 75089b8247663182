//! Signed-chain interactive consistency.
//!
//! Every process runs `n` parallel broadcast instances, one per origin. A
//! value travels as a chain: the origin's value plus a growing list of
//! signatures, the first from the origin itself. A chain arriving in round
//! `r` counts only if it carries `r` valid signatures from distinct
//! processes; a process that extracts a new value for an instance co-signs
//! and relays it. Because at most two values per instance ever matter, each
//! process relays at most twice per instance, and after round `t + 1` all
//! honest processes have extracted identical value sets. The decision is
//! the vector of per-instance values, with a fixed default where an
//! instance yielded none or several.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::values::{SignatureToken, ValueCtx, ValueMachine, VmOutput};
use crate::engine::AlgoError;
use crate::model::{Bytes, Message, ProcessId, Round};
use crate::trace::digest_hex;
use crate::validity::Value;

/// Content covered by the `i`-th signature of a chain: origin, value, and
/// the signer list up to and including the `i`-th signer.
#[derive(Serialize)]
struct ChainContent<'a> {
    origin: ProcessId,
    value: &'a Value,
    signers: &'a [ProcessId],
}

/// Digest the `count`-signer prefix of a chain.
pub fn chain_digest(origin: ProcessId, value: &Value, signers: &[ProcessId]) -> Bytes {
    let content = ChainContent {
        origin,
        value,
        signers,
    };
    let json = serde_json::to_vec(&content).expect("chain content serializes");
    Bytes::from_hex(&digest_hex(&json)).expect("hex digest")
}

/// One relayed broadcast value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chain {
    pub origin: ProcessId,
    pub value: Value,
    pub signatures: Vec<SignatureToken>,
}

impl Chain {
    /// Starts a chain: the origin signs its own value.
    pub fn start(ctx: &ValueCtx<'_>, value: Value) -> Chain {
        let me = ctx.me;
        let signers = [me];
        let token = ctx.sign(chain_digest(me, &value, &signers));
        Chain {
            origin: me,
            value,
            signatures: vec![token],
        }
    }

    pub fn signers(&self) -> Vec<ProcessId> {
        self.signatures.iter().map(|s| s.signer).collect()
    }

    /// Extends the chain with the caller's signature.
    pub fn cosign(&self, ctx: &ValueCtx<'_>) -> Chain {
        let mut signers = self.signers();
        signers.push(ctx.me);
        let token = ctx.sign(chain_digest(self.origin, &self.value, &signers));
        let mut signatures = self.signatures.clone();
        signatures.push(token);
        Chain {
            origin: self.origin,
            value: self.value.clone(),
            signatures,
        }
    }

    /// A chain is acceptable in round `r` when it has exactly `r`
    /// signatures from distinct in-range processes, the first being the
    /// origin's, and every signature verifies against its prefix digest.
    pub fn acceptable(&self, ctx: &ValueCtx<'_>, round: Round) -> bool {
        let signers = self.signers();
        if signers.len() != round as usize {
            return false;
        }
        if signers.first() != Some(&self.origin) {
            return false;
        }
        let distinct: BTreeSet<ProcessId> = signers.iter().copied().collect();
        if distinct.len() != signers.len() {
            return false;
        }
        if signers.iter().any(|p| p.0 == 0 || p.0 > ctx.n) {
            return false;
        }
        for (i, token) in self.signatures.iter().enumerate() {
            if token.signer != signers[i] {
                return false;
            }
            if token.digest != chain_digest(self.origin, &self.value, &signers[..=i]) {
                return false;
            }
            if !ctx.verify(token) {
                return false;
            }
        }
        true
    }
}

/// Wire payload: the chains one process forwards to one receiver in one
/// round, bundled into a single message.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcPayload {
    pub chains: Vec<Chain>,
}

impl IcPayload {
    pub fn encode(&self) -> Bytes {
        Bytes::new(serde_json::to_vec(self).expect("payload serializes"))
    }

    pub fn decode(bytes: &[u8]) -> Option<IcPayload> {
        serde_json::from_slice(bytes).ok()
    }
}

/// Per-process protocol state between rounds.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct IcState {
    /// Values extracted so far, per origin. Only the first two matter.
    extracted: BTreeMap<ProcessId, BTreeSet<Value>>,
    /// Freshly co-signed chains awaiting relay next round.
    outbox: Vec<Chain>,
    done: bool,
}

impl IcState {
    fn encode(&self) -> Bytes {
        Bytes::new(serde_json::to_vec(self).expect("state serializes"))
    }

    fn decode(bytes: &[u8]) -> Result<IcState, AlgoError> {
        serde_json::from_slice(bytes).map_err(AlgoError::state)
    }
}

/// The interactive consistency machine. Communication runs for `t + 1`
/// rounds; the decision appears after the transition of round `t + 1`.
#[derive(Clone, Debug)]
pub struct DsIc {
    /// Default vector entry when an instance yields no value or several.
    pub default: Value,
}

impl DsIc {
    pub fn new(default: Value) -> DsIc {
        DsIc { default }
    }

    pub fn comm_rounds(t: u32) -> Round {
        t + 1
    }
}

impl ValueMachine for DsIc {
    fn id(&self) -> String {
        "signed-relay-ic".to_string()
    }

    fn init(&self, ctx: &ValueCtx<'_>, proposal: &Value) -> Result<VmOutput, AlgoError> {
        let own = Chain::start(ctx, proposal.clone());
        let payload = IcPayload {
            chains: vec![own],
        }
        .encode();
        let mut state = IcState::default();
        state
            .extracted
            .insert(ctx.me, BTreeSet::from([proposal.clone()]));
        let mut out = VmOutput::new(state.encode());
        for to in ctx.others() {
            out = out.send(to, payload.clone());
        }
        Ok(out)
    }

    fn step(
        &self,
        ctx: &ValueCtx<'_>,
        round: Round,
        state: &[u8],
        inbox: &BTreeSet<Message>,
    ) -> Result<VmOutput, AlgoError> {
        let mut st = IcState::decode(state)?;
        if st.done {
            return Ok(VmOutput::new(st.encode()));
        }
        let comm = DsIc::comm_rounds(ctx.t);
        for m in inbox {
            let Some(payload) = IcPayload::decode(m.payload.as_slice()) else {
                continue;
            };
            for chain in payload.chains {
                // Chains whose value is already extracted (or whose origin
                // already tracks two values) change nothing, so the
                // signature checks are skipped for them.
                if let Some(slot) = st.extracted.get(&chain.origin) {
                    if slot.contains(&chain.value) || slot.len() >= 2 {
                        continue;
                    }
                }
                if !chain.acceptable(ctx, round) {
                    continue;
                }
                let slot = st.extracted.entry(chain.origin).or_default();
                slot.insert(chain.value.clone());
                // Relay newly extracted values while another round of
                // communication remains and we have not already signed.
                if round < comm && !chain.signers().contains(&ctx.me) {
                    st.outbox.push(chain.cosign(ctx));
                }
            }
        }

        if round >= comm {
            let decision = Value::Vector(
                (1..=ctx.n)
                    .map(|i| {
                        let slot = st.extracted.get(&ProcessId(i));
                        match slot {
                            Some(s) if s.len() == 1 => {
                                s.first().expect("len checked").clone()
                            }
                            _ => self.default.clone(),
                        }
                    })
                    .collect(),
            );
            st.outbox.clear();
            st.done = true;
            return Ok(VmOutput::new(st.encode()).decide(decision));
        }

        let mut out_chains = std::mem::take(&mut st.outbox);
        out_chains.sort();
        let mut out = VmOutput::new(st.encode());
        if !out_chains.is_empty() {
            let payload = IcPayload { chains: out_chains }.encode();
            for to in ctx.others() {
                out = out.send(to, payload.clone());
            }
        }
        Ok(out)
    }
}
