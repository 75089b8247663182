//! Bridge from value machines to the binary round engine.
//!
//! The adapter owns a signature oracle shared by every simulated process of
//! a run, forwards proposals and decisions through their binary encodings,
//! and leaves states, payloads, and send lists untouched. Replaying the
//! same execution re-issues the same tokens, so verification stays
//! deterministic across repeated runs.

use std::collections::BTreeSet;

use crate::engine::values::{SignatureOracle, ValueCtx, ValueMachine, VmOutput};
use crate::engine::{AlgoContext, AlgoError, AlgoOutput, Algorithm, StateView};
use crate::model::{Bit, Message, ProcessId, Round};
use crate::validity::Value;

pub struct BitAdapter<M> {
    vm: M,
    id: String,
    hint: Option<fn(u32, u32) -> Round>,
    oracle: SignatureOracle,
}

impl<M: ValueMachine> BitAdapter<M> {
    pub fn new(vm: M, id: impl Into<String>, hint: Option<fn(u32, u32) -> Round>) -> BitAdapter<M> {
        BitAdapter {
            vm,
            id: id.into(),
            hint,
            oracle: SignatureOracle::new(),
        }
    }

    pub fn machine(&self) -> &M {
        &self.vm
    }
}

fn to_algo(out: VmOutput) -> Result<AlgoOutput, AlgoError> {
    let decision = match out.decision {
        None => None,
        Some(v) => Some(
            v.as_bit()
                .ok_or_else(|| AlgoError::state("machine decided a non-binary value"))?,
        ),
    };
    Ok(AlgoOutput {
        internal: out.state,
        decision,
        sends: out.sends,
    })
}

impl<M: ValueMachine> Algorithm for BitAdapter<M> {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn round_one(
        &self,
        ctx: &AlgoContext,
        me: ProcessId,
        proposal: Bit,
    ) -> Result<AlgoOutput, AlgoError> {
        let vctx = ValueCtx::attach(ctx.n, ctx.t, me, &self.oracle);
        to_algo(self.vm.init(&vctx, &Value::bit(proposal))?)
    }

    fn transition(
        &self,
        ctx: &AlgoContext,
        me: ProcessId,
        state: &StateView<'_>,
        received: &BTreeSet<Message>,
    ) -> Result<AlgoOutput, AlgoError> {
        let vctx = ValueCtx::attach(ctx.n, ctx.t, me, &self.oracle);
        to_algo(self.vm.step(&vctx, state.round, state.internal, received)?)
    }

    fn decision_round_hint(&self, n: u32, t: u32) -> Option<Round> {
        self.hint.map(|f| f(n, t))
    }
}
