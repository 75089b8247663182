//! Reduction layers over the interactive consistency machine.
//!
//! The selection layer turns an agreed proposal vector into a single agreed
//! value through the property's selection map. The binary overlay then
//! collapses arbitrary-value agreement to binary agreement through a pair
//! of anchor configurations, adding no messages of its own: each layer
//! rewrites proposals on the way in and decisions on the way out.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::values::{ValueCtx, ValueMachine, VmOutput};
use crate::engine::AlgoError;
use crate::model::{Message, ProcessId, Round};
use crate::reductions::anchors::AnchorSet;
use crate::reductions::ic::DsIc;
use crate::validity::{GammaTable, InputConfiguration, Value};

/// Runs the inner machine to an agreed full vector, then decides the
/// selection value of that vector read as an input configuration.
pub struct IcThenSelect {
    pub ic: DsIc,
    gamma: GammaTable,
}

impl IcThenSelect {
    pub fn new(ic: DsIc, gamma: GammaTable) -> IcThenSelect {
        IcThenSelect { ic, gamma }
    }

    fn select(&self, ctx: &ValueCtx<'_>, decision: Value) -> Result<Value, AlgoError> {
        let Value::Vector(entries) = decision else {
            return Err(AlgoError::state("expected a vector decision"));
        };
        if entries.len() != ctx.n as usize {
            return Err(AlgoError::state("vector decision of the wrong width"));
        }
        // Entries injected by corrupted origins may fall outside the input
        // domain; they are clamped to the smallest input, identically at
        // every correct process.
        let inputs = &self.gamma.property().ctx.inputs;
        let fallback = inputs.first().ok_or_else(|| AlgoError::state("empty domain"))?;
        let entries: BTreeMap<ProcessId, Value> = entries
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let v = if inputs.contains(&v) { v } else { fallback.clone() };
                (ProcessId(i as u32 + 1), v)
            })
            .collect();
        let config = InputConfiguration::new(entries);
        self.gamma
            .select(&config)
            .map_err(|e| AlgoError::state(format!("selection failed: {e}")))
    }
}

impl ValueMachine for IcThenSelect {
    fn id(&self) -> String {
        format!("select-{}", self.ic.id())
    }

    fn init(&self, ctx: &ValueCtx<'_>, proposal: &Value) -> Result<VmOutput, AlgoError> {
        self.ic.init(ctx, proposal)
    }

    fn step(
        &self,
        ctx: &ValueCtx<'_>,
        round: Round,
        state: &[u8],
        inbox: &BTreeSet<Message>,
    ) -> Result<VmOutput, AlgoError> {
        let mut out = self.ic.step(ctx, round, state, inbox)?;
        if let Some(vector) = out.decision.take() {
            out.decision = Some(self.select(ctx, vector)?);
        }
        Ok(out)
    }
}

/// Binary front end over an arbitrary-value machine: bit `b` proposes the
/// caller's entry of anchor configuration `c_b`, and the inner decision is
/// folded back to a bit by comparison with the first anchor value.
pub struct BinaryOverlay<M> {
    pub inner: M,
    pub anchors: AnchorSet,
    id: String,
}

impl<M: ValueMachine> BinaryOverlay<M> {
    pub fn new(inner: M, anchors: AnchorSet, id: impl Into<String>) -> BinaryOverlay<M> {
        BinaryOverlay {
            inner,
            anchors,
            id: id.into(),
        }
    }
}

impl<M: ValueMachine> ValueMachine for BinaryOverlay<M> {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn init(&self, ctx: &ValueCtx<'_>, proposal: &Value) -> Result<VmOutput, AlgoError> {
        let bit = proposal
            .as_bit()
            .ok_or_else(|| AlgoError::state("binary proposal expected"))?;
        let anchor = match bit {
            crate::model::Bit::Zero => &self.anchors.c0,
            crate::model::Bit::One => &self.anchors.c1,
        };
        let inner_proposal = anchor
            .get(ctx.me)
            .ok_or_else(|| AlgoError::state("anchor configuration is not full"))?;
        self.inner.init(ctx, inner_proposal)
    }

    fn step(
        &self,
        ctx: &ValueCtx<'_>,
        round: Round,
        state: &[u8],
        inbox: &BTreeSet<Message>,
    ) -> Result<VmOutput, AlgoError> {
        let mut out = self.inner.step(ctx, round, state, inbox)?;
        if let Some(v) = out.decision.take() {
            let bit = if v == self.anchors.v0 { 0 } else { 1 };
            out.decision = Some(Value::Int(bit));
        }
        Ok(out)
    }
}
