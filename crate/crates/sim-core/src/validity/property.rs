//! Validity properties: the map from input configurations to admissible
//! decision sets, with built-in families and a file format for custom
//! table-driven properties.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::validity::{ConfigError, InputConfiguration, ValidityContext, Value};

/// The shape of a validity property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropertyKind {
    /// All correct processes propose the same value: that value is the sole
    /// admissible decision. Otherwise every output is admissible.
    Weak,
    /// Some value is proposed by enough processes that every correct process
    /// may have proposed it: unanimity of any admissible support forces it.
    Strong,
    /// Decisions are full vectors that agree with every correct proposal at
    /// its own position.
    InteractiveConsistency,
    /// One fixed admissible decision regardless of input.
    Constant(Value),
    /// Explicit table with a default admissible set and per-configuration
    /// overrides.
    Table(TableProperty),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableProperty {
    pub default: BTreeSet<Value>,
    pub overrides: Vec<(InputConfiguration, BTreeSet<Value>)>,
}

impl TableProperty {
    fn admissible(&self, c: &InputConfiguration) -> BTreeSet<Value> {
        for (config, set) in &self.overrides {
            if config == c {
                return set.clone();
            }
        }
        self.default.clone()
    }
}

/// A validity property over a concrete context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidityProperty {
    pub ctx: ValidityContext,
    pub kind: PropertyKind,
}

impl ValidityProperty {
    pub fn weak_binary(n: u32, t: u32) -> ValidityProperty {
        ValidityProperty {
            ctx: ValidityContext::binary(n, t),
            kind: PropertyKind::Weak,
        }
    }

    pub fn strong_binary(n: u32, t: u32) -> ValidityProperty {
        ValidityProperty {
            ctx: ValidityContext::binary(n, t),
            kind: PropertyKind::Strong,
        }
    }

    /// Interactive consistency over binary proposals. Outputs are all full
    /// binary vectors; they are produced on demand rather than stored.
    pub fn ic_binary(n: u32, t: u32) -> ValidityProperty {
        let mut ctx = ValidityContext::binary(n, t);
        ctx.outputs = Vec::new();
        ValidityProperty {
            ctx,
            kind: PropertyKind::InteractiveConsistency,
        }
    }

    pub fn constant_binary(n: u32, t: u32, v: Value) -> ValidityProperty {
        ValidityProperty {
            ctx: ValidityContext::binary(n, t),
            kind: PropertyKind::Constant(v),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            PropertyKind::Weak => "weak".into(),
            PropertyKind::Strong => "strong".into(),
            PropertyKind::InteractiveConsistency => "interactive-consistency".into(),
            PropertyKind::Constant(v) => format!("constant({v})"),
            PropertyKind::Table(_) => "table".into(),
        }
    }

    /// The admissible decision set `val(c)`. For interactive consistency the
    /// members are full vectors extending `c`.
    pub fn admissible(&self, c: &InputConfiguration) -> BTreeSet<Value> {
        match &self.kind {
            PropertyKind::Weak => {
                if c.is_full(self.ctx.n) {
                    if let Some(v) = c.unanimous() {
                        if self.ctx.outputs.contains(v) {
                            return BTreeSet::from([v.clone()]);
                        }
                    }
                }
                self.ctx.outputs.iter().cloned().collect()
            }
            PropertyKind::Strong => {
                if let Some(v) = c.unanimous() {
                    if self.ctx.outputs.contains(v) {
                        return BTreeSet::from([v.clone()]);
                    }
                }
                self.ctx.outputs.iter().cloned().collect()
            }
            PropertyKind::InteractiveConsistency => full_extensions(&self.ctx, c),
            PropertyKind::Constant(v) => BTreeSet::from([v.clone()]),
            PropertyKind::Table(table) => table.admissible(c),
        }
    }
}

/// All full vector values extending `c` with arbitrary domain entries at the
/// missing positions.
fn full_extensions(ctx: &ValidityContext, c: &InputConfiguration) -> BTreeSet<Value> {
    let missing: Vec<u32> = (1..=ctx.n)
        .filter(|i| c.get(crate::model::ProcessId(*i)).is_none())
        .collect();
    let mut out = BTreeSet::new();
    let mut picks = vec![0usize; missing.len()];
    loop {
        let mut entries = Vec::with_capacity(ctx.n as usize);
        let mut miss_at = 0;
        for i in 1..=ctx.n {
            match c.get(crate::model::ProcessId(i)) {
                Some(v) => entries.push(v.clone()),
                None => {
                    entries.push(ctx.inputs[picks[miss_at]].clone());
                    miss_at += 1;
                }
            }
        }
        out.insert(Value::Vector(entries));
        let mut pos = missing.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            picks[pos] += 1;
            if picks[pos] < ctx.inputs.len() {
                break;
            }
            picks[pos] = 0;
        }
    }
}

/// On-disk description of a property.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyFile {
    pub n: u32,
    pub t: u32,
    #[serde(default)]
    pub inputs: Vec<Value>,
    #[serde(default)]
    pub outputs: Vec<Value>,
    pub kind: PropertyFileKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyFileKind {
    Weak,
    Strong,
    InteractiveConsistency,
    Constant(Value),
    Table {
        default: Vec<Value>,
        #[serde(default)]
        overrides: Vec<PropertyOverride>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyOverride {
    pub config: InputConfiguration,
    pub admissible: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyFileError {
    #[error("n must be positive and t < n (got n={n}, t={t})")]
    BadParameters { n: u32, t: u32 },
    #[error("empty input domain")]
    EmptyInputs,
    #[error("empty output domain")]
    EmptyOutputs,
    #[error("empty admissible set for {config}")]
    EmptyAdmissible { config: InputConfiguration },
    #[error("admissible value {value:?} outside the output domain")]
    AdmissibleOutsideDomain { value: Value },
    #[error("override configuration invalid: {0}")]
    BadConfig(#[from] ConfigError),
}

impl PropertyFile {
    pub fn into_property(self) -> Result<ValidityProperty, PropertyFileError> {
        if self.n == 0 || self.t >= self.n {
            return Err(PropertyFileError::BadParameters {
                n: self.n,
                t: self.t,
            });
        }
        let binary = || vec![Value::Int(0), Value::Int(1)];
        let inputs = if self.inputs.is_empty() {
            binary()
        } else {
            dedup_sorted(self.inputs)
        };
        let outputs = if self.outputs.is_empty() {
            match self.kind {
                PropertyFileKind::InteractiveConsistency => Vec::new(),
                _ => binary(),
            }
        } else {
            dedup_sorted(self.outputs)
        };
        if inputs.is_empty() {
            return Err(PropertyFileError::EmptyInputs);
        }
        let ctx = ValidityContext {
            n: self.n,
            t: self.t,
            inputs,
            outputs,
        };
        let kind = match self.kind {
            PropertyFileKind::Weak => PropertyKind::Weak,
            PropertyFileKind::Strong => PropertyKind::Strong,
            PropertyFileKind::InteractiveConsistency => PropertyKind::InteractiveConsistency,
            PropertyFileKind::Constant(v) => {
                if !ctx.outputs.contains(&v) {
                    return Err(PropertyFileError::AdmissibleOutsideDomain { value: v });
                }
                PropertyKind::Constant(v)
            }
            PropertyFileKind::Table { default, overrides } => {
                let default: BTreeSet<Value> = default.into_iter().collect();
                if default.is_empty() {
                    return Err(PropertyFileError::EmptyOutputs);
                }
                for v in &default {
                    if !ctx.outputs.contains(v) {
                        return Err(PropertyFileError::AdmissibleOutsideDomain {
                            value: v.clone(),
                        });
                    }
                }
                let mut table = Vec::new();
                for o in overrides {
                    ctx.check_config(&o.config)?;
                    let set: BTreeSet<Value> = o.admissible.into_iter().collect();
                    if set.is_empty() {
                        return Err(PropertyFileError::EmptyAdmissible { config: o.config });
                    }
                    for v in &set {
                        if !ctx.outputs.contains(v) {
                            return Err(PropertyFileError::AdmissibleOutsideDomain {
                                value: v.clone(),
                            });
                        }
                    }
                    table.push((o.config, set));
                }
                PropertyKind::Table(TableProperty {
                    default,
                    overrides: table,
                })
            }
        };
        if ctx.outputs.is_empty() && !matches!(kind, PropertyKind::InteractiveConsistency) {
            return Err(PropertyFileError::EmptyOutputs);
        }
        Ok(ValidityProperty { ctx, kind })
    }
}

fn dedup_sorted(mut vs: Vec<Value>) -> Vec<Value> {
    vs.sort();
    vs.dedup();
    vs
}

/// Resolve a property reference: `builtin:<name>` with the context sizes, or
/// a JSON file path.
pub fn resolve_property(
    reference: &str,
    n: u32,
    t: u32,
) -> Result<ValidityProperty, PropertyResolveError> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        return match name {
            "weak" => Ok(ValidityProperty::weak_binary(n, t)),
            "strong" => Ok(ValidityProperty::strong_binary(n, t)),
            "ic" => Ok(ValidityProperty::ic_binary(n, t)),
            "trivial" => Ok(ValidityProperty::constant_binary(n, t, Value::Int(0))),
            other => Err(PropertyResolveError::UnknownBuiltin(other.to_string())),
        };
    }
    let text = std::fs::read_to_string(reference)
        .map_err(|e| PropertyResolveError::Io(reference.to_string(), e.to_string()))?;
    let file: PropertyFile = serde_json::from_str(&text)
        .map_err(|e| PropertyResolveError::Parse(reference.to_string(), e.to_string()))?;
    Ok(file.into_property()?)
}

#[derive(Debug, Error)]
pub enum PropertyResolveError {
    #[error("unknown builtin property {0:?} (expected weak, strong, ic, or trivial)")]
    UnknownBuiltin(String),
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("cannot parse {0}: {1}")]
    Parse(String, String),
    #[error(transparent)]
    Invalid(#[from] PropertyFileError),
}

impl fmt::Display for ValidityProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}
