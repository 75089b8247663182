//! Input configurations and the validity calculus.
//!
//! An input configuration assigns proposals to the processes that turn out
//! correct; with up to `t` corruptions its support covers between `n - t`
//! and `n` processes. A validity property maps each configuration to its
//! non-empty set of admissible decisions. Containment between
//! configurations, enumeration of the configuration space, and the
//! solvability analysis built on both live here and in the submodules.

pub mod cc;
pub mod property;

pub use cc::{
    check_cc, check_trivial, classify_solvability, CcReport, GammaError, GammaTable, Solvability,
    TrivialityReport,
};
pub use property::{
    resolve_property, PropertyFile, PropertyFileError, PropertyKind, PropertyResolveError,
    TableProperty, ValidityProperty,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Bit, ProcessId};

/// Upper bound on enumerable configuration spaces.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// A proposal or decision value: an integer, a label, or a vector of values.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Text(String),
    Vector(Vec<Value>),
}

impl Value {
    pub fn bit(b: Bit) -> Value {
        Value::Int(b.as_u8() as i64)
    }

    pub fn as_bit(&self) -> Option<Bit> {
        match self {
            Value::Int(0) => Some(Bit::Zero),
            Value::Int(1) => Some(Bit::One),
            _ => None,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Text(s) => write!(f, "{s:?}"),
            Value::Vector(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v:?}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Assignment of proposals to the eventually-correct processes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputConfiguration {
    entries: BTreeMap<ProcessId, Value>,
}

impl InputConfiguration {
    pub fn new(entries: BTreeMap<ProcessId, Value>) -> InputConfiguration {
        InputConfiguration { entries }
    }

    /// The uniform full configuration over `n` processes.
    pub fn uniform(n: u32, v: Value) -> InputConfiguration {
        InputConfiguration {
            entries: (1..=n).map(|i| (ProcessId(i), v.clone())).collect(),
        }
    }

    pub fn support(&self) -> BTreeSet<ProcessId> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, p: ProcessId) -> Option<&Value> {
        self.entries.get(&p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProcessId, &Value)> {
        self.entries.iter().map(|(p, v)| (*p, v))
    }

    pub fn is_full(&self, n: u32) -> bool {
        self.entries.len() as u32 == n
    }

    /// `Some(v)` when every entry proposes `v`.
    pub fn unanimous(&self) -> Option<&Value> {
        let mut values = self.entries.values();
        let first = values.next()?;
        values.all(|v| v == first).then_some(first)
    }

    /// Containment: this configuration extends `other`, i.e. every process
    /// of `other` appears here with the same proposal.
    pub fn contains(&self, other: &InputConfiguration) -> bool {
        other
            .entries
            .iter()
            .all(|(p, v)| self.entries.get(p) == Some(v))
    }

    /// Full extension: fill the missing processes with `fill`.
    pub fn extend_full(&self, n: u32, fill: &Value) -> InputConfiguration {
        let mut entries = self.entries.clone();
        for i in 1..=n {
            entries.entry(ProcessId(i)).or_insert_with(|| fill.clone());
        }
        InputConfiguration { entries }
    }

    /// The full configuration as a vector value in process order.
    pub fn as_vector(&self, n: u32) -> Option<Value> {
        if !self.is_full(n) {
            return None;
        }
        Some(Value::Vector(
            (1..=n)
                .map(|i| self.entries[&ProcessId(i)].clone())
                .collect(),
        ))
    }
}

impl fmt::Debug for InputConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (p, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}:{v:?}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for InputConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Parameters of a validity analysis: system size and the value domains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityContext {
    pub n: u32,
    pub t: u32,
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("process {process} outside p1..p{n}")]
    ProcessOutOfRange { process: ProcessId, n: u32 },
    #[error("support of size {size} outside [{min}, {max}]")]
    SupportSize { size: usize, min: u32, max: u32 },
    #[error("proposal {value:?} of {process} outside the input domain")]
    ValueOutsideDomain { process: ProcessId, value: Value },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("{count} configurations exceed the enumeration limit of {limit}")]
    TooManyConfigurations { count: u128, limit: u128 },
    #[error("empty input domain")]
    EmptyDomain,
}

impl ValidityContext {
    pub fn binary(n: u32, t: u32) -> ValidityContext {
        ValidityContext {
            n,
            t,
            inputs: vec![Value::Int(0), Value::Int(1)],
            outputs: vec![Value::Int(0), Value::Int(1)],
        }
    }

    pub fn min_support(&self) -> u32 {
        self.n.saturating_sub(self.t).max(1)
    }

    pub fn check_config(&self, c: &InputConfiguration) -> Result<(), ConfigError> {
        for (p, v) in c.iter() {
            if p.0 == 0 || p.0 > self.n {
                return Err(ConfigError::ProcessOutOfRange {
                    process: p,
                    n: self.n,
                });
            }
            if !self.inputs.contains(v) {
                return Err(ConfigError::ValueOutsideDomain {
                    process: p,
                    value: v.clone(),
                });
            }
        }
        let size = c.len();
        if (size as u32) < self.min_support() || size as u32 > self.n {
            return Err(ConfigError::SupportSize {
                size,
                min: self.min_support(),
                max: self.n,
            });
        }
        Ok(())
    }

    /// Number of configurations in the space.
    pub fn config_count(&self) -> u128 {
        let v = self.inputs.len() as u128;
        let mut total: u128 = 0;
        for size in self.min_support()..=self.n {
            total += binomial(self.n, size) * v.pow(size);
        }
        total
    }

    /// All configurations in canonical order: support size descending,
    /// supports in ascending lexicographic order, proposals in ascending
    /// value order. Refuses spaces beyond [`ENUMERATION_LIMIT`].
    pub fn enumerate_configs(&self) -> Result<Vec<InputConfiguration>, EnumerationError> {
        if self.inputs.is_empty() {
            return Err(EnumerationError::EmptyDomain);
        }
        let count = self.config_count();
        if count > ENUMERATION_LIMIT {
            return Err(EnumerationError::TooManyConfigurations {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
        let all: Vec<ProcessId> = (1..=self.n).map(ProcessId).collect();
        let mut out = Vec::with_capacity(count as usize);
        for size in (self.min_support()..=self.n).rev() {
            for support in combinations(&all, size as usize) {
                fill_values(&support, &self.inputs, &mut out);
            }
        }
        Ok(out)
    }
}

fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn combinations(pool: &[ProcessId], size: usize) -> Vec<Vec<ProcessId>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(
        pool: &[ProcessId],
        size: usize,
        start: usize,
        current: &mut Vec<ProcessId>,
        out: &mut Vec<Vec<ProcessId>>,
    ) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        let needed = size - current.len();
        for i in start..=pool.len().saturating_sub(needed) {
            current.push(pool[i]);
            rec(pool, size, i + 1, current, out);
            current.pop();
        }
    }
    if size == 0 {
        return out;
    }
    rec(pool, size, 0, &mut current, &mut out);
    out
}

fn fill_values(support: &[ProcessId], domain: &[Value], out: &mut Vec<InputConfiguration>) {
    let mut picks = vec![0usize; support.len()];
    loop {
        out.push(InputConfiguration::new(
            support
                .iter()
                .zip(picks.iter())
                .map(|(p, i)| (*p, domain[*i].clone()))
                .collect(),
        ));
        let mut pos = support.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            picks[pos] += 1;
            if picks[pos] < domain.len() {
                break;
            }
            picks[pos] = 0;
        }
    }
}

/// All configurations contained in `c`, in canonical order. `c` itself is
/// always a member.
pub fn containment_set(ctx: &ValidityContext, c: &InputConfiguration) -> Vec<InputConfiguration> {
    let support: Vec<ProcessId> = c.support().into_iter().collect();
    let min = ctx.min_support() as usize;
    let mut out = Vec::new();
    for size in (min..=support.len()).rev() {
        for sub in combinations(&support, size) {
            out.push(InputConfiguration::new(
                sub.iter().map(|p| (*p, c.get(*p).expect("supported").clone())).collect(),
            ));
        }
    }
    out
}
