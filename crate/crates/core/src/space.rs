//! Ordered discrete hyperparameter domains and their mixed-radix encoding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameter names of the two-layer network space.
pub mod names {
    pub const INIT_LR: &str = "init_lr";
    pub const BATCH_SIZE: &str = "batch_size";
    pub const LR_SCHEDULE: &str = "lr_schedule";
    pub const ACTIVATION_1: &str = "activation_fn_1";
    pub const ACTIVATION_2: &str = "activation_fn_2";
    pub const N_UNITS_1: &str = "n_units_1";
    pub const N_UNITS_2: &str = "n_units_2";
    pub const DROPOUT_1: &str = "dropout_1";
    pub const DROPOUT_2: &str = "dropout_2";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Ordinal,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Str(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameter {
    pub name: String,
    pub kind: ParamKind,
    pub values: Vec<Value>,
}

impl Hyperparameter {
    pub fn ordinal(name: &str, values: &[f64]) -> Self {
        Hyperparameter {
            name: name.to_owned(),
            kind: ParamKind::Ordinal,
            values: values.iter().copied().map(Value::Num).collect(),
        }
    }

    pub fn categorical(name: &str, values: &[&str]) -> Self {
        Hyperparameter {
            name: name.to_owned(),
            kind: ParamKind::Categorical,
            values: values.iter().copied().map(Value::from).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpace(format!("parameter `{}`: {msg}", self.name)));
        if self.values.is_empty() {
            return bad("no values".into());
        }
        for (i, a) in self.values.iter().enumerate() {
            if self.values[..i].contains(a) {
                return bad(format!("duplicate value {a}"));
            }
        }
        if self.kind == ParamKind::Ordinal {
            let mut prev = f64::NEG_INFINITY;
            for v in &self.values {
                match v.as_f64() {
                    Some(x) if x.is_finite() && x > prev => prev = x,
                    Some(_) => return bad("ordinal values must be finite and strictly increasing".into()),
                    None => return bad(format!("ordinal value {v} is not a number")),
                }
            }
        }
        Ok(())
    }
}

/// Position of one grid cell in mixed-radix order (first parameter is the
/// most significant digit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigIndex(pub usize);

impl fmt::Display for ConfigIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Hyperparameter>", into = "Vec<Hyperparameter>")]
pub struct ConfigSpace {
    params: Vec<Hyperparameter>,
    // strides[i] = product of cardinalities after parameter i
    strides: Vec<usize>,
    cardinality: usize,
}

impl TryFrom<Vec<Hyperparameter>> for ConfigSpace {
    type Error = Error;

    fn try_from(params: Vec<Hyperparameter>) -> Result<Self> {
        ConfigSpace::new(params)
    }
}

impl From<ConfigSpace> for Vec<Hyperparameter> {
    fn from(space: ConfigSpace) -> Self {
        space.params
    }
}

impl ConfigSpace {
    pub fn new(params: Vec<Hyperparameter>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidSpace("no parameters".into()));
        }
        for (i, p) in params.iter().enumerate() {
            p.check()?;
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidSpace(format!("duplicate parameter name `{}`", p.name)));
            }
        }
        let mut strides = vec![1usize; params.len()];
        let mut acc: usize = 1;
        for i in (0..params.len()).rev() {
            strides[i] = acc;
            acc = acc
                .checked_mul(params[i].cardinality())
                .ok_or_else(|| Error::InvalidSpace("cardinality overflows usize".into()))?;
        }
        Ok(ConfigSpace {
            params,
            strides,
            cardinality: acc,
        })
    }

    /// The nine-parameter feed-forward network space (62,208 cells).
    pub fn fcnet() -> Self {
        use names::*;
        let sizes = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
        let dropout = [0.0, 0.3, 0.6];
        ConfigSpace::new(vec![
            Hyperparameter::ordinal(INIT_LR, &[0.0005, 0.001, 0.005, 0.01, 0.05, 0.1]),
            Hyperparameter::ordinal(BATCH_SIZE, &[8.0, 16.0, 32.0, 64.0]),
            Hyperparameter::categorical(LR_SCHEDULE, &["cosine", "const"]),
            Hyperparameter::categorical(ACTIVATION_1, &["relu", "tanh"]),
            Hyperparameter::categorical(ACTIVATION_2, &["relu", "tanh"]),
            Hyperparameter::ordinal(N_UNITS_1, &sizes),
            Hyperparameter::ordinal(N_UNITS_2, &sizes),
            Hyperparameter::ordinal(DROPOUT_1, &dropout),
            Hyperparameter::ordinal(DROPOUT_2, &dropout),
        ])
        .expect("fcnet space is valid")
    }

    pub fn params(&self) -> &[Hyperparameter] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.params.iter().map(Hyperparameter::cardinality).collect()
    }

    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn check_index(&self, index: ConfigIndex) -> Result<()> {
        if index.0 < self.cardinality {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: index.0,
                cardinality: self.cardinality,
            })
        }
    }

    pub fn encode(&self, positions: &[usize]) -> Result<ConfigIndex> {
        if positions.len() != self.params.len() {
            return Err(Error::Arity {
                expected: self.params.len(),
                got: positions.len(),
            });
        }
        let mut index = 0;
        for ((p, &pos), &stride) in self.params.iter().zip(positions).zip(&self.strides) {
            if pos >= p.cardinality() {
                return Err(Error::Domain {
                    param: p.name.clone(),
                    position: pos,
                    cardinality: p.cardinality(),
                });
            }
            index += pos * stride;
        }
        Ok(ConfigIndex(index))
    }

    pub fn decode(&self, index: ConfigIndex) -> Result<Vec<usize>> {
        let mut out = vec![0; self.params.len()];
        self.decode_into(index, &mut out)?;
        Ok(out)
    }

    /// Allocation-free [`decode`](Self::decode); `out` must have one slot per parameter.
    pub fn decode_into(&self, index: ConfigIndex, out: &mut [usize]) -> Result<()> {
        self.check_index(index)?;
        if out.len() != self.params.len() {
            return Err(Error::Arity {
                expected: self.params.len(),
                got: out.len(),
            });
        }
        let mut rest = index.0;
        for (slot, &stride) in out.iter_mut().zip(&self.strides) {
            *slot = rest / stride;
            rest %= stride;
        }
        Ok(())
    }

    /// Position of parameter `param` within the cell `index`.
    pub fn digit(&self, index: ConfigIndex, param: usize) -> usize {
        (index.0 / self.strides[param]) % self.params[param].cardinality()
    }

    /// Replaces one digit of `index`; `position` must be in range.
    pub fn with_digit(&self, index: ConfigIndex, param: usize, position: usize) -> ConfigIndex {
        debug_assert!(position < self.params[param].cardinality());
        let old = self.digit(index, param);
        ConfigIndex(index.0 - old * self.strides[param] + position * self.strides[param])
    }

    /// All cells at Hamming distance one, ordered by parameter and then value position.
    pub fn neighbors(&self, index: ConfigIndex) -> Result<Vec<ConfigIndex>> {
        self.check_index(index)?;
        let mut out = Vec::with_capacity(self.neighbor_count());
        for (i, p) in self.params.iter().enumerate() {
            let cur = self.digit(index, i);
            for pos in (0..p.cardinality()).filter(|&pos| pos != cur) {
                out.push(self.with_digit(index, i, pos));
            }
        }
        Ok(out)
    }

    pub fn neighbor_count(&self) -> usize {
        self.params.iter().map(|p| p.cardinality() - 1).sum()
    }

    /// Human-readable `name=value` rendering of a cell.
    pub fn describe(&self, index: ConfigIndex) -> Result<String> {
        let positions = self.decode(index)?;
        Ok(self
            .params
            .iter()
            .zip(&positions)
            .map(|(p, &pos)| format!("{}={}", p.name, p.values[pos]))
            .collect::<Vec<_>>()
            .join(","))
    }
}
