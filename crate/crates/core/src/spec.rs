//! Nested values and the specs that describe them.
//!
//! Observations and actions are trees of arrays. A [`Spec`] mirrors that tree and
//! pins shape, dtype and bounds at every leaf; [`Spec::validate`] reports the first
//! offending path.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DType {
    Bool,
    Int,
    Float,
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DType::Bool => "bool",
            DType::Int => "int",
            DType::Float => "float",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ArrayData {
    Bool(Vec<bool>),
    Int(Vec<i64>),
    Float(Vec<f64>),
}

impl ArrayData {
    pub fn dtype(&self) -> DType {
        match self {
            ArrayData::Bool(_) => DType::Bool,
            ArrayData::Int(_) => DType::Int,
            ArrayData::Float(_) => DType::Float,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ArrayData::Bool(v) => v.len(),
            ArrayData::Int(v) => v.len(),
            ArrayData::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_f64(&self, i: usize) -> f64 {
        match self {
            ArrayData::Bool(v) => v[i] as u8 as f64,
            ArrayData::Int(v) => v[i] as f64,
            ArrayData::Float(v) => v[i],
        }
    }
}

/// A dense n-dimensional array stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayValue {
    pub shape: Vec<usize>,
    pub data: ArrayData,
}

impl ArrayValue {
    pub fn new(shape: Vec<usize>, data: ArrayData) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn scalar_int(v: i64) -> Self {
        Self::new(vec![], ArrayData::Int(vec![v]))
    }

    pub fn scalar_float(v: f64) -> Self {
        Self::new(vec![], ArrayData::Float(vec![v]))
    }

    pub fn ints(shape: Vec<usize>, v: Vec<i64>) -> Self {
        Self::new(shape, ArrayData::Int(v))
    }

    pub fn floats(shape: Vec<usize>, v: Vec<f64>) -> Self {
        Self::new(shape, ArrayData::Float(v))
    }

    pub fn bools(shape: Vec<usize>, v: Vec<bool>) -> Self {
        Self::new(shape, ArrayData::Bool(v))
    }

    pub fn as_ints(&self) -> Option<&[i64]> {
        match &self.data {
            ArrayData::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_floats(&self) -> Option<&[f64]> {
        match &self.data {
            ArrayData::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bools(&self) -> Option<&[bool]> {
        match &self.data {
            ArrayData::Bool(v) => Some(v),
            _ => None,
        }
    }
}

/// A nested observation or action value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Array(ArrayValue),
    Composite(Vec<(String, Value)>),
}

impl Value {
    pub fn composite<I, S>(children: I) -> Self
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        Value::Composite(children.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Child lookup by name; `None` for arrays or missing names.
    pub fn get(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Composite(children) => children.iter().find(|(k, _)| k == name).map(|(_, v)| v),
            Value::Array(_) => None,
        }
    }

    pub fn as_array(&self) -> Option<&ArrayValue> {
        match self {
            Value::Array(a) => Some(a),
            Value::Composite(_) => None,
        }
    }

    /// Flat integer view, used for actions.
    pub fn to_ints(&self) -> Option<Vec<i64>> {
        self.as_array().and_then(|a| a.as_ints()).map(<[i64]>::to_vec)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Array(ArrayValue::scalar_int(v))
    }
}

impl From<Vec<i64>> for Value {
    fn from(v: Vec<i64>) -> Self {
        let n = v.len();
        Value::Array(ArrayValue::ints(vec![n], v))
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Array(ArrayValue::scalar_float(v))
    }
}

impl From<ArrayValue> for Value {
    fn from(v: ArrayValue) -> Self {
        Value::Array(v)
    }
}

/// Validation failure: the dotted path of the offending node and a reason.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("spec mismatch at `{path}`: {reason}")]
pub struct SpecError {
    pub path: String,
    pub reason: String,
}

impl SpecError {
    fn new(path: &str, reason: impl Into<String>) -> Self {
        let path = if path.is_empty() { "<root>".to_string() } else { path.to_string() };
        Self { path, reason: reason.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Spec {
    Array {
        shape: Vec<usize>,
        dtype: DType,
    },
    /// Bounds hold either one value (broadcast) or one value per element.
    BoundedArray {
        shape: Vec<usize>,
        dtype: DType,
        minimum: Vec<f64>,
        maximum: Vec<f64>,
    },
    /// Scalar integer in `0..num_values`.
    DiscreteArray {
        num_values: u64,
    },
    /// Integer vector, entry `i` in `0..num_values[i]`.
    MultiDiscreteArray {
        num_values: Vec<u64>,
    },
    Composite(Vec<(String, Spec)>),
}

impl Spec {
    pub fn array(shape: Vec<usize>, dtype: DType) -> Self {
        Spec::Array { shape, dtype }
    }

    pub fn bounded(
        shape: Vec<usize>,
        dtype: DType,
        minimum: Vec<f64>,
        maximum: Vec<f64>,
    ) -> Result<Self, SpecError> {
        let n: usize = shape.iter().product();
        for (name, b) in [("minimum", &minimum), ("maximum", &maximum)] {
            if b.len() != 1 && b.len() != n {
                return Err(SpecError::new("", format!("{name} has {} entries for {n} elements", b.len())));
            }
        }
        for i in 0..n {
            let lo = minimum[if minimum.len() == 1 { 0 } else { i }];
            let hi = maximum[if maximum.len() == 1 { 0 } else { i }];
            if !(lo <= hi) {
                return Err(SpecError::new("", format!("minimum {lo} exceeds maximum {hi} at element {i}")));
            }
        }
        Ok(Spec::BoundedArray { shape, dtype, minimum, maximum })
    }

    pub fn bounded_scalar(dtype: DType, minimum: f64, maximum: f64) -> Result<Self, SpecError> {
        Self::bounded(vec![], dtype, vec![minimum], vec![maximum])
    }

    pub fn discrete(num_values: u64) -> Result<Self, SpecError> {
        if num_values == 0 {
            return Err(SpecError::new("", "discrete spec needs num_values >= 1"));
        }
        Ok(Spec::DiscreteArray { num_values })
    }

    pub fn multi_discrete(num_values: Vec<u64>) -> Result<Self, SpecError> {
        if let Some(i) = num_values.iter().position(|&v| v == 0) {
            return Err(SpecError::new("", format!("num_values[{i}] must be >= 1")));
        }
        Ok(Spec::MultiDiscreteArray { num_values })
    }

    pub fn composite<I, S>(children: I) -> Result<Self, SpecError>
    where
        I: IntoIterator<Item = (S, Spec)>,
        S: Into<String>,
    {
        let children: Vec<(String, Spec)> = children.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let mut seen = HashSet::new();
        for (name, _) in &children {
            if !seen.insert(name.as_str()) {
                return Err(SpecError::new(name, "duplicate child name"));
            }
        }
        Ok(Spec::Composite(children))
    }

    pub fn child(&self, name: &str) -> Option<&Spec> {
        match self {
            Spec::Composite(c) => c.iter().find(|(k, _)| k == name).map(|(_, s)| s),
            _ => None,
        }
    }

    pub fn validate(&self, value: &Value) -> Result<(), SpecError> {
        self.validate_at("", value)
    }

    fn validate_at(&self, path: &str, value: &Value) -> Result<(), SpecError> {
        match self {
            Spec::Composite(children) => {
                let Value::Composite(vals) = value else {
                    return Err(SpecError::new(path, "expected a composite value"));
                };
                for (name, spec) in children {
                    let child_path = join(path, name);
                    let Some((_, v)) = vals.iter().find(|(k, _)| k == name) else {
                        return Err(SpecError::new(&child_path, "missing child"));
                    };
                    spec.validate_at(&child_path, v)?;
                }
                if let Some((extra, _)) = vals.iter().find(|(k, _)| children.iter().all(|(c, _)| c != k)) {
                    return Err(SpecError::new(&join(path, extra), "unexpected child"));
                }
                Ok(())
            }
            leaf => {
                let Value::Array(arr) = value else {
                    return Err(SpecError::new(path, "expected an array, found a composite"));
                };
                leaf.validate_leaf(path, arr)
            }
        }
    }

    fn validate_leaf(&self, path: &str, arr: &ArrayValue) -> Result<(), SpecError> {
        let (shape, dtype) = match self {
            Spec::Array { shape, dtype } | Spec::BoundedArray { shape, dtype, .. } => (shape.clone(), *dtype),
            Spec::DiscreteArray { .. } => (vec![], DType::Int),
            Spec::MultiDiscreteArray { num_values } => (vec![num_values.len()], DType::Int),
            Spec::Composite(_) => unreachable!(),
        };
        if arr.shape != shape {
            return Err(SpecError::new(path, format!("shape {:?} does not match {:?}", arr.shape, shape)));
        }
        if arr.data.dtype() != dtype {
            return Err(SpecError::new(path, format!("dtype {} does not match {}", arr.data.dtype(), dtype)));
        }
        if arr.data.len() != shape.iter().product::<usize>() {
            return Err(SpecError::new(path, "data length does not match shape"));
        }
        match self {
            Spec::BoundedArray { minimum, maximum, .. } => {
                for i in 0..arr.data.len() {
                    let v = arr.data.get_f64(i);
                    let lo = minimum[if minimum.len() == 1 { 0 } else { i }];
                    let hi = maximum[if maximum.len() == 1 { 0 } else { i }];
                    if !(lo <= v && v <= hi) {
                        return Err(SpecError::new(
                            path,
                            format!("out of range: element {i} = {v} not in [{lo}, {hi}]"),
                        ));
                    }
                }
            }
            Spec::DiscreteArray { num_values } => {
                let v = arr.as_ints().unwrap()[0];
                if v < 0 || v as u64 >= *num_values {
                    return Err(SpecError::new(path, format!("out of range: {v} not in 0..{num_values}")));
                }
            }
            Spec::MultiDiscreteArray { num_values } => {
                for (i, (&v, &n)) in arr.as_ints().unwrap().iter().zip(num_values).enumerate() {
                    if v < 0 || v as u64 >= n {
                        return Err(SpecError::new(path, format!("out of range: element {i} = {v} not in 0..{n}")));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical value: zeros, the minimum bound, or 0 for discrete specs.
    pub fn generate_value(&self) -> Value {
        match self {
            Spec::Array { shape, dtype } => Value::Array(zeros(shape.clone(), *dtype)),
            Spec::BoundedArray { shape, dtype, minimum, .. } => {
                let n: usize = shape.iter().product();
                let lo = |i: usize| minimum[if minimum.len() == 1 { 0 } else { i }];
                let data = match dtype {
                    DType::Bool => ArrayData::Bool((0..n).map(|i| lo(i) > 0.0).collect()),
                    DType::Int => ArrayData::Int((0..n).map(|i| lo(i).ceil() as i64).collect()),
                    DType::Float => ArrayData::Float((0..n).map(lo).collect()),
                };
                Value::Array(ArrayValue::new(shape.clone(), data))
            }
            Spec::DiscreteArray { .. } => Value::from(0i64),
            Spec::MultiDiscreteArray { num_values } => Value::from(vec![0i64; num_values.len()]),
            Spec::Composite(children) => {
                Value::Composite(children.iter().map(|(k, s)| (k.clone(), s.generate_value())).collect())
            }
        }
    }
}

fn zeros(shape: Vec<usize>, dtype: DType) -> ArrayValue {
    let n = shape.iter().product();
    let data = match dtype {
        DType::Bool => ArrayData::Bool(vec![false; n]),
        DType::Int => ArrayData::Int(vec![0; n]),
        DType::Float => ArrayData::Float(vec![0.0; n]),
    };
    ArrayValue::new(shape, data)
}

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}
