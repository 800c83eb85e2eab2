// Copyright 2026 The ACiS Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Datatypes, typed payload values and the reduction algebra applied by hosts
//! and switches alike.
//!
//! Every binary operation here is a pure left-to-right evaluation. Callers that
//! need reproducible floating-point results fold contributions in ascending
//! contributor order, so a switch and a host that see the same operands in the
//! same order produce bit-identical values.

use std::fmt;

use thiserror::Error;

/// Index of a process inside a communicator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rank(pub u32);

impl Rank {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rank{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DTypeKind {
    I32,
    F32,
    F64,
    VecI32,
    VecF32,
    VecF64,
    /// Sorted `(u32 index, f32 value)` pairs.
    SparseF32,
}

impl DTypeKind {
    pub const ALL: [DTypeKind; 7] = [
        DTypeKind::I32,
        DTypeKind::F32,
        DTypeKind::F64,
        DTypeKind::VecI32,
        DTypeKind::VecF32,
        DTypeKind::VecF64,
        DTypeKind::SparseF32,
    ];

    /// Identifier carried in the packet header's `dtype_id` field.
    pub fn id(self) -> u16 {
        match self {
            DTypeKind::I32 => 0,
            DTypeKind::F32 => 1,
            DTypeKind::F64 => 2,
            DTypeKind::VecI32 => 3,
            DTypeKind::VecF32 => 4,
            DTypeKind::VecF64 => 5,
            DTypeKind::SparseF32 => 6,
        }
    }

    pub fn from_id(id: u16) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Bytes per element (per pair for sparse).
    pub fn elem_bytes(self) -> usize {
        match self {
            DTypeKind::I32 | DTypeKind::F32 | DTypeKind::VecI32 | DTypeKind::VecF32 => 4,
            DTypeKind::F64 | DTypeKind::VecF64 | DTypeKind::SparseF32 => 8,
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, DTypeKind::I32 | DTypeKind::F32 | DTypeKind::F64)
    }

    pub fn is_dense_vector(self) -> bool {
        matches!(self, DTypeKind::VecI32 | DTypeKind::VecF32 | DTypeKind::VecF64)
    }

    /// True when every binary op is exactly associative, i.e. the fold order
    /// does not change the result.
    pub fn is_integer(self) -> bool {
        matches!(self, DTypeKind::I32 | DTypeKind::VecI32)
    }

    pub fn name(self) -> &'static str {
        match self {
            DTypeKind::I32 => "i32",
            DTypeKind::F32 => "f32",
            DTypeKind::F64 => "f64",
            DTypeKind::VecI32 => "vec_i32",
            DTypeKind::VecF32 => "vec_f32",
            DTypeKind::VecF64 => "vec_f64",
            DTypeKind::SparseF32 => "sparse_f32",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl fmt::Display for DTypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DType {
    pub kind: DTypeKind,
    /// 1 for scalars, element count for dense vectors, pair count for sparse.
    pub elem_count: u32,
}

impl DType {
    pub fn new(kind: DTypeKind, elem_count: u32) -> Self {
        let elem_count = if kind.is_scalar() { 1 } else { elem_count };
        DType { kind, elem_count }
    }

    pub fn i32() -> Self {
        Self::new(DTypeKind::I32, 1)
    }

    pub fn f32() -> Self {
        Self::new(DTypeKind::F32, 1)
    }

    pub fn f64() -> Self {
        Self::new(DTypeKind::F64, 1)
    }

    pub fn vec_i32(n: u32) -> Self {
        Self::new(DTypeKind::VecI32, n)
    }

    pub fn vec_f32(n: u32) -> Self {
        Self::new(DTypeKind::VecF32, n)
    }

    pub fn vec_f64(n: u32) -> Self {
        Self::new(DTypeKind::VecF64, n)
    }

    pub fn sparse_f32(pairs: u32) -> Self {
        Self::new(DTypeKind::SparseF32, pairs)
    }

    pub fn byte_size(&self) -> usize {
        self.kind.elem_bytes() * self.elem_count as usize
    }

    /// Kind and length both match.
    pub fn conforms(&self, v: &Value) -> bool {
        v.kind() == self.kind && v.len() == self.elem_count as usize && v.is_well_formed()
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.is_scalar() {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}({})", self.kind, self.elem_count)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReduceOp {
    Sum,
    Max,
    Min,
    Prod,
    Dot,
    SparseAcc,
    PrefixSum,
    /// Reference to an installed map program.
    Custom(u16),
}

impl ReduceOp {
    const CUSTOM_BIT: u16 = 0x8000;

    /// Identifier carried in the packet header's `op_id` field.
    pub fn id(self) -> u16 {
        match self {
            ReduceOp::Sum => 0,
            ReduceOp::Max => 1,
            ReduceOp::Min => 2,
            ReduceOp::Prod => 3,
            ReduceOp::Dot => 4,
            ReduceOp::SparseAcc => 5,
            ReduceOp::PrefixSum => 6,
            ReduceOp::Custom(r) => Self::CUSTOM_BIT | (r & !Self::CUSTOM_BIT),
        }
    }

    pub fn from_id(id: u16) -> Option<Self> {
        if id & Self::CUSTOM_BIT != 0 {
            return Some(ReduceOp::Custom(id & !Self::CUSTOM_BIT));
        }
        Some(match id {
            0 => ReduceOp::Sum,
            1 => ReduceOp::Max,
            2 => ReduceOp::Min,
            3 => ReduceOp::Prod,
            4 => ReduceOp::Dot,
            5 => ReduceOp::SparseAcc,
            6 => ReduceOp::PrefixSum,
            _ => return None,
        })
    }

    pub fn name(self) -> String {
        match self {
            ReduceOp::Sum => "sum".into(),
            ReduceOp::Max => "max".into(),
            ReduceOp::Min => "min".into(),
            ReduceOp::Prod => "prod".into(),
            ReduceOp::Dot => "dot".into(),
            ReduceOp::SparseAcc => "sparse_acc".into(),
            ReduceOp::PrefixSum => "prefix_sum".into(),
            ReduceOp::Custom(r) => format!("custom{r}"),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sum" => ReduceOp::Sum,
            "max" => ReduceOp::Max,
            "min" => ReduceOp::Min,
            "prod" => ReduceOp::Prod,
            "dot" => ReduceOp::Dot,
            "sparse_acc" => ReduceOp::SparseAcc,
            "prefix_sum" => ReduceOp::PrefixSum,
            other => ReduceOp::Custom(other.strip_prefix("custom")?.parse().ok()?),
        })
    }

    /// Whether `apply_op` accepts this op for operands of `kind`.
    pub fn is_defined_for(self, kind: DTypeKind) -> bool {
        match self {
            ReduceOp::Sum => true,
            ReduceOp::Max | ReduceOp::Min | ReduceOp::Prod => kind != DTypeKind::SparseF32,
            ReduceOp::Dot => kind.is_dense_vector(),
            ReduceOp::SparseAcc => kind == DTypeKind::SparseF32,
            ReduceOp::PrefixSum | ReduceOp::Custom(_) => false,
        }
    }

    /// Ops that can fold any number of contributions (the result has the
    /// operand type).
    pub fn is_fold(self, kind: DTypeKind) -> bool {
        self.is_defined_for(kind) && self != ReduceOp::Dot
    }
}

impl fmt::Display for ReduceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValueError {
    #[error("op {op} is not defined for dtype {kind}")]
    OpDtypeMismatch { op: ReduceOp, kind: DTypeKind },
    #[error("operand does not conform to {expected}: got {got}")]
    KindMismatch { expected: DTypeKind, got: DTypeKind },
    #[error("operand lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{len} bytes is not a whole number of {kind} elements")]
    Misaligned { kind: DTypeKind, len: usize },
    #[error("sparse indices must be strictly increasing (at pair {at})")]
    UnsortedSparse { at: usize },
}

/// A typed payload.
///
/// Equality is bitwise for floating-point contents, so `NaN == NaN` and
/// `0.0 != -0.0`. That is the comparison every reproducibility check needs.
#[derive(Clone, Debug)]
pub enum Value {
    I32(i32),
    F32(f32),
    F64(f64),
    VecI32(Vec<i32>),
    VecF32(Vec<f32>),
    VecF64(Vec<f64>),
    SparseF32(Vec<(u32, f32)>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (I32(a), I32(b)) => a == b,
            (F32(a), F32(b)) => a.to_bits() == b.to_bits(),
            (F64(a), F64(b)) => a.to_bits() == b.to_bits(),
            (VecI32(a), VecI32(b)) => a == b,
            (VecF32(a), VecF32(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()),
            (VecF64(a), VecF64(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()),
            (SparseF32(a), SparseF32(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((i, x), (j, y))| i == j && x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Value {
    pub fn kind(&self) -> DTypeKind {
        match self {
            Value::I32(_) => DTypeKind::I32,
            Value::F32(_) => DTypeKind::F32,
            Value::F64(_) => DTypeKind::F64,
            Value::VecI32(_) => DTypeKind::VecI32,
            Value::VecF32(_) => DTypeKind::VecF32,
            Value::VecF64(_) => DTypeKind::VecF64,
            Value::SparseF32(_) => DTypeKind::SparseF32,
        }
    }

    /// Element count (pairs for sparse, 1 for scalars).
    pub fn len(&self) -> usize {
        match self {
            Value::I32(_) | Value::F32(_) | Value::F64(_) => 1,
            Value::VecI32(v) => v.len(),
            Value::VecF32(v) => v.len(),
            Value::VecF64(v) => v.len(),
            Value::SparseF32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.kind().elem_bytes()
    }

    pub fn dtype(&self) -> DType {
        DType::new(self.kind(), self.len() as u32)
    }

    /// Sparse indices strictly increasing; always true for other kinds.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Value::SparseF32(p) => p.windows(2).all(|w| w[0].0 < w[1].0),
            _ => true,
        }
    }

    /// The all-zero (empty for sparse) value of `dtype`.
    pub fn zeros(dtype: DType) -> Value {
        let n = dtype.elem_count as usize;
        match dtype.kind {
            DTypeKind::I32 => Value::I32(0),
            DTypeKind::F32 => Value::F32(0.0),
            DTypeKind::F64 => Value::F64(0.0),
            DTypeKind::VecI32 => Value::VecI32(vec![0; n]),
            DTypeKind::VecF32 => Value::VecF32(vec![0.0; n]),
            DTypeKind::VecF64 => Value::VecF64(vec![0.0; n]),
            DTypeKind::SparseF32 => Value::SparseF32(Vec::new()),
        }
    }

    /// Little-endian encoding; sparse pairs are `index` then `value`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Value::I32(x) => out.extend_from_slice(&x.to_le_bytes()),
            Value::F32(x) => out.extend_from_slice(&x.to_le_bytes()),
            Value::F64(x) => out.extend_from_slice(&x.to_le_bytes()),
            Value::VecI32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Value::VecF32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Value::VecF64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Value::SparseF32(v) => v.iter().for_each(|(i, x)| {
                out.extend_from_slice(&i.to_le_bytes());
                out.extend_from_slice(&x.to_le_bytes());
            }),
        }
    }

    pub fn decode(kind: DTypeKind, bytes: &[u8]) -> Result<Value, ValueError> {
        let eb = kind.elem_bytes();
        if !bytes.len().is_multiple_of(eb) || (kind.is_scalar() && bytes.len() != eb) {
            return Err(ValueError::Misaligned { kind, len: bytes.len() });
        }
        let w4 = |c: &[u8]| [c[0], c[1], c[2], c[3]];
        let w8 = |c: &[u8]| [c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]];
        let v = match kind {
            DTypeKind::I32 => Value::I32(i32::from_le_bytes(w4(bytes))),
            DTypeKind::F32 => Value::F32(f32::from_le_bytes(w4(bytes))),
            DTypeKind::F64 => Value::F64(f64::from_le_bytes(w8(bytes))),
            DTypeKind::VecI32 => Value::VecI32(bytes.chunks_exact(4).map(|c| i32::from_le_bytes(w4(c))).collect()),
            DTypeKind::VecF32 => Value::VecF32(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(w4(c))).collect()),
            DTypeKind::VecF64 => Value::VecF64(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(w8(c))).collect()),
            DTypeKind::SparseF32 => {
                let pairs: Vec<(u32, f32)> = bytes
                    .chunks_exact(8)
                    .map(|c| (u32::from_le_bytes(w4(c)), f32::from_le_bytes(w4(&c[4..]))))
                    .collect();
                if let Some(at) = pairs.windows(2).position(|w| w[0].0 >= w[1].0) {
                    return Err(ValueError::UnsortedSparse { at: at + 1 });
                }
                Value::SparseF32(pairs)
            }
        };
        Ok(v)
    }

    /// Elements `[start, end)` of a dense vector or sparse pair list. Scalars
    /// behave as one-element vectors and come back as the matching vector kind.
    pub fn slice(&self, start: usize, end: usize) -> Value {
        match self {
            Value::I32(x) => Value::VecI32(vec![*x][start..end].to_vec()),
            Value::F32(x) => Value::VecF32(vec![*x][start..end].to_vec()),
            Value::F64(x) => Value::VecF64(vec![*x][start..end].to_vec()),
            Value::VecI32(v) => Value::VecI32(v[start..end].to_vec()),
            Value::VecF32(v) => Value::VecF32(v[start..end].to_vec()),
            Value::VecF64(v) => Value::VecF64(v[start..end].to_vec()),
            Value::SparseF32(v) => Value::SparseF32(v[start..end].to_vec()),
        }
    }

    /// Concatenates values of one kind into the vector form of that kind.
    /// Scalars concatenate into the matching dense vector.
    pub fn concat(kind: DTypeKind, parts: &[Value]) -> Result<Value, ValueError> {
        for p in parts {
            if vector_kind(p.kind()) != vector_kind(kind) {
                return Err(ValueError::KindMismatch {
                    expected: kind,
                    got: p.kind(),
                });
            }
        }
        let mut bytes = Vec::new();
        for p in parts {
            p.encode_into(&mut bytes);
        }
        Value::decode(vector_kind(kind), &bytes)
    }
}

/// The vector kind a scalar kind widens to under concatenation.
pub fn vector_kind(kind: DTypeKind) -> DTypeKind {
    match kind {
        DTypeKind::I32 => DTypeKind::VecI32,
        DTypeKind::F32 => DTypeKind::VecF32,
        DTypeKind::F64 => DTypeKind::VecF64,
        k => k,
    }
}

fn check_kind(dtype: &DType, v: &Value) -> Result<(), ValueError> {
    if v.kind() != dtype.kind {
        return Err(ValueError::KindMismatch {
            expected: dtype.kind,
            got: v.kind(),
        });
    }
    Ok(())
}

fn zip_same<T: Copy>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Result<Vec<T>, ValueError> {
    if a.len() != b.len() {
        return Err(ValueError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
}

fn max_f<T: PartialOrd + Copy>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

fn min_f<T: PartialOrd + Copy>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

/// Merges two sorted pair lists, summing values at equal indices (left
/// operand first).
pub fn sparse_merge(a: &[(u32, f32)], b: &[(u32, f32)]) -> Vec<(u32, f32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// `a ⊕ b` for the given op and dtype.
pub fn apply_op(op: ReduceOp, dtype: &DType, a: &Value, b: &Value) -> Result<Value, ValueError> {
    check_kind(dtype, a)?;
    check_kind(dtype, b)?;
    if !op.is_defined_for(dtype.kind) {
        return Err(ValueError::OpDtypeMismatch { op, kind: dtype.kind });
    }
    use Value::*;
    let v = match op {
        ReduceOp::Sum => match (a, b) {
            (I32(x), I32(y)) => I32(x.wrapping_add(*y)),
            (F32(x), F32(y)) => F32(x + y),
            (F64(x), F64(y)) => F64(x + y),
            (VecI32(x), VecI32(y)) => VecI32(zip_same(x, y, i32::wrapping_add)?),
            (VecF32(x), VecF32(y)) => VecF32(zip_same(x, y, |p, q| p + q)?),
            (VecF64(x), VecF64(y)) => VecF64(zip_same(x, y, |p, q| p + q)?),
            (SparseF32(x), SparseF32(y)) => SparseF32(sparse_merge(x, y)),
            _ => unreachable!("kinds checked above"),
        },
        ReduceOp::Prod => match (a, b) {
            (I32(x), I32(y)) => I32(x.wrapping_mul(*y)),
            (F32(x), F32(y)) => F32(x * y),
            (F64(x), F64(y)) => F64(x * y),
            (VecI32(x), VecI32(y)) => VecI32(zip_same(x, y, i32::wrapping_mul)?),
            (VecF32(x), VecF32(y)) => VecF32(zip_same(x, y, |p, q| p * q)?),
            (VecF64(x), VecF64(y)) => VecF64(zip_same(x, y, |p, q| p * q)?),
            _ => unreachable!("kinds checked above"),
        },
        ReduceOp::Max => match (a, b) {
            (I32(x), I32(y)) => I32(*x.max(y)),
            (F32(x), F32(y)) => F32(max_f(*x, *y)),
            (F64(x), F64(y)) => F64(max_f(*x, *y)),
            (VecI32(x), VecI32(y)) => VecI32(zip_same(x, y, i32::max)?),
            (VecF32(x), VecF32(y)) => VecF32(zip_same(x, y, max_f)?),
            (VecF64(x), VecF64(y)) => VecF64(zip_same(x, y, max_f)?),
            _ => unreachable!("kinds checked above"),
        },
        ReduceOp::Min => match (a, b) {
            (I32(x), I32(y)) => I32(*x.min(y)),
            (F32(x), F32(y)) => F32(min_f(*x, *y)),
            (F64(x), F64(y)) => F64(min_f(*x, *y)),
            (VecI32(x), VecI32(y)) => VecI32(zip_same(x, y, i32::min)?),
            (VecF32(x), VecF32(y)) => VecF32(zip_same(x, y, min_f)?),
            (VecF64(x), VecF64(y)) => VecF64(zip_same(x, y, min_f)?),
            _ => unreachable!("kinds checked above"),
        },
        ReduceOp::Dot => match (a, b) {
            (VecI32(x), VecI32(y)) => I32(zip_same(x, y, i32::wrapping_mul)?
                .into_iter()
                .fold(0i32, i32::wrapping_add)),
            (VecF32(x), VecF32(y)) => F32(zip_same(x, y, |p, q| p * q)?.into_iter().fold(0.0f32, |s, t| s + t)),
            (VecF64(x), VecF64(y)) => F64(zip_same(x, y, |p, q| p * q)?.into_iter().fold(0.0f64, |s, t| s + t)),
            _ => unreachable!("kinds checked above"),
        },
        ReduceOp::SparseAcc => match (a, b) {
            (SparseF32(x), SparseF32(y)) => SparseF32(sparse_merge(x, y)),
            _ => unreachable!("kinds checked above"),
        },
        ReduceOp::PrefixSum | ReduceOp::Custom(_) => unreachable!("not a binary op"),
    };
    Ok(v)
}

/// Left fold of `values` in slice order.
pub fn fold(op: ReduceOp, dtype: &DType, values: &[Value]) -> Result<Value, ValueError> {
    let (first, rest) = values
        .split_first()
        .ok_or(ValueError::LengthMismatch { left: 0, right: 0 })?;
    check_kind(dtype, first)?;
    if !op.is_fold(dtype.kind) {
        return Err(ValueError::OpDtypeMismatch { op, kind: dtype.kind });
    }
    rest.iter()
        .try_fold(first.clone(), |acc, v| apply_op(op, dtype, &acc, v))
}

/// Inclusive scan of a dense vector.
pub fn prefix_sum(dtype: &DType, v: &Value) -> Result<Value, ValueError> {
    check_kind(dtype, v)?;
    let out = match v {
        Value::VecI32(x) => Value::VecI32(
            x.iter()
                .scan(0i32, |s, &e| {
                    *s = s.wrapping_add(e);
                    Some(*s)
                })
                .collect(),
        ),
        Value::VecF32(x) => Value::VecF32(
            x.iter()
                .scan(0.0f32, |s, &e| {
                    *s += e;
                    Some(*s)
                })
                .collect(),
        ),
        Value::VecF64(x) => Value::VecF64(
            x.iter()
                .scan(0.0f64, |s, &e| {
                    *s += e;
                    Some(*s)
                })
                .collect(),
        ),
        _ => {
            return Err(ValueError::OpDtypeMismatch {
                op: ReduceOp::PrefixSum,
                kind: v.kind(),
            })
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_vec_i32() {
        let r = apply_op(
            ReduceOp::Sum,
            &DType::vec_i32(2),
            &Value::VecI32(vec![1, 2]),
            &Value::VecI32(vec![3, 4]),
        )
        .unwrap();
        assert_eq!(r, Value::VecI32(vec![4, 6]));
    }

    #[test]
    fn dot_against_direct_evaluation() {
        let a = [1, 2, 3];
        let b = [4, 5, 6];
        let expected: i32 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_eq!(expected, 32);
        let r = apply_op(
            ReduceOp::Dot,
            &DType::vec_i32(3),
            &Value::VecI32(a.to_vec()),
            &Value::VecI32(b.to_vec()),
        )
        .unwrap();
        assert_eq!(r, Value::I32(expected));
    }

    #[test]
    fn sparse_acc_matches_dense_expansion() {
        let a = vec![(1, 2.0), (5, 1.0)];
        let b = vec![(1, 3.0), (7, 4.0)];
        // dense oracle
        let mut dense = [0.0f32; 8];
        let mut touched = [false; 8];
        for &(i, v) in a.iter().chain(&b) {
            dense[i as usize] += v;
            touched[i as usize] = true;
        }
        let expected: Vec<(u32, f32)> = (0..8).filter(|&i| touched[i]).map(|i| (i as u32, dense[i])).collect();
        let r = apply_op(
            ReduceOp::SparseAcc,
            &DType::sparse_f32(2),
            &Value::SparseF32(a),
            &Value::SparseF32(b),
        )
        .unwrap();
        assert_eq!(r, Value::SparseF32(expected));
        assert_eq!(r, Value::SparseF32(vec![(1, 5.0), (5, 1.0), (7, 4.0)]));
    }

    #[test]
    fn op_dtype_mismatches() {
        let s = Value::SparseF32(vec![(0, 1.0)]);
        assert!(matches!(
            apply_op(ReduceOp::Max, &DType::sparse_f32(1), &s, &s),
            Err(ValueError::OpDtypeMismatch { .. })
        ));
        let x = Value::I32(1);
        assert!(matches!(
            apply_op(ReduceOp::Dot, &DType::i32(), &x, &x),
            Err(ValueError::OpDtypeMismatch { .. })
        ));
        assert!(matches!(
            apply_op(ReduceOp::Sum, &DType::f32(), &x, &x),
            Err(ValueError::KindMismatch { .. })
        ));
    }

    #[test]
    fn prefix_sum_cases() {
        let d = DType::vec_i32(4);
        // sequential scan oracle
        let input = [1, 2, 3, 4];
        let mut acc = 0;
        let expected: Vec<i32> = input
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        assert_eq!(
            prefix_sum(&d, &Value::VecI32(input.to_vec())).unwrap(),
            Value::VecI32(expected)
        );
        assert_eq!(
            prefix_sum(&DType::vec_i32(1), &Value::VecI32(vec![5])).unwrap(),
            Value::VecI32(vec![5])
        );
        assert_eq!(
            prefix_sum(&DType::vec_f64(3), &Value::VecF64(vec![0.0; 3])).unwrap(),
            Value::VecF64(vec![0.0; 3])
        );
        assert!(prefix_sum(&DType::i32(), &Value::I32(3)).is_err());
        assert!(prefix_sum(&DType::sparse_f32(0), &Value::SparseF32(vec![])).is_err());
    }

    #[test]
    fn decode_rejects_unsorted_sparse() {
        let v = Value::SparseF32(vec![(3, 1.0), (2, 1.0)]);
        assert!(matches!(
            Value::decode(DTypeKind::SparseF32, &v.encode()),
            Err(ValueError::UnsortedSparse { at: 1 })
        ));
    }

    #[test]
    fn float_equality_is_bitwise() {
        assert_ne!(Value::F32(0.0), Value::F32(-0.0));
        assert_eq!(Value::F64(f64::NAN), Value::F64(f64::NAN));
    }

    #[test]
    fn op_ids_roundtrip() {
        for op in [
            ReduceOp::Sum,
            ReduceOp::Max,
            ReduceOp::Min,
            ReduceOp::Prod,
            ReduceOp::Dot,
            ReduceOp::SparseAcc,
            ReduceOp::PrefixSum,
            ReduceOp::Custom(17),
        ] {
            assert_eq!(ReduceOp::from_id(op.id()), Some(op));
            assert_eq!(ReduceOp::from_name(&op.name()), Some(op));
        }
        for k in DTypeKind::ALL {
            assert_eq!(DTypeKind::from_id(k.id()), Some(k));
            assert_eq!(DTypeKind::from_name(k.name()), Some(k));
        }
    }
}
