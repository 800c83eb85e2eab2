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

//! Collective data units: a real typed value, or an opaque length for
//! timing-only runs.

use acis_core::value::vector_kind;
use acis_core::{apply_op, DType, DTypeKind, ReduceOp, Value, ValueError};
use acis_simnet::Payload;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Chunk {
    Val(Value),
    /// Stand-in of the given byte length.
    Opaque(usize),
}

impl Chunk {
    pub fn byte_len(&self) -> usize {
        match self {
            Chunk::Val(v) => v.byte_len(),
            Chunk::Opaque(n) => *n,
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Chunk::Val(v) => Some(v),
            Chunk::Opaque(_) => None,
        }
    }

    pub fn to_payload(&self) -> Payload {
        match self {
            Chunk::Val(v) => Payload::Bytes(v.encode()),
            Chunk::Opaque(n) => Payload::Opaque(*n),
        }
    }

    pub fn from_payload(kind: DTypeKind, p: Payload) -> Result<Chunk, ValueError> {
        match p {
            Payload::Bytes(b) => Value::decode(kind, &b).map(Chunk::Val),
            Payload::Opaque(n) => Ok(Chunk::Opaque(n)),
        }
    }

    /// `a ⊕ b`; opaque operands yield an opaque result of the left length.
    pub fn combine(op: ReduceOp, a: &Chunk, b: &Chunk) -> Result<Chunk, ValueError> {
        match (a, b) {
            (Chunk::Val(x), Chunk::Val(y)) => {
                let d = DType::new(x.kind(), x.len() as u32);
                apply_op(op, &d, x, y).map(Chunk::Val)
            }
            _ => Ok(Chunk::Opaque(a.byte_len())),
        }
    }

    /// Left fold in slice order.
    pub fn fold(op: ReduceOp, items: &[Chunk]) -> Result<Chunk, ValueError> {
        let (first, rest) = items
            .split_first()
            .ok_or(ValueError::LengthMismatch { left: 0, right: 0 })?;
        rest.iter()
            .try_fold(first.clone(), |acc, c| Chunk::combine(op, &acc, c))
    }

    /// Splits into `parts` contiguous element ranges; the first `len % parts`
    /// ranges take one extra element. Scalars split as one-element vectors.
    pub fn split(&self, parts: usize, elem_bytes: usize) -> Vec<Chunk> {
        let elems = match self {
            Chunk::Val(v) => v.len(),
            Chunk::Opaque(n) => n / elem_bytes,
        };
        let (base, extra) = (elems / parts, elems % parts);
        let mut out = Vec::with_capacity(parts);
        let mut start = 0;
        for i in 0..parts {
            let end = start + base + usize::from(i < extra);
            out.push(match self {
                Chunk::Val(v) => Chunk::Val(v.slice(start, end)),
                Chunk::Opaque(_) => Chunk::Opaque((end - start) * elem_bytes),
            });
            start = end;
        }
        out
    }

    /// Concatenates chunks and reinterprets the bytes as `kind`.
    pub fn concat(kind: DTypeKind, parts: &[Chunk]) -> Result<Chunk, ValueError> {
        if parts.iter().any(|p| matches!(p, Chunk::Opaque(_))) {
            return Ok(Chunk::Opaque(parts.iter().map(Chunk::byte_len).sum()));
        }
        let mut bytes = Vec::new();
        for p in parts {
            if let Chunk::Val(v) = p {
                if vector_kind(v.kind()) != vector_kind(kind) {
                    return Err(ValueError::KindMismatch {
                        expected: kind,
                        got: v.kind(),
                    });
                }
                v.encode_into(&mut bytes);
            }
        }
        Value::decode(kind, &bytes).map(Chunk::Val)
    }
}

/// Frames each chunk as `u32 length` followed by its bytes.
pub fn frame(chunks: &[&Chunk]) -> Payload {
    if chunks.iter().any(|c| matches!(c, Chunk::Opaque(_))) {
        return Payload::Opaque(chunks.iter().map(|c| 4 + c.byte_len()).sum());
    }
    let mut out = Vec::new();
    for c in chunks {
        if let Chunk::Val(v) = c {
            out.extend_from_slice(&(v.byte_len() as u32).to_le_bytes());
            v.encode_into(&mut out);
        }
    }
    Payload::Bytes(out)
}

/// Inverse of [`frame`]. Opaque payloads split evenly into `count` chunks.
pub fn unframe(kind: DTypeKind, p: Payload, count: usize) -> Result<Vec<Chunk>, ValueError> {
    match p {
        Payload::Opaque(n) => {
            let each = n.saturating_sub(4 * count) / count.max(1);
            Ok(vec![Chunk::Opaque(each); count])
        }
        Payload::Bytes(b) => {
            let mut out = Vec::with_capacity(count);
            let mut at = 0;
            while at < b.len() {
                if at + 4 > b.len() {
                    return Err(ValueError::Misaligned { kind, len: b.len() });
                }
                let len = u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]]) as usize;
                let end = at + 4 + len;
                if end > b.len() {
                    return Err(ValueError::Misaligned { kind, len: b.len() });
                }
                out.push(Chunk::Val(Value::decode(kind, &b[at + 4..end])?));
                at = end;
            }
            if out.len() != count {
                return Err(ValueError::LengthMismatch {
                    left: out.len(),
                    right: count,
                });
            }
            Ok(out)
        }
    }
}
