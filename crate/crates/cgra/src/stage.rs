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

//! Map stages over values of arbitrary length.
//!
//! A value is cut into `lanes`-wide chunks, the last one zero-padded. Each
//! chunk runs through the program in order against the same state region.
//! Vector outputs keep the chunk's element count; scalar outputs contribute
//! one element per chunk. A scalar input yields a scalar result.

use acis_core::Value;
use thiserror::Error;

use crate::config::CgraConfig;
use crate::memory::Memory;
use crate::program::{CgraProgram, Elem};
use crate::vm::{exec, scalar_value, vector_value, VmError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error("map stage takes one input, program declares {0}")]
    Arity(u8),
    #[error("{kind} value cannot feed {elem} lanes")]
    Dtype { kind: String, elem: &'static str },
    #[error(transparent)]
    Vm(#[from] VmError),
}

/// A value split into lane-width chunks.
#[derive(Clone, Debug, PartialEq)]
pub struct Chunked {
    pub chunks: Vec<Vec<u32>>,
    /// Unpadded element count per chunk.
    pub lens: Vec<usize>,
    pub scalar: bool,
}

pub fn split_value(v: &Value, elem: Elem, lanes: usize) -> Result<Chunked, StageError> {
    let (words, scalar): (Vec<u32>, bool) = match (elem, v) {
        (Elem::I32, Value::I32(x)) => (vec![*x as u32], true),
        (Elem::I32, Value::VecI32(xs)) => (xs.iter().map(|&x| x as u32).collect(), false),
        (Elem::F32, Value::F32(x)) => (vec![x.to_bits()], true),
        (Elem::F32, Value::VecF32(xs)) => (xs.iter().map(|x| x.to_bits()).collect(), false),
        _ => {
            return Err(StageError::Dtype {
                kind: v.kind().to_string(),
                elem: elem.name(),
            })
        }
    };
    let mut chunks = Vec::new();
    let mut lens = Vec::new();
    for c in words.chunks(lanes) {
        let mut w = c.to_vec();
        lens.push(w.len());
        w.resize(lanes, 0);
        chunks.push(w);
    }
    if chunks.is_empty() {
        chunks.push(vec![0; lanes]);
        lens.push(0);
    }
    Ok(Chunked { chunks, lens, scalar })
}

/// Per-chunk output of a map function.
#[derive(Clone, Debug, PartialEq)]
pub enum ChunkOut {
    Vector(Vec<u32>),
    Scalar(u32),
}

/// Reassembles per-chunk outputs into one value.
pub fn join_outputs(outs: &[ChunkOut], split: &Chunked, elem: Elem) -> Value {
    let mut words = Vec::new();
    for (o, &len) in outs.iter().zip(&split.lens) {
        match o {
            ChunkOut::Vector(w) => words.extend_from_slice(&w[..len]),
            ChunkOut::Scalar(w) => words.push(*w),
        }
    }
    if split.scalar {
        return scalar_value(words.first().copied().unwrap_or(0), elem);
    }
    vector_value(&words, elem)
}

fn chunk_out(v: &Value) -> ChunkOut {
    match v {
        Value::I32(x) => ChunkOut::Scalar(*x as u32),
        Value::F32(x) => ChunkOut::Scalar(x.to_bits()),
        Value::VecI32(xs) => ChunkOut::Vector(xs.iter().map(|&x| x as u32).collect()),
        Value::VecF32(xs) => ChunkOut::Vector(xs.iter().map(|x| x.to_bits()).collect()),
        _ => unreachable!("VM outputs are 32-bit kinds"),
    }
}

/// Applies `prog` to `value` chunk by chunk. Returns the mapped value and the
/// pipelined cycle count: the first chunk's full latency, then one initiation
/// interval per further chunk.
pub fn map_stage(
    prog: &CgraProgram,
    config: &CgraConfig,
    value: &Value,
    state: &mut Memory,
) -> Result<(Value, u64), StageError> {
    if prog.n_inputs != 1 {
        return Err(StageError::Arity(prog.n_inputs));
    }
    let lanes = config.lanes as usize;
    let split = split_value(value, prog.elem, lanes)?;
    let mut outs = Vec::with_capacity(split.chunks.len());
    let mut cycles = 0u64;
    for (k, chunk) in split.chunks.iter().enumerate() {
        let r = exec(prog, config, &[vector_value(chunk, prog.elem)], state)?;
        cycles += if k == 0 { r.cycles } else { r.pipeline_interval() };
        outs.push(chunk_out(&r.outputs[0]));
    }
    Ok((join_outputs(&outs, &split, prog.elem), cycles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::assemble;

    const RUNNING_SUM: &str = "\
.inputs 1
.state
.output v2
    LI s0, 0
    VLOAD v1, s0, 1
    VADD v2, v1, v0
    VSTORE s0, v2, 1
    HALT
";

    #[test]
    fn stateful_running_sum() {
        let cfg = CgraConfig::default();
        let p = assemble(RUNNING_SUM, &cfg).unwrap();
        let mut mem = Memory::new();
        let outs: Vec<Value> = [1, 2, 3]
            .iter()
            .map(|&x| map_stage(&p, &cfg, &Value::VecI32(vec![x]), &mut mem).unwrap().0)
            .collect();
        assert_eq!(
            outs,
            vec![Value::VecI32(vec![1]), Value::VecI32(vec![3]), Value::VecI32(vec![6])]
        );
    }

    #[test]
    fn identity_is_one_cycle() {
        let cfg = CgraConfig::default();
        let p = assemble(".inputs 1\nHALT 1", &cfg).unwrap();
        let v = Value::VecI32(vec![4, 5, 6]);
        assert_eq!(map_stage(&p, &cfg, &v, &mut Memory::new()).unwrap(), (v, 1));
    }

    #[test]
    fn multi_chunk_scalar_outputs() {
        let cfg = CgraConfig::default();
        let p = assemble(".inputs 1\n.output s1\nVREDUCE_ADD s1, v0\nHALT", &cfg).unwrap();
        let v = Value::VecI32((1..=40).collect());
        let (out, cycles) = map_stage(&p, &cfg, &v, &mut Memory::new()).unwrap();
        let sums: Vec<i32> = (1..=40)
            .collect::<Vec<_>>()
            .chunks(16)
            .map(|c| c.iter().sum())
            .collect();
        assert_eq!(out, Value::VecI32(sums));
        assert_eq!(cycles, 2 + 2 + 2);
    }

    #[test]
    fn rejects_wrong_kind() {
        let cfg = CgraConfig::default();
        let p = assemble(".inputs 1\nHALT", &cfg).unwrap();
        let e = map_stage(&p, &cfg, &Value::VecF64(vec![1.0]), &mut Memory::new());
        assert!(matches!(e, Err(StageError::Dtype { .. })));
    }
}
