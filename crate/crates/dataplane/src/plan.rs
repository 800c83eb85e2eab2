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

//! Fused plans as executed by the root switch.
//!
//! The first stage moves real traffic through the tree. Every later stage
//! runs inside the root, one recirculation pass each, over a virtual view of
//! what every rank would hold at that point.

use std::sync::Arc;

use acis_cgra::{map_stage, CgraConfig, CgraProgram, Elem, Memory};
use acis_core::value::vector_kind;
use acis_core::wire::CollectiveKind;
use acis_core::{DType, DTypeKind, ReduceOp, Value};
use acis_hostmpi::Chunk;

use crate::DataplaneError;

#[derive(Clone, Debug, PartialEq)]
pub enum SwitchStage {
    Collective {
        kind: CollectiveKind,
        op: ReduceOp,
        dtype: DType,
        root: u32,
    },
    Map(Arc<CgraProgram>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchPlan {
    pub plan_id: u16,
    pub stages: Vec<SwitchStage>,
    pub cgra: CgraConfig,
}

/// What every rank holds between stages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Virtual {
    /// All ranks hold the same value.
    Uniform(Chunk),
    PerRank(Vec<Chunk>),
}

impl Virtual {
    pub fn per_rank(&self, n: usize) -> Vec<Chunk> {
        match self {
            Virtual::Uniform(c) => vec![c.clone(); n],
            Virtual::PerRank(v) => v.clone(),
        }
    }

    pub fn byte_len(&self) -> usize {
        match self {
            Virtual::Uniform(c) => c.byte_len(),
            Virtual::PerRank(v) => v.iter().map(Chunk::byte_len).sum(),
        }
    }
}

/// Collectives that may appear in a plan.
pub fn fusable(kind: CollectiveKind) -> bool {
    matches!(
        kind,
        CollectiveKind::Allreduce | CollectiveKind::Allgather | CollectiveKind::Alltoall | CollectiveKind::Bcast
    )
}

impl SwitchPlan {
    pub fn validate(&self) -> Result<(), DataplaneError> {
        let bad = |m: &str| Err(DataplaneError::InvalidPlan(m.to_string()));
        match self.stages.first() {
            Some(SwitchStage::Collective { .. }) => {}
            _ => return bad("the first stage must be a collective"),
        }
        for s in &self.stages {
            match s {
                SwitchStage::Collective { kind, .. } if !fusable(*kind) => {
                    return bad(&format!("{kind} cannot be fused"));
                }
                SwitchStage::Map(p) if p.n_inputs != 1 => return bad("map stages take one input"),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn first(&self) -> (CollectiveKind, ReduceOp, DType, u32) {
        match &self.stages[0] {
            SwitchStage::Collective { kind, op, dtype, root } => (*kind, *op, *dtype, *root),
            SwitchStage::Map(_) => unreachable!("validated"),
        }
    }

    pub fn first_collective(&self) -> CollectiveKind {
        self.first().0
    }
}

/// Splits into `n` contiguous element ranges, the first `len % n` one
/// element longer.
pub fn partition(c: &Chunk, n: usize, kind: DTypeKind) -> Vec<Chunk> {
    c.split(n, kind.elem_bytes())
}

fn kind_of(c: &Chunk, fallback: DTypeKind) -> DTypeKind {
    c.value().map_or(fallback, Value::kind)
}

fn fold_n(op: ReduceOp, kind: DTypeKind, items: &[Chunk]) -> Result<Chunk, DataplaneError> {
    if let Some(Chunk::Val(v)) = items.first() {
        if v.kind() != kind {
            return Err(acis_core::ValueError::KindMismatch {
                expected: kind,
                got: v.kind(),
            }
            .into());
        }
    }
    Ok(Chunk::fold(op, items)?)
}

/// Applies one collective stage to the virtual per-rank state.
pub fn apply_collective(
    kind: CollectiveKind,
    op: ReduceOp,
    dtype: DType,
    root: u32,
    n: usize,
    input: Virtual,
) -> Result<Virtual, DataplaneError> {
    let vals = input.per_rank(n);
    let k = dtype.kind;
    Ok(match kind {
        CollectiveKind::Allreduce => Virtual::Uniform(fold_n(op, k, &vals)?),
        CollectiveKind::Allgather => {
            let ck = vals.first().map_or(k, |c| kind_of(c, k));
            Virtual::Uniform(Chunk::concat(ck, &vals)?)
        }
        CollectiveKind::Alltoall => {
            let parts: Vec<Vec<Chunk>> = vals.iter().map(|c| partition(c, n, kind_of(c, k))).collect();
            let out = (0..n)
                .map(|j| {
                    let col: Vec<Chunk> = (0..n).map(|i| parts[i][j].clone()).collect();
                    let ck = col.first().map_or(k, |c| kind_of(c, k));
                    Chunk::concat(vector_kind(ck), &col)
                })
                .collect::<Result<_, _>>()?;
            Virtual::PerRank(out)
        }
        CollectiveKind::Bcast => Virtual::Uniform(vals[root as usize].clone()),
        other => return Err(DataplaneError::InvalidPlan(format!("{other} cannot be fused"))),
    })
}

/// Runs `prog` over one value with fresh look-aside state. Opaque inputs are
/// timed on a zero vector of the same length.
pub fn apply_map(prog: &CgraProgram, cfg: &CgraConfig, c: &Chunk) -> Result<(Chunk, u64), DataplaneError> {
    let kind = match prog.elem {
        Elem::I32 => DTypeKind::VecI32,
        Elem::F32 => DTypeKind::VecF32,
    };
    let (v, opaque) = match c {
        Chunk::Val(v) => (v.clone(), false),
        Chunk::Opaque(n) => (Value::zeros(DType::new(kind, (*n / 4) as u32)), true),
    };
    let mut mem = Memory::default();
    let (out, cycles) = map_stage(prog, cfg, &v, &mut mem).map_err(|e| DataplaneError::Map(e.to_string()))?;
    let out = if opaque {
        Chunk::Opaque(out.byte_len())
    } else {
        Chunk::Val(out)
    };
    Ok((out, cycles))
}

/// Applies a map stage; a uniform state is mapped once.
pub fn apply_map_virtual(
    prog: &CgraProgram,
    cfg: &CgraConfig,
    input: Virtual,
) -> Result<(Virtual, u64), DataplaneError> {
    match input {
        Virtual::Uniform(c) => {
            let (o, cy) = apply_map(prog, cfg, &c)?;
            Ok((Virtual::Uniform(o), cy))
        }
        Virtual::PerRank(vs) => {
            let mut total = 0;
            let mut out = Vec::with_capacity(vs.len());
            for c in &vs {
                let (o, cy) = apply_map(prog, cfg, c)?;
                total += cy;
                out.push(o);
            }
            Ok((Virtual::PerRank(out), total))
        }
    }
}
