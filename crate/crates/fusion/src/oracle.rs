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

//! Sequential reference for fused plans: each collective by its
//! definition over per-rank values, each map through the DSL evaluator.

use acis_cgra::mapc::eval_stage;
use acis_cgra::{map_stage, Memory};
use acis_core::value::{fold, vector_kind};
use acis_core::wire::CollectiveKind;
use acis_core::Value;

use crate::plan::{CollectiveStage, FusedPlan, MapStage, Stage};
use crate::FusionError;

/// Contiguous ranges of `len` elements over `n` parts, the first `len % n`
/// one longer.
pub fn partition_bounds(len: usize, n: usize) -> Vec<(usize, usize)> {
    let (q, r) = (len / n, len % n);
    let mut at = 0;
    (0..n)
        .map(|j| {
            let w = q + usize::from(j < r);
            at += w;
            (at - w, at)
        })
        .collect()
}

fn check_counts(i: usize, c: &CollectiveStage, held: &[Value]) -> Result<(), FusionError> {
    if let Some(counts) = &c.counts {
        if counts.len() != held.len() {
            return Err(FusionError::Contribution(format!(
                "stage {i}: {} counts for {} ranks",
                counts.len(),
                held.len()
            )));
        }
        for (r, (v, &k)) in held.iter().zip(counts).enumerate() {
            if v.len() != k as usize {
                return Err(FusionError::Contribution(format!(
                    "stage {i}: rank {r} holds {} elements, expected {k}",
                    v.len()
                )));
            }
        }
    }
    Ok(())
}

fn collective(i: usize, c: &CollectiveStage, held: Vec<Value>) -> Result<Vec<Value>, FusionError> {
    check_counts(i, c, &held)?;
    let n = held.len();
    let kind = held[0].kind();
    if vector_kind(kind) != vector_kind(c.dtype) {
        return Err(FusionError::Contribution(format!(
            "stage {i}: expected {}, got {kind}",
            c.dtype
        )));
    }
    let value_err = |e: acis_core::ValueError| FusionError::Contribution(format!("stage {i}: {e}"));
    Ok(match c.kind {
        CollectiveKind::Allreduce => {
            let r = fold(c.op, &held[0].dtype(), &held).map_err(value_err)?;
            vec![r; n]
        }
        CollectiveKind::Allgather => {
            let r = Value::concat(vector_kind(kind), &held).map_err(value_err)?;
            vec![r; n]
        }
        CollectiveKind::Alltoall => {
            let cuts: Vec<Vec<(usize, usize)>> = held.iter().map(|v| partition_bounds(v.len(), n)).collect();
            (0..n)
                .map(|j| {
                    let col: Vec<Value> = (0..n)
                        .map(|src| {
                            let (a, b) = cuts[src][j];
                            held[src].slice(a, b)
                        })
                        .collect();
                    Value::concat(vector_kind(kind), &col).map_err(value_err)
                })
                .collect::<Result<_, _>>()?
        }
        CollectiveKind::Bcast => vec![held[c.root as usize].clone(); n],
        k => return Err(FusionError::InvalidPlan(format!("stage {i}: {k} cannot be fused"))),
    })
}

fn map(i: usize, m: &MapStage, plan: &FusedPlan, held: Vec<Value>) -> Result<Vec<Value>, FusionError> {
    let err = |msg: String| FusionError::Map { stage: i, msg };
    held.iter()
        .map(|v| {
            let mut mem = Memory::default();
            match &m.source {
                Some(ast) => eval_stage(ast, plan.cgra.lanes as usize, v, &mut mem).map_err(|e| err(e.to_string())),
                None => map_stage(&m.program, &plan.cgra, v, &mut mem)
                    .map(|(o, _)| o)
                    .map_err(|e| err(e.to_string())),
            }
        })
        .collect()
}

/// Per-rank results of `plan` applied to `contributions`.
pub fn oracle_fused(plan: &FusedPlan, contributions: &[Value]) -> Result<Vec<Value>, FusionError> {
    plan.validate()?;
    if contributions.is_empty() {
        return Err(FusionError::Contribution("no ranks".into()));
    }
    let mut held = contributions.to_vec();
    for (i, s) in plan.stages.iter().enumerate() {
        held = match s {
            Stage::Collective(c) => collective(i, c, held)?,
            Stage::Map(m) => map(i, m, plan, held)?,
        };
    }
    Ok(held)
}
