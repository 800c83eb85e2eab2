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

//! Sequential reference semantics: every reduction is a left fold in rank
//! order.

use acis_core::wire::CollectiveKind;

use crate::{Chunk, CollectiveCall, HostError, Results};

pub fn oracle(call: &CollectiveCall) -> Result<Results, HostError> {
    call.validate()?;
    let n = call.n() as usize;
    let root = call.root as usize;
    let own: Vec<Chunk> = call.inputs.iter().map(|i| i[0].clone()).collect();
    let only_root = |v: Vec<Chunk>| (0..n).map(|r| (r == root).then(|| v.clone())).collect();
    Ok(match call.kind {
        CollectiveKind::Bcast => vec![Some(vec![own[root].clone()]); n],
        CollectiveKind::Reduce => only_root(vec![Chunk::fold(call.op, &own)?]),
        CollectiveKind::Allreduce => vec![Some(vec![Chunk::fold(call.op, &own)?]); n],
        CollectiveKind::Gather => only_root(own),
        CollectiveKind::Allgather => vec![Some(own); n],
        CollectiveKind::Alltoall => (0..n)
            .map(|j| Some((0..n).map(|i| call.inputs[i][j].clone()).collect()))
            .collect(),
        CollectiveKind::Fused => unreachable!("rejected by validate"),
    })
}
