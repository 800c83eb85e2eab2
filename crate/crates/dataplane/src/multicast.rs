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

//! Packet replication at the end of the pipeline.

use acis_core::wire::CONTEXT_DIRECTED;
use acis_simnet::{SimPacket, VertexId};

use crate::context::{CollectiveContext, Egress};
use crate::DataplaneError;

/// One copy of `pkt` per multicast target of `ctx`, leaving vertex `at`.
/// Host copies carry the target rank in `dst_rank`; switch copies stay
/// context-directed. Payloads are identical across copies.
pub fn multicast(ctx: &CollectiveContext, at: VertexId, pkt: &SimPacket) -> Result<Vec<SimPacket>, DataplaneError> {
    let mut out = Vec::with_capacity(ctx.multicast_targets.len());
    multicast_each(ctx, at, pkt.clone(), |p| out.push(p))?;
    Ok(out)
}

/// Like [`multicast`], handing each copy to `emit`; the last target
/// receives `pkt` itself.
pub fn multicast_each(
    ctx: &CollectiveContext,
    at: VertexId,
    pkt: SimPacket,
    mut emit: impl FnMut(SimPacket),
) -> Result<(), DataplaneError> {
    let Some((&last, rest)) = ctx.multicast_targets.split_last() else {
        return Err(DataplaneError::EmptyTargetList);
    };
    let retarget = |p: &mut SimPacket, t: Egress| {
        p.header.dst_rank = match t {
            Egress::Host { rank, .. } => rank,
            Egress::Switch(_) => CONTEXT_DIRECTED,
        };
        p.meta.src_vertex = at;
        p.meta.dst_vertex = t.vertex();
    };
    for &t in rest {
        let mut p = pkt.clone();
        retarget(&mut p, t);
        emit(p);
    }
    let mut p = pkt;
    retarget(&mut p, last);
    emit(p);
    Ok(())
}
