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

//! Installing and running fused plans, and the unfused baseline that runs
//! each stage as a separate host collective.

use std::sync::Arc;

use acis_cgra::Memory;
use acis_core::value::vector_kind;
use acis_core::wire::{CollectiveKind, MsgKind, PacketHeader};
use acis_core::{DType, DTypeKind};
use acis_dataplane::plan::apply_map;
use acis_dataplane::{
    install_collective, run_plan, with_stage, AcisSwitch, ContextKey, ControlPlane, HostPlan, InstallSpec,
    ReorderLayout, Sink, SwitchOptions, SwitchStats,
};
use acis_hostmpi::{run_host, Chunk, CollectiveCall, Communicator, Results};
use acis_simnet::{Network, Time, Topology, Trace};

use crate::oracle::partition_bounds;
use crate::plan::{FusedPlan, Stage};
use crate::FusionError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Installed {
    pub plan_id: u16,
    pub plane: ControlPlane,
}

/// Installs `plan` for `comm`; `input_bytes` are the per-rank contribution
/// sizes of the first stage.
pub fn install_plan(
    sw: &mut AcisSwitch,
    topo: &Topology,
    comm: &Communicator,
    plan: &FusedPlan,
    input_bytes: &[usize],
) -> Result<Installed, FusionError> {
    plan.validate()?;
    let first = plan.first();
    let n = comm.size() as usize;
    if input_bytes.len() != n {
        return Err(FusionError::Contribution(format!(
            "{} sizes for {n} ranks",
            input_bytes.len()
        )));
    }
    let eb = first.dtype.elem_bytes();
    let layout = match first.kind {
        CollectiveKind::Allgather => Some(ReorderLayout::gather(input_bytes.to_vec(), Sink::Multicast)),
        CollectiveKind::Alltoall => {
            let blocks: Vec<Vec<usize>> = input_bytes
                .iter()
                .map(|&b| {
                    partition_bounds(b / eb, n)
                        .into_iter()
                        .map(|(a, z)| (z - a) * eb)
                        .collect()
                })
                .collect();
            Some(ReorderLayout::alltoall(&blocks))
        }
        _ => None,
    };
    let spec = InstallSpec {
        key: ContextKey::fused(comm.comm_id, plan.plan_id),
        op: first.op,
        dtype: DType::new(first.dtype, 0),
        root: first.root,
        layout: layout.map(Arc::new),
        plan: Some(Arc::new(plan.switch_plan())),
    };
    let plane = install_collective(sw, topo, comm, &spec)?;
    Ok(Installed {
        plan_id: plan.plan_id,
        plane,
    })
}

/// Kind of the value every rank ends with.
fn final_kind(plan: &FusedPlan) -> DTypeKind {
    let mut k = plan.first().dtype;
    for s in &plan.stages {
        if let Stage::Collective(c) = s {
            if matches!(c.kind, CollectiveKind::Allgather | CollectiveKind::Alltoall) {
                k = vector_kind(k);
            }
        }
    }
    k
}

fn check_contributions(plan: &FusedPlan, n: usize, contributions: &[Chunk]) -> Result<(), FusionError> {
    if contributions.len() != n {
        return Err(FusionError::Contribution(format!(
            "{} contributions for {n} ranks",
            contributions.len()
        )));
    }
    let first = plan.first();
    for (r, c) in contributions.iter().enumerate() {
        if let Chunk::Val(v) = c {
            if v.kind() != first.dtype && v.kind() != vector_kind(first.dtype) {
                return Err(FusionError::Contribution(format!(
                    "rank {r}: expected {}, got {}",
                    first.dtype,
                    v.kind()
                )));
            }
        }
        if let Some(counts) = &first.counts {
            let elems = c.byte_len() / first.dtype.elem_bytes();
            if counts.len() != n || counts[r] as usize != elems {
                return Err(FusionError::Contribution(format!(
                    "rank {r}: {elems} elements do not match counts"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FusedRun {
    /// Final value of every rank.
    pub results: Vec<Chunk>,
    pub trace: Trace,
    pub stats: SwitchStats,
    pub installed: Installed,
}

impl FusedRun {
    pub fn latency(&self) -> Time {
        self.trace.max_completion().unwrap_or(0)
    }
}

/// Runs `plan` through the dataplane. Every rank sends its first-stage
/// contribution and receives exactly one message, the final result.
pub fn run_fused(
    net: &Network,
    comm: &Communicator,
    plan: &FusedPlan,
    contributions: &[Chunk],
    opts: SwitchOptions,
) -> Result<FusedRun, FusionError> {
    plan.validate()?;
    let n = comm.size() as usize;
    check_contributions(plan, n, contributions)?;
    let first = plan.first().clone();
    let topo = Arc::clone(&net.topo);
    let mut sw = AcisSwitch::new(topo.n_vertices() as usize, opts);
    let lens: Vec<usize> = contributions.iter().map(Chunk::byte_len).collect();
    let installed = install_plan(&mut sw, &topo, comm, plan, &lens)?;
    let header = PacketHeader {
        msg_kind: MsgKind::Data,
        comm_id: comm.comm_id,
        collective: CollectiveKind::Fused,
        op_id: plan.plan_id,
        dtype_id: first.dtype.id(),
        tag: with_stage(0, 0),
        ..Default::default()
    };
    let sends = contributions
        .iter()
        .enumerate()
        .map(|(r, c)| {
            if first.kind == CollectiveKind::Bcast && r as u32 != first.root {
                return None;
            }
            Some((installed.plane.first_hop[r], c.to_payload()))
        })
        .collect();
    let out_kind = final_kind(plan);
    let host_plan = HostPlan {
        header,
        sends,
        expects: vec![true; n],
        preset: vec![None; n],
        decode: Box::new(move |_, p| Ok(vec![Chunk::from_payload(out_kind, p)?])),
    };
    let (results, trace) = run_plan(net, comm, &mut sw, host_plan)?;
    for (r, &got) in trace.host_msgs_received.iter().enumerate() {
        if comm.rank_of(r as u32).is_some() && got != 1 {
            return Err(FusionError::EndpointTraversal {
                rank: comm.rank_of(r as u32).unwrap_or(0),
                received: got,
            });
        }
    }
    let results = flatten(results)?;
    Ok(FusedRun {
        results,
        trace,
        stats: sw.stats,
        installed,
    })
}

fn flatten(results: Results) -> Result<Vec<Chunk>, FusionError> {
    results
        .into_iter()
        .enumerate()
        .map(|(r, res)| {
            let mut v = res.ok_or(FusionError::Host(acis_hostmpi::HostError::Incomplete(r as u32)))?;
            if v.len() != 1 {
                return Err(FusionError::Contribution(format!(
                    "rank {r} received {} parts",
                    v.len()
                )));
            }
            Ok(v.pop().expect("one part"))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnfusedRun {
    pub results: Vec<Chunk>,
    /// All-finish latency of each stage; maps cost nothing on the host.
    pub stage_latency: Vec<Time>,
    /// Link bytes summed over the collective stages.
    pub link_bytes: u64,
}

impl UnfusedRun {
    pub fn latency(&self) -> Time {
        self.stage_latency.iter().sum()
    }
}

fn kind_of(c: &Chunk, fallback: DTypeKind) -> DTypeKind {
    c.value().map_or(fallback, |v| v.kind())
}

/// Runs every stage of `plan` separately: collectives through the host
/// baseline, maps on each host between them.
pub fn run_unfused(
    net: &Network,
    comm: &Communicator,
    plan: &FusedPlan,
    contributions: &[Chunk],
) -> Result<UnfusedRun, FusionError> {
    plan.validate()?;
    let n = comm.size() as usize;
    check_contributions(plan, n, contributions)?;
    let mut held = contributions.to_vec();
    let mut stage_latency = Vec::with_capacity(plan.stages.len());
    let mut link_bytes = 0;
    for (i, s) in plan.stages.iter().enumerate() {
        match s {
            Stage::Collective(c) => {
                let k = kind_of(&held[0], c.dtype);
                let eb = k.elem_bytes();
                let inputs: Vec<Vec<Chunk>> = held
                    .iter()
                    .map(|h| match c.kind {
                        CollectiveKind::Alltoall => h.split(n, eb),
                        _ => vec![h.clone()],
                    })
                    .collect();
                let call = CollectiveCall {
                    kind: c.kind,
                    root: c.root,
                    op: c.op,
                    dtype: DType::new(k, (held[0].byte_len() / eb) as u32),
                    inputs,
                };
                let run = run_host(net, comm, &call, None)?;
                stage_latency.push(run.latency());
                link_bytes += run.trace.link_bytes.iter().sum::<u64>();
                let vk = vector_kind(k);
                let gathers = matches!(c.kind, CollectiveKind::Allgather | CollectiveKind::Alltoall);
                let joined: Results = run
                    .results
                    .into_iter()
                    .map(|r| match r {
                        Some(parts) if gathers => Chunk::concat(vk, &parts).map(|c| Some(vec![c])),
                        other => Ok(other),
                    })
                    .collect::<Result<_, _>>()
                    .map_err(|e| FusionError::Contribution(format!("stage {i}: {e}")))?;
                held = flatten(joined)?;
            }
            Stage::Map(m) => {
                stage_latency.push(0);
                held = held
                    .iter()
                    .map(|h| match h {
                        Chunk::Val(v) => acis_cgra::map_stage(&m.program, &plan.cgra, v, &mut Memory::default())
                            .map(|(o, _)| Chunk::Val(o))
                            .map_err(|e| e.to_string()),
                        Chunk::Opaque(_) => apply_map(&m.program, &plan.cgra, h)
                            .map(|(o, _)| o)
                            .map_err(|e| e.to_string()),
                    })
                    .collect::<Result<_, _>>()
                    .map_err(|msg| FusionError::Map { stage: i, msg })?;
            }
        }
    }
    Ok(UnfusedRun {
        results: held,
        stage_latency,
        link_bytes,
    })
}
