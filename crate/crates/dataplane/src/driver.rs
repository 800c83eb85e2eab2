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

//! Host side of in-switch collectives: every rank sends one contribution
//! and waits for at most one result message.

use std::sync::Arc;

use acis_core::wire::{CollectiveKind, MsgKind, PacketHeader};
use acis_core::DTypeKind;
use acis_hostmpi::{oracle, Chunk, CollectiveCall, Communicator, Results};
use acis_simnet::{HostLogic, Message, Network, Payload, Sim, Trace, VertexId};

use crate::aggregate::join;
use crate::context::ContextKey;
use crate::control::{install_collective, ControlPlane, InstallSpec};
use crate::reorder::{ReorderLayout, Sink};
use crate::switch::{AcisSwitch, SwitchOptions, SwitchStats};
use crate::DataplaneError;

type Decoder = Box<dyn Fn(u32, Payload) -> Result<Vec<Chunk>, DataplaneError>>;

/// What each rank does during one in-switch run.
pub struct HostPlan {
    /// Header template; `src_rank` is filled per rank.
    pub header: PacketHeader,
    /// Per rank: first dataplane hop and contribution.
    pub sends: Vec<Option<(VertexId, Payload)>>,
    /// Per rank: whether a result message is awaited.
    pub expects: Vec<bool>,
    /// Results known without the network.
    pub preset: Results,
    pub decode: Decoder,
}

struct Hosts<'a> {
    comm: &'a Communicator,
    plan: HostPlan,
    results: Results,
    error: Option<DataplaneError>,
}

impl HostLogic for Hosts<'_> {
    fn on_start(&mut self, sim: &mut Sim, host: VertexId) {
        let Some(r) = self.comm.rank_of(host) else { return };
        let ru = r as usize;
        if let Some((dst, payload)) = self.plan.sends[ru].take() {
            let mut h = self.plan.header;
            h.src_rank = r;
            if let Err(e) = sim.send_message(host, dst, h, payload) {
                self.error.get_or_insert(e.into());
                return;
            }
        }
        if !self.plan.expects[ru] {
            sim.mark_complete(host);
        }
    }

    fn on_message(&mut self, sim: &mut Sim, host: VertexId, msg: Message) {
        let Some(r) = self.comm.rank_of(host) else { return };
        let ru = r as usize;
        if msg.header.msg_kind != MsgKind::Result || !self.plan.expects[ru] || self.results[ru].is_some() {
            self.error.get_or_insert(DataplaneError::InvalidContext {
                vertex: host,
                reason: format!("unexpected message for rank {r}"),
            });
            return;
        }
        match (self.plan.decode)(r, msg.payload) {
            Ok(v) => {
                self.results[ru] = Some(v);
                sim.mark_complete(host);
            }
            Err(e) => {
                self.error.get_or_insert(e);
            }
        }
    }
}

/// Runs one host plan against an already configured switch.
pub fn run_plan(
    net: &Network,
    comm: &Communicator,
    sw: &mut AcisSwitch,
    plan: HostPlan,
) -> Result<(Results, Trace), DataplaneError> {
    let results = plan.preset.clone();
    let mut hosts = Hosts {
        comm,
        plan,
        results,
        error: None,
    };
    let mut sim = net.sim()?;
    sim.run(&mut hosts, sw)?;
    if let Some(e) = hosts.error {
        return Err(e);
    }
    for (r, want) in hosts.plan.expects.iter().enumerate() {
        if *want && hosts.results[r].is_none() {
            return Err(DataplaneError::Incomplete(r as u32));
        }
    }
    Ok((hosts.results, sim.into_trace()))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AcisOptions {
    pub switch: SwitchOptions,
    /// Tag carried by every packet of the run.
    pub tag: u32,
}

#[derive(Clone, Debug)]
pub struct AcisRun {
    pub results: Results,
    pub trace: Trace,
    pub stats: SwitchStats,
    /// `None` when a single rank needs no traffic.
    pub plane: Option<ControlPlane>,
}

impl AcisRun {
    /// Latest rank completion.
    pub fn latency(&self) -> acis_simnet::Time {
        self.trace.max_completion().unwrap_or(0)
    }
}

fn kind_of(c: &Chunk, fallback: DTypeKind) -> DTypeKind {
    c.value().map_or(fallback, |v| v.kind())
}

/// Splits `p` into pieces of the given lengths and decodes each.
pub fn split_decode(p: Payload, pieces: &[(usize, DTypeKind)]) -> Result<Vec<Chunk>, DataplaneError> {
    let mut at = 0;
    let mut out = Vec::with_capacity(pieces.len());
    for &(len, kind) in pieces {
        out.push(Chunk::from_payload(kind, p.slice(at, at + len))?);
        at += len;
    }
    Ok(out)
}

/// Runs `call` through the in-switch dataplane.
pub fn run_acis(
    net: &Network,
    comm: &Communicator,
    call: &CollectiveCall,
    opts: AcisOptions,
) -> Result<AcisRun, DataplaneError> {
    call.validate()?;
    let n = call.n() as usize;
    if comm.size() as usize != n {
        return Err(DataplaneError::InvalidContext {
            vertex: 0,
            reason: format!("communicator has {} ranks, call has {n}", comm.size()),
        });
    }
    let topo = Arc::clone(&net.topo);
    let mut sw = AcisSwitch::new(topo.n_vertices() as usize, opts.switch);
    let header = PacketHeader {
        msg_kind: MsgKind::Data,
        comm_id: comm.comm_id,
        collective: call.kind,
        op_id: call.op.id(),
        dtype_id: call.dtype.kind.id(),
        tag: opts.tag,
        ..Default::default()
    };
    if n == 1 {
        let plan = HostPlan {
            header,
            sends: vec![None],
            expects: vec![false],
            preset: oracle(call)?,
            decode: Box::new(|_, _| unreachable!("no traffic")),
        };
        let (results, trace) = run_plan(net, comm, &mut sw, plan)?;
        return Ok(AcisRun {
            results,
            trace,
            stats: sw.stats,
            plane: None,
        });
    }
    let fallback = call.dtype.kind;
    let lens: Vec<usize> = call.inputs.iter().map(|i| i[0].byte_len()).collect();
    let layout = match call.kind {
        CollectiveKind::Gather => Some(ReorderLayout::gather(lens.clone(), Sink::Unicast(call.root))),
        CollectiveKind::Allgather => Some(ReorderLayout::gather(lens.clone(), Sink::Multicast)),
        CollectiveKind::Alltoall => {
            let blocks: Vec<Vec<usize>> = call
                .inputs
                .iter()
                .map(|row| row.iter().map(Chunk::byte_len).collect())
                .collect();
            Some(ReorderLayout::alltoall(&blocks))
        }
        _ => None,
    };
    let spec = InstallSpec {
        key: ContextKey::new(comm.comm_id, call.kind),
        op: call.op,
        dtype: call.dtype,
        root: call.root,
        layout: layout.map(Arc::new),
        plan: None,
    };
    let plane = install_collective(&mut sw, &topo, comm, &spec)?;
    let root = call.root as usize;
    let sends = (0..n)
        .map(|r| {
            let payload = match call.kind {
                CollectiveKind::Bcast if r != root => return None,
                CollectiveKind::Alltoall => join(call.inputs[r].iter().map(Chunk::to_payload)),
                _ => call.inputs[r][0].to_payload(),
            };
            Some((plane.first_hop[r], payload))
        })
        .collect();
    let expects: Vec<bool> = (0..n)
        .map(|r| match call.kind {
            CollectiveKind::Bcast => r != root,
            CollectiveKind::Reduce | CollectiveKind::Gather => r == root,
            _ => true,
        })
        .collect();
    let mut preset: Results = vec![None; n];
    if call.kind == CollectiveKind::Bcast {
        preset[root] = Some(vec![call.inputs[root][0].clone()]);
    }
    let decode: Decoder = match call.kind {
        CollectiveKind::Gather | CollectiveKind::Allgather => {
            let pieces: Vec<(usize, DTypeKind)> = call
                .inputs
                .iter()
                .map(|i| (i[0].byte_len(), kind_of(&i[0], fallback)))
                .collect();
            Box::new(move |_, p| split_decode(p, &pieces))
        }
        CollectiveKind::Alltoall => {
            let cols: Vec<Vec<(usize, DTypeKind)>> = (0..n)
                .map(|j| {
                    call.inputs
                        .iter()
                        .map(|row| (row[j].byte_len(), kind_of(&row[j], fallback)))
                        .collect()
                })
                .collect();
            Box::new(move |r, p| split_decode(p, &cols[r as usize]))
        }
        _ => Box::new(move |_, p| Ok(vec![Chunk::from_payload(fallback, p)?])),
    };
    let plan = HostPlan {
        header,
        sends,
        expects,
        preset,
        decode,
    };
    let (results, trace) = run_plan(net, comm, &mut sw, plan)?;
    Ok(AcisRun {
        results,
        trace,
        stats: sw.stats,
        plane: Some(plane),
    })
}
