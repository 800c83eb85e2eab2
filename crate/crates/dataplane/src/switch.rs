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

//! The switch pipeline as a simulation [`SwitchLogic`].

use std::collections::HashMap;
use std::sync::Arc;

use acis_core::value::vector_kind;
use acis_core::wire::{packet_count, CollectiveKind, MsgKind, PacketHeader, MAX_PAYLOAD};
use acis_core::{DTypeKind, Value};
use acis_hostmpi::Chunk;
use acis_simnet::{PacketMeta, Payload, Sim, SimPacket, SwitchLogic, Time, VertexId, VertexKind};

use crate::aggregate::{join, AggKey, AggTable, Assembler, Outcome};
use crate::context::{CollectiveContext, ContextKey, ContextTables, Ingress, DEFAULT_TABLE_CAPACITY};
use crate::multicast::multicast_each;
use crate::plan::{apply_collective, apply_map_virtual, SwitchStage, Virtual};
use crate::reorder::{ReorderState, Sink};
use crate::DataplaneError;

pub const DEFAULT_RECIRCULATION_CAP: u8 = 16;

/// Fused plans carry the stage index in the top byte of the tag.
pub const STAGE_SHIFT: u32 = 24;

pub fn stage_of(tag: u32) -> u32 {
    tag >> STAGE_SHIFT
}

pub fn with_stage(tag: u32, stage: u32) -> u32 {
    (tag & ((1 << STAGE_SHIFT) - 1)) | (stage << STAGE_SHIFT)
}

/// Advances `pkt` to the next stage of a plan of `plan_len` stages. Fails
/// on the last stage or once `cap` passes have been made.
pub fn recirculate(pkt: &mut SimPacket, plan_len: usize, cap: u8) -> Result<(), DataplaneError> {
    let stage = stage_of(pkt.header.tag);
    if stage as usize + 1 >= plan_len {
        return Err(DataplaneError::InvalidPlan(format!(
            "stage {stage} is the last of {plan_len}"
        )));
    }
    if pkt.meta.passes >= cap {
        return Err(DataplaneError::RecirculationLimitExceeded(cap));
    }
    pkt.meta.passes += 1;
    pkt.header.tag = with_stage(pkt.header.tag, stage + 1);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwitchOptions {
    /// Fold on arrival instead of in contributor order.
    pub eager: bool,
    pub recirculation_cap: u8,
    /// Bound on contexts and on open aggregation keys per switch.
    pub table_capacity: usize,
}

impl Default for SwitchOptions {
    fn default() -> Self {
        SwitchOptions {
            eager: false,
            recirculation_cap: DEFAULT_RECIRCULATION_CAP,
            table_capacity: DEFAULT_TABLE_CAPACITY,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SwitchStats {
    /// Aggregation keys completed.
    pub completions: u64,
    /// Packets the pipeline created, counting every multicast copy.
    pub packets_emitted: u64,
    pub map_cycles: u64,
    pub recirculations: u64,
    pub errors: Vec<(VertexId, DataplaneError)>,
}

/// Where an emitted message goes.
#[derive(Clone, Copy, Debug)]
enum Dest {
    Parent(VertexId),
    Multicast,
    Rank(u32),
}

#[derive(Debug)]
struct Collect {
    streams: Vec<Vec<Option<Payload>>>,
    missing: usize,
}

#[derive(Debug)]
struct Job {
    at: VertexId,
    ctx: Arc<CollectiveContext>,
    header: PacketHeader,
    state: Virtual,
}

type StreamKey = (VertexId, ContextKey, u32);

pub struct AcisSwitch {
    tables: Vec<ContextTables>,
    agg: Vec<AggTable>,
    asm: Vec<Assembler>,
    reorder: HashMap<StreamKey, ReorderState>,
    collect: HashMap<StreamKey, Collect>,
    msg_ids: HashMap<(VertexId, ContextKey, u32, u32), u64>,
    jobs: Vec<Option<Job>>,
    opts: SwitchOptions,
    pub stats: SwitchStats,
}

impl AcisSwitch {
    pub fn new(n_vertices: usize, opts: SwitchOptions) -> Self {
        AcisSwitch {
            tables: vec![ContextTables::with_capacity(opts.table_capacity); n_vertices],
            agg: vec![AggTable::new(opts.table_capacity, opts.eager); n_vertices],
            asm: vec![Assembler::default(); n_vertices],
            reorder: HashMap::new(),
            collect: HashMap::new(),
            msg_ids: HashMap::new(),
            jobs: Vec::new(),
            opts,
            stats: SwitchStats::default(),
        }
    }

    pub fn install(&mut self, at: VertexId, ctx: CollectiveContext) -> Result<(), DataplaneError> {
        self.tables[at as usize].install(at, ctx)
    }

    pub fn tables(&self, at: VertexId) -> &ContextTables {
        &self.tables[at as usize]
    }

    pub fn agg_table(&self, at: VertexId) -> &AggTable {
        &self.agg[at as usize]
    }

    fn fail(&mut self, sim: &mut Sim, at: VertexId, pkt: SimPacket, e: DataplaneError) {
        sim.drop_packet(at, pkt, e.to_string());
        self.stats.errors.push((at, e));
    }

    fn msg_id(&mut self, sim: &mut Sim, at: VertexId, key: ContextKey, tag: u32, stream: u32) -> u64 {
        *self
            .msg_ids
            .entry((at, key, tag, stream))
            .or_insert_with(|| sim.alloc_msg_id())
    }

    /// Sends one packet of a result train.
    #[allow(clippy::too_many_arguments)]
    fn send_packet(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &CollectiveContext,
        template: &PacketHeader,
        dest: Dest,
        msg_id: u64,
        seg: u32,
        total: u32,
        payload: Payload,
    ) -> Result<(), DataplaneError> {
        let mut header = *template;
        header.seq = seg;
        header.payload_len = payload.len() as u16;
        header.src_rank = at;
        header.dst_rank = acis_core::wire::CONTEXT_DIRECTED;
        header.msg_kind = match dest {
            Dest::Parent(_) => MsgKind::Data,
            _ => MsgKind::Result,
        };
        let mut pkt = SimPacket {
            header,
            payload,
            meta: PacketMeta {
                msg_id,
                msg_packets: total,
                seg_index: seg,
                src_vertex: at,
                dst_vertex: at,
                hops: 0,
                passes: 0,
            },
        };
        match dest {
            Dest::Parent(p) => {
                pkt.meta.dst_vertex = p;
                self.stats.packets_emitted += 1;
                sim.forward(at, pkt);
            }
            Dest::Rank(r) => {
                pkt.header.dst_rank = r;
                pkt.meta.dst_vertex = ctx.members[r as usize];
                self.stats.packets_emitted += 1;
                sim.forward(at, pkt);
            }
            Dest::Multicast => {
                let mut emitted = 0;
                multicast_each(ctx, at, pkt, |p| {
                    emitted += 1;
                    sim.forward(at, p);
                })?;
                self.stats.packets_emitted += emitted;
            }
        }
        Ok(())
    }

    /// Sends a whole message as a fresh packet train.
    fn send_message(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &CollectiveContext,
        template: &PacketHeader,
        dest: Dest,
        payload: Payload,
    ) -> Result<(), DataplaneError> {
        let total = packet_count(payload.len(), MAX_PAYLOAD);
        let msg_id = sim.alloc_msg_id();
        for i in 0..total {
            let start = i * MAX_PAYLOAD;
            let end = (start + MAX_PAYLOAD).min(payload.len());
            let part = payload.slice(start, end);
            self.send_packet(sim, at, ctx, template, dest, msg_id, i as u32, total as u32, part)?;
        }
        Ok(())
    }
}

fn ingress(sim: &Sim, pkt: &SimPacket) -> Ingress {
    if sim.topology().kind(pkt.meta.src_vertex) == VertexKind::Host {
        Ingress::Rank(pkt.header.src_rank)
    } else {
        Ingress::Switch(pkt.meta.src_vertex)
    }
}

fn to_chunk(p: Payload, kind: DTypeKind) -> Result<Chunk, DataplaneError> {
    Ok(match p {
        Payload::Opaque(n) => Chunk::Opaque(n),
        Payload::Bytes(b) => Chunk::Val(Value::decode(kind, &b)?),
    })
}

impl AcisSwitch {
    fn process(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &Arc<CollectiveContext>,
        pkt: SimPacket,
    ) -> Result<(), DataplaneError> {
        match pkt.header.msg_kind {
            MsgKind::Result => {
                let mut emitted = 0;
                multicast_each(ctx, at, pkt, |p| {
                    emitted += 1;
                    sim.forward(at, p);
                })?;
                self.stats.packets_emitted += emitted;
                Ok(())
            }
            MsgKind::Ctrl => Err(DataplaneError::InvalidContext {
                vertex: at,
                reason: "control packets are not handled in the data path".into(),
            }),
            MsgKind::Data => match ctx.mechanics() {
                CollectiveKind::Reduce | CollectiveKind::Allreduce => self.on_reduce(sim, at, ctx, pkt),
                CollectiveKind::Gather | CollectiveKind::Allgather | CollectiveKind::Alltoall => {
                    self.on_reorder(sim, at, ctx, pkt)
                }
                CollectiveKind::Bcast => self.on_bcast(sim, at, ctx, pkt),
                CollectiveKind::Fused => Err(DataplaneError::InvalidPlan("nested fused plan".into())),
            },
        }
    }

    fn on_reduce(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &Arc<CollectiveContext>,
        pkt: SimPacket,
    ) -> Result<(), DataplaneError> {
        let from = ingress(sim, &pkt);
        let header = pkt.header;
        let now = sim.now();
        let a = at as usize;
        if ctx.dtype.kind == DTypeKind::SparseF32 {
            // sparse segments do not align across contributors
            let akey = (ctx.key, header.tag, from);
            let Some(whole) = self.asm[a].push(akey, pkt.meta.seg_index, pkt.meta.msg_packets, pkt.payload)? else {
                return Ok(());
            };
            let k = AggKey {
                ctx: ctx.key,
                tag: header.tag,
                seq: 0,
            };
            if let Outcome::Complete(p) = self.agg[a].aggregate(ctx, k, from, whole, now)? {
                self.stats.completions += 1;
                let total = packet_count(p.len(), MAX_PAYLOAD);
                for i in 0..total {
                    let end = ((i + 1) * MAX_PAYLOAD).min(p.len());
                    let part = p.slice(i * MAX_PAYLOAD, end);
                    self.reduced(sim, at, ctx, &header, i as u32, total as u32, part)?;
                }
            }
            return Ok(());
        }
        let k = AggKey {
            ctx: ctx.key,
            tag: header.tag,
            seq: header.seq,
        };
        if let Outcome::Complete(p) = self.agg[a].aggregate(ctx, k, from, pkt.payload, now)? {
            self.stats.completions += 1;
            self.reduced(sim, at, ctx, &header, header.seq, pkt.meta.msg_packets, p)?;
        }
        Ok(())
    }

    /// Routes one completed reduction segment.
    #[allow(clippy::too_many_arguments)]
    fn reduced(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &Arc<CollectiveContext>,
        header: &PacketHeader,
        seg: u32,
        total: u32,
        payload: Payload,
    ) -> Result<(), DataplaneError> {
        if ctx.plan.is_some() && ctx.is_root() {
            return self.collect_part(sim, at, ctx, header, &[total], 0, seg, payload);
        }
        let dest = match (ctx.parent, ctx.key.collective) {
            (Some(p), _) => Dest::Parent(p),
            (None, CollectiveKind::Reduce) => Dest::Rank(ctx.root_rank),
            (None, _) => Dest::Multicast,
        };
        let id = self.msg_id(sim, at, ctx.key, header.tag, 0);
        self.send_packet(sim, at, ctx, header, dest, id, seg, total, payload)
    }

    fn on_reorder(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &Arc<CollectiveContext>,
        pkt: SimPacket,
    ) -> Result<(), DataplaneError> {
        let layout = ctx.layout.clone().ok_or_else(|| DataplaneError::InvalidContext {
            vertex: at,
            reason: "gather-type data at a switch without a reorder layout".into(),
        })?;
        let header = pkt.header;
        let sk = (at, ctx.key, header.tag);
        let st = self
            .reorder
            .entry(sk)
            .or_insert_with(|| ReorderState::new(Arc::clone(&layout), header.tag));
        let emits = st.accept(header.src_rank, pkt.meta.seg_index, pkt.payload)?;
        if st.all_received() {
            self.reorder.remove(&sk);
        }
        let totals: Vec<u32> = layout.streams.iter().map(|s| s.packets()).collect();
        for e in emits {
            if ctx.plan.is_some() {
                self.collect_part(sim, at, ctx, &header, &totals, e.stream, e.seg, e.payload)?;
                continue;
            }
            let dest = match layout.streams[e.stream].sink {
                Sink::Multicast => Dest::Multicast,
                Sink::Unicast(r) => Dest::Rank(r),
            };
            let id = self.msg_id(sim, at, ctx.key, header.tag, e.stream as u32);
            self.send_packet(sim, at, ctx, &header, dest, id, e.seg, e.total, e.payload)?;
        }
        Ok(())
    }

    fn on_bcast(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &Arc<CollectiveContext>,
        pkt: SimPacket,
    ) -> Result<(), DataplaneError> {
        let from = ingress(sim, &pkt);
        if ctx.contributor_index(from).is_none() {
            return Err(DataplaneError::UnknownContributor { from });
        }
        let header = pkt.header;
        let (seg, total) = (pkt.meta.seg_index, pkt.meta.msg_packets);
        if ctx.plan.is_some() {
            return self.collect_part(sim, at, ctx, &header, &[total], 0, seg, pkt.payload);
        }
        let id = pkt.meta.msg_id;
        self.send_packet(sim, at, ctx, &header, Dest::Multicast, id, seg, total, pkt.payload)
    }

    /// Buffers first-stage output of a fused plan until it is whole.
    #[allow(clippy::too_many_arguments)]
    fn collect_part(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &Arc<CollectiveContext>,
        header: &PacketHeader,
        totals: &[u32],
        stream: usize,
        seg: u32,
        payload: Payload,
    ) -> Result<(), DataplaneError> {
        let sk = (at, ctx.key, header.tag);
        let c = self.collect.entry(sk).or_insert_with(|| Collect {
            streams: totals.iter().map(|&t| vec![None; t.max(1) as usize]).collect(),
            missing: totals.iter().map(|&t| t.max(1) as usize).sum(),
        });
        let slot =
            c.streams
                .get_mut(stream)
                .and_then(|s| s.get_mut(seg as usize))
                .ok_or(DataplaneError::SlotOverflow {
                    rank: stream as u32,
                    seg,
                })?;
        if slot.is_some() {
            return Err(DataplaneError::DuplicateContribution {
                from: Ingress::Switch(at),
                tag: header.tag,
                seq: seg,
            });
        }
        *slot = Some(payload);
        c.missing -= 1;
        if c.missing > 0 {
            return Ok(());
        }
        let c = self.collect.remove(&sk).expect("collecting");
        let parts: Vec<Payload> = c
            .streams
            .into_iter()
            .map(|s| join(s.into_iter().map(|p| p.expect("complete"))))
            .collect();
        self.start_job(sim, at, ctx, header, parts)
    }

    /// Runs the remaining plan stages inside the root, one recirculation
    /// pass each, and schedules the final emission.
    fn start_job(
        &mut self,
        sim: &mut Sim,
        at: VertexId,
        ctx: &Arc<CollectiveContext>,
        header: &PacketHeader,
        parts: Vec<Payload>,
    ) -> Result<(), DataplaneError> {
        let plan = ctx.plan.clone().expect("fused context");
        let (kind, _, dtype, _) = plan.first();
        let n = ctx.members.len();
        let vk = vector_kind(dtype.kind);
        let mut state = match kind {
            CollectiveKind::Allreduce | CollectiveKind::Bcast => {
                Virtual::Uniform(to_chunk(parts.into_iter().next().expect("one stream"), dtype.kind)?)
            }
            CollectiveKind::Allgather => Virtual::Uniform(to_chunk(parts.into_iter().next().expect("one stream"), vk)?),
            CollectiveKind::Alltoall => {
                Virtual::PerRank(parts.into_iter().map(|p| to_chunk(p, vk)).collect::<Result<_, _>>()?)
            }
            other => return Err(DataplaneError::InvalidPlan(format!("{other} cannot start a plan"))),
        };
        let mut probe = SimPacket {
            header: *header,
            payload: Payload::Opaque(0),
            meta: PacketMeta {
                msg_id: 0,
                msg_packets: 1,
                seg_index: 0,
                src_vertex: at,
                dst_vertex: at,
                hops: 0,
                passes: 0,
            },
        };
        let params = *sim.params();
        let mut delay: Time = 0;
        for stage in &plan.stages[1..] {
            recirculate(&mut probe, plan.stages.len(), self.opts.recirculation_cap)?;
            self.stats.recirculations += 1;
            delay += params.switch_latency() + params.serialization_ps(state.byte_len());
            state = match stage {
                SwitchStage::Collective { kind, op, dtype, root } => {
                    apply_collective(*kind, *op, *dtype, *root, n, state)?
                }
                SwitchStage::Map(prog) => {
                    let (s, cycles) = apply_map_virtual(prog, &plan.cgra, state)?;
                    self.stats.map_cycles += cycles;
                    delay += params.cycles_ps(cycles);
                    s
                }
            };
        }
        let token = self.jobs.len() as u64;
        self.jobs.push(Some(Job {
            at,
            ctx: Arc::clone(ctx),
            header: probe.header,
            state,
        }));
        sim.schedule_timer(at, delay, token);
        Ok(())
    }

    fn finish_job(&mut self, sim: &mut Sim, job: Job) -> Result<(), DataplaneError> {
        let Job { at, ctx, header, state } = job;
        match state {
            Virtual::Uniform(c) => self.send_message(sim, at, &ctx, &header, Dest::Multicast, c.to_payload()),
            Virtual::PerRank(vs) => {
                for (r, c) in vs.into_iter().enumerate() {
                    self.send_message(sim, at, &ctx, &header, Dest::Rank(r as u32), c.to_payload())?;
                }
                Ok(())
            }
        }
    }
}

impl SwitchLogic for AcisSwitch {
    fn on_packet(&mut self, sim: &mut Sim, at: VertexId, pkt: SimPacket) {
        if pkt.meta.dst_vertex != at {
            sim.forward(at, pkt);
            return;
        }
        let ctx = match self.tables[at as usize].lookup(&ContextKey::of(&pkt.header)) {
            Ok(c) => Arc::clone(c),
            Err(_) => {
                // no context: behave as a plain router
                sim.forward(at, pkt);
                return;
            }
        };
        let (header, meta) = (pkt.header, pkt.meta.clone());
        if let Err(e) = self.process(sim, at, &ctx, pkt) {
            let stub = SimPacket {
                header,
                payload: Payload::Opaque(0),
                meta,
            };
            self.fail(sim, at, stub, e);
        }
    }

    fn on_timer(&mut self, sim: &mut Sim, at: VertexId, token: u64) {
        let Some(job) = self.jobs.get_mut(token as usize).and_then(Option::take) else {
            return;
        };
        let (header, meta_at) = (job.header, job.at);
        if let Err(e) = self.finish_job(sim, job) {
            let stub = SimPacket {
                header,
                payload: Payload::Opaque(0),
                meta: PacketMeta {
                    msg_id: 0,
                    msg_packets: 1,
                    seg_index: 0,
                    src_vertex: meta_at,
                    dst_vertex: at,
                    hops: 0,
                    passes: 0,
                },
            };
            self.fail(sim, at, stub, e);
        }
    }
}
