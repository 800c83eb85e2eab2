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

//! The discrete-event engine.
//!
//! Events pop in `(time, sequence)` order. Links are FIFO: a packet starts
//! serializing at `max(ready, link_free)` and reaches the far end after its
//! serialization time plus the link's wire latency. Switches are
//! store-and-forward with a fixed pipeline latency. Each host has one serial
//! CPU that pays the endpoint cost once per message sent or received.

use std::cmp::Reverse;
use std::collections::binary_heap::PeekMut;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::Arc;

use acis_core::wire::{PacketHeader, HEADER_LEN, MAX_PAYLOAD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost::{CostError, CostParams, Time};
use crate::topology::{LinkId, TopoError, Topology, VertexId, VertexKind};
use crate::trace::{DropRecord, EventKind, EventRecord, HopRecord, Trace, TraceLevel};

/// Packets a host NIC reserves per pump event.
const NIC_BATCH: u32 = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Bytes(Vec<u8>),
    /// Timing-only stand-in carrying just a length.
    Opaque(usize),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::Bytes(b) => b.len(),
            Payload::Opaque(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, Payload::Opaque(_))
    }

    pub fn bytes(&self) -> Option<&[u8]> {
        match self {
            Payload::Bytes(b) => Some(b),
            Payload::Opaque(_) => None,
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> Payload {
        match self {
            Payload::Bytes(b) => Payload::Bytes(b[start..end].to_vec()),
            Payload::Opaque(_) => Payload::Opaque(end - start),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PacketMeta {
    /// Reassembly key at the receiving host.
    pub msg_id: u64,
    pub msg_packets: u32,
    pub seg_index: u32,
    pub src_vertex: VertexId,
    /// Routing destination.
    pub dst_vertex: VertexId,
    pub hops: u16,
    /// Recirculation passes taken so far.
    pub passes: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimPacket {
    pub header: PacketHeader,
    pub payload: Payload,
    pub meta: PacketMeta,
}

impl SimPacket {
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }
}

/// A fully reassembled message handed to a host.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub msg_id: u64,
    /// Header of the first segment.
    pub header: PacketHeader,
    pub src_vertex: VertexId,
    pub payload: Payload,
    pub packets: u32,
}

pub trait HostLogic {
    fn on_start(&mut self, _sim: &mut Sim, _host: VertexId) {}
    fn on_message(&mut self, sim: &mut Sim, host: VertexId, msg: Message);
    fn on_timer(&mut self, _sim: &mut Sim, _host: VertexId, _token: u64) {}
}

pub trait SwitchLogic {
    fn on_packet(&mut self, sim: &mut Sim, at: VertexId, pkt: SimPacket);
    fn on_timer(&mut self, _sim: &mut Sim, _at: VertexId, _token: u64) {}
}

/// Forwards every packet along its route.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlainRouter;

impl SwitchLogic for PlainRouter {
    fn on_packet(&mut self, sim: &mut Sim, at: VertexId, pkt: SimPacket) {
        sim.forward(at, pkt);
    }
}

/// Host logic that only receives; useful for switch-level tests.
#[derive(Clone, Debug, Default)]
pub struct RecordingHosts {
    pub received: Vec<(VertexId, Time, Message)>,
}

impl HostLogic for RecordingHosts {
    fn on_message(&mut self, sim: &mut Sim, host: VertexId, msg: Message) {
        self.received.push((host, sim.now(), msg));
        sim.mark_complete(host);
    }
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub trace_level: TraceLevel,
    pub max_events: u64,
    /// Enables ±5% uniform jitter on endpoint costs.
    pub jitter_seed: Option<u64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            trace_level: TraceLevel::Counters,
            max_events: 100_000_000,
            jitter_seed: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("livelock: more than {0} events processed")]
    LivelockDetected(u64),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("vertex {0} is not a host")]
    NotAHost(VertexId),
}

/// Heap entries with this bit set refer to the head of a link queue.
const LINK_REF: u32 = 1 << 23;
const REF_BITS: u32 = 24;

/// Heap key: time in the high 64 bits, then sequence number, then the
/// 24-bit slot or link reference. `(time, seq)` is unique, so the reference
/// bits never decide the order.
fn key(time: Time, seq: u64, r: u32) -> u128 {
    debug_assert!(r < 1 << REF_BITS);
    ((time as u128) << 64) | ((seq as u128) << REF_BITS) | r as u128
}

fn unkey(k: u128) -> (Time, u32) {
    ((k >> 64) as Time, (k as u32) & ((1 << REF_BITS) - 1))
}

enum Body {
    NicPump { host: VertexId },
    Egress { at: VertexId, pkt: SimPacket },
    HostDeliver { host: VertexId, msg: Message },
    Timer { at: VertexId, token: u64 },
}

struct Outgoing {
    ready: Time,
    header: PacketHeader,
    payload: Payload,
    msg_id: u64,
    total: u32,
    next: u32,
    dst: VertexId,
}

struct Partial {
    received: u32,
    header: Option<PacketHeader>,
    len: usize,
    parts: Vec<Option<Vec<u8>>>,
    opaque: bool,
}

/// Topology, cost model and engine options shared by independent runs.
#[derive(Clone, Debug)]
pub struct Network {
    pub topo: Arc<Topology>,
    pub params: CostParams,
    pub opts: SimOptions,
}

impl Network {
    pub fn new(spec: crate::topology::TopologySpec, params: CostParams) -> Result<Self, SimError> {
        Ok(Network {
            topo: Arc::new(Topology::build(spec)?),
            params,
            opts: SimOptions::default(),
        })
    }

    pub fn with_options(mut self, opts: SimOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn sim(&self) -> Result<Sim, SimError> {
        Sim::new(self.topo.clone(), self.params, self.opts.clone())
    }
}

pub struct Sim {
    topo: Arc<Topology>,
    params: CostParams,
    opts: SimOptions,
    now: Time,
    seq: u64,
    queue: BinaryHeap<Reverse<u128>>,
    slots: Vec<Option<Body>>,
    free_slots: Vec<u32>,
    link_free: Vec<Time>,
    /// In-flight packets per link in arrival order; only the head is in the
    /// event heap. Arrivals on one link are strictly increasing.
    link_queue: Vec<VecDeque<(Time, u64, SimPacket)>>,
    link_latency: Vec<Time>,
    ser_table: Vec<Time>,
    switch_latency: Time,
    cpu_free: Vec<Time>,
    nic: Vec<VecDeque<Outgoing>>,
    nic_busy: Vec<bool>,
    /// In-flight multi-packet messages per host, keyed by msg id.
    reasm: Vec<Vec<(u64, Partial)>>,
    next_msg_id: u64,
    rng: Option<ChaCha8Rng>,
    trace: Trace,
}

impl Sim {
    pub fn new(topo: Arc<Topology>, params: CostParams, opts: SimOptions) -> Result<Self, SimError> {
        if params.bandwidth_bps == 0 {
            return Err(CostError::NonPositive("max_bandwidth").into());
        }
        if params.switch_clock_hz == 0 {
            return Err(CostError::NonPositive("switch_clock").into());
        }
        let n_hosts = topo.n_hosts() as usize;
        let n_links = topo.links().len();
        let link_latency = topo.links().iter().map(|l| params.wire_latency(l.kind)).collect();
        let ser_table = (0..=HEADER_LEN + MAX_PAYLOAD)
            .map(|b| params.serialization_ps(b))
            .collect();
        Ok(Sim {
            params,
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            slots: Vec::new(),
            free_slots: Vec::new(),
            link_free: vec![0; n_links],
            link_queue: (0..n_links).map(|_| VecDeque::new()).collect(),
            link_latency,
            ser_table,
            switch_latency: params.switch_latency(),
            cpu_free: vec![0; n_hosts],
            nic: (0..n_hosts).map(|_| VecDeque::new()).collect(),
            nic_busy: vec![false; n_hosts],
            reasm: (0..n_hosts).map(|_| Vec::new()).collect(),
            next_msg_id: 0,
            rng: opts.jitter_seed.map(ChaCha8Rng::seed_from_u64),
            trace: Trace::new(n_hosts, n_links),
            opts,
            topo,
        })
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topo
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    fn full(&self) -> bool {
        self.opts.trace_level == TraceLevel::Full
    }

    fn log(&mut self, kind: EventKind, vertex: VertexId, comm: u32, seq: u32, bytes: u32) {
        if self.full() {
            self.trace.events.push(EventRecord {
                time: self.now,
                kind,
                vertex,
                packet_comm: comm,
                packet_seq: seq,
                link_bytes: bytes,
            });
        }
    }

    fn push(&mut self, time: Time, body: Body) {
        debug_assert!(time >= self.now);
        let slot = match self.free_slots.pop() {
            Some(s) => {
                self.slots[s as usize] = Some(body);
                s
            }
            None => {
                assert!(self.slots.len() < LINK_REF as usize, "too many pending events");
                self.slots.push(Some(body));
                (self.slots.len() - 1) as u32
            }
        };
        self.queue.push(Reverse(key(time, self.seq, slot)));
        self.seq += 1;
    }

    /// Fresh id for a message or switch-generated packet train.
    pub fn alloc_msg_id(&mut self) -> u64 {
        self.next_msg_id += 1;
        self.next_msg_id
    }

    fn jitter(&mut self, base: Time) -> Time {
        match &mut self.rng {
            Some(rng) => {
                let r: i64 = rng.gen_range(-50..=50);
                ((base as i128 * (1000 + r) as i128) / 1000) as Time
            }
            None => base,
        }
    }

    fn transmit(&mut self, link: LinkId, ready: Time, mut pkt: SimPacket) {
        let l = link as usize;
        let bytes = pkt.wire_len();
        let ser = self.ser_table[bytes];
        let start = ready.max(self.link_free[l]);
        self.link_free[l] = start + ser;
        self.trace.link_bytes[l] += bytes as u64;
        self.trace.link_payload_bytes[l] += pkt.payload.len() as u64;
        self.trace.link_packets[l] += 1;
        pkt.meta.hops += 1;
        let arrive = start + ser + self.link_latency[l];
        let seq = self.seq;
        self.seq += 1;
        if self.link_queue[l].is_empty() {
            self.queue.push(Reverse(key(arrive, seq, LINK_REF | link)));
        }
        self.link_queue[l].push_back((arrive, seq, pkt));
    }

    /// Queues a message from host `from` to vertex `dst`. The header is a
    /// template: `seq` and `payload_len` are set per segment. Returns the
    /// message id.
    pub fn send_message(
        &mut self,
        from: VertexId,
        dst: VertexId,
        header: PacketHeader,
        payload: Payload,
    ) -> Result<u64, SimError> {
        if from >= self.topo.n_hosts() {
            return Err(SimError::NotAHost(from));
        }
        if from == dst || dst >= self.topo.n_vertices() {
            return Err(TopoError::Unreachable { src: from, dst }.into());
        }
        let h = from as usize;
        let cost = self.jitter(self.params.endpoint_send_cost());
        let ready = self.now.max(self.cpu_free[h]) + cost;
        self.cpu_free[h] = ready;
        self.trace.host_msgs_sent[h] += 1;
        self.log(EventKind::SendStart, from, header.comm_id, header.seq, 0);
        let msg_id = self.alloc_msg_id();
        let total = acis_core::wire::packet_count(payload.len(), MAX_PAYLOAD) as u32;
        self.nic[h].push_back(Outgoing {
            ready,
            header,
            payload,
            msg_id,
            total,
            next: 0,
            dst,
        });
        if !self.nic_busy[h] {
            self.nic_busy[h] = true;
            self.push(ready, Body::NicPump { host: from });
        }
        Ok(msg_id)
    }

    fn pump(&mut self, host: VertexId) {
        let h = host as usize;
        let link = self.topo.out_links(host)[0];
        let mut budget = NIC_BATCH;
        while budget > 0 {
            let Some(out) = self.nic[h].front_mut() else { break };
            if out.ready > self.now {
                break;
            }
            let i = out.next as usize;
            let start = i * MAX_PAYLOAD;
            let end = (start + MAX_PAYLOAD).min(out.payload.len());
            let mut header = out.header;
            header.seq = i as u32;
            header.payload_len = (end - start) as u16;
            let pkt = SimPacket {
                header,
                payload: out.payload.slice(start, end),
                meta: PacketMeta {
                    msg_id: out.msg_id,
                    msg_packets: out.total,
                    seg_index: i as u32,
                    src_vertex: host,
                    dst_vertex: out.dst,
                    hops: 0,
                    passes: 0,
                },
            };
            out.next += 1;
            if out.next == out.total {
                self.nic[h].pop_front();
            }
            self.trace.packets_injected += 1;
            let now = self.now;
            self.transmit(link, now, pkt);
            budget -= 1;
        }
        match self.nic[h].front() {
            Some(out) => {
                let at = out.ready.max(self.link_free[link as usize]).max(self.now);
                self.push(at, Body::NicPump { host });
            }
            None => self.nic_busy[h] = false,
        }
    }

    /// Sends `pkt` out of switch `at` toward `pkt.meta.dst_vertex` after one
    /// pipeline traversal.
    pub fn forward(&mut self, at: VertexId, pkt: SimPacket) {
        match self.topo.next_link(at, pkt.meta.dst_vertex) {
            Ok(link) => {
                self.trace.packets_forwarded += 1;
                let ready = self.now + self.switch_latency;
                self.transmit(link, ready, pkt);
            }
            Err(e) => self.drop_packet(at, pkt, format!("no route: {e}")),
        }
    }

    /// Like [`Sim::forward`] but the packet re-enters egress `extra` later.
    pub fn forward_after(&mut self, at: VertexId, pkt: SimPacket, extra: Time) {
        if extra == 0 {
            self.forward(at, pkt);
        } else {
            let t = self.now + extra;
            self.push(t, Body::Egress { at, pkt });
        }
    }

    /// Fires `on_timer(at, token)` after `delay`.
    pub fn schedule_timer(&mut self, at: VertexId, delay: Time, token: u64) {
        let t = self.now + delay;
        self.push(t, Body::Timer { at, token });
    }

    pub fn drop_packet(&mut self, at: VertexId, pkt: SimPacket, reason: impl Into<String>) {
        self.trace.packets_dropped += 1;
        if self.full() {
            self.trace.drops.push(DropRecord {
                time: self.now,
                vertex: at,
                comm_id: pkt.header.comm_id,
                seq: pkt.header.seq,
                reason: reason.into(),
            });
        }
    }

    /// Records that `host` finished its part of the workload once its CPU
    /// drains any endpoint work already charged.
    pub fn mark_complete(&mut self, host: VertexId) {
        let t = self.now.max(self.cpu_free[host as usize]);
        self.trace.completion[host as usize] = Some(t);
    }

    fn deliver_to_host(&mut self, host: VertexId, pkt: SimPacket) {
        self.trace.packets_delivered += 1;
        if self.full() {
            self.trace.hops.push(HopRecord {
                src: pkt.meta.src_vertex,
                dst: host,
                msg_id: pkt.meta.msg_id,
                seg_index: pkt.meta.seg_index,
                hops: pkt.meta.hops,
            });
        }
        let msg = if pkt.meta.msg_packets <= 1 {
            Message {
                msg_id: pkt.meta.msg_id,
                header: pkt.header,
                src_vertex: pkt.meta.src_vertex,
                payload: pkt.payload,
                packets: 1,
            }
        } else {
            let total = pkt.meta.msg_packets;
            let pending = &mut self.reasm[host as usize];
            let idx = match pending.iter().position(|(id, _)| *id == pkt.meta.msg_id) {
                Some(i) => i,
                None => {
                    pending.push((
                        pkt.meta.msg_id,
                        Partial {
                            received: 0,
                            header: None,
                            len: 0,
                            parts: Vec::new(),
                            opaque: pkt.payload.is_opaque(),
                        },
                    ));
                    pending.len() - 1
                }
            };
            let p = &mut pending[idx].1;
            p.received += 1;
            p.len += pkt.payload.len();
            if pkt.meta.seg_index == 0 || p.header.is_none() {
                p.header = Some(pkt.header);
            }
            if let Payload::Bytes(b) = pkt.payload {
                if p.parts.is_empty() {
                    p.parts.resize(total as usize, None);
                }
                if let Some(slot) = p.parts.get_mut(pkt.meta.seg_index as usize) {
                    *slot = Some(b);
                }
            }
            if p.received < total {
                return;
            }
            let p = pending.swap_remove(idx).1;
            let payload = if p.opaque {
                Payload::Opaque(p.len)
            } else {
                Payload::Bytes(p.parts.into_iter().flatten().flatten().collect())
            };
            Message {
                msg_id: pkt.meta.msg_id,
                header: p.header.expect("header recorded"),
                src_vertex: pkt.meta.src_vertex,
                payload,
                packets: total,
            }
        };
        let h = host as usize;
        let cost = self.jitter(self.params.endpoint_recv_cost());
        let done = self.now.max(self.cpu_free[h]) + cost;
        self.cpu_free[h] = done;
        self.push(done, Body::HostDeliver { host, msg });
    }

    /// Runs to quiescence, calling `on_start` for every host first.
    pub fn run(&mut self, hosts: &mut dyn HostLogic, switches: &mut dyn SwitchLogic) -> Result<(), SimError> {
        for h in 0..self.topo.n_hosts() {
            hosts.on_start(self, h);
        }
        loop {
            let Some(mut top) = self.queue.peek_mut() else { break };
            let (t, slot) = unkey(top.0);
            let link_pkt = if slot & LINK_REF != 0 {
                // replacing the top in place costs one sift instead of two
                let q = &mut self.link_queue[(slot & !LINK_REF) as usize];
                let (_, _, pkt) = q.pop_front().expect("link head present");
                match q.front() {
                    Some(&(next_t, next_seq, _)) => {
                        *top = Reverse(key(next_t, next_seq, slot));
                        drop(top);
                    }
                    None => {
                        PeekMut::pop(top);
                    }
                }
                Some(pkt)
            } else {
                PeekMut::pop(top);
                None
            };
            self.trace.events_processed += 1;
            if self.trace.events_processed > self.opts.max_events {
                return Err(SimError::LivelockDetected(self.opts.max_events));
            }
            self.now = t;
            if let Some(pkt) = link_pkt {
                let dst = self.topo.link(slot & !LINK_REF).dst;
                let (comm, seq, bytes) = (pkt.header.comm_id, pkt.header.seq, pkt.wire_len() as u32);
                self.log(EventKind::LinkDeliver, dst, comm, seq, bytes);
                if self.topo.kind(dst) == VertexKind::Host {
                    self.deliver_to_host(dst, pkt);
                } else {
                    self.trace.packets_switch_ingress += 1;
                    self.log(EventKind::SwitchIngress, dst, comm, seq, 0);
                    switches.on_packet(self, dst, pkt);
                }
                continue;
            }
            let body = self.slots[slot as usize].take().expect("live slot");
            self.free_slots.push(slot);
            match body {
                Body::NicPump { host } => self.pump(host),
                Body::Egress { at, pkt } => {
                    self.log(EventKind::SwitchEgress, at, pkt.header.comm_id, pkt.header.seq, 0);
                    self.forward(at, pkt);
                }
                Body::HostDeliver { host, msg } => {
                    self.trace.host_msgs_received[host as usize] += 1;
                    self.log(EventKind::HostDeliver, host, msg.header.comm_id, msg.header.seq, 0);
                    hosts.on_message(self, host, msg);
                }
                Body::Timer { at, token } => {
                    self.log(EventKind::ComputeDone, at, 0, 0, 0);
                    if self.topo.kind(at) == VertexKind::Host {
                        hosts.on_timer(self, at, token);
                    } else {
                        switches.on_timer(self, at, token);
                    }
                }
            }
        }
        self.trace.end_time = self.now;
        Ok(())
    }
}
