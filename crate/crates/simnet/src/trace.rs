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

//! Simulation outputs: per-rank completion, link counters, and (at full
//! level) the ordered event log.

use std::io::Write;

use serde::Serialize;

use crate::cost::Time;
use crate::topology::VertexId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceLevel {
    /// Completion times and counters only.
    #[default]
    Counters,
    /// Counters plus the event log, per-packet hop counts and drop records.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    SendStart,
    LinkDeliver,
    SwitchIngress,
    SwitchEgress,
    HostDeliver,
    ComputeDone,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::SendStart => "SendStart",
            EventKind::LinkDeliver => "LinkDeliver",
            EventKind::SwitchIngress => "SwitchIngress",
            EventKind::SwitchEgress => "SwitchEgress",
            EventKind::HostDeliver => "HostDeliver",
            EventKind::ComputeDone => "ComputeDone",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub time: Time,
    pub kind: EventKind,
    pub vertex: VertexId,
    pub packet_comm: u32,
    pub packet_seq: u32,
    pub link_bytes: u32,
}

#[derive(Serialize)]
struct EventRow {
    time_ps: Time,
    kind: &'static str,
    vertex: VertexId,
    packet_comm: u32,
    packet_seq: u32,
    link_bytes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopRecord {
    pub src: VertexId,
    pub dst: VertexId,
    pub msg_id: u64,
    pub seg_index: u32,
    pub hops: u16,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DropRecord {
    pub time: Time,
    pub vertex: VertexId,
    pub comm_id: u32,
    pub seq: u32,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Trace {
    /// Indexed by host vertex.
    pub completion: Vec<Option<Time>>,
    /// Wire bytes (header plus payload) per link.
    pub link_bytes: Vec<u64>,
    pub link_payload_bytes: Vec<u64>,
    pub link_packets: Vec<u64>,
    pub host_msgs_sent: Vec<u64>,
    pub host_msgs_received: Vec<u64>,
    pub packets_injected: u64,
    pub packets_switch_ingress: u64,
    pub packets_forwarded: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
    pub events_processed: u64,
    pub end_time: Time,
    pub events: Vec<EventRecord>,
    pub hops: Vec<HopRecord>,
    pub drops: Vec<DropRecord>,
}

impl Trace {
    pub fn new(n_hosts: usize, n_links: usize) -> Self {
        Trace {
            completion: vec![None; n_hosts],
            link_bytes: vec![0; n_links],
            link_payload_bytes: vec![0; n_links],
            link_packets: vec![0; n_links],
            host_msgs_sent: vec![0; n_hosts],
            host_msgs_received: vec![0; n_hosts],
            ..Default::default()
        }
    }

    /// Latest completion over all hosts, `None` if any host never completed.
    pub fn max_completion(&self) -> Option<Time> {
        self.completion.iter().try_fold(0, |m, c| c.map(|c| m.max(c)))
    }

    /// Mean completion over hosts, rounded down.
    pub fn mean_completion(&self) -> Option<Time> {
        let n = self.completion.len() as u128;
        if n == 0 {
            return Some(0);
        }
        let sum: Option<u128> = self.completion.iter().try_fold(0u128, |s, c| c.map(|c| s + c as u128));
        sum.map(|s| (s / n) as Time)
    }

    pub fn total_link_bytes(&self) -> u64 {
        self.link_bytes.iter().sum()
    }

    pub fn total_link_payload_bytes(&self) -> u64 {
        self.link_payload_bytes.iter().sum()
    }

    pub fn total_messages_sent(&self) -> u64 {
        self.host_msgs_sent.iter().sum()
    }

    /// Writes the event log as CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if self.events.is_empty() {
            wr.write_record(["time_ps", "kind", "vertex", "packet_comm", "packet_seq", "link_bytes"])?;
        }
        for e in &self.events {
            wr.serialize(EventRow {
                time_ps: e.time,
                kind: e.kind.name(),
                vertex: e.vertex,
                packet_comm: e.packet_comm,
                packet_seq: e.packet_seq,
                link_bytes: e.link_bytes,
            })?;
        }
        wr.flush()?;
        Ok(())
    }
}
