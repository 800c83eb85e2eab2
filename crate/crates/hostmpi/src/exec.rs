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

//! Drives per-rank step programs through the simulation engine.

use std::collections::HashMap;

use acis_core::wire::{CollectiveKind, MsgKind, PacketHeader};
use acis_core::DTypeKind;
use acis_simnet::{HostLogic, Message, Network, Payload, PlainRouter, Sim, SwitchLogic, Trace, VertexId};

use crate::algo::{program, Action, AllreduceAlgo, Dst, Program, Src};
use crate::chunk::{frame, unframe, Chunk};
use crate::{CollectiveCall, Communicator, HostError, Results};

#[derive(Clone, Debug)]
pub struct HostRun {
    pub results: Results,
    pub trace: Trace,
}

impl HostRun {
    /// Latest rank completion.
    pub fn latency(&self) -> acis_simnet::Time {
        self.trace.max_completion().unwrap_or(0)
    }
}

struct RankState {
    step: usize,
    sent: bool,
    done: bool,
    acc: Option<Chunk>,
    slots: Vec<Option<Chunk>>,
    blocks: Vec<Chunk>,
    inbox: HashMap<(u32, u32), (DTypeKind, Payload)>,
}

struct Exec<'a> {
    comm: &'a Communicator,
    call: &'a CollectiveCall,
    programs: Vec<Program>,
    ranks: Vec<RankState>,
    error: Option<HostError>,
}

fn chunk_kind(c: &Chunk, fallback: DTypeKind) -> DTypeKind {
    c.value().map_or(fallback, |v| v.kind())
}

impl Exec<'_> {
    fn take_slot(&mut self, r: usize, i: usize) -> Result<Chunk, HostError> {
        self.ranks[r].slots[i]
            .clone()
            .ok_or_else(|| HostError::InvalidCall(format!("rank {r} slot {i} empty")))
    }

    fn send(&mut self, sim: &mut Sim, r: u32, peer: u32, tag: u32, src: &Src) -> Result<(), HostError> {
        let st = &self.ranks[r as usize];
        let fallback = self.call.dtype.kind;
        let (kind, payload) = match src {
            Src::Acc => {
                let c = st.acc.as_ref().expect("accumulator set");
                (chunk_kind(c, fallback), c.to_payload())
            }
            Src::Block(j) => {
                let c = &st.blocks[*j];
                (chunk_kind(c, fallback), c.to_payload())
            }
            Src::Slot(i) => {
                let c = self.take_slot(r as usize, *i)?;
                (chunk_kind(&c, fallback), c.to_payload())
            }
            Src::Slots(list) => {
                let chunks: Vec<Chunk> = list
                    .iter()
                    .map(|&i| self.take_slot(r as usize, i))
                    .collect::<Result<_, _>>()?;
                let refs: Vec<&Chunk> = chunks.iter().collect();
                (fallback, frame(&refs))
            }
        };
        let header = PacketHeader {
            msg_kind: MsgKind::Data,
            comm_id: self.comm.comm_id,
            collective: self.call.kind,
            op_id: self.call.op.id(),
            dtype_id: kind.id(),
            src_rank: r,
            dst_rank: peer,
            tag,
            ..Default::default()
        };
        sim.send_message(self.comm.host(r), self.comm.host(peer), header, payload)?;
        Ok(())
    }

    fn receive(&mut self, r: usize, kind: DTypeKind, payload: Payload, dst: &Dst) -> Result<(), HostError> {
        let op = self.call.op;
        let st = &mut self.ranks[r];
        if let Dst::Slots(list) = dst {
            for (&i, c) in list.iter().zip(unframe(kind, payload, list.len())?) {
                st.slots[i] = Some(c);
            }
            return Ok(());
        }
        let x = Chunk::from_payload(kind, payload)?;
        match dst {
            Dst::Acc => st.acc = Some(x),
            Dst::Combine => st.acc = Some(Chunk::combine(op, st.acc.as_ref().expect("acc"), &x)?),
            Dst::CombineLeft => st.acc = Some(Chunk::combine(op, &x, st.acc.as_ref().expect("acc"))?),
            Dst::Slot(i) => st.slots[*i] = Some(x),
            Dst::CombineSlot(i) => {
                let cur = st.slots[*i].take().expect("slot set");
                st.slots[*i] = Some(Chunk::combine(op, &cur, &x)?);
            }
            Dst::Slots(_) => unreachable!("handled above"),
        }
        Ok(())
    }

    fn act(&mut self, r: usize, action: &Action) -> Result<(), HostError> {
        let kind = self.call.dtype.kind;
        let eb = kind.elem_bytes();
        let op = self.call.op;
        let st = &mut self.ranks[r];
        match action {
            Action::None => {}
            Action::AccToSlot(i) => st.slots[*i] = st.acc.clone(),
            Action::BlockToSlot(i) => st.slots[*i] = Some(st.blocks[*i].clone()),
            Action::FoldSlots => {
                let items: Vec<Chunk> = st.slots.iter().map(|s| s.clone().expect("slot set")).collect();
                st.acc = Some(Chunk::fold(op, &items)?);
            }
            Action::ConcatSlots => {
                let items: Vec<Chunk> = st.slots.iter().map(|s| s.clone().expect("slot set")).collect();
                st.acc = Some(Chunk::concat(kind, &items)?);
            }
            Action::SplitAcc(n) => {
                let parts = st.acc.as_ref().expect("acc").split(*n, eb);
                st.slots = parts.into_iter().map(Some).collect();
            }
        }
        Ok(())
    }

    fn advance(&mut self, sim: &mut Sim, r: u32) -> Result<(), HostError> {
        let ru = r as usize;
        loop {
            if self.ranks[ru].done {
                return Ok(());
            }
            let step_idx = self.ranks[ru].step;
            if step_idx == self.programs[ru].len() {
                self.ranks[ru].done = true;
                sim.mark_complete(self.comm.host(r));
                return Ok(());
            }
            let step = self.programs[ru][step_idx].clone();
            if !self.ranks[ru].sent {
                for (peer, tag, src) in &step.sends {
                    self.send(sim, r, *peer, *tag, src)?;
                }
                self.ranks[ru].sent = true;
            }
            let inbox = &self.ranks[ru].inbox;
            if !step.recvs.iter().all(|(p, t, _)| inbox.contains_key(&(*t, *p))) {
                return Ok(());
            }
            for (peer, tag, dst) in &step.recvs {
                let (kind, payload) = self.ranks[ru].inbox.remove(&(*tag, *peer)).expect("checked");
                self.receive(ru, kind, payload, dst)?;
            }
            self.act(ru, &step.action)?;
            let st = &mut self.ranks[ru];
            st.step += 1;
            st.sent = false;
        }
    }

    fn drive(&mut self, sim: &mut Sim, host: VertexId, msg: Option<Message>) {
        if self.error.is_some() {
            return;
        }
        let Some(r) = self.comm.rank_of(host) else { return };
        if let Some(m) = msg {
            let kind = DTypeKind::from_id(m.header.dtype_id).unwrap_or(self.call.dtype.kind);
            self.ranks[r as usize]
                .inbox
                .insert((m.header.tag, m.header.src_rank), (kind, m.payload));
        }
        if let Err(e) = self.advance(sim, r) {
            self.error = Some(e);
        }
    }
}

impl HostLogic for Exec<'_> {
    fn on_start(&mut self, sim: &mut Sim, host: VertexId) {
        self.drive(sim, host, None);
    }

    fn on_message(&mut self, sim: &mut Sim, host: VertexId, msg: Message) {
        self.drive(sim, host, Some(msg));
    }
}

/// Runs `call` with the baseline algorithm; `algo` overrides the allreduce
/// choice.
pub fn run_host(
    net: &Network,
    comm: &Communicator,
    call: &CollectiveCall,
    algo: Option<AllreduceAlgo>,
) -> Result<HostRun, HostError> {
    run_host_with(net, comm, call, algo, &mut PlainRouter)
}

/// Like [`run_host`] with caller-supplied switch behaviour.
pub fn run_host_with(
    net: &Network,
    comm: &Communicator,
    call: &CollectiveCall,
    algo: Option<AllreduceAlgo>,
    switches: &mut dyn SwitchLogic,
) -> Result<HostRun, HostError> {
    call.validate()?;
    let n = call.n();
    if comm.size() != n {
        return Err(HostError::InvalidCall(format!(
            "communicator has {} ranks, call has {n}",
            comm.size()
        )));
    }
    let algo = algo.unwrap_or_else(|| AllreduceAlgo::default_for(call.dtype.kind, n));
    let programs: Vec<Program> = (0..n).map(|r| program(call, algo, r)).collect();
    let ranks = (0..n as usize)
        .map(|r| {
            let inp = &call.inputs[r];
            RankState {
                step: 0,
                sent: false,
                done: false,
                acc: (call.kind != CollectiveKind::Alltoall).then(|| inp[0].clone()),
                slots: vec![None; n as usize],
                blocks: if call.kind == CollectiveKind::Alltoall {
                    inp.clone()
                } else {
                    Vec::new()
                },
                inbox: HashMap::new(),
            }
        })
        .collect();
    let mut exec = Exec {
        comm,
        call,
        programs,
        ranks,
        error: None,
    };
    let mut sim = net.sim()?;
    sim.run(&mut exec, switches)?;
    if let Some(e) = exec.error {
        return Err(e);
    }
    if let Some(r) = exec.ranks.iter().position(|s| !s.done) {
        return Err(HostError::Incomplete(r as u32));
    }
    let root = call.root as usize;
    let results = exec
        .ranks
        .into_iter()
        .enumerate()
        .map(|(r, st)| {
            let slots = || {
                st.slots
                    .iter()
                    .map(|s| s.clone().expect("slot filled"))
                    .collect::<Vec<_>>()
            };
            match call.kind {
                CollectiveKind::Bcast | CollectiveKind::Allreduce => Some(vec![st.acc.clone().expect("acc")]),
                CollectiveKind::Reduce => (r == root).then(|| vec![st.acc.clone().expect("acc")]),
                CollectiveKind::Gather => (r == root).then(slots),
                CollectiveKind::Allgather | CollectiveKind::Alltoall => Some(slots()),
                CollectiveKind::Fused => None,
            }
        })
        .collect();
    Ok(HostRun {
        results,
        trace: sim.into_trace(),
    })
}
