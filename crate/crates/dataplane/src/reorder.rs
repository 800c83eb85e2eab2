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

//! Gather-type reordering: contributions arrive in any order and leave as
//! rank-ordered byte streams cut into full-size packets.
//!
//! A layout maps byte ranges of each rank's contribution onto output
//! streams. Gather and allgather use one stream holding every contribution in
//! rank order; alltoall uses one stream per destination rank. A stream emits
//! a packet as soon as its next `MAX_PAYLOAD` bytes are available in order,
//! so output order depends only on ranks and never on arrival order.

use std::sync::Arc;

use acis_core::wire::{packet_count, MAX_PAYLOAD};
use acis_simnet::Payload;

use crate::context::Ingress;
use crate::DataplaneError;

/// Where a finished stream goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sink {
    /// Every multicast target of the context.
    Multicast,
    /// The host of one rank.
    Unicast(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Piece {
    pub rank: u32,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamLayout {
    pub pieces: Vec<Piece>,
    pub sink: Sink,
}

impl StreamLayout {
    pub fn total(&self) -> usize {
        self.pieces.iter().map(|p| p.len).sum()
    }

    pub fn packets(&self) -> u32 {
        packet_count(self.total(), MAX_PAYLOAD) as u32
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReorderLayout {
    /// Contribution length of each rank in bytes.
    pub inputs: Vec<usize>,
    pub streams: Vec<StreamLayout>,
}

impl ReorderLayout {
    /// One stream concatenating every contribution in rank order.
    pub fn gather(inputs: Vec<usize>, sink: Sink) -> Self {
        let pieces = inputs
            .iter()
            .enumerate()
            .map(|(r, &len)| Piece {
                rank: r as u32,
                offset: 0,
                len,
            })
            .collect();
        ReorderLayout {
            inputs,
            streams: vec![StreamLayout { pieces, sink }],
        }
    }

    /// `blocks[i][j]` is the length of the block rank `i` sends to rank `j`;
    /// rank `i` sends its blocks back to back in `j` order.
    pub fn alltoall(blocks: &[Vec<usize>]) -> Self {
        let n = blocks.len();
        let offsets: Vec<Vec<usize>> = blocks
            .iter()
            .map(|row| {
                row.iter()
                    .scan(0, |acc, &l| {
                        let o = *acc;
                        *acc += l;
                        Some(o)
                    })
                    .collect()
            })
            .collect();
        let streams = (0..n)
            .map(|j| StreamLayout {
                pieces: (0..n)
                    .map(|i| Piece {
                        rank: i as u32,
                        offset: offsets[i][j],
                        len: blocks[i][j],
                    })
                    .collect(),
                sink: Sink::Unicast(j as u32),
            })
            .collect();
        ReorderLayout {
            inputs: blocks.iter().map(|r| r.iter().sum()).collect(),
            streams,
        }
    }

    pub fn ranks(&self) -> usize {
        self.inputs.len()
    }
}

/// One packet leaving a stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Emit {
    pub stream: usize,
    pub seg: u32,
    /// Packets in the whole stream.
    pub total: u32,
    pub payload: Payload,
}

#[derive(Clone, Debug, Default)]
struct Cursor {
    piece: usize,
    /// Bytes of the current piece already moved to `pending`.
    off: usize,
    pending: Vec<u8>,
    pending_len: usize,
    next_seg: u32,
    done: bool,
}

#[derive(Clone, Debug)]
pub struct ReorderState {
    layout: Arc<ReorderLayout>,
    tag: u32,
    opaque: bool,
    bufs: Vec<Vec<u8>>,
    got: Vec<Vec<bool>>,
    /// Leading segments received without a gap.
    prefix: Vec<usize>,
    cursors: Vec<Cursor>,
}

impl ReorderState {
    pub fn new(layout: Arc<ReorderLayout>, tag: u32) -> Self {
        let got = layout
            .inputs
            .iter()
            .map(|&l| vec![false; packet_count(l, MAX_PAYLOAD)])
            .collect();
        let n = layout.ranks();
        let s = layout.streams.len();
        ReorderState {
            layout,
            tag,
            opaque: false,
            bufs: vec![Vec::new(); n],
            got,
            prefix: vec![0; n],
            cursors: vec![Cursor::default(); s],
        }
    }

    pub fn is_complete(&self) -> bool {
        self.cursors.iter().all(|c| c.done)
    }

    /// Every segment of every rank has arrived.
    pub fn all_received(&self) -> bool {
        self.got.iter().all(|g| g.iter().all(|&x| x))
    }

    fn avail(&self, rank: usize) -> usize {
        (self.prefix[rank] * MAX_PAYLOAD).min(self.layout.inputs[rank])
    }

    /// Stores segment `seg` of `rank` and returns every packet that became
    /// emittable.
    pub fn accept(&mut self, rank: u32, seg: u32, payload: Payload) -> Result<Vec<Emit>, DataplaneError> {
        let r = rank as usize;
        if r >= self.layout.ranks() {
            return Err(DataplaneError::UnknownContributor {
                from: Ingress::Rank(rank),
            });
        }
        let len = self.layout.inputs[r];
        let start = seg as usize * MAX_PAYLOAD;
        let want = len.saturating_sub(start).min(MAX_PAYLOAD);
        let slot = self.got[r].get(seg as usize).copied();
        match slot {
            None => return Err(DataplaneError::SlotOverflow { rank, seg }),
            Some(true) => {
                return Err(DataplaneError::DuplicateContribution {
                    from: Ingress::Rank(rank),
                    tag: self.tag,
                    seq: seg,
                })
            }
            Some(false) if payload.len() != want => return Err(DataplaneError::SlotOverflow { rank, seg }),
            Some(false) => {}
        }
        self.got[r][seg as usize] = true;
        match payload {
            Payload::Opaque(_) => self.opaque = true,
            Payload::Bytes(b) => {
                if self.bufs[r].len() < len {
                    self.bufs[r].resize(len, 0);
                }
                self.bufs[r][start..start + want].copy_from_slice(&b);
            }
        }
        while self.got[r].get(self.prefix[r]).copied() == Some(true) {
            self.prefix[r] += 1;
        }
        let mut out = Vec::new();
        for s in 0..self.cursors.len() {
            self.advance(s, &mut out);
        }
        Ok(out)
    }

    fn advance(&mut self, s: usize, out: &mut Vec<Emit>) {
        let layout = Arc::clone(&self.layout);
        let stream = &layout.streams[s];
        let total = stream.packets();
        if self.cursors[s].done {
            return;
        }
        loop {
            let c = &self.cursors[s];
            let Some(p) = stream.pieces.get(c.piece).copied() else {
                let c = &mut self.cursors[s];
                if c.pending_len > 0 || c.next_seg == 0 {
                    let payload = take(c, self.opaque, c.pending_len);
                    out.push(Emit {
                        stream: s,
                        seg: c.next_seg,
                        total,
                        payload,
                    });
                    c.next_seg += 1;
                }
                c.done = true;
                return;
            };
            let have = self.avail(p.rank as usize).min(p.offset + p.len);
            let from = p.offset + c.off;
            if have > from {
                let c = &mut self.cursors[s];
                if !self.opaque {
                    c.pending.extend_from_slice(&self.bufs[p.rank as usize][from..have]);
                }
                c.pending_len += have - from;
                c.off += have - from;
                while c.pending_len >= MAX_PAYLOAD {
                    let payload = take(c, self.opaque, MAX_PAYLOAD);
                    out.push(Emit {
                        stream: s,
                        seg: c.next_seg,
                        total,
                        payload,
                    });
                    c.next_seg += 1;
                }
            }
            let c = &mut self.cursors[s];
            if c.off < p.len {
                return;
            }
            c.piece += 1;
            c.off = 0;
        }
    }
}

fn take(c: &mut Cursor, opaque: bool, n: usize) -> Payload {
    c.pending_len -= n;
    if opaque {
        Payload::Opaque(n)
    } else {
        let rest = c.pending.split_off(n);
        Payload::Bytes(std::mem::replace(&mut c.pending, rest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes(v: &[u8]) -> Payload {
        Payload::Bytes(v.to_vec())
    }

    #[test]
    fn arrival_order_does_not_matter() {
        let l = Arc::new(ReorderLayout::gather(vec![1, 1], Sink::Multicast));
        let mut st = ReorderState::new(l, 0);
        assert!(st.accept(1, 0, bytes(&[20])).unwrap().is_empty());
        let out = st.accept(0, 0, bytes(&[10])).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].payload, bytes(&[10, 20]));
        assert!(st.is_complete());
    }

    #[test]
    fn three_small_payloads_make_one_packet() {
        let l = Arc::new(ReorderLayout::gather(vec![4; 3], Sink::Multicast));
        let mut st = ReorderState::new(l, 0);
        let mut out = Vec::new();
        for r in [2, 0, 1] {
            out.extend(st.accept(r, 0, bytes(&[r as u8; 4])).unwrap());
        }
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].payload.len(), 12);
        assert_eq!(out[0].total, 1);
    }

    #[test]
    fn three_thousand_bytes_make_three_packets() {
        let l = Arc::new(ReorderLayout::gather(vec![1000; 3], Sink::Multicast));
        let mut st = ReorderState::new(l, 0);
        let mut out = Vec::new();
        for r in 0..3 {
            out.extend(st.accept(r, 0, Payload::Opaque(1000)).unwrap());
        }
        let lens: Vec<usize> = out.iter().map(|e| e.payload.len()).collect();
        assert_eq!(lens, vec![1408, 1408, 184]);
        assert!(out.iter().all(|e| e.total == 3));
    }

    #[test]
    fn duplicates_and_overflow_rejected() {
        let l = Arc::new(ReorderLayout::gather(vec![2, 2], Sink::Multicast));
        let mut st = ReorderState::new(l, 0);
        st.accept(0, 0, bytes(&[1, 2])).unwrap();
        assert!(matches!(
            st.accept(0, 0, bytes(&[1, 2])),
            Err(DataplaneError::DuplicateContribution { .. })
        ));
        assert!(matches!(
            st.accept(1, 1, bytes(&[1, 2])),
            Err(DataplaneError::SlotOverflow { .. })
        ));
        assert!(matches!(
            st.accept(1, 0, bytes(&[1, 2, 3])),
            Err(DataplaneError::SlotOverflow { .. })
        ));
    }

    #[test]
    fn alltoall_transposes_blocks() {
        let blocks = vec![vec![1, 1], vec![1, 1]];
        let l = Arc::new(ReorderLayout::alltoall(&blocks));
        let mut st = ReorderState::new(l, 0);
        let mut out = st.accept(1, 0, bytes(&[10, 11])).unwrap();
        out.extend(st.accept(0, 0, bytes(&[0, 1])).unwrap());
        out.sort_by_key(|e| e.stream);
        assert_eq!(out[0].payload, bytes(&[0, 10]));
        assert_eq!(out[1].payload, bytes(&[1, 11]));
        assert_eq!(out[1].stream, 1);
    }

    #[test]
    fn empty_contributions_emit_one_empty_packet() {
        let l = Arc::new(ReorderLayout::gather(vec![0, 0], Sink::Multicast));
        let mut st = ReorderState::new(l, 0);
        let mut out = st.accept(0, 0, bytes(&[])).unwrap();
        out.extend(st.accept(1, 0, bytes(&[])).unwrap());
        assert_eq!(out.len(), 1);
        assert!(out[0].payload.is_empty());
    }
}
