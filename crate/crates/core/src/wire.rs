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

//! Packet wire format: a fixed 32-byte little-endian header followed by up to
//! [`MAX_PAYLOAD`] payload bytes.

use thiserror::Error;

pub const HEADER_LEN: usize = 32;
pub const MAX_PAYLOAD: usize = 1408;
pub const MAGIC: u16 = 0xAC15;
pub const VERSION: u8 = 1;
/// `dst_rank` value meaning "route by the installed collective context".
pub const CONTEXT_DIRECTED: u32 = 0xFFFF_FFFF;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MsgKind {
    Data = 0,
    Ctrl = 1,
    Result = 2,
}

impl MsgKind {
    pub fn from_u8(b: u8) -> Option<Self> {
        Some(match b {
            0 => MsgKind::Data,
            1 => MsgKind::Ctrl,
            2 => MsgKind::Result,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CollectiveKind {
    Bcast = 0,
    Reduce = 1,
    Allreduce = 2,
    Gather = 3,
    Allgather = 4,
    Alltoall = 5,
    Fused = 6,
}

impl CollectiveKind {
    pub const ALL: [CollectiveKind; 7] = [
        CollectiveKind::Bcast,
        CollectiveKind::Reduce,
        CollectiveKind::Allreduce,
        CollectiveKind::Gather,
        CollectiveKind::Allgather,
        CollectiveKind::Alltoall,
        CollectiveKind::Fused,
    ];

    pub fn from_u16(v: u16) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CollectiveKind::Bcast => "bcast",
            CollectiveKind::Reduce => "reduce",
            CollectiveKind::Allreduce => "allreduce",
            CollectiveKind::Gather => "gather",
            CollectiveKind::Allgather => "allgather",
            CollectiveKind::Alltoall => "alltoall",
            CollectiveKind::Fused => "fused",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == s)
    }
}

impl std::fmt::Display for CollectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PacketHeader {
    pub version: u8,
    pub msg_kind: MsgKind,
    pub comm_id: u32,
    pub collective: CollectiveKind,
    pub op_id: u16,
    pub dtype_id: u16,
    pub src_rank: u32,
    pub dst_rank: u32,
    pub tag: u32,
    pub seq: u32,
    pub payload_len: u16,
}

impl Default for PacketHeader {
    fn default() -> Self {
        PacketHeader {
            version: VERSION,
            msg_kind: MsgKind::Data,
            comm_id: 0,
            collective: CollectiveKind::Bcast,
            op_id: 0,
            dtype_id: 0,
            src_rank: 0,
            dst_rank: CONTEXT_DIRECTED,
            tag: 0,
            seq: 0,
            payload_len: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLarge(usize),
    #[error("header declares {declared} payload bytes, {actual} supplied")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("bad magic {0:#06x}")]
    BadMagic(u16),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("truncated packet: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("unknown msg_kind {0}")]
    UnknownMsgKind(u8),
    #[error("unknown collective {0}")]
    UnknownCollective(u16),
    #[error("segment size {0} outside 1..={MAX_PAYLOAD}")]
    InvalidSegmentSize(usize),
}

/// Serializes `header` and `payload`; `header.payload_len` must equal the
/// payload length.
pub fn encode_packet(header: &PacketHeader, payload: &[u8]) -> Result<Vec<u8>, WireError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(payload.len()));
    }
    if header.payload_len as usize != payload.len() {
        return Err(WireError::LengthMismatch {
            declared: header.payload_len as usize,
            actual: payload.len(),
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC.to_le_bytes());
    out.push(header.version);
    out.push(header.msg_kind as u8);
    out.extend_from_slice(&header.comm_id.to_le_bytes());
    out.extend_from_slice(&(header.collective as u16).to_le_bytes());
    out.extend_from_slice(&header.op_id.to_le_bytes());
    out.extend_from_slice(&header.dtype_id.to_le_bytes());
    out.extend_from_slice(&header.src_rank.to_le_bytes());
    out.extend_from_slice(&header.dst_rank.to_le_bytes());
    out.extend_from_slice(&header.tag.to_le_bytes());
    out.extend_from_slice(&header.seq.to_le_bytes());
    out.extend_from_slice(&header.payload_len.to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);
    out.extend_from_slice(payload);
    Ok(out)
}

fn u16_at(b: &[u8], o: usize) -> u16 {
    u16::from_le_bytes([b[o], b[o + 1]])
}

fn u32_at(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]])
}

/// Parses a packet; trailing bytes past the declared payload are ignored.
pub fn parse_packet(bytes: &[u8]) -> Result<(PacketHeader, &[u8]), WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated {
            needed: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let magic = u16_at(bytes, 0);
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let version = bytes[2];
    if version != VERSION {
        return Err(WireError::BadVersion(version));
    }
    let msg_kind = MsgKind::from_u8(bytes[3]).ok_or(WireError::UnknownMsgKind(bytes[3]))?;
    let coll = u16_at(bytes, 8);
    let collective = CollectiveKind::from_u16(coll).ok_or(WireError::UnknownCollective(coll))?;
    let payload_len = u16_at(bytes, 30);
    if payload_len as usize > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(payload_len as usize));
    }
    let needed = HEADER_LEN + payload_len as usize;
    if bytes.len() < needed {
        return Err(WireError::Truncated {
            needed,
            got: bytes.len(),
        });
    }
    let header = PacketHeader {
        version,
        msg_kind,
        comm_id: u32_at(bytes, 4),
        collective,
        op_id: u16_at(bytes, 10),
        dtype_id: u16_at(bytes, 12),
        src_rank: u32_at(bytes, 14),
        dst_rank: u32_at(bytes, 18),
        tag: u32_at(bytes, 22),
        seq: u32_at(bytes, 26),
        payload_len,
    };
    Ok((header, &bytes[HEADER_LEN..needed]))
}

/// Splits `msg` into `(seq, chunk)` pairs of at most `seg_size` bytes.
pub fn segment_message(msg: &[u8], seg_size: usize) -> Result<Vec<(u32, &[u8])>, WireError> {
    if seg_size == 0 || seg_size > MAX_PAYLOAD {
        return Err(WireError::InvalidSegmentSize(seg_size));
    }
    Ok(msg.chunks(seg_size).enumerate().map(|(i, c)| (i as u32, c)).collect())
}

/// Number of packets a message of `len` bytes occupies (at least one).
pub fn packet_count(len: usize, seg_size: usize) -> usize {
    len.div_ceil(seg_size).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_packet_roundtrip() {
        let payload: Vec<u8> = (0..MAX_PAYLOAD).map(|i| (i * 7) as u8).collect();
        let h = PacketHeader {
            msg_kind: MsgKind::Result,
            comm_id: 9,
            collective: CollectiveKind::Allreduce,
            op_id: 3,
            dtype_id: 4,
            src_rank: 5,
            dst_rank: 6,
            tag: 0xDEAD,
            seq: 77,
            payload_len: MAX_PAYLOAD as u16,
            ..Default::default()
        };
        let bytes = encode_packet(&h, &payload).unwrap();
        assert_eq!(bytes.len(), 1440);
        assert_eq!(&bytes[0..2], &[0x15, 0xAC]);
        let (h2, p2) = parse_packet(&bytes).unwrap();
        assert_eq!(h2, h);
        assert_eq!(p2, &payload[..]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            parse_packet(&[0u8; 31]),
            Err(WireError::Truncated { needed: 32, got: 31 })
        );
        let h = PacketHeader {
            payload_len: 4,
            ..Default::default()
        };
        let mut bytes = encode_packet(&h, &[1, 2, 3, 4]).unwrap();
        assert_eq!(
            parse_packet(&bytes[..34]),
            Err(WireError::Truncated { needed: 36, got: 34 })
        );
        bytes[2] = 2;
        assert_eq!(parse_packet(&bytes), Err(WireError::BadVersion(2)));
        bytes[0] = 0;
        assert!(matches!(parse_packet(&bytes), Err(WireError::BadMagic(_))));
        assert_eq!(
            encode_packet(&h, &[0; 3]),
            Err(WireError::LengthMismatch { declared: 4, actual: 3 })
        );
        assert_eq!(encode_packet(&h, &[0; 1409]), Err(WireError::PayloadTooLarge(1409)));
    }

    #[test]
    fn segmentation() {
        let msg = vec![1u8; 4216];
        let segs = segment_message(&msg, MAX_PAYLOAD).unwrap();
        let lens: Vec<usize> = segs.iter().map(|s| s.1.len()).collect();
        assert_eq!(lens, vec![1408, 1408, 1400]);
        assert_eq!(segs.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(segment_message(&[], 8).unwrap().is_empty());
        assert!(segment_message(&msg, 0).is_err());
        assert!(segment_message(&msg, 1409).is_err());
        assert_eq!(packet_count(0, 1408), 1);
        assert_eq!(packet_count(4216, 1408), 3);
    }
}
