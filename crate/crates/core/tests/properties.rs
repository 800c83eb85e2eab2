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

use acis_core::wire::packet_count;
use acis_core::*;
use proptest::prelude::*;

fn header() -> impl Strategy<Value = PacketHeader> {
    (
        0u8..3,
        any::<u32>(),
        0u16..7,
        any::<u16>(),
        any::<u16>(),
        any::<u32>(),
        any::<u32>(),
        any::<u32>(),
        any::<u32>(),
    )
        .prop_map(|(k, comm, c, op, dt, src, dst, tag, seq)| PacketHeader {
            version: wire::VERSION,
            msg_kind: MsgKind::from_u8(k).unwrap(),
            comm_id: comm,
            collective: CollectiveKind::from_u16(c).unwrap(),
            op_id: op,
            dtype_id: dt,
            src_rank: src,
            dst_rank: dst,
            tag,
            seq,
            payload_len: 0,
        })
}

fn sparse() -> impl Strategy<Value = Vec<(u32, f32)>> {
    prop::collection::btree_map(0u32..64, -100i16..100, 0..12)
        .prop_map(|m| m.into_iter().map(|(i, v)| (i, v as f32)).collect())
}

proptest! {
    #[test]
    fn codec_roundtrip(h in header(), payload in prop::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD)) {
        let h = PacketHeader { payload_len: payload.len() as u16, ..h };
        let bytes = encode_packet(&h, &payload).unwrap();
        prop_assert_eq!(bytes.len(), HEADER_LEN + payload.len());
        let (h2, p2) = parse_packet(&bytes).unwrap();
        prop_assert_eq!(h2, h);
        prop_assert_eq!(p2, &payload[..]);
    }

    #[test]
    fn segmentation_reassembles(msg in prop::collection::vec(any::<u8>(), 0..6000), seg in 1usize..=MAX_PAYLOAD) {
        let segs = segment_message(&msg, seg).unwrap();
        prop_assert_eq!(segs.len(), msg.len().div_ceil(seg));
        if !msg.is_empty() {
            prop_assert_eq!(segs.len(), packet_count(msg.len(), seg));
        }
        let mut joined = Vec::new();
        for (i, (s, chunk)) in segs.iter().enumerate() {
            prop_assert_eq!(*s as usize, i);
            prop_assert!(chunk.len() <= seg && !chunk.is_empty());
            joined.extend_from_slice(chunk);
        }
        prop_assert_eq!(joined, msg);
    }

    #[test]
    fn int_ops_associative_commutative(
        a in prop::collection::vec(any::<i32>(), 5),
        b in prop::collection::vec(any::<i32>(), 5),
        c in prop::collection::vec(any::<i32>(), 5),
        op in prop::sample::select(vec![ReduceOp::Sum, ReduceOp::Max, ReduceOp::Min, ReduceOp::Prod]),
    ) {
        let d = DType::vec_i32(5);
        let (a, b, c) = (Value::VecI32(a), Value::VecI32(b), Value::VecI32(c));
        let ab = apply_op(op, &d, &a, &b).unwrap();
        prop_assert_eq!(&ab, &apply_op(op, &d, &b, &a).unwrap());
        let l = apply_op(op, &d, &ab, &c).unwrap();
        let r = apply_op(op, &d, &a, &apply_op(op, &d, &b, &c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn sparse_acc_associative_commutative(a in sparse(), b in sparse(), c in sparse()) {
        // small integral values keep f32 sums exact
        let d = DType::sparse_f32(0);
        let (a, b, c) = (Value::SparseF32(a), Value::SparseF32(b), Value::SparseF32(c));
        let op = ReduceOp::SparseAcc;
        let ab = apply_op(op, &d, &a, &b).unwrap();
        prop_assert!(ab.is_well_formed());
        prop_assert_eq!(&ab, &apply_op(op, &d, &b, &a).unwrap());
        let l = apply_op(op, &d, &ab, &c).unwrap();
        let r = apply_op(op, &d, &a, &apply_op(op, &d, &b, &c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn value_codec_roundtrip(v in prop::collection::vec(any::<f32>(), 0..40), s in sparse()) {
        let dense = Value::VecF32(v);
        prop_assert_eq!(Value::decode(DTypeKind::VecF32, &dense.encode()).unwrap(), dense);
        let sp = Value::SparseF32(s);
        prop_assert_eq!(Value::decode(DTypeKind::SparseF32, &sp.encode()).unwrap(), sp);
    }

    #[test]
    fn prefix_sum_last_is_fold(v in prop::collection::vec(any::<i32>(), 1..30)) {
        let d = DType::vec_i32(v.len() as u32);
        let Value::VecI32(p) = prefix_sum(&d, &Value::VecI32(v.clone())).unwrap() else { unreachable!() };
        prop_assert_eq!(*p.last().unwrap(), v.iter().fold(0i32, |s, x| s.wrapping_add(*x)));
    }
}
