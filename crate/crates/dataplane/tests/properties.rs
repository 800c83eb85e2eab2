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

use std::sync::Arc;

use acis_core::wire::{CollectiveKind, PacketHeader};
use acis_core::{fold, DType, DTypeKind, ReduceOp, Value};
use acis_dataplane::aggregate::{AggKey, AggTable, Outcome};
use acis_dataplane::reorder::{ReorderLayout, ReorderState, Sink};
use acis_dataplane::{
    recirculate, run_acis, AcisOptions, AcisSwitch, CollectiveContext, ContextKey, DataplaneError, Ingress,
    SwitchOptions,
};
use acis_hostmpi::gen::random_value;
use acis_hostmpi::{oracle, run_host, run_host_with, CollectiveCall, Communicator};
use acis_simnet::{CostParams, Network, PacketMeta, Payload, SimOptions, SimPacket, TopologySpec, TraceLevel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn ctx(k: usize, dtype: DType) -> CollectiveContext {
    CollectiveContext {
        key: ContextKey::new(1, CollectiveKind::Allreduce),
        op: ReduceOp::Sum,
        dtype,
        children: (0..k as u32).map(Ingress::Rank).collect(),
        parent: None,
        multicast_targets: Vec::new(),
        root_rank: 0,
        members: Arc::new((0..k as u32).collect()),
        layout: None,
        plan: None,
    }
}

#[test]
fn permutation_count() {
    assert_eq!(permutations(5).len(), 120);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exactly_one_completion_per_key(k in 1usize..=5, seed in any::<u64>()) {
        let dtype = DType::vec_f32(5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<Value> = (0..k).map(|_| random_value(dtype, &mut rng)).collect();
        let want = Payload::Bytes(fold(ReduceOp::Sum, &dtype, &vals).unwrap().encode());
        let c = ctx(k, dtype);
        let key = AggKey { ctx: c.key, tag: 0, seq: 0 };
        for perm in permutations(k) {
            let mut t = AggTable::new(16, false);
            let mut done = Vec::new();
            for &i in &perm {
                let p = Payload::Bytes(vals[i].encode());
                if let Outcome::Complete(r) = t.aggregate(&c, key, Ingress::Rank(i as u32), p, 0).unwrap() {
                    done.push(r);
                }
            }
            prop_assert_eq!(done.len(), 1);
            prop_assert_eq!(&done[0], &want);
            prop_assert_eq!(t.completions, 1);
            // a replay of any contributor is rejected
            let again = t.aggregate(&c, key, Ingress::Rank(perm[0] as u32), Payload::Bytes(vals[0].encode()), 0);
            let is_dup = matches!(again, Err(DataplaneError::DuplicateContribution { .. }));
            prop_assert!(is_dup);
        }
    }

    #[test]
    fn reorder_output_ignores_arrival_order(k in 1usize..=5, lens in proptest::collection::vec(0usize..3000, 5)) {
        let lens = lens[..k].to_vec();
        let data: Vec<Vec<u8>> = lens.iter().enumerate().map(|(r, &l)| (0..l).map(|i| (i * 7 + r) as u8).collect()).collect();
        let want: Vec<u8> = data.concat();
        let layout = Arc::new(ReorderLayout::gather(lens.clone(), Sink::Multicast));
        for perm in permutations(k) {
            let mut st = ReorderState::new(Arc::clone(&layout), 0);
            let mut segs = Vec::new();
            for &r in &perm {
                let n_seg = lens[r].div_ceil(1408).max(1);
                for s in (0..n_seg).rev() {
                    let end = ((s + 1) * 1408).min(lens[r]);
                    let p = Payload::Bytes(data[r][s * 1408..end].to_vec());
                    segs.extend(st.accept(r as u32, s as u32, p).unwrap());
                }
            }
            prop_assert!(st.is_complete() && st.all_received());
            segs.sort_by_key(|e| e.seg);
            let got: Vec<u8> = segs.iter().flat_map(|e| e.payload.bytes().unwrap().to_vec()).collect();
            prop_assert_eq!(&got, &want);
            prop_assert!(segs.iter().all(|e| e.total as usize == want.len().div_ceil(1408).max(1)));
        }
    }
}

#[test]
fn jittered_arrivals_complete_once() {
    for seed in 0..8 {
        let params = CostParams::default();
        let net = Network::new(TopologySpec::StarWithAccel { leaves: 5 }, params)
            .unwrap()
            .with_options(SimOptions {
                jitter_seed: Some(seed),
                ..Default::default()
            });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dtype = DType::vec_f32(900);
        let vals = (0..5).map(|_| random_value(dtype, &mut rng)).collect();
        let call = CollectiveCall::with_values(CollectiveKind::Allreduce, ReduceOp::Sum, dtype, vals);
        let run = run_acis(&net, &Communicator::world(1, 5), &call, AcisOptions::default()).unwrap();
        assert_eq!(run.results, oracle(&call).unwrap());
        // 900 floats occupy three packets, each one key
        assert_eq!(run.stats.completions, 3);
    }
}

fn full(spec: TopologySpec) -> Network {
    Network::new(spec, CostParams::default())
        .unwrap()
        .with_options(SimOptions {
            trace_level: TraceLevel::Full,
            ..Default::default()
        })
}

#[test]
fn bypass_is_neutral() {
    let specs = [
        TopologySpec::StarWithAccel { leaves: 6 },
        TopologySpec::Torus3D { dx: 2, dy: 2, dz: 2 },
    ];
    for spec in specs {
        let net = full(spec);
        let n = net.topo.n_hosts();
        let comm = Communicator::world(4, n);
        for kind in [
            CollectiveKind::Allreduce,
            CollectiveKind::Allgather,
            CollectiveKind::Alltoall,
        ] {
            let call = CollectiveCall::opaque(kind, ReduceOp::Sum, DType::vec_i32(1), n, 5000);
            let plain = run_host(&net, &comm, &call, None).unwrap();
            let mut sw = AcisSwitch::new(net.topo.n_vertices() as usize, SwitchOptions::default());
            let acis = run_host_with(&net, &comm, &call, None, &mut sw).unwrap();
            assert_eq!(plain.trace, acis.trace, "{kind}");
            assert!(sw.stats.errors.is_empty());
        }
    }
}

#[test]
fn host_traffic_bypasses_installed_contexts() {
    // contexts for another communicator leave host-addressed traffic alone
    let net = full(TopologySpec::Torus3D { dx: 2, dy: 2, dz: 1 });
    let comm = Communicator::world(4, 4);
    let call = CollectiveCall::opaque(CollectiveKind::Allreduce, ReduceOp::Sum, DType::vec_i32(1), 4, 64);
    let plain = run_host(&net, &comm, &call, None).unwrap();
    let mut sw = AcisSwitch::new(net.topo.n_vertices() as usize, SwitchOptions::default());
    for v in net.topo.acis_vertices() {
        let mut c = ctx(1, DType::i32());
        c.key = ContextKey::new(4, CollectiveKind::Allreduce);
        sw.install(v, c).unwrap();
    }
    let acis = run_host_with(&net, &comm, &call, None, &mut sw).unwrap();
    assert_eq!(plain.trace, acis.trace);
}

fn probe(tag: u32, passes: u8) -> SimPacket {
    SimPacket {
        header: PacketHeader {
            tag,
            collective: CollectiveKind::Fused,
            ..Default::default()
        },
        payload: Payload::Opaque(0),
        meta: PacketMeta {
            msg_id: 0,
            msg_packets: 1,
            seg_index: 0,
            src_vertex: 0,
            dst_vertex: 0,
            hops: 0,
            passes,
        },
    }
}

#[test]
fn recirculation_advances_stages() {
    let mut p = probe(5, 0);
    recirculate(&mut p, 2, 16).unwrap();
    assert_eq!(acis_dataplane::stage_of(p.header.tag), 1);
    assert_eq!(p.header.tag & 0xFF_FFFF, 5);
    assert_eq!(p.meta.passes, 1);
    assert!(matches!(
        recirculate(&mut p, 2, 16),
        Err(DataplaneError::InvalidPlan(_))
    ));
    let mut q = probe(0, 16);
    assert_eq!(
        recirculate(&mut q, 40, 16),
        Err(DataplaneError::RecirculationLimitExceeded(16))
    );
}

#[test]
fn sparse_reduction_crosses_packet_boundaries() {
    let net = Network::new(TopologySpec::StarWithAccel { leaves: 3 }, CostParams::default()).unwrap();
    let dtype = DType::sparse_f32(400);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vals: Vec<Value> = (0..3).map(|_| random_value(dtype, &mut rng)).collect();
    assert!(vals.iter().any(|v| v.byte_len() > 1408));
    let call = CollectiveCall::with_values(CollectiveKind::Allreduce, ReduceOp::Sum, dtype, vals);
    let run = run_acis(&net, &Communicator::world(1, 3), &call, AcisOptions::default()).unwrap();
    assert_eq!(run.results, oracle(&call).unwrap());
    assert_eq!(
        run.results[0].as_ref().unwrap()[0].value().unwrap().kind(),
        DTypeKind::SparseF32
    );
}
