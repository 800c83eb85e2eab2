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

use acis_cgra::{CgraConfig, Elem};
use acis_core::wire::CollectiveKind;
use acis_core::{DType, DTypeKind, ReduceOp, Value};
use acis_dataplane::SwitchOptions;
use acis_fusion::{oracle_fused, run_fused, CollectiveStage, FusedPlan, MapStage, Stage};
use acis_hostmpi::gen::random_value;
use acis_hostmpi::{Chunk, Communicator};
use acis_simnet::{CostParams, Network, TopologySpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAPS: [&str; 5] = [
    "out = in0",
    "out = in0 * 3 + 1",
    "out = max(in0, 0) - min(in0, 5)",
    "out = broadcast(reduce_add(in0))",
    "out = scan_add(in0) + state\nstate = broadcast(reduce_add(in0)) + state",
];

#[derive(Clone, Debug)]
enum Gene {
    Coll(u8, u8),
    Map(usize),
}

fn gene() -> impl Strategy<Value = Gene> {
    prop_oneof![
        (0u8..4, 0u8..3).prop_map(|(k, o)| Gene::Coll(k, o)),
        (0..MAPS.len()).prop_map(Gene::Map),
    ]
}

fn build(first: (u8, u8), rest: &[Gene], elem: Elem, n: u32, root: u32) -> FusedPlan {
    let cfg = CgraConfig::default();
    let kind = match elem {
        Elem::I32 => DTypeKind::VecI32,
        Elem::F32 => DTypeKind::VecF32,
    };
    let mut gathers = 0;
    // after an alltoall ranks may hold different lengths
    let mut ragged = false;
    let mut coll = |k: u8, o: u8| {
        let mut kind_ = [
            CollectiveKind::Allreduce,
            CollectiveKind::Allgather,
            CollectiveKind::Alltoall,
            CollectiveKind::Bcast,
        ][k as usize];
        // bound growth: one allgather at most
        if kind_ == CollectiveKind::Allgather {
            gathers += 1;
            if gathers > 1 {
                kind_ = CollectiveKind::Alltoall;
            }
        }
        if kind_ == CollectiveKind::Allreduce && ragged {
            kind_ = CollectiveKind::Bcast;
        }
        ragged = match kind_ {
            CollectiveKind::Alltoall => true,
            CollectiveKind::Allreduce => ragged,
            _ => false,
        };
        let mut st = CollectiveStage::new(kind_, [ReduceOp::Sum, ReduceOp::Max, ReduceOp::Min][o as usize], kind);
        st.root = root % n;
        Stage::Collective(st)
    };
    let mut stages = vec![coll(first.0, first.1)];
    for g in rest {
        stages.push(match g {
            Gene::Coll(k, o) => coll(*k, *o),
            Gene::Map(i) => {
                Stage::Map(MapStage::from_source(&format!("elem {}\n{}", elem.name(), MAPS[*i]), &cfg).unwrap())
            }
        });
    }
    FusedPlan {
        plan_id: 11,
        stages,
        cgra: cfg,
    }
}

fn net(n: u32, torus: bool) -> Network {
    let spec = match (torus, n) {
        (true, 4) => TopologySpec::Torus3D { dx: 4, dy: 1, dz: 1 },
        (true, 8) => TopologySpec::Torus3D { dx: 2, dy: 2, dz: 2 },
        _ => TopologySpec::StarWithAccel { leaves: n },
    };
    Network::new(spec, CostParams::default()).unwrap()
}

fn check(plan: &FusedPlan, n: u32, torus: bool, elem: Elem, len: u32, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = match elem {
        Elem::I32 => DType::vec_i32(len),
        Elem::F32 => DType::vec_f32(len),
    };
    let inputs: Vec<Value> = (0..n).map(|_| random_value(dt, &mut rng)).collect();
    let want = oracle_fused(plan, &inputs).unwrap();
    let chunks: Vec<Chunk> = inputs.into_iter().map(Chunk::Val).collect();
    let run = run_fused(
        &net(n, torus),
        &Communicator::world(2, n),
        plan,
        &chunks,
        SwitchOptions::default(),
    )
    .unwrap();
    let want: Vec<Chunk> = want.into_iter().map(Chunk::Val).collect();
    prop_assert_eq!(run.results, want);
    prop_assert_eq!(run.trace.host_msgs_received, vec![1; n as usize]);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn integer_plans_match_oracle(
        first in (0u8..4, 0u8..3),
        rest in prop::collection::vec(gene(), 1..4),
        n in 1u32..=8,
        torus in any::<bool>(),
        len in 0u32..=64,
        root in 0u32..8,
        seed in any::<u64>(),
    ) {
        let plan = build(first, &rest, Elem::I32, n, root);
        check(&plan, n, torus, Elem::I32, len, seed)?;
    }

    #[test]
    fn float_plans_match_oracle_on_star(
        first in (0u8..4, 0u8..3),
        rest in prop::collection::vec(gene(), 1..4),
        n in 1u32..=8,
        len in 0u32..=64,
        root in 0u32..8,
        seed in any::<u64>(),
    ) {
        let plan = build(first, &rest, Elem::F32, n, root);
        check(&plan, n, false, Elem::F32, len, seed)?;
    }
}
