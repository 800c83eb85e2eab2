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

use acis_cgra::CgraConfig;
use acis_core::wire::CollectiveKind;
use acis_core::{DType, DTypeKind, ReduceOp, Value};
use acis_dataplane::{run_acis, AcisOptions, AcisSwitch, SwitchOptions};
use acis_fusion::scenario::random_contributions;
use acis_fusion::{
    install_plan, oracle_fused, run_fused, run_plan_pair, run_scenario, run_unfused, CollectiveStage, FusedPlan,
    FusionError, MapStage, Scenario, Stage,
};
use acis_hostmpi::{Chunk, CollectiveCall, Communicator};
use acis_simnet::{CostParams, Network, TopologySpec};

fn star(n: u32) -> Network {
    Network::new(TopologySpec::StarWithAccel { leaves: n }, CostParams::default()).unwrap()
}

fn torus(n: u32) -> Network {
    let (dx, dy, dz) = match n {
        8 => (2, 2, 2),
        16 => (4, 2, 2),
        _ => (n, 1, 1),
    };
    Network::new(TopologySpec::Torus3D { dx, dy, dz }, CostParams::default()).unwrap()
}

fn vi(v: &[i32]) -> Value {
    Value::VecI32(v.to_vec())
}

fn vals(vs: &[Value]) -> Vec<Chunk> {
    vs.iter().cloned().map(Chunk::Val).collect()
}

#[test]
fn star_two_ranks_gather_scan_gather() {
    let plan = Scenario::AllgatherPrefixAllgather.plan(CgraConfig::default()).unwrap();
    let inputs = [vi(&[1]), vi(&[2])];
    let run = run_fused(
        &star(2),
        &Communicator::world(1, 2),
        &plan,
        &vals(&inputs),
        SwitchOptions::default(),
    )
    .unwrap();
    assert_eq!(run.results, vals(&[vi(&[1, 3, 1, 3]), vi(&[1, 3, 1, 3])]));
    assert_eq!(run.stats.recirculations, 2);
    assert!(run.stats.map_cycles > 0);
}

#[test]
fn intermediate_stages_never_reach_hosts() {
    let plan = Scenario::AllgatherPrefixAllgather.plan(CgraConfig::default()).unwrap();
    let inputs = random_contributions(4, 40, 3);
    let run = run_fused(
        &star(4),
        &Communicator::world(1, 4),
        &plan,
        &vals(&inputs),
        SwitchOptions::default(),
    )
    .unwrap();
    assert_eq!(run.trace.host_msgs_received, vec![1; 4]);
    assert_eq!(run.trace.host_msgs_sent, vec![1; 4]);
}

#[test]
fn degenerate_fusion_equals_plain_allreduce() {
    let st = CollectiveStage::new(CollectiveKind::Allreduce, ReduceOp::Sum, DTypeKind::VecI32);
    let plan = FusedPlan::single(4, st, CgraConfig::default()).unwrap();
    let inputs = random_contributions(3, 50, 9);
    let net = star(3);
    let comm = Communicator::world(1, 3);
    let fused = run_fused(&net, &comm, &plan, &vals(&inputs), SwitchOptions::default()).unwrap();
    let call = CollectiveCall::with_values(CollectiveKind::Allreduce, ReduceOp::Sum, DType::vec_i32(50), inputs);
    let plain = run_acis(&net, &comm, &call, AcisOptions::default()).unwrap();
    let plain: Vec<Chunk> = plain.results.into_iter().map(|r| r.unwrap().remove(0)).collect();
    assert_eq!(fused.results, plain);
}

#[test]
fn torus_eight_reduce_then_exchange() {
    let plan = Scenario::AllreduceAlltoall.plan(CgraConfig::default()).unwrap();
    let inputs = random_contributions(8, 37, 5);
    let run = run_fused(
        &torus(8),
        &Communicator::world(1, 8),
        &plan,
        &vals(&inputs),
        SwitchOptions::default(),
    )
    .unwrap();
    assert_eq!(run.results, vals(&oracle_fused(&plan, &inputs).unwrap()));
}

#[test]
fn unfused_baseline_agrees_with_oracle() {
    for sc in Scenario::ALL {
        let plan = sc.plan(CgraConfig::default()).unwrap();
        for n in [1, 3, 8] {
            let inputs = random_contributions(n, 21, n as u64);
            let run = run_unfused(
                &star(n as u32),
                &Communicator::world(1, n as u32),
                &plan,
                &vals(&inputs),
            )
            .unwrap();
            assert_eq!(run.results, vals(&oracle_fused(&plan, &inputs).unwrap()), "{sc} n={n}");
        }
    }
}

#[test]
fn install_counts_and_overflow() {
    let plan = Scenario::AllgatherPrefixAllgather.plan(CgraConfig::default()).unwrap();
    assert_eq!(plan.stages.len(), 3);
    let net = star(4);
    let comm = Communicator::world(1, 4);
    let mut sw = AcisSwitch::new(net.topo.n_vertices() as usize, SwitchOptions::default());
    let inst = install_plan(&mut sw, &net.topo, &comm, &plan, &[4; 4]).unwrap();
    assert_eq!(inst.plan_id, plan.plan_id);
    assert_eq!(sw.tables(inst.plane.root).len(), 1);
    let opts = SwitchOptions {
        table_capacity: 0,
        ..SwitchOptions::default()
    };
    let mut tiny = AcisSwitch::new(net.topo.n_vertices() as usize, opts);
    assert!(matches!(
        install_plan(&mut tiny, &net.topo, &comm, &plan, &[4; 4]),
        Err(FusionError::TableOverflow(0))
    ));
}

#[test]
fn corrupted_binary_fails_validation() {
    let cfg = CgraConfig::default();
    let mut plan = Scenario::AllgatherPrefixAllgather.plan(cfg).unwrap();
    let wrong = MapStage::from_source("elem i32\nout = scan_add(in0)", &cfg).unwrap();
    if let Stage::Map(m) = &mut plan.stages[1] {
        m.program = wrong.program;
    }
    let inputs = random_contributions(4, 33, 1);
    let e = run_plan_pair(
        &star(4),
        &Communicator::world(1, 4),
        &plan,
        Some(&inputs),
        0,
        SwitchOptions::default(),
    );
    match e {
        Err(FusionError::ScenarioValidationFailed { diff }) => assert!(diff.contains("rank 0")),
        other => panic!("expected a validation failure, got {other:?}"),
    }
}

#[test]
fn empty_contributions_roundtrip() {
    let plan = Scenario::AllgatherPrefixAllgather.plan(CgraConfig::default()).unwrap();
    let inputs = [vi(&[]), vi(&[]), vi(&[])];
    let run = run_fused(
        &star(3),
        &Communicator::world(1, 3),
        &plan,
        &vals(&inputs),
        SwitchOptions::default(),
    )
    .unwrap();
    assert_eq!(run.results, vals(&[vi(&[]), vi(&[]), vi(&[])]));
}

#[test]
fn fused_beats_unfused_on_both_scenarios() {
    for sc in Scenario::ALL {
        for (net, n) in [(star(2), 2), (torus(8), 8)] {
            let out = run_scenario(
                sc,
                &net,
                &Communicator::world(1, n),
                64,
                Some(7),
                SwitchOptions::default(),
            )
            .unwrap();
            assert!(out.validated);
            assert!(out.fused_latency < out.unfused_latency, "{sc} n={n}: {out:?}");
        }
    }
}

#[test]
fn allgatherv_counts_on_the_wire() {
    let mut st = CollectiveStage::new(CollectiveKind::Allgather, ReduceOp::Sum, DTypeKind::VecI32);
    st.counts = Some(vec![1, 3, 2]);
    let cfg = CgraConfig::default();
    let plan = FusedPlan {
        plan_id: 5,
        stages: vec![
            Stage::Collective(st),
            Stage::Map(MapStage::from_source(acis_fusion::PREFIX_SUM, &cfg).unwrap()),
        ],
        cgra: cfg,
    };
    let inputs = [vi(&[1]), vi(&[2, 3, 4]), vi(&[5, 6])];
    let run = run_fused(
        &star(3),
        &Communicator::world(1, 3),
        &plan,
        &vals(&inputs),
        SwitchOptions::default(),
    )
    .unwrap();
    assert_eq!(run.results, vals(&vec![vi(&[1, 3, 6, 10, 15, 21]); 3]));
    let bad = [vi(&[1]), vi(&[2]), vi(&[5, 6])];
    assert!(matches!(
        run_fused(
            &star(3),
            &Communicator::world(1, 3),
            &plan,
            &vals(&bad),
            SwitchOptions::default()
        ),
        Err(FusionError::Contribution(_))
    ));
}
