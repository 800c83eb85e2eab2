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

use acis_core::wire::PacketHeader;
use acis_simnet::*;
use proptest::prelude::*;

struct Unicast {
    pairs: Vec<(VertexId, VertexId, usize)>,
    data: bool,
}

impl HostLogic for Unicast {
    fn on_start(&mut self, sim: &mut Sim, host: VertexId) {
        for &(s, d, len) in &self.pairs {
            if s == host {
                let payload = if self.data {
                    Payload::Bytes((0..len).map(|i| i as u8).collect())
                } else {
                    Payload::Opaque(len)
                };
                sim.send_message(s, d, PacketHeader::default(), payload).unwrap();
            }
        }
    }

    fn on_message(&mut self, sim: &mut Sim, host: VertexId, _msg: Message) {
        sim.mark_complete(host);
    }
}

fn star(n: u32) -> Arc<Topology> {
    Arc::new(Topology::build(TopologySpec::StarWithAccel { leaves: n }).unwrap())
}

fn full() -> SimOptions {
    SimOptions {
        trace_level: TraceLevel::Full,
        ..Default::default()
    }
}

fn run(topo: Arc<Topology>, pairs: Vec<(u32, u32, usize)>, opts: SimOptions) -> Trace {
    let mut sim = Sim::new(topo, CostParams::default(), opts).unwrap();
    sim.run(&mut Unicast { pairs, data: true }, &mut PlainRouter).unwrap();
    sim.into_trace()
}

#[test]
fn single_packet_closed_form() {
    let p = CostParams::default();
    let t = run(star(2), vec![(0, 1, 1408)], SimOptions::default());
    // independent oracle: exact integer arithmetic on the published constants
    let ser = (1440u128 * 8 * 1_000_000_000_000).div_ceil(95_900_000_000) as u64;
    let expected = 15_700_000 + 2 * (52_000 + ser) + 64_000 + 15_700_000;
    assert_eq!(t.completion[1], Some(expected));
    assert_eq!(
        expected,
        p.endpoint_send_cost()
            + 2 * p.link_delay(1440, LinkKind::HostToSwitch)
            + p.switch_latency()
            + p.endpoint_recv_cost()
    );
}

#[test]
fn empty_run_is_empty_trace() {
    let t = run(star(2), vec![], full());
    assert_eq!(t.events_processed, 0);
    assert!(t.events.is_empty());
    assert_eq!(t.total_link_bytes(), 0);
}

#[test]
fn runs_are_deterministic() {
    let topo = Arc::new(Topology::build(TopologySpec::Torus3D { dx: 2, dy: 2, dz: 2 }).unwrap());
    let pairs: Vec<_> = (0..8).map(|i| (i, (i + 3) % 8, 5000)).collect();
    let a = run(topo.clone(), pairs.clone(), full());
    let b = run(topo, pairs, full());
    assert_eq!(a, b);
    let mut csv_a = Vec::new();
    a.write_csv(&mut csv_a).unwrap();
    assert!(String::from_utf8(csv_a)
        .unwrap()
        .starts_with("time_ps,kind,vertex,packet_comm,packet_seq,link_bytes\n"));
}

#[test]
fn jitter_is_seeded() {
    let opts = |s| SimOptions {
        jitter_seed: Some(s),
        ..Default::default()
    };
    let a = run(star(3), vec![(0, 1, 10), (2, 1, 10)], opts(7));
    let b = run(star(3), vec![(0, 1, 10), (2, 1, 10)], opts(7));
    let plain = run(star(3), vec![(0, 1, 10), (2, 1, 10)], SimOptions::default());
    assert_eq!(a, b);
    assert_ne!(a.completion, plain.completion);
}

#[test]
fn livelock_bound() {
    let mut sim = Sim::new(
        star(2),
        CostParams::default(),
        SimOptions {
            max_events: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let r = sim.run(
        &mut Unicast {
            pairs: vec![(0, 1, 10_000)],
            data: false,
        },
        &mut PlainRouter,
    );
    assert_eq!(r, Err(SimError::LivelockDetected(3)));
}

#[test]
fn reassembles_segmented_payloads() {
    let mut sim = Sim::new(star(2), CostParams::default(), SimOptions::default()).unwrap();
    let mut hosts = RecordingHosts::default();
    struct Both<'a>(&'a mut RecordingHosts);
    impl HostLogic for Both<'_> {
        fn on_start(&mut self, sim: &mut Sim, host: VertexId) {
            if host == 0 {
                let b: Vec<u8> = (0..4216).map(|i| (i % 251) as u8).collect();
                sim.send_message(0, 1, PacketHeader::default(), Payload::Bytes(b))
                    .unwrap();
            }
        }
        fn on_message(&mut self, sim: &mut Sim, host: VertexId, msg: Message) {
            self.0.on_message(sim, host, msg)
        }
    }
    sim.run(&mut Both(&mut hosts), &mut PlainRouter).unwrap();
    let (_, _, msg) = &hosts.received[0];
    assert_eq!(msg.packets, 3);
    let expected: Vec<u8> = (0..4216).map(|i| (i % 251) as u8).collect();
    assert_eq!(msg.payload, Payload::Bytes(expected));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hops_bytes_and_conservation(
        flows in prop::collection::vec((0u32..16, 0u32..16, 0usize..5000), 1..8)
    ) {
        let topo = Arc::new(Topology::build(TopologySpec::Torus3D { dx: 4, dy: 2, dz: 2 }).unwrap());
        let flows: Vec<_> = flows.into_iter().filter(|(s, d, _)| s != d).collect();
        let t = run(topo.clone(), flows.clone(), full());
        // conservation
        prop_assert_eq!(t.packets_injected, t.packets_delivered + t.packets_dropped);
        prop_assert_eq!(t.packets_dropped, 0);
        // hop fidelity
        for h in &t.hops {
            prop_assert_eq!(h.hops as usize, topo.route(h.src, h.dst).unwrap().len());
        }
        // byte counters: sum over flows of per-packet wire size times path length
        let mut expected = vec![0u64; topo.links().len()];
        for &(s, d, len) in &flows {
            let n = len.div_ceil(1408).max(1);
            let wire = (32 * n + len) as u64;
            for l in topo.route(s, d).unwrap() {
                expected[l as usize] += wire;
            }
        }
        prop_assert_eq!(&t.link_bytes, &expected);
        // event times are non-decreasing
        prop_assert!(t.events.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn torus_route_length_is_torus_distance(a in 0u32..128, b in 0u32..128) {
        prop_assume!(a != b);
        let topo = Topology::build(TopologySpec::Torus3D { dx: 4, dy: 4, dz: 8 }).unwrap();
        let (sa, sb) = (topo.attached_switch(a), topo.attached_switch(b));
        let (ca, cb) = (topo.torus_coords(sa), topo.torus_coords(sb));
        let dist: u32 = [4u32, 4, 8]
            .iter()
            .enumerate()
            .map(|(d, &k)| {
                let f = (cb[d] + k - ca[d]) % k;
                f.min(k - f)
            })
            .sum();
        prop_assert_eq!(topo.route(sa, sb).unwrap().len() as u32, dist);
        prop_assert_eq!(topo.route(a, b).unwrap().len() as u32, dist + 2);
    }
}
