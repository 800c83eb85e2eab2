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

//! Deterministic discrete-event network simulation: topologies, routing, the
//! calibrated cost model and the event engine.

pub mod config;
pub mod cost;
pub mod engine;
pub mod topology;
pub mod trace;

pub use cost::{CostParams, Time};
pub use engine::{
    HostLogic, Message, Network, PacketMeta, Payload, PlainRouter, RecordingHosts, Sim, SimError, SimOptions,
    SimPacket, SwitchLogic,
};
pub use topology::{LinkId, LinkKind, TopoError, Topology, TopologySpec, VertexId, VertexKind};
pub use trace::{EventKind, Trace, TraceLevel};
