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

//! The in-switch collective pipeline.
//!
//! A switch parses each packet addressed to it, looks up the collective
//! context installed for its communicator, then aggregates, reorders, runs a
//! CGRA map stage or passes the packet through, and finally multicasts or
//! forwards the result. Packets without a context, or addressed elsewhere,
//! are routed exactly like a plain switch would.

pub mod aggregate;
pub mod context;
pub mod control;
pub mod driver;
pub mod multicast;
pub mod plan;
pub mod reorder;
pub mod switch;

use acis_core::wire::CollectiveKind;
use acis_core::ValueError;
use acis_hostmpi::HostError;
use acis_simnet::{SimError, VertexId};
use thiserror::Error;

pub use aggregate::{AggKey, AggTable, Outcome};
pub use context::{CollectiveContext, ContextKey, ContextTables, Egress, Ingress, DEFAULT_TABLE_CAPACITY};
pub use control::{acis_of, install_collective, tree_root, ControlPlane, InstallSpec};
pub use driver::{run_acis, run_plan, AcisOptions, AcisRun, HostPlan};
pub use multicast::{multicast, multicast_each};
pub use plan::{SwitchPlan, SwitchStage};
pub use reorder::{ReorderLayout, ReorderState, Sink};
pub use switch::{
    recirculate, stage_of, with_stage, AcisSwitch, SwitchOptions, SwitchStats, DEFAULT_RECIRCULATION_CAP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataplaneError {
    #[error("no context for comm {comm_id} {collective}")]
    NoContext { comm_id: u32, collective: CollectiveKind },
    #[error("duplicate contribution from {from:?} for tag {tag} seq {seq}")]
    DuplicateContribution { from: Ingress, tag: u32, seq: u32 },
    #[error("{from:?} is not a contributor of this context")]
    UnknownContributor { from: Ingress },
    #[error("segment {seg} of rank {rank} exceeds its slot")]
    SlotOverflow { rank: u32, seg: u32 },
    #[error("multicast target list is empty")]
    EmptyTargetList,
    #[error("state table full ({0} keys)")]
    TableOverflow(usize),
    #[error("recirculation limit of {0} passes exceeded")]
    RecirculationLimitExceeded(u8),
    #[error("invalid context at vertex {vertex}: {reason}")]
    InvalidContext { vertex: VertexId, reason: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("map stage failed: {0}")]
    Map(String),
    #[error(transparent)]
    Host(#[from] HostError),
    #[error("rank {0} received no result")]
    Incomplete(u32),
}

impl From<SimError> for DataplaneError {
    fn from(e: SimError) -> Self {
        DataplaneError::Host(HostError::Sim(e))
    }
}
