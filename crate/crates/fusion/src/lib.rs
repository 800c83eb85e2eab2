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

//! Fused collective plans: chains of collective and map stages that run
//! inside the dataplane, with intermediate results never reaching a host.

pub mod file;
pub mod oracle;
pub mod plan;
pub mod run;
pub mod scenario;

use acis_cgra::mapc::CompileError;
use acis_dataplane::DataplaneError;
use acis_hostmpi::HostError;
use thiserror::Error;

pub use file::{load_plan_file, parse_plan_file, PlanFileError};
pub use oracle::oracle_fused;
pub use plan::{CollectiveStage, FusedPlan, MapStage, Stage};
pub use run::{install_plan, run_fused, run_unfused, FusedRun, Installed, UnfusedRun};
pub use scenario::{random_contributions, run_plan_pair, run_scenario, Scenario, ScenarioOutcome, PREFIX_SUM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("dtype chain mismatch: {0}")]
    DtypeChainMismatch(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("context table full ({0} entries)")]
    TableOverflow(usize),
    #[error("contribution does not conform: {0}")]
    Contribution(String),
    #[error("map stage {stage}: {msg}")]
    Map { stage: usize, msg: String },
    #[error("rank {rank} received {received} messages, expected 1")]
    EndpointTraversal { rank: u32, received: u64 },
    #[error("scenario validation failed:\n{diff}")]
    ScenarioValidationFailed { diff: String },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Dataplane(DataplaneError),
    #[error(transparent)]
    Host(#[from] HostError),
}

impl From<DataplaneError> for FusionError {
    fn from(e: DataplaneError) -> Self {
        match e {
            DataplaneError::TableOverflow(n) => FusionError::TableOverflow(n),
            e => FusionError::Dataplane(e),
        }
    }
}
