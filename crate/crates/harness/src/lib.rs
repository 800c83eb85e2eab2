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

//! Benchmark sweeps, fused scenarios and CSV output.

pub mod bench;
pub mod config;
pub mod csvio;
pub mod fused;
pub mod values;

use acis_simnet::config::ConfigError;
use thiserror::Error;

pub use bench::{run_benchmark, run_cell, BenchRow};
pub use config::{auto_topology, parse_bench_config, BenchConfig, Mode, TopologyKind};
pub use csvio::{emit_csv, fmt_sig4, read_csv, write_csv};
pub use fused::{run_fused_scenario, FusedConfig, ScenarioReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{collective} n={nodes} size={size}: {msg}")]
    Cell {
        collective: String,
        nodes: u32,
        size: u64,
        msg: String,
    },
    #[error(transparent)]
    Fusion(#[from] acis_fusion::FusionError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 for validation
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Fusion(acis_fusion::FusionError::ScenarioValidationFailed { .. }) => 3,
            _ => 1,
        }
    }
}
