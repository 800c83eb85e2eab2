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

//! Fused scenario sweeps: fused plan against the same stages run one by one
//! on the hosts.

use acis_dataplane::SwitchOptions;
use acis_fusion::{run_scenario, Scenario};
use acis_hostmpi::Communicator;
use acis_simnet::{CostParams, Network, SimOptions};

use crate::bench::{speedup, BenchRow};
use crate::config::{auto_topology, TopologyKind};
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq)]
pub struct FusedConfig {
    pub topology: TopologyKind,
    pub cost: CostParams,
    pub nodes: Vec<u32>,
    /// Bytes contributed per rank.
    pub sizes: Vec<u64>,
    /// Seeds random inputs checked against the oracle; `None` times opaque
    /// inputs only.
    pub seed: Option<u64>,
    pub max_events: u64,
}

impl Default for FusedConfig {
    fn default() -> Self {
        FusedConfig {
            topology: TopologyKind::Star,
            cost: CostParams::default(),
            nodes: vec![2],
            sizes: vec![4],
            seed: Some(1),
            max_events: 10_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    /// One row per (nodes, size): host columns hold the unfused run, ACiS
    /// columns the fused run.
    pub rows: Vec<BenchRow>,
    /// Every row was checked against the oracle.
    pub validated: bool,
}

/// Runs `scenario` over the configured grid. An oracle mismatch aborts with
/// `ScenarioValidationFailed`.
pub fn run_fused_scenario(scenario: Scenario, cfg: &FusedConfig) -> Result<ScenarioReport, HarnessError> {
    let mut rows = Vec::new();
    for &n in &cfg.nodes {
        let net = Network::new(auto_topology(cfg.topology, n), cfg.cost)
            .map_err(|e| HarnessError::Cell {
                collective: scenario.name().into(),
                nodes: n,
                size: 0,
                msg: e.to_string(),
            })?
            .with_options(SimOptions {
                max_events: cfg.max_events,
                ..SimOptions::default()
            });
        let comm = Communicator::world(1, n);
        for &size in &cfg.sizes {
            let elems = (size / 4) as u32;
            let o = run_scenario(scenario, &net, &comm, elems, cfg.seed, SwitchOptions::default())?;
            rows.push(BenchRow {
                collective: scenario.name().into(),
                nodes: n,
                size_bytes: size,
                host_latency: Some(o.unfused_latency),
                acis_latency: Some(o.fused_latency),
                speedup: speedup(o.unfused_latency, o.fused_latency),
                traffic_host_bytes: Some(o.unfused_link_bytes),
                traffic_acis_bytes: Some(o.fused_link_bytes),
                host_mean_latency: None,
                acis_mean_latency: None,
            });
        }
    }
    Ok(ScenarioReport {
        rows,
        validated: cfg.seed.is_some(),
    })
}
