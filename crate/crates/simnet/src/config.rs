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

//! `[topology]` and `[cost]` sections of the TOML configuration file.
//!
//! ```toml
//! [topology]
//! kind = "torus"      # or "star"
//! dims = [4, 4, 8]    # torus only
//! leaves = 2          # star only
//!
//! [cost]
//! mpi_overhead_us = 14.8
//! max_bandwidth_gbps = 95.9
//! pcie_latency_us = 0.9
//! fpga_to_fpga_latency_us = 0.44
//! port_to_port_latency_ns = 52
//! switch_clock_mhz = 250
//! pipeline_depth_cycles = 16
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostParams;
use crate::topology::TopologySpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// Converts a TOML error into a diagnostic with a 1-based line and column.
pub fn toml_error(text: &str, err: &toml::de::Error) -> ConfigError {
    let (line, col) = match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, col)
        }
        None => (0, 0),
    };
    ConfigError::Parse {
        line,
        col,
        msg: err.message().to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub kind: String,
    #[serde(default)]
    pub dims: Option<[u32; 3]>,
    #[serde(default)]
    pub leaves: Option<u32>,
}

impl TopologySection {
    pub fn to_spec(&self) -> Result<TopologySpec, ConfigError> {
        match (self.kind.as_str(), self.dims, self.leaves) {
            ("torus", Some([dx, dy, dz]), None) => Ok(TopologySpec::Torus3D { dx, dy, dz }),
            ("star", None, Some(leaves)) => Ok(TopologySpec::StarWithAccel { leaves }),
            ("torus", _, _) => Err(ConfigError::Invalid("torus needs `dims` and no `leaves`".into())),
            ("star", _, _) => Err(ConfigError::Invalid("star needs `leaves` and no `dims`".into())),
            (k, _, _) => Err(ConfigError::Invalid(format!("unknown topology kind `{k}`"))),
        }
    }

    pub fn from_spec(spec: TopologySpec) -> Self {
        match spec {
            TopologySpec::Torus3D { dx, dy, dz } => TopologySection {
                kind: "torus".into(),
                dims: Some([dx, dy, dz]),
                leaves: None,
            },
            TopologySpec::StarWithAccel { leaves } => TopologySection {
                kind: "star".into(),
                dims: None,
                leaves: Some(leaves),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub mpi_overhead_us: f64,
    pub max_bandwidth_gbps: f64,
    pub pcie_latency_us: f64,
    pub fpga_to_fpga_latency_us: f64,
    pub port_to_port_latency_ns: f64,
    pub switch_clock_mhz: f64,
    pub pipeline_depth_cycles: u64,
}

impl Default for CostSection {
    fn default() -> Self {
        CostSection {
            mpi_overhead_us: 14.8,
            max_bandwidth_gbps: 95.9,
            pcie_latency_us: 0.9,
            fpga_to_fpga_latency_us: 0.44,
            port_to_port_latency_ns: 52.0,
            switch_clock_mhz: 250.0,
            pipeline_depth_cycles: 16,
        }
    }
}

fn scaled(name: &str, v: f64, scale: f64) -> Result<u64, ConfigError> {
    if !v.is_finite() || v <= 0.0 {
        return Err(ConfigError::Invalid(format!("`{name}` must be strictly positive")));
    }
    Ok((v * scale).round() as u64)
}

impl CostSection {
    pub fn to_params(&self) -> Result<CostParams, ConfigError> {
        let p = CostParams {
            mpi_overhead_ps: scaled("mpi_overhead_us", self.mpi_overhead_us, 1e6)?,
            bandwidth_bps: scaled("max_bandwidth_gbps", self.max_bandwidth_gbps, 1e9)?,
            pcie_latency_ps: scaled("pcie_latency_us", self.pcie_latency_us, 1e6)?,
            fpga_to_fpga_latency_ps: scaled("fpga_to_fpga_latency_us", self.fpga_to_fpga_latency_us, 1e6)?,
            port_to_port_latency_ps: scaled("port_to_port_latency_ns", self.port_to_port_latency_ns, 1e3)?,
            switch_clock_hz: scaled("switch_clock_mhz", self.switch_clock_mhz, 1e6)?,
            pipeline_depth_cycles: self.pipeline_depth_cycles,
        };
        p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub topology: TopologySection,
    #[serde(default)]
    pub cost: CostSection,
}

pub fn parse_net_config(text: &str) -> Result<NetConfig, ConfigError> {
    toml::from_str(text).map_err(|e| toml_error(text, &e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_cost_params() {
        assert_eq!(CostSection::default().to_params().unwrap(), CostParams::default());
    }

    #[test]
    fn parses_torus_and_reports_lines() {
        let c = parse_net_config("[topology]\nkind = \"torus\"\ndims = [4, 4, 8]\n").unwrap();
        assert_eq!(
            c.topology.to_spec().unwrap(),
            TopologySpec::Torus3D { dx: 4, dy: 4, dz: 8 }
        );
        let err = parse_net_config("[topology]\nkind = \"star\"\nleaves = \"x\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err:?}");
        let bad = parse_net_config("[topology]\nkind=\"star\"\nleaves=2\n[cost]\npcie_latency_us = 0\n").unwrap();
        assert!(bad.cost.to_params().is_err());
    }
}
