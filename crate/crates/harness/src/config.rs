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

//! Benchmark configuration.
//!
//! ```toml
//! [bench]
//! topology = "torus"          # or "star"; sized per node count
//! nodes = [32, 64, 128]
//! sizes = [4, 4096, 4194304]  # bytes per rank, ascending
//! collectives = ["allreduce", "allgather"]
//! repetitions = 1
//! mode = "both"               # "host", "acis" or "both"
//! output = "bench.csv"
//! seed = 7                    # optional: ±5% endpoint jitter
//! workers = 4
//!
//! [cost]                      # optional, see the simnet config
//! mpi_overhead_us = 14.8
//! ```

use std::path::PathBuf;

use acis_core::wire::CollectiveKind;
use acis_simnet::config::{toml_error, ConfigError, CostSection};
use acis_simnet::{CostParams, TopologySpec};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    HostBaseline,
    Acis,
    Both,
}

impl Mode {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "host" | "host_baseline" => Some(Mode::HostBaseline),
            "acis" => Some(Mode::Acis),
            "both" => Some(Mode::Both),
            _ => None,
        }
    }

    pub fn runs_host(self) -> bool {
        self != Mode::Acis
    }

    pub fn runs_acis(self) -> bool {
        self != Mode::HostBaseline
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Torus,
    Star,
}

impl TopologyKind {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "torus" => Some(TopologyKind::Torus),
            "star" => Some(TopologyKind::Star),
            _ => None,
        }
    }
}

/// Topology for `n` ranks: a star with `n` leaves, or the most cubic torus
/// of `n` nodes. 32, 64 and 128 nodes map to 4x4x2, 4x4x4 and 4x4x8.
pub fn auto_topology(kind: TopologyKind, n: u32) -> TopologySpec {
    match kind {
        TopologyKind::Star => TopologySpec::StarWithAccel { leaves: n },
        TopologyKind::Torus => {
            let (dx, dy, dz) = match n {
                32 => (4, 4, 2),
                64 => (4, 4, 4),
                128 => (4, 4, 8),
                _ => {
                    let mut best = (n.max(1), 1, 1);
                    for a in 1..=n {
                        for b in 1..=a {
                            if !n.is_multiple_of(a * b) {
                                continue;
                            }
                            let c = n / (a * b);
                            if c > b {
                                continue;
                            }
                            if a - c < best.0 - best.2 {
                                best = (a, b, c);
                            }
                        }
                    }
                    best
                }
            };
            TopologySpec::Torus3D { dx, dy, dz }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub topology: TopologyKind,
    pub cost: CostParams,
    pub nodes: Vec<u32>,
    /// Bytes contributed per rank, ascending.
    pub sizes: Vec<u64>,
    pub collectives: Vec<CollectiveKind>,
    pub repetitions: u32,
    pub mode: Mode,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub max_events: u64,
    /// Directory for per-cell event logs.
    pub dump_trace: Option<PathBuf>,
}

/// Powers of two from 4 B to 4 MB.
pub fn default_sizes() -> Vec<u64> {
    (2..=22).map(|k| 1u64 << k).collect()
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            topology: TopologyKind::Torus,
            cost: CostParams::default(),
            nodes: vec![32, 64, 128],
            sizes: default_sizes(),
            collectives: vec![CollectiveKind::Allreduce, CollectiveKind::Allgather],
            repetitions: 1,
            mode: Mode::Both,
            output: None,
            seed: None,
            workers: 1,
            max_events: 10_000_000_000,
            dump_trace: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.nodes.is_empty() || self.nodes.contains(&0) {
            return bad("`nodes` must be non-empty and positive");
        }
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("`sizes` must be non-empty and strictly ascending");
        }
        if self.collectives.is_empty() || self.collectives.contains(&CollectiveKind::Fused) {
            return bad("`collectives` must list plain collectives");
        }
        if self.repetitions == 0 {
            return bad("`repetitions` must be at least 1");
        }
        if self.workers == 0 {
            return bad("`workers` must be at least 1");
        }
        self.cost.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchSection {
    topology: Option<String>,
    nodes: Option<Vec<u32>>,
    sizes: Option<Vec<u64>>,
    collectives: Option<Vec<String>>,
    repetitions: Option<u32>,
    mode: Option<String>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    max_events: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    bench: Option<BenchSection>,
    cost: Option<CostSection>,
}

pub fn parse_collectives(names: &[String]) -> Result<Vec<CollectiveKind>, ConfigError> {
    names
        .iter()
        .map(|s| CollectiveKind::from_name(s).ok_or_else(|| ConfigError::Invalid(format!("unknown collective `{s}`"))))
        .collect()
}

pub fn parse_bench_config(text: &str) -> Result<BenchConfig, ConfigError> {
    let f: File = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let mut c = BenchConfig::default();
    if let Some(cost) = f.cost {
        c.cost = cost.to_params()?;
    }
    if let Some(b) = f.bench {
        if let Some(t) = b.topology {
            c.topology =
                TopologyKind::from_name(&t).ok_or_else(|| ConfigError::Invalid(format!("unknown topology `{t}`")))?;
        }
        if let Some(m) = b.mode {
            c.mode = Mode::from_name(&m).ok_or_else(|| ConfigError::Invalid(format!("unknown mode `{m}`")))?;
        }
        if let Some(cs) = b.collectives {
            c.collectives = parse_collectives(&cs)?;
        }
        c.nodes = b.nodes.unwrap_or(c.nodes);
        c.sizes = b.sizes.unwrap_or(c.sizes);
        c.repetitions = b.repetitions.unwrap_or(c.repetitions);
        c.output = b.output.or(c.output);
        c.seed = b.seed.or(c.seed);
        c.workers = b.workers.unwrap_or(c.workers);
        c.max_events = b.max_events.unwrap_or(c.max_events);
    }
    c.validate()?;
    Ok(c)
}
