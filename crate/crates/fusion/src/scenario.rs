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

//! The two named fused workloads: allgather, prefix sum, allgather; and
//! allreduce followed by alltoall.

use std::fmt;

use acis_cgra::CgraConfig;
use acis_core::wire::CollectiveKind;
use acis_core::{DType, DTypeKind, ReduceOp, Value};
use acis_dataplane::SwitchOptions;
use acis_hostmpi::gen::random_value;
use acis_hostmpi::{Chunk, Communicator};
use acis_simnet::{Network, Time};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::oracle::oracle_fused;
use crate::plan::{CollectiveStage, FusedPlan, MapStage, Stage};
use crate::run::{run_fused, run_unfused};
use crate::FusionError;

/// Inclusive scan over the whole vector; `state` carries the running total
/// from one lane-width chunk to the next.
pub const PREFIX_SUM: &str = "\
elem i32
out = scan_add(in0) + state
state = broadcast(reduce_add(in0)) + state
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    AllgatherPrefixAllgather,
    AllreduceAlltoall,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::AllgatherPrefixAllgather, Scenario::AllreduceAlltoall];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::AllgatherPrefixAllgather => "allgather_prefix_allgather",
            Scenario::AllreduceAlltoall => "allreduce_alltoall",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn plan(self, cgra: CgraConfig) -> Result<FusedPlan, FusionError> {
        let coll = |kind| Stage::Collective(CollectiveStage::new(kind, ReduceOp::Sum, DTypeKind::VecI32));
        let stages = match self {
            Scenario::AllgatherPrefixAllgather => vec![
                coll(CollectiveKind::Allgather),
                Stage::Map(MapStage::from_source(PREFIX_SUM, &cgra)?),
                coll(CollectiveKind::Allgather),
            ],
            Scenario::AllreduceAlltoall => vec![coll(CollectiveKind::Allreduce), coll(CollectiveKind::Alltoall)],
        };
        let plan = FusedPlan {
            plan_id: 1 + self as u16,
            stages,
            cgra,
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Random `i32` vectors of `elems` elements, one per rank.
pub fn random_contributions(n: usize, elems: u32, seed: u64) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_value(DType::vec_i32(elems), &mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioOutcome {
    pub fused_latency: Time,
    pub unfused_latency: Time,
    pub fused_link_bytes: u64,
    pub unfused_link_bytes: u64,
    /// Whether results were checked against the oracle.
    pub validated: bool,
}

fn diff(want: &[Value], got: &[Chunk]) -> String {
    let mut out = String::new();
    for (r, (w, g)) in want.iter().zip(got).enumerate() {
        let g = match g {
            Chunk::Val(v) => v,
            Chunk::Opaque(n) => {
                out += &format!("rank {r}: opaque result of {n} bytes\n");
                continue;
            }
        };
        if w == g {
            continue;
        }
        let (wb, gb) = (w.encode(), g.encode());
        let at = wb
            .iter()
            .zip(&gb)
            .position(|(a, b)| a != b)
            .unwrap_or(wb.len().min(gb.len()));
        out += &format!(
            "rank {r}: {} bytes expected, {} received, first difference at byte {at}\n",
            wb.len(),
            gb.len()
        );
    }
    out
}

/// Runs `plan` fused and unfused. With `contributions` given, the fused
/// result must equal the oracle; `None` runs timing only on `bytes`-sized
/// opaque inputs.
pub fn run_plan_pair(
    net: &Network,
    comm: &Communicator,
    plan: &FusedPlan,
    contributions: Option<&[Value]>,
    bytes: usize,
    opts: SwitchOptions,
) -> Result<ScenarioOutcome, FusionError> {
    let n = comm.size() as usize;
    let chunks: Vec<Chunk> = match contributions {
        Some(vs) => vs.iter().cloned().map(Chunk::Val).collect(),
        None => vec![Chunk::Opaque(bytes); n],
    };
    let fused = run_fused(net, comm, plan, &chunks, opts)?;
    if let Some(vs) = contributions {
        let want = oracle_fused(plan, vs)?;
        let d = diff(&want, &fused.results);
        if !d.is_empty() {
            return Err(FusionError::ScenarioValidationFailed { diff: d });
        }
    }
    let unfused = run_unfused(net, comm, plan, &chunks)?;
    Ok(ScenarioOutcome {
        fused_latency: fused.latency(),
        unfused_latency: unfused.latency(),
        fused_link_bytes: fused.trace.link_bytes.iter().sum(),
        unfused_link_bytes: unfused.link_bytes,
        validated: contributions.is_some(),
    })
}

/// Runs a named scenario with `elems` elements per rank. `seed` selects
/// random validated inputs; `None` times opaque inputs only.
pub fn run_scenario(
    scenario: Scenario,
    net: &Network,
    comm: &Communicator,
    elems: u32,
    seed: Option<u64>,
    opts: SwitchOptions,
) -> Result<ScenarioOutcome, FusionError> {
    let plan = scenario.plan(CgraConfig::default())?;
    let inputs = seed.map(|s| random_contributions(comm.size() as usize, elems, s));
    run_plan_pair(net, comm, &plan, inputs.as_deref(), elems as usize * 4, opts)
}
