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

//! ASAP list scheduling onto the SPU pipeline.
//!
//! Compute nodes issue in (ASAP level, id) order. Levels are cut into at
//! most `spu_count` contiguous blocks of roughly equal node count; block `k`
//! runs on SPU `k`.

use std::collections::HashSet;

use super::dfg::{Dfg, NodeId};
use crate::config::CgraConfig;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// SPU per node; `None` for inputs.
    pub spu: Vec<Option<u32>>,
    /// Global issue slot per node; `None` for inputs.
    pub slot: Vec<Option<usize>>,
    /// Compute nodes in slot order.
    pub order: Vec<NodeId>,
    /// First slot of each stage, ascending; stage `k` runs on SPU `k`.
    pub stage_starts: Vec<usize>,
    pub level: Vec<u32>,
}

impl Schedule {
    pub fn stages(&self) -> usize {
        self.stage_starts.len()
    }

    /// Slot range of stage `k`.
    pub fn stage_range(&self, k: usize) -> std::ops::Range<usize> {
        let end = self.stage_starts.get(k + 1).copied().unwrap_or(self.order.len());
        self.stage_starts[k]..end
    }
}

pub fn schedule_dfg(dfg: &Dfg, config: &CgraConfig) -> Schedule {
    let n = dfg.nodes.len();
    let mut level = vec![0u32; n];
    for id in dfg.compute_nodes() {
        level[id] = 1 + dfg.nodes[id].args.iter().map(|&a| level[a]).max().unwrap_or(0);
    }
    let mut order: Vec<NodeId> = dfg.compute_nodes().collect();
    order.sort_by_key(|&id| (level[id], id));

    let max_level = order.last().map_or(0, |&id| level[id]);
    let mut per_level = vec![0usize; max_level as usize + 1];
    for &id in &order {
        per_level[level[id] as usize] += 1;
    }
    let total = order.len();
    let groups = (config.spu_count as usize).min(max_level as usize).max(1);
    let target = total.div_ceil(groups).max(1);
    // SPU of each level.
    let mut level_spu = vec![0u32; max_level as usize + 1];
    let (mut g, mut acc) = (0usize, 0usize);
    for lv in 1..=max_level as usize {
        level_spu[lv] = g as u32;
        acc += per_level[lv];
        if acc >= target * (g + 1) && g + 1 < groups {
            g += 1;
        }
    }

    let mut spu = vec![None; n];
    let mut slot = vec![None; n];
    let mut stage_starts = vec![0];
    for (s, &id) in order.iter().enumerate() {
        let p = level_spu[level[id] as usize];
        if s > 0 && spu[order[s - 1]] != Some(p) {
            stage_starts.push(s);
        }
        spu[id] = Some(p);
        slot[id] = Some(s);
    }
    Schedule {
        spu,
        slot,
        order,
        stage_starts,
        level,
    }
}

/// Checks schedule invariants without reference to how it was built.
pub fn validate_schedule(dfg: &Dfg, s: &Schedule, config: &CgraConfig) -> Result<(), String> {
    let mut used: HashSet<(u32, usize)> = HashSet::new();
    let mut count = 0;
    for (id, node) in dfg.nodes.iter().enumerate() {
        match (node.op.is_compute(), s.spu[id], s.slot[id]) {
            (false, None, None) => continue,
            (true, Some(p), Some(t)) => {
                if p >= config.spu_count {
                    return Err(format!("node {id} on SPU {p} of {}", config.spu_count));
                }
                if !used.insert((p, t)) {
                    return Err(format!("slot {t} on SPU {p} used twice"));
                }
                for &a in &node.args {
                    if let Some(ta) = s.slot[a] {
                        if ta >= t {
                            return Err(format!("node {id} at slot {t} before its producer {a} at {ta}"));
                        }
                        if s.spu[a].unwrap() > p {
                            return Err(format!("node {id} on SPU {p} consumes node {a} from a later SPU"));
                        }
                    }
                }
                count += 1;
            }
            _ => return Err(format!("node {id} placement does not match its kind")),
        }
    }
    if s.order.len() != count {
        return Err("order does not list every compute node".into());
    }
    for (t, &id) in s.order.iter().enumerate() {
        if s.slot[id] != Some(t) {
            return Err(format!("order position {t} holds node {id} with slot {:?}", s.slot[id]));
        }
    }
    for w in s.order.windows(2) {
        if s.spu[w[0]] > s.spu[w[1]] {
            return Err("SPU assignment is not contiguous in issue order".into());
        }
    }
    Ok(())
}
