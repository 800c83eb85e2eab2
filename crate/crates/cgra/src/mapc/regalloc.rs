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

//! Linear-scan vector register allocation with spill-everywhere.
//!
//! Positions: inputs are defined at 0, the node in slot `t` at `t + 1`, and
//! values that leave the program (output, new state) live to `slots + 1`.
//! The top three vector registers are reserved as scratch for spilled
//! operands and results. Spill slot `k` occupies words
//! `lanes * (k + 1) .. lanes * (k + 2)`; words `0 .. lanes` hold state.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::dfg::{Dfg, NodeOp};
use super::schedule::Schedule;
use crate::config::CgraConfig;

pub const SCRATCH_VREGS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AllocError {
    #[error("need at least {need} vector and 3 scalar registers")]
    TooFewRegisters { need: u32 },
    #[error("spill area needs {need} words, memory holds {have}")]
    MemOutOfBounds { need: u64, have: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    /// Live interval `(def, last use)` per node; `None` if never read.
    pub interval: Vec<Option<(usize, usize)>>,
    /// Register per node; `None` when spilled or dead.
    pub reg: Vec<Option<u8>>,
    /// Spill address per node.
    pub spill: Vec<Option<u32>>,
    pub scratch: [u8; 3],
    pub spill_count: usize,
}

/// Position where each node's value dies, computed from first principles.
pub fn live_intervals(dfg: &Dfg, s: &Schedule) -> Vec<Option<(usize, usize)>> {
    let end = s.order.len() + 1;
    let def = |id: usize| s.slot[id].map_or(0, |t| t + 1);
    let mut last: Vec<Option<usize>> = vec![None; dfg.nodes.len()];
    for &id in &s.order {
        let at = def(id);
        for &a in &dfg.nodes[id].args {
            last[a] = Some(last[a].map_or(at, |l: usize| l.max(at)));
        }
    }
    for out in std::iter::once(dfg.output).chain(dfg.state_out) {
        last[out] = Some(end);
    }
    (0..dfg.nodes.len()).map(|id| last[id].map(|l| (def(id), l))).collect()
}

pub fn allocate_registers(dfg: &Dfg, s: &Schedule, config: &CgraConfig) -> Result<Allocation, AllocError> {
    if config.vregs < SCRATCH_VREGS + 1 || config.sregs < 3 {
        return Err(AllocError::TooFewRegisters {
            need: SCRATCH_VREGS + 1,
        });
    }
    let pool = config.vregs - SCRATCH_VREGS;
    let top = config.vregs as u8;
    let scratch = [top - 3, top - 2, top - 1];
    let n = dfg.nodes.len();
    let interval = live_intervals(dfg, s);

    // Allocation order: inputs by index, then nodes by slot.
    let mut todo: Vec<usize> = dfg.inputs.clone();
    todo.extend(&s.order);
    todo.retain(|&id| interval[id].is_some());

    let mut reg: Vec<Option<u8>> = vec![None; n];
    let mut spilled = vec![false; n];
    let mut free: BTreeSet<u8> = (0..pool as u8).collect();
    let mut active: Vec<usize> = Vec::new();

    for &id in &todo {
        let (start, end) = interval[id].unwrap();
        active.retain(|&a| {
            let keep = interval[a].unwrap().1 > start;
            if !keep {
                free.insert(reg[a].unwrap());
            }
            keep
        });
        let fixed = match dfg.nodes[id].op {
            NodeOp::Input(k) => Some(k),
            _ => None,
        };
        let pick = match fixed {
            Some(k) => free.contains(&k).then_some(k),
            None => free.first().copied(),
        };
        if let Some(r) = pick {
            free.remove(&r);
            reg[id] = Some(r);
            active.push(id);
            continue;
        }
        if fixed.is_some_and(|k| k as u32 >= pool) {
            spilled[id] = true;
            continue;
        }
        // Evict the active value that dies last if it outlives this one.
        let victim = active
            .iter()
            .copied()
            .filter(|&a| fixed.is_none() || reg[a] == fixed)
            .max_by_key(|&a| (interval[a].unwrap().1, a));
        match victim {
            Some(v) if interval[v].unwrap().1 > end => {
                reg[id] = reg[v].take();
                spilled[v] = true;
                active.retain(|&a| a != v);
                active.push(id);
            }
            _ => spilled[id] = true,
        }
    }

    let lanes = config.lanes as u64;
    let mut spill = vec![None; n];
    let mut k = 0u64;
    for id in 0..n {
        if spilled[id] {
            spill[id] = Some((lanes * (k + 1)) as u32);
            k += 1;
        }
    }
    let need = lanes * (k + 1);
    if need > config.mem_words() || need > u32::MAX as u64 {
        return Err(AllocError::MemOutOfBounds {
            need,
            have: config.mem_words(),
        });
    }
    Ok(Allocation {
        interval,
        reg,
        spill,
        scratch,
        spill_count: k as usize,
    })
}

/// Checks that no two overlapping live values share a register, scratch
/// registers stay unassigned, inputs keep their binding registers, and spill
/// slots are distinct and in bounds.
pub fn validate_allocation(dfg: &Dfg, s: &Schedule, a: &Allocation, config: &CgraConfig) -> Result<(), String> {
    let iv = live_intervals(dfg, s);
    let scratch: HashSet<u8> = a.scratch.iter().copied().collect();
    let mut slots = HashSet::new();
    let mut placed = Vec::new();
    for (id, &span) in iv.iter().enumerate() {
        let Some((d, u)) = span else { continue };
        match (a.reg[id], a.spill[id]) {
            (Some(r), None) => {
                if r as u32 >= config.vregs || scratch.contains(&r) {
                    return Err(format!("node {id} in unusable register v{r}"));
                }
                if let NodeOp::Input(k) = dfg.nodes[id].op {
                    if r != k {
                        return Err(format!("input {k} moved to v{r}"));
                    }
                }
                placed.push((id, r, d, u));
            }
            (None, Some(addr)) => {
                if addr < config.lanes || addr as u64 + config.lanes as u64 > config.mem_words() {
                    return Err(format!("node {id} spill address {addr} out of range"));
                }
                if addr % config.lanes != 0 || !slots.insert(addr) {
                    return Err(format!("node {id} spill slot {addr} misaligned or shared"));
                }
            }
            _ => return Err(format!("node {id} is live but not placed exactly once")),
        }
    }
    for (i, &(x, rx, dx, ux)) in placed.iter().enumerate() {
        for &(y, ry, dy, uy) in &placed[i + 1..] {
            // A value may take the register of an operand it consumes last.
            if rx == ry && dx < uy && dy < ux {
                return Err(format!("nodes {x} and {y} overlap in v{rx}"));
            }
        }
    }
    Ok(())
}
