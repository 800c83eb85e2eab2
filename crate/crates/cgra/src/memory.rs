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

//! Banked look-aside memory.
//!
//! Word `addr` lives in bank `addr % mem_banks` at row `addr / mem_banks`.
//! Storage is allocated on first write; unwritten words read as zero.

use std::collections::{BTreeMap, HashSet};

use crate::config::CgraConfig;

/// One region of banked memory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Memory {
    words: Vec<u32>,
}

impl Memory {
    pub fn new() -> Self {
        Memory::default()
    }

    pub fn read(&self, addr: u64) -> u32 {
        self.words.get(addr as usize).copied().unwrap_or(0)
    }

    /// Caller has checked `addr` against the configured capacity.
    pub fn write(&mut self, addr: u64, v: u32) {
        let a = addr as usize;
        if a >= self.words.len() {
            self.words.resize(a + 1, 0);
        }
        self.words[a] = v;
    }

    /// Highest written address plus one.
    pub fn extent(&self) -> usize {
        self.words.len()
    }
}

/// Extra cycles for one vector access: the busiest bank serves its distinct
/// rows one per cycle.
pub fn bank_stalls(cfg: &CgraConfig, addrs: impl IntoIterator<Item = u64>) -> u64 {
    let mut seen = HashSet::new();
    let mut per_bank: BTreeMap<u64, u64> = BTreeMap::new();
    for a in addrs {
        if seen.insert(a) {
            *per_bank.entry(cfg.bank_of(a)).or_default() += 1;
        }
    }
    per_bank.values().max().map_or(0, |m| m - 1)
}

/// Memory regions keyed by `(comm_id, tag)`; state persists for the owner's
/// lifetime.
#[derive(Clone, Debug, Default)]
pub struct LookasideMemory {
    regions: BTreeMap<(u32, u32), Memory>,
}

impl LookasideMemory {
    pub fn new() -> Self {
        LookasideMemory::default()
    }

    pub fn region(&mut self, comm_id: u32, tag: u32) -> &mut Memory {
        self.regions.entry((comm_id, tag)).or_default()
    }

    pub fn get(&self, comm_id: u32, tag: u32) -> Option<&Memory> {
        self.regions.get(&(comm_id, tag))
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwritten_reads_zero() {
        let mut m = Memory::new();
        assert_eq!(m.read(100), 0);
        m.write(7, 9);
        assert_eq!(m.read(7), 9);
        assert_eq!(m.extent(), 8);
    }

    #[test]
    fn stalls() {
        let cfg = CgraConfig::default();
        let b = cfg.mem_banks as u64;
        assert_eq!(bank_stalls(&cfg, 0..16), 0);
        assert_eq!(bank_stalls(&cfg, (0..16).map(|i| i * b)), 15);
        // Repeated reads of one word are served once.
        assert_eq!(bank_stalls(&cfg, std::iter::repeat_n(5, 16)), 0);
        let four = CgraConfig { mem_banks: 4, ..cfg };
        assert_eq!(bank_stalls(&four, 0..16), 3);
    }

    #[test]
    fn regions_are_isolated() {
        let mut l = LookasideMemory::new();
        l.region(1, 0).write(0, 5);
        assert_eq!(l.region(1, 1).read(0), 0);
        assert_eq!(l.get(1, 0).unwrap().read(0), 5);
    }
}
