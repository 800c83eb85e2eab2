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

//! Target parameters of the CGRA.

use thiserror::Error;

/// Shape of the CGRA: SPU count, vector width and storage sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CgraConfig {
    pub spu_count: u32,
    /// Vector width in 32-bit elements. Must be a power of two.
    pub lanes: u32,
    pub vregs: u32,
    pub sregs: u32,
    pub mem_banks: u32,
    /// 32-bit words per bank.
    pub bank_words: u32,
    /// Instruction words per SPU.
    pub imem_words: u32,
}

impl Default for CgraConfig {
    fn default() -> Self {
        CgraConfig {
            spu_count: 3,
            lanes: 16,
            vregs: 32,
            sregs: 16,
            mem_banks: 16,
            bank_words: 65536,
            imem_words: 4096,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("lanes must be a power of two, got {0}")]
    LanesNotPow2(u32),
    #[error("{field} = {value} exceeds the encodable limit {max}")]
    TooLarge { field: &'static str, value: u32, max: u32 },
}

impl CgraConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("spu_count", self.spu_count),
            ("lanes", self.lanes),
            ("vregs", self.vregs),
            ("sregs", self.sregs),
            ("mem_banks", self.mem_banks),
            ("bank_words", self.bank_words),
            ("imem_words", self.imem_words),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !self.lanes.is_power_of_two() {
            return Err(ConfigError::LanesNotPow2(self.lanes));
        }
        // Register fields are 5 bits wide.
        for (field, value) in [("vregs", self.vregs), ("sregs", self.sregs)] {
            if value > 32 {
                return Err(ConfigError::TooLarge { field, value, max: 32 });
            }
        }
        if self.lanes > 4096 {
            return Err(ConfigError::TooLarge {
                field: "lanes",
                value: self.lanes,
                max: 4096,
            });
        }
        Ok(())
    }

    /// Total look-aside memory in words.
    pub fn mem_words(&self) -> u64 {
        self.mem_banks as u64 * self.bank_words as u64
    }

    /// Bank holding `addr`.
    pub fn bank_of(&self, addr: u64) -> u64 {
        addr % self.mem_banks as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        CgraConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_shapes() {
        let c = CgraConfig {
            lanes: 12,
            ..Default::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::LanesNotPow2(12)));
        let c = CgraConfig {
            vregs: 0,
            ..Default::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::NotPositive("vregs")));
        let c = CgraConfig {
            sregs: 33,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(ConfigError::TooLarge { .. })));
    }
}
