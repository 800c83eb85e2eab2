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

//! Assembled programs and their binary container.
//!
//! Binary layout, little-endian: magic `0xC64A` (u16), version (u16), the
//! seven config fields (u32 each), elem, input count, flags, output class,
//! output register, output shape (u8 each), segment count (u32), then per
//! segment its SPU index (u32), word count (u32) and instruction words.

use thiserror::Error;

use crate::config::CgraConfig;
use crate::isa::{Instruction, IsaError};

pub const BINARY_MAGIC: u16 = 0xC64A;
pub const BINARY_VERSION: u16 = 1;

/// Interpretation of 32-bit lane words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Elem {
    #[default]
    I32,
    F32,
}

impl Elem {
    pub fn name(self) -> &'static str {
        match self {
            Elem::I32 => "i32",
            Elem::F32 => "f32",
        }
    }

    pub fn from_name(s: &str) -> Option<Elem> {
        match s {
            "i32" => Some(Elem::I32),
            "f32" => Some(Elem::F32),
            _ => None,
        }
    }
}

/// Register holding the program result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputSpec {
    /// Whole vector register.
    Vector(u8),
    /// Scalar register.
    Scalar(u8),
    /// Lane 0 of a vector register, returned as a scalar.
    Lane0(u8),
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec::Vector(0)
    }
}

/// Straight-line code for one SPU.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    pub spu: u32,
    pub code: Vec<Instruction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CgraProgram {
    /// Configuration the program was built for.
    pub config: CgraConfig,
    pub elem: Elem,
    /// Inputs are bound to v0, v1, ... in order.
    pub n_inputs: u8,
    /// Whether the program reads or writes look-aside state.
    pub uses_state: bool,
    pub output: OutputSpec,
    /// Executed in order; segment `k` hands off to segment `k + 1`.
    pub segments: Vec<Segment>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BinaryError {
    #[error("bad magic {0:#06x}")]
    BadMagic(u16),
    #[error("unsupported binary version {0}")]
    BadVersion(u16),
    #[error("binary truncated at byte {0}")]
    Truncated(usize),
    #[error("invalid field {0}")]
    InvalidField(&'static str),
    #[error(transparent)]
    Isa(#[from] IsaError),
}

impl CgraProgram {
    /// Instruction words across all segments.
    pub fn words(&self) -> Vec<u32> {
        self.segments
            .iter()
            .flat_map(|s| s.code.iter().map(Instruction::encode))
            .collect()
    }

    pub fn instruction_count(&self) -> usize {
        self.segments.iter().map(|s| s.code.len()).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&BINARY_MAGIC.to_le_bytes());
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        let c = &self.config;
        for v in [
            c.spu_count,
            c.lanes,
            c.vregs,
            c.sregs,
            c.mem_banks,
            c.bank_words,
            c.imem_words,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let (oclass, oreg) = match self.output {
            OutputSpec::Vector(r) => (0u8, r),
            OutputSpec::Scalar(r) => (1, r),
            OutputSpec::Lane0(r) => (2, r),
        };
        out.extend_from_slice(&[self.elem as u8, self.n_inputs, self.uses_state as u8, oclass, oreg, 0]);
        out.extend_from_slice(&(self.segments.len() as u32).to_le_bytes());
        for seg in &self.segments {
            out.extend_from_slice(&seg.spu.to_le_bytes());
            out.extend_from_slice(&(seg.code.len() as u32).to_le_bytes());
            for i in &seg.code {
                out.extend_from_slice(&i.encode().to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BinaryError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.u16()?;
        if magic != BINARY_MAGIC {
            return Err(BinaryError::BadMagic(magic));
        }
        let version = r.u16()?;
        if version != BINARY_VERSION {
            return Err(BinaryError::BadVersion(version));
        }
        let config = CgraConfig {
            spu_count: r.u32()?,
            lanes: r.u32()?,
            vregs: r.u32()?,
            sregs: r.u32()?,
            mem_banks: r.u32()?,
            bank_words: r.u32()?,
            imem_words: r.u32()?,
        };
        let elem = match r.u8()? {
            0 => Elem::I32,
            1 => Elem::F32,
            _ => return Err(BinaryError::InvalidField("elem")),
        };
        let n_inputs = r.u8()?;
        let uses_state = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(BinaryError::InvalidField("flags")),
        };
        let oclass = r.u8()?;
        let oreg = r.u8()?;
        let output = match oclass {
            0 => OutputSpec::Vector(oreg),
            1 => OutputSpec::Scalar(oreg),
            2 => OutputSpec::Lane0(oreg),
            _ => return Err(BinaryError::InvalidField("output")),
        };
        r.u8()?;
        let nseg = r.u32()? as usize;
        let mut segments = Vec::with_capacity(nseg.min(1024));
        for _ in 0..nseg {
            let spu = r.u32()?;
            let n = r.u32()? as usize;
            let mut code = Vec::with_capacity(n.min(1 << 16));
            for _ in 0..n {
                code.push(Instruction::decode(r.u32()?)?);
            }
            segments.push(Segment { spu, code });
        }
        if r.pos != bytes.len() {
            return Err(BinaryError::InvalidField("trailing bytes"));
        }
        Ok(CgraProgram {
            config,
            elem,
            n_inputs,
            uses_state,
            output,
            segments,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], BinaryError> {
        let end = self.pos + N;
        let s = self.bytes.get(self.pos..end).ok_or(BinaryError::Truncated(self.pos))?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8, BinaryError> {
        Ok(self.take::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, BinaryError> {
        Ok(u16::from_le_bytes(self.take()?))
    }

    fn u32(&mut self) -> Result<u32, BinaryError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
}
