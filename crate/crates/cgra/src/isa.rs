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

//! Fixed-width 32-bit instruction encoding.
//!
//! Layout: opcode `31:26`, dst `25:21`, src1 `20:16`, src2 `15:11`,
//! imm `10:0`.

use thiserror::Error;

use crate::config::CgraConfig;

/// Vector ops: lanes hold f32 bit patterns.
pub const FLAG_F32: u16 = 1;
/// VBCAST: convert the scalar from i32 to f32 before broadcasting.
pub const FLAG_CVT: u16 = 2;
/// HALT: return the inputs unchanged.
pub const FLAG_PASSTHROUGH: u16 = 1;

pub const IMM_BITS: u32 = 11;
pub const IMM_MASK: u16 = (1 << IMM_BITS) - 1;
pub const IMM_MIN: i32 = -(1 << (IMM_BITS - 1));
pub const IMM_MAX: i32 = (1 << (IMM_BITS - 1)) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Opcode {
    Nop = 0,
    Halt = 1,
    Vadd = 2,
    Vsub = 3,
    Vmul = 4,
    Vmac = 5,
    Vmax = 6,
    Vmin = 7,
    VscanAdd = 8,
    VreduceAdd = 9,
    Vbcast = 10,
    Vload = 11,
    Vstore = 12,
    Li = 13,
    Sadd = 14,
    Bnz = 15,
}

impl Opcode {
    pub const ALL: [Opcode; 16] = [
        Opcode::Nop,
        Opcode::Halt,
        Opcode::Vadd,
        Opcode::Vsub,
        Opcode::Vmul,
        Opcode::Vmac,
        Opcode::Vmax,
        Opcode::Vmin,
        Opcode::VscanAdd,
        Opcode::VreduceAdd,
        Opcode::Vbcast,
        Opcode::Vload,
        Opcode::Vstore,
        Opcode::Li,
        Opcode::Sadd,
        Opcode::Bnz,
    ];

    pub fn from_u8(v: u8) -> Option<Opcode> {
        Opcode::ALL.get(v as usize).copied()
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Nop => "NOP",
            Opcode::Halt => "HALT",
            Opcode::Vadd => "VADD",
            Opcode::Vsub => "VSUB",
            Opcode::Vmul => "VMUL",
            Opcode::Vmac => "VMAC",
            Opcode::Vmax => "VMAX",
            Opcode::Vmin => "VMIN",
            Opcode::VscanAdd => "VSCAN_ADD",
            Opcode::VreduceAdd => "VREDUCE_ADD",
            Opcode::Vbcast => "VBCAST",
            Opcode::Vload => "VLOAD",
            Opcode::Vstore => "VSTORE",
            Opcode::Li => "LI",
            Opcode::Sadd => "SADD",
            Opcode::Bnz => "BNZ",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL
            .iter()
            .copied()
            .find(|o| o.mnemonic().eq_ignore_ascii_case(s))
    }

    /// Register-file class of each field, in (dst, src1, src2) order.
    pub fn operand_classes(self) -> [RegClass; 3] {
        use RegClass::*;
        match self {
            Opcode::Nop | Opcode::Halt => [Unused, Unused, Unused],
            Opcode::Vadd | Opcode::Vsub | Opcode::Vmul | Opcode::Vmac | Opcode::Vmax | Opcode::Vmin => {
                [Vector, Vector, Vector]
            }
            Opcode::VscanAdd => [Vector, Vector, Unused],
            Opcode::VreduceAdd => [Scalar, Vector, Unused],
            Opcode::Vbcast => [Vector, Scalar, Unused],
            Opcode::Vload => [Vector, Scalar, Unused],
            Opcode::Vstore => [Unused, Scalar, Vector],
            Opcode::Li => [Scalar, Unused, Unused],
            Opcode::Sadd => [Scalar, Scalar, Scalar],
            Opcode::Bnz => [Unused, Scalar, Unused],
        }
    }

    /// Whether the `.f` suffix (imm bit 0) selects f32 lanes.
    pub fn has_float_variant(self) -> bool {
        matches!(
            self,
            Opcode::Vadd
                | Opcode::Vsub
                | Opcode::Vmul
                | Opcode::Vmac
                | Opcode::Vmax
                | Opcode::Vmin
                | Opcode::VscanAdd
                | Opcode::VreduceAdd
                | Opcode::Vbcast
        )
    }

    pub fn is_memory(self) -> bool {
        matches!(self, Opcode::Vload | Opcode::Vstore)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegClass {
    Unused,
    Vector,
    Scalar,
}

/// A decoded instruction. Fields are kept raw so encoding is lossless.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Opcode,
    pub dst: u8,
    pub src1: u8,
    pub src2: u8,
    /// 11-bit immediate or flag field.
    pub imm: u16,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsaError {
    #[error("illegal opcode {opcode} in word {word:#010x}")]
    IllegalOpcode { opcode: u8, word: u32 },
    #[error("{class} register {index} out of range (have {limit})")]
    RegisterOutOfRange { class: &'static str, index: u8, limit: u32 },
    #[error("immediate {0} does not fit in 11 bits")]
    ImmOutOfRange(i64),
}

/// Sign-extends an 11-bit immediate.
pub fn sext(imm: u16) -> i32 {
    ((imm as i32) << (32 - IMM_BITS)) >> (32 - IMM_BITS)
}

/// Encodes a signed immediate into the 11-bit field.
pub fn imm_signed(v: i64) -> Result<u16, IsaError> {
    if v < IMM_MIN as i64 || v > IMM_MAX as i64 {
        return Err(IsaError::ImmOutOfRange(v));
    }
    Ok((v as u16) & IMM_MASK)
}

/// Encodes an unsigned immediate into the 11-bit field.
pub fn imm_unsigned(v: i64) -> Result<u16, IsaError> {
    if !(0..=IMM_MASK as i64).contains(&v) {
        return Err(IsaError::ImmOutOfRange(v));
    }
    Ok(v as u16)
}

impl Instruction {
    pub fn new(op: Opcode, dst: u8, src1: u8, src2: u8, imm: u16) -> Self {
        Instruction {
            op,
            dst: dst & 31,
            src1: src1 & 31,
            src2: src2 & 31,
            imm: imm & IMM_MASK,
        }
    }

    pub fn nop() -> Self {
        Instruction::new(Opcode::Nop, 0, 0, 0, 0)
    }

    pub fn halt() -> Self {
        Instruction::new(Opcode::Halt, 0, 0, 0, 0)
    }

    pub fn encode(&self) -> u32 {
        ((self.op as u32) << 26)
            | ((self.dst as u32 & 31) << 21)
            | ((self.src1 as u32 & 31) << 16)
            | ((self.src2 as u32 & 31) << 11)
            | (self.imm & IMM_MASK) as u32
    }

    pub fn decode(word: u32) -> Result<Self, IsaError> {
        let opcode = (word >> 26) as u8;
        let op = Opcode::from_u8(opcode).ok_or(IsaError::IllegalOpcode { opcode, word })?;
        Ok(Instruction {
            op,
            dst: ((word >> 21) & 31) as u8,
            src1: ((word >> 16) & 31) as u8,
            src2: ((word >> 11) & 31) as u8,
            imm: (word & IMM_MASK as u32) as u16,
        })
    }

    pub fn is_f32(&self) -> bool {
        self.imm & FLAG_F32 != 0
    }

    /// Accumulator register of VMAC, held in imm `10:6`.
    pub fn mac_acc(&self) -> u8 {
        ((self.imm >> 6) & 31) as u8
    }

    /// Register operands as (class, index), including the VMAC accumulator.
    pub fn registers(&self) -> Vec<(RegClass, u8)> {
        let [cd, c1, c2] = self.op.operand_classes();
        let mut out = Vec::with_capacity(4);
        for (c, r) in [(cd, self.dst), (c1, self.src1), (c2, self.src2)] {
            if c != RegClass::Unused {
                out.push((c, r));
            }
        }
        if self.op == Opcode::Vmac {
            out.push((RegClass::Vector, self.mac_acc()));
        }
        out
    }

    /// Checks every register operand against the register-file sizes.
    pub fn check_registers(&self, cfg: &CgraConfig) -> Result<(), IsaError> {
        for (class, index) in self.registers() {
            let (name, limit) = match class {
                RegClass::Vector => ("vector", cfg.vregs),
                RegClass::Scalar => ("scalar", cfg.sregs),
                RegClass::Unused => continue,
            };
            if index as u32 >= limit {
                return Err(IsaError::RegisterOutOfRange {
                    class: name,
                    index,
                    limit,
                });
            }
        }
        Ok(())
    }
}
