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

//! Straight-line code generation from a scheduled, allocated DFG.
//!
//! Scalar registers: `s0` holds memory addresses, `s1` stages scalars for
//! broadcast, `s2` is never written and reads as zero.

use super::ast::BinOp;
use super::dfg::{Dfg, NodeId, NodeOp};
use super::regalloc::Allocation;
use super::schedule::Schedule;
use crate::config::CgraConfig;
use crate::isa::{imm_signed, Instruction, Opcode, FLAG_CVT, FLAG_F32, IMM_MAX};
use crate::program::{CgraProgram, Elem, OutputSpec, Segment};

const S_ADDR: u8 = 0;
const S_TMP: u8 = 1;
const S_ZERO: u8 = 2;

struct Emitter<'a> {
    alloc: &'a Allocation,
    float: u16,
    code: Vec<Instruction>,
    /// Statically known content of `s0`.
    addr: Option<i64>,
}

impl Emitter<'_> {
    fn push(&mut self, op: Opcode, dst: u8, src1: u8, src2: u8, imm: u16) {
        self.code.push(Instruction::new(op, dst, src1, src2, imm));
    }

    fn set_addr(&mut self, a: u32) {
        let a = a as i64;
        if self.addr == Some(a) {
            return;
        }
        match self.addr {
            Some(c) if (a - c).abs() <= IMM_MAX as i64 && a > IMM_MAX as i64 => {
                self.push(Opcode::Sadd, S_ADDR, S_ADDR, S_ZERO, imm_signed(a - c).unwrap());
            }
            _ => {
                let first = a.min(IMM_MAX as i64);
                self.push(Opcode::Li, S_ADDR, 0, 0, imm_signed(first).unwrap());
                let mut have = first;
                while have < a {
                    let step = (a - have).min(IMM_MAX as i64);
                    self.push(Opcode::Sadd, S_ADDR, S_ADDR, S_ZERO, imm_signed(step).unwrap());
                    have += step;
                }
            }
        }
        self.addr = Some(a);
    }

    fn store(&mut self, addr: u32, src: u8) {
        self.set_addr(addr);
        self.push(Opcode::Vstore, 0, S_ADDR, src, 1);
    }

    fn load(&mut self, dst: u8, addr: u32) {
        self.set_addr(addr);
        self.push(Opcode::Vload, dst, S_ADDR, 0, 1);
    }

    /// Register holding `node`, reloading spilled values into scratch `k`.
    fn operand(&mut self, node: NodeId, k: usize) -> u8 {
        if let Some(r) = self.alloc.reg[node] {
            return r;
        }
        let r = self.alloc.scratch[k];
        self.load(r, self.alloc.spill[node].expect("live value is placed"));
        r
    }

    fn node(&mut self, dfg: &Dfg, id: NodeId) {
        let n = &dfg.nodes[id];
        let args: Vec<u8> = n.args.iter().enumerate().map(|(k, &a)| self.operand(a, k)).collect();
        let d = self.alloc.reg[id].unwrap_or(self.alloc.scratch[0]);
        let f = self.float;
        match n.op {
            NodeOp::Input(_) => unreachable!("inputs issue no code"),
            NodeOp::Const(k) => {
                self.push(Opcode::Li, S_TMP, 0, 0, imm_signed(k as i64).unwrap());
                let cvt = if f != 0 { FLAG_F32 | FLAG_CVT } else { 0 };
                self.push(Opcode::Vbcast, d, S_TMP, 0, cvt);
            }
            NodeOp::StateIn => self.load(d, 0),
            NodeOp::Bin(op) => {
                let opc = match op {
                    BinOp::Add => Opcode::Vadd,
                    BinOp::Sub => Opcode::Vsub,
                    BinOp::Mul => Opcode::Vmul,
                    BinOp::Max => Opcode::Vmax,
                    BinOp::Min => Opcode::Vmin,
                };
                self.push(opc, d, args[0], args[1], f);
            }
            NodeOp::Mac => self.push(Opcode::Vmac, d, args[0], args[1], f | ((args[2] as u16) << 6)),
            NodeOp::Scan => self.push(Opcode::VscanAdd, d, args[0], 0, f),
            NodeOp::Reduce => {
                self.push(Opcode::VreduceAdd, S_TMP, args[0], 0, f);
                self.push(Opcode::Vbcast, d, S_TMP, 0, f);
            }
        }
        if self.alloc.reg[id].is_none() {
            if let Some(addr) = self.alloc.spill[id] {
                self.store(addr, d);
            }
        }
    }
}

/// Generates the program. Each schedule stage becomes one HALT-terminated
/// segment.
pub fn emit(dfg: &Dfg, s: &Schedule, alloc: &Allocation, config: &CgraConfig) -> CgraProgram {
    let mut e = Emitter {
        alloc,
        float: if dfg.elem == Elem::F32 { FLAG_F32 } else { 0 },
        code: Vec::new(),
        addr: None,
    };
    let mut segments = Vec::new();

    // Inputs without a register go to memory before anything else runs.
    for &i in &dfg.inputs {
        if let Some(addr) = alloc.spill[i] {
            e.store(addr, i as u8);
        }
    }
    let stages = s.stages();
    for k in 0..stages {
        for t in s.stage_range(k) {
            e.node(dfg, s.order[t]);
        }
        if k + 1 < stages {
            e.push(Opcode::Halt, 0, 0, 0, 0);
            let spu = s.spu[s.order[s.stage_starts[k]]].unwrap();
            segments.push(Segment {
                spu,
                code: std::mem::take(&mut e.code),
            });
        }
    }

    if let Some(st) = dfg.state_out {
        let r = e.operand(st, 0);
        e.store(0, r);
    }
    let out = e.operand(dfg.output, 1);
    e.push(Opcode::Halt, 0, 0, 0, 0);
    let last_spu = s.order.last().map_or(0, |&id| s.spu[id].unwrap());
    segments.push(Segment {
        spu: last_spu,
        code: std::mem::take(&mut e.code),
    });

    CgraProgram {
        config: *config,
        elem: dfg.elem,
        n_inputs: dfg.inputs.len() as u8,
        uses_state: dfg.uses_state,
        output: if dfg.output_scalar {
            OutputSpec::Lane0(out)
        } else {
            OutputSpec::Vector(out)
        },
        segments,
    }
}
