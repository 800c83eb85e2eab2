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

//! Sequential interpreter with cycle accounting.
//!
//! Segments run in order over one shared register file. Every issued
//! instruction costs 1 cycle; VLOAD and VSTORE add bank-conflict stalls;
//! each segment boundary adds a handoff of [`HANDOFF_CYCLES`].

use acis_core::Value;
use thiserror::Error;

use crate::config::{CgraConfig, ConfigError};
use crate::isa::{sext, Instruction, IsaError, Opcode, FLAG_CVT, FLAG_PASSTHROUGH};
use crate::memory::{bank_stalls, Memory};
use crate::program::{CgraProgram, Elem, OutputSpec};

pub const DEFAULT_CYCLE_LIMIT: u64 = 10_000_000;
/// Cost of moving the register file from one SPU to the next.
pub const HANDOFF_CYCLES: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Isa(#[from] IsaError),
    #[error("program built for {program} lanes, config has {config}")]
    LaneMismatch { program: u32, config: u32 },
    #[error("segment {segment} targets SPU {spu}, config has {spu_count}")]
    SpuOutOfRange { segment: usize, spu: u32, spu_count: u32 },
    #[error("segment for SPU {spu} has {len} instructions, imem holds {limit}")]
    ImemOverflow { spu: u32, len: usize, limit: u32 },
    #[error("program takes {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("input {index}: {reason}")]
    BadInput { index: usize, reason: String },
    #[error("memory address {addr} out of bounds ({limit} words)")]
    MemOutOfBounds { addr: i64, limit: u64 },
    #[error("cycle limit {0} exceeded")]
    CycleLimitExceeded(u64),
    #[error("branch to {target} leaves segment of {len} instructions")]
    BranchOutOfRange { target: i64, len: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecResult {
    pub outputs: Vec<Value>,
    /// Total cycles including handoffs.
    pub cycles: u64,
    /// Cycles spent in each executed segment.
    pub stage_cycles: Vec<u64>,
}

impl ExecResult {
    /// Steady-state initiation interval of the SPU pipeline.
    pub fn pipeline_interval(&self) -> u64 {
        self.stage_cycles.iter().copied().max().unwrap_or(0)
    }
}

/// Lane words of an input value, zero-padded to `lanes`.
pub fn input_words(v: &Value, elem: Elem, lanes: usize) -> Result<Vec<u32>, String> {
    let mut words: Vec<u32> = match (elem, v) {
        (Elem::I32, Value::I32(x)) => vec![*x as u32],
        (Elem::I32, Value::VecI32(xs)) => xs.iter().map(|&x| x as u32).collect(),
        (Elem::F32, Value::F32(x)) => vec![x.to_bits()],
        (Elem::F32, Value::VecF32(xs)) => xs.iter().map(|x| x.to_bits()).collect(),
        _ => return Err(format!("{} value does not fit {} lanes", v.kind(), elem.name())),
    };
    if words.len() > lanes {
        return Err(format!("{} elements exceed {lanes} lanes", words.len()));
    }
    words.resize(lanes, 0);
    Ok(words)
}

pub fn vector_value(words: &[u32], elem: Elem) -> Value {
    match elem {
        Elem::I32 => Value::VecI32(words.iter().map(|&w| w as i32).collect()),
        Elem::F32 => Value::VecF32(words.iter().map(|&w| f32::from_bits(w)).collect()),
    }
}

pub fn scalar_value(word: u32, elem: Elem) -> Value {
    match elem {
        Elem::I32 => Value::I32(word as i32),
        Elem::F32 => Value::F32(f32::from_bits(word)),
    }
}

/// Static checks of `prog` against `config`.
pub fn check_program(prog: &CgraProgram, config: &CgraConfig) -> Result<(), VmError> {
    config.validate()?;
    if prog.config.lanes != config.lanes {
        return Err(VmError::LaneMismatch {
            program: prog.config.lanes,
            config: config.lanes,
        });
    }
    for (k, seg) in prog.segments.iter().enumerate() {
        if seg.spu >= config.spu_count {
            return Err(VmError::SpuOutOfRange {
                segment: k,
                spu: seg.spu,
                spu_count: config.spu_count,
            });
        }
        if seg.code.len() > config.imem_words as usize {
            return Err(VmError::ImemOverflow {
                spu: seg.spu,
                len: seg.code.len(),
                limit: config.imem_words,
            });
        }
        for i in &seg.code {
            i.check_registers(config)?;
        }
    }
    let (class, index, limit) = match prog.output {
        OutputSpec::Vector(r) | OutputSpec::Lane0(r) => ("vector", r, config.vregs),
        OutputSpec::Scalar(r) => ("scalar", r, config.sregs),
    };
    if index as u32 >= limit {
        return Err(IsaError::RegisterOutOfRange { class, index, limit }.into());
    }
    if prog.n_inputs as u32 > config.vregs {
        return Err(IsaError::RegisterOutOfRange {
            class: "vector",
            index: prog.n_inputs,
            limit: config.vregs,
        }
        .into());
    }
    Ok(())
}

/// Runs `prog` with the default cycle limit.
pub fn exec(
    prog: &CgraProgram,
    config: &CgraConfig,
    inputs: &[Value],
    mem: &mut Memory,
) -> Result<ExecResult, VmError> {
    exec_limited(prog, config, inputs, mem, DEFAULT_CYCLE_LIMIT)
}

pub fn exec_limited(
    prog: &CgraProgram,
    config: &CgraConfig,
    inputs: &[Value],
    mem: &mut Memory,
    cycle_limit: u64,
) -> Result<ExecResult, VmError> {
    check_program(prog, config)?;
    if inputs.len() != prog.n_inputs as usize {
        return Err(VmError::ArityMismatch {
            expected: prog.n_inputs as usize,
            got: inputs.len(),
        });
    }
    let lanes = config.lanes as usize;
    let mut st = State {
        cfg: config,
        lanes,
        v: vec![vec![0u32; lanes]; config.vregs as usize],
        s: vec![0u32; config.sregs as usize],
        mem,
        cycles: 0,
        limit: cycle_limit,
    };
    for (k, x) in inputs.iter().enumerate() {
        st.v[k] = input_words(x, prog.elem, lanes).map_err(|reason| VmError::BadInput { index: k, reason })?;
    }

    let mut stage_cycles = Vec::with_capacity(prog.segments.len());
    for (k, seg) in prog.segments.iter().enumerate() {
        if k > 0 {
            st.charge(HANDOFF_CYCLES)?;
        }
        let start = st.cycles;
        let passthrough = st.run_segment(&seg.code)?;
        stage_cycles.push(st.cycles - start);
        if passthrough {
            return Ok(ExecResult {
                outputs: inputs.to_vec(),
                cycles: st.cycles,
                stage_cycles,
            });
        }
    }

    let out = match prog.output {
        OutputSpec::Vector(r) => vector_value(&st.v[r as usize], prog.elem),
        OutputSpec::Lane0(r) => scalar_value(st.v[r as usize][0], prog.elem),
        OutputSpec::Scalar(r) => scalar_value(st.s[r as usize], prog.elem),
    };
    Ok(ExecResult {
        outputs: vec![out],
        cycles: st.cycles,
        stage_cycles,
    })
}

struct State<'a> {
    cfg: &'a CgraConfig,
    lanes: usize,
    v: Vec<Vec<u32>>,
    s: Vec<u32>,
    mem: &'a mut Memory,
    cycles: u64,
    limit: u64,
}

fn f(w: u32) -> f32 {
    f32::from_bits(w)
}

/// Elementwise binary op on lane words.
fn lane_op(op: Opcode, float: bool, a: u32, b: u32) -> u32 {
    if float {
        let (x, y) = (f(a), f(b));
        let r = match op {
            Opcode::Vadd => x + y,
            Opcode::Vsub => x - y,
            Opcode::Vmul => x * y,
            Opcode::Vmax => {
                if y > x {
                    y
                } else {
                    x
                }
            }
            Opcode::Vmin => {
                if y < x {
                    y
                } else {
                    x
                }
            }
            _ => unreachable!("not a lane op"),
        };
        r.to_bits()
    } else {
        let (x, y) = (a as i32, b as i32);
        let r = match op {
            Opcode::Vadd => x.wrapping_add(y),
            Opcode::Vsub => x.wrapping_sub(y),
            Opcode::Vmul => x.wrapping_mul(y),
            Opcode::Vmax => x.max(y),
            Opcode::Vmin => x.min(y),
            _ => unreachable!("not a lane op"),
        };
        r as u32
    }
}

fn add(float: bool, a: u32, b: u32) -> u32 {
    lane_op(Opcode::Vadd, float, a, b)
}

impl State<'_> {
    fn charge(&mut self, c: u64) -> Result<(), VmError> {
        self.cycles += c;
        if self.cycles > self.limit {
            return Err(VmError::CycleLimitExceeded(self.limit));
        }
        Ok(())
    }

    /// Lane addresses of a VLOAD/VSTORE, bounds-checked.
    fn addresses(&self, i: &Instruction) -> Result<Vec<u64>, VmError> {
        let base = self.s[i.src1 as usize] as i32 as i64;
        let stride = i.imm as i64;
        let limit = self.cfg.mem_words();
        (0..self.lanes as i64)
            .map(|k| {
                let addr = base + k * stride;
                if addr < 0 || addr as u64 >= limit {
                    Err(VmError::MemOutOfBounds { addr, limit })
                } else {
                    Ok(addr as u64)
                }
            })
            .collect()
    }

    /// Runs one segment. Returns true on a passthrough HALT.
    fn run_segment(&mut self, code: &[Instruction]) -> Result<bool, VmError> {
        let mut pc = 0usize;
        while pc < code.len() {
            let i = code[pc];
            self.charge(1)?;
            let float = i.is_f32();
            let (d, a, b) = (i.dst as usize, i.src1 as usize, i.src2 as usize);
            let mut next = pc + 1;
            match i.op {
                Opcode::Nop => {}
                Opcode::Halt => return Ok(i.imm & FLAG_PASSTHROUGH != 0),
                Opcode::Vadd | Opcode::Vsub | Opcode::Vmul | Opcode::Vmax | Opcode::Vmin => {
                    let r: Vec<u32> = (0..self.lanes)
                        .map(|k| lane_op(i.op, float, self.v[a][k], self.v[b][k]))
                        .collect();
                    self.v[d] = r;
                }
                Opcode::Vmac => {
                    let c = i.mac_acc() as usize;
                    let r: Vec<u32> = (0..self.lanes)
                        .map(|k| {
                            let p = lane_op(Opcode::Vmul, float, self.v[a][k], self.v[b][k]);
                            add(float, p, self.v[c][k])
                        })
                        .collect();
                    self.v[d] = r;
                }
                Opcode::VscanAdd => {
                    let mut acc = self.v[a][0];
                    let mut r = Vec::with_capacity(self.lanes);
                    r.push(acc);
                    for k in 1..self.lanes {
                        acc = add(float, acc, self.v[a][k]);
                        r.push(acc);
                    }
                    self.v[d] = r;
                }
                Opcode::VreduceAdd => {
                    let src = &self.v[a];
                    self.s[d] = src[1..].iter().fold(src[0], |acc, &x| add(float, acc, x));
                }
                Opcode::Vbcast => {
                    let mut w = self.s[a];
                    if i.imm & FLAG_CVT != 0 {
                        w = (w as i32 as f32).to_bits();
                    }
                    self.v[d] = vec![w; self.lanes];
                }
                Opcode::Vload => {
                    let addrs = self.addresses(&i)?;
                    self.charge(bank_stalls(self.cfg, addrs.iter().copied()))?;
                    self.v[d] = addrs.iter().map(|&x| self.mem.read(x)).collect();
                }
                Opcode::Vstore => {
                    let addrs = self.addresses(&i)?;
                    self.charge(bank_stalls(self.cfg, addrs.iter().copied()))?;
                    for (k, &x) in addrs.iter().enumerate() {
                        let w = self.v[b][k];
                        self.mem.write(x, w);
                    }
                }
                Opcode::Li => self.s[d] = sext(i.imm) as u32,
                Opcode::Sadd => {
                    self.s[d] = self.s[a].wrapping_add(self.s[b]).wrapping_add(sext(i.imm) as u32);
                }
                Opcode::Bnz => {
                    self.s[a] = self.s[a].wrapping_sub(1);
                    if self.s[a] != 0 {
                        let target = pc as i64 + sext(i.imm) as i64;
                        if target < 0 || target as usize >= code.len() {
                            return Err(VmError::BranchOutOfRange {
                                target,
                                len: code.len(),
                            });
                        }
                        next = target as usize;
                    }
                }
            }
            pc = next;
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::assemble;

    fn run(src: &str, inputs: &[Value], mem: &mut Memory) -> ExecResult {
        let cfg = CgraConfig::default();
        let p = assemble(src, &cfg).unwrap();
        exec(&p, &cfg, inputs, mem).unwrap()
    }

    #[test]
    fn vadd_symmetric() {
        let a = Value::VecI32((1..=16).collect());
        let b = Value::VecI32((1..=16).rev().collect());
        let r = run(
            ".inputs 2\n.output v2\nVADD v2, v0, v1\nHALT",
            &[a, b],
            &mut Memory::new(),
        );
        assert_eq!(r.outputs, vec![Value::VecI32(vec![17; 16])]);
        assert_eq!(r.cycles, 2);
    }

    #[test]
    fn vscan_matches_sequential_scan() {
        let x: Vec<i32> = vec![1, 2, 3, 4];
        let r = run(
            ".inputs 1\n.output v1\nVSCAN_ADD v1, v0\nHALT",
            &[Value::VecI32(x.clone())],
            &mut Memory::new(),
        );
        let mut want = Vec::new();
        let mut acc = 0;
        for k in 0..16 {
            acc += x.get(k).copied().unwrap_or(0);
            want.push(acc);
        }
        assert_eq!(want[..5], [1, 3, 6, 10, 10]);
        assert_eq!(r.outputs, vec![Value::VecI32(want)]);
    }

    #[test]
    fn bnz_loop_sums_region() {
        let mut mem = Memory::new();
        for a in 0..64u64 {
            mem.write(a, (a * 7 + 3) as u32);
        }
        let src = "\
.output s3
    LI s0, 0
    LI s1, 4
    LI s3, 0
top:
    VLOAD v1, s0, 1
    VREDUCE_ADD s2, v1
    SADD s3, s3, s2, 0
    SADD s0, s0, s4, 16
    BNZ s1, top
    HALT
";
        let r = run(src, &[], &mut mem);
        let want: i32 = (0..64).map(|a| a * 7 + 3).sum();
        assert_eq!(r.outputs, vec![Value::I32(want)]);
        // 3 setup + 4 iterations of 5 + HALT, no bank stalls.
        assert_eq!(r.cycles, 3 + 4 * 5 + 1);
    }

    #[test]
    fn passthrough_halt() {
        let x = Value::VecF32(vec![1.5, -2.0]);
        let r = run(
            ".elem f32\n.inputs 1\nHALT 1",
            std::slice::from_ref(&x),
            &mut Memory::new(),
        );
        assert_eq!(r.outputs, vec![x]);
        assert_eq!(r.cycles, 1);
    }

    #[test]
    fn float_ops_and_convert() {
        let a = Value::VecF32(vec![1.5; 16]);
        let src = ".elem f32\n.inputs 1\n.output v3\nLI s0, -3\nVBCAST.fi v2, s0\nVMAC.f v3, v0, v0, v2\nHALT";
        let r = run(src, &[a], &mut Memory::new());
        assert_eq!(r.outputs, vec![Value::VecF32(vec![1.5 * 1.5 - 3.0; 16])]);
    }

    #[test]
    fn segments_add_handoff() {
        let src = ".inputs 1\n.output v0\n.spu 0\nNOP\nHALT\n.spu 1\nNOP\nHALT";
        let r = run(src, &[Value::VecI32(vec![1])], &mut Memory::new());
        assert_eq!(r.stage_cycles, vec![2, 2]);
        assert_eq!(r.cycles, 5);
        assert_eq!(r.pipeline_interval(), 2);
    }

    #[test]
    fn errors() {
        let cfg = CgraConfig::default();
        let p = assemble("LI s0, -1\nVLOAD v0, s0, 1", &cfg).unwrap();
        assert!(matches!(
            exec(&p, &cfg, &[], &mut Memory::new()),
            Err(VmError::MemOutOfBounds { addr: -1, .. })
        ));
        let p = assemble("LI s0, 0\ntop:\nBNZ s0, top", &cfg).unwrap();
        assert!(matches!(
            exec_limited(&p, &cfg, &[], &mut Memory::new(), 1000),
            Err(VmError::CycleLimitExceeded(1000))
        ));
        let p = assemble(".inputs 1\nHALT", &cfg).unwrap();
        assert!(matches!(
            exec(&p, &cfg, &[], &mut Memory::new()),
            Err(VmError::ArityMismatch { .. })
        ));
        let bad = Value::VecF32(vec![1.0]);
        assert!(matches!(
            exec(&p, &cfg, &[bad], &mut Memory::new()),
            Err(VmError::BadInput { .. })
        ));
        let narrow = CgraConfig { lanes: 8, ..cfg };
        assert!(matches!(
            exec(&p, &narrow, &[Value::I32(1)], &mut Memory::new()),
            Err(VmError::LaneMismatch { .. })
        ));
    }
}
