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

//! Symbolic check that an emitted program computes its DFG.
//!
//! Registers and memory slots hold interned value expressions. Each
//! instruction rebuilds the expression it computes; the output register and
//! the state slot must end up holding the expressions of the DFG's output
//! and new-state nodes. A register clobbered while still live surfaces as a
//! wrong or missing expression.

use std::collections::HashMap;

use super::ast::BinOp;
use super::dfg::{Dfg, NodeOp};
use crate::isa::{sext, Opcode, FLAG_CVT, FLAG_F32};
use crate::program::{CgraProgram, Elem, OutputSpec};

type Sym = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Scalar {
    Int(i64),
    /// The lane sum of a vector expression.
    Sum(Sym),
    Unknown,
}

#[derive(Default)]
struct Interner {
    table: HashMap<(NodeOp, Vec<Sym>), Sym>,
}

impl Interner {
    fn get(&mut self, op: NodeOp, args: Vec<Sym>) -> Sym {
        let next = self.table.len() as Sym;
        *self.table.entry((op, args)).or_insert(next)
    }
}

pub fn validate_program(dfg: &Dfg, prog: &CgraProgram) -> Result<(), String> {
    let mut syms = Interner::default();
    let mut node_sym = Vec::with_capacity(dfg.nodes.len());
    for n in &dfg.nodes {
        let args = n.args.iter().map(|&a| node_sym[a]).collect();
        node_sym.push(syms.get(n.op, args));
    }
    let want_flag = if dfg.elem == Elem::F32 { FLAG_F32 } else { 0 };

    let vregs = prog.config.vregs as usize;
    let mut v: Vec<Option<Sym>> = vec![None; vregs];
    for (k, slot) in v.iter_mut().enumerate().take(prog.n_inputs as usize) {
        *slot = Some(syms.get(NodeOp::Input(k as u8), vec![]));
    }
    let mut s = vec![Scalar::Int(0); prog.config.sregs as usize];
    let mut mem: HashMap<i64, Sym> = HashMap::new();
    let state_in = dfg.uses_state.then(|| syms.get(NodeOp::StateIn, vec![]));
    if let Some(st) = state_in {
        mem.insert(0, st);
    }

    let read = |v: &Vec<Option<Sym>>, r: u8, at: usize| {
        v.get(r as usize)
            .copied()
            .flatten()
            .ok_or(format!("instruction {at} reads undefined v{r}"))
    };

    let mut at = 0usize;
    for seg in &prog.segments {
        for i in &seg.code {
            at += 1;
            let (d, a, b) = (i.dst, i.src1, i.src2);
            let flag = i.imm & FLAG_F32;
            let vec_op = |op: Opcode| -> Result<(), String> {
                if op.has_float_variant() && op != Opcode::Vbcast && flag != want_flag {
                    return Err(format!("instruction {at} has the wrong element flag"));
                }
                Ok(())
            };
            match i.op {
                Opcode::Nop => {}
                Opcode::Halt => break,
                Opcode::Vadd | Opcode::Vsub | Opcode::Vmul | Opcode::Vmax | Opcode::Vmin => {
                    vec_op(i.op)?;
                    let op = match i.op {
                        Opcode::Vadd => BinOp::Add,
                        Opcode::Vsub => BinOp::Sub,
                        Opcode::Vmul => BinOp::Mul,
                        Opcode::Vmax => BinOp::Max,
                        _ => BinOp::Min,
                    };
                    let x = syms.get(NodeOp::Bin(op), vec![read(&v, a, at)?, read(&v, b, at)?]);
                    v[d as usize] = Some(x);
                }
                Opcode::Vmac => {
                    vec_op(i.op)?;
                    let args = vec![read(&v, a, at)?, read(&v, b, at)?, read(&v, i.mac_acc(), at)?];
                    v[d as usize] = Some(syms.get(NodeOp::Mac, args));
                }
                Opcode::VscanAdd => {
                    vec_op(i.op)?;
                    v[d as usize] = Some(syms.get(NodeOp::Scan, vec![read(&v, a, at)?]));
                }
                Opcode::VreduceAdd => {
                    vec_op(i.op)?;
                    s[d as usize] = Scalar::Sum(syms.get(NodeOp::Reduce, vec![read(&v, a, at)?]));
                }
                Opcode::Vbcast => {
                    let cvt = i.imm & FLAG_CVT != 0;
                    v[d as usize] = Some(match s[a as usize] {
                        Scalar::Int(k) if cvt == (dfg.elem == Elem::F32) => {
                            let k = i32::try_from(k).map_err(|_| format!("instruction {at} broadcasts {k}"))?;
                            syms.get(NodeOp::Const(k), vec![])
                        }
                        Scalar::Sum(x) if !cvt => x,
                        other => return Err(format!("instruction {at} broadcasts {other:?} with cvt={cvt}")),
                    });
                }
                Opcode::Vload | Opcode::Vstore => {
                    if i.imm != 1 {
                        return Err(format!("instruction {at} uses stride {}", i.imm));
                    }
                    let Scalar::Int(addr) = s[a as usize] else {
                        return Err(format!("instruction {at} has an unknown address"));
                    };
                    if i.op == Opcode::Vload {
                        let x = mem
                            .get(&addr)
                            .copied()
                            .ok_or(format!("instruction {at} loads empty slot {addr}"))?;
                        v[d as usize] = Some(x);
                    } else {
                        mem.insert(addr, read(&v, b, at)?);
                    }
                }
                Opcode::Li => s[d as usize] = Scalar::Int(sext(i.imm) as i64),
                Opcode::Sadd => {
                    s[d as usize] = match (s[a as usize], s[b as usize]) {
                        (Scalar::Int(x), Scalar::Int(y)) => Scalar::Int(x + y + sext(i.imm) as i64),
                        _ => Scalar::Unknown,
                    };
                }
                Opcode::Bnz => return Err(format!("instruction {at} branches in straight-line code")),
            }
        }
    }

    let (reg, lane0) = match prog.output {
        OutputSpec::Vector(r) => (r, false),
        OutputSpec::Lane0(r) => (r, true),
        OutputSpec::Scalar(_) => return Err("compiled output must be a vector register".into()),
    };
    if lane0 != dfg.output_scalar {
        return Err("output shape does not match the program type".into());
    }
    if read(&v, reg, at)? != node_sym[dfg.output] {
        return Err(format!("v{reg} does not hold the output at exit"));
    }
    let final_state = mem.get(&0).copied();
    let want_state = dfg.state_out.map(|n| node_sym[n]).or(state_in);
    if final_state != want_state {
        return Err("state slot does not hold the new state at exit".into());
    }
    Ok(())
}
