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

//! Tree-walking reference evaluator.

use std::collections::HashMap;

use acis_core::Value;
use thiserror::Error;

use super::ast::{BinOp, Expr, ExprKind, MapAst, Stmt};
use crate::memory::Memory;
use crate::program::Elem;
use crate::stage::{join_outputs, split_value, ChunkOut, StageError};

/// Evaluation stops after this many expression nodes.
pub const EVAL_STEP_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("program takes {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("input {0} is not {1} lanes wide")]
    Width(usize, usize),
    #[error("evaluation exceeded {EVAL_STEP_LIMIT} steps")]
    StepLimit,
    #[error(transparent)]
    Stage(#[from] StageError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalValue {
    Vector(Vec<u32>),
    Scalar(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOutput {
    pub out: EvalValue,
    /// New state, if the program assigns it.
    pub state: Option<Vec<u32>>,
}

struct Eval<'a> {
    elem: Elem,
    lanes: usize,
    inputs: &'a [Vec<u32>],
    state: Vec<u32>,
    state_written: bool,
    out: Option<EvalValue>,
    scopes: Vec<HashMap<String, EvalValue>>,
    steps: u64,
}

fn fl(w: u32) -> f32 {
    f32::from_bits(w)
}

impl Eval<'_> {
    fn bin(&self, op: BinOp, a: u32, b: u32) -> u32 {
        match self.elem {
            Elem::I32 => {
                let (x, y) = (a as i32, b as i32);
                (match op {
                    BinOp::Add => x.wrapping_add(y),
                    BinOp::Sub => x.wrapping_sub(y),
                    BinOp::Mul => x.wrapping_mul(y),
                    BinOp::Max => std::cmp::max(x, y),
                    BinOp::Min => std::cmp::min(x, y),
                }) as u32
            }
            Elem::F32 => {
                let (x, y) = (fl(a), fl(b));
                (match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Max => {
                        if y > x {
                            y
                        } else {
                            x
                        }
                    }
                    BinOp::Min => {
                        if y < x {
                            y
                        } else {
                            x
                        }
                    }
                })
                .to_bits()
            }
        }
    }

    fn vector(&self, v: EvalValue) -> Vec<u32> {
        match v {
            EvalValue::Vector(x) => x,
            EvalValue::Scalar(s) => vec![s; self.lanes],
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<EvalValue, EvalError> {
        self.steps += 1;
        if self.steps > EVAL_STEP_LIMIT {
            return Err(EvalError::StepLimit);
        }
        Ok(match &e.kind {
            ExprKind::Input(k) => EvalValue::Vector(self.inputs[*k as usize].clone()),
            ExprKind::State => EvalValue::Vector(self.state.clone()),
            ExprKind::Lit(k) => {
                let w = match self.elem {
                    Elem::I32 => *k as u32,
                    Elem::F32 => (*k as f32).to_bits(),
                };
                EvalValue::Vector(vec![w; self.lanes])
            }
            ExprKind::Var(name) => self
                .scopes
                .iter()
                .rev()
                .find_map(|s| s.get(name))
                .cloned()
                .expect("checked by parser"),
            ExprKind::Bin(op, a, b) => {
                let x = self.expr(a)?;
                let y = self.expr(b)?;
                let (x, y) = (self.vector(x), self.vector(y));
                EvalValue::Vector(x.iter().zip(&y).map(|(&p, &q)| self.bin(*op, p, q)).collect())
            }
            ExprKind::Mac(a, b, c) => {
                let x = self.expr(a)?;
                let y = self.expr(b)?;
                let z = self.expr(c)?;
                let (x, y, z) = (self.vector(x), self.vector(y), self.vector(z));
                EvalValue::Vector(
                    (0..self.lanes)
                        .map(|i| self.bin(BinOp::Add, self.bin(BinOp::Mul, x[i], y[i]), z[i]))
                        .collect(),
                )
            }
            ExprKind::Scan(a) => {
                let x = self.expr(a)?;
                let x = self.vector(x);
                let mut out = Vec::with_capacity(self.lanes);
                for (i, &w) in x.iter().enumerate() {
                    let next = if i == 0 { w } else { self.bin(BinOp::Add, out[i - 1], w) };
                    out.push(next);
                }
                EvalValue::Vector(out)
            }
            ExprKind::Reduce(a) => {
                let x = self.expr(a)?;
                let x = self.vector(x);
                let mut acc = x[0];
                for &w in &x[1..] {
                    acc = self.bin(BinOp::Add, acc, w);
                }
                EvalValue::Scalar(acc)
            }
            ExprKind::Bcast(a) => {
                let x = self.expr(a)?;
                EvalValue::Vector(self.vector(x))
            }
        })
    }

    fn assign(&mut self, name: &str, v: EvalValue) {
        for s in self.scopes.iter_mut().rev() {
            if let Some(slot) = s.get_mut(name) {
                *slot = v;
                return;
            }
        }
        unreachable!("checked by parser");
    }

    fn stmts(&mut self, stmts: &[Stmt]) -> Result<(), EvalError> {
        for s in stmts {
            match s {
                Stmt::Let(name, e) => {
                    let v = self.expr(e)?;
                    self.scopes.last_mut().unwrap().insert(name.clone(), v);
                }
                Stmt::Assign(name, e, _) => {
                    let v = self.expr(e)?;
                    self.assign(name, v);
                }
                Stmt::Out(e) => self.out = Some(self.expr(e)?),
                Stmt::State(e) => {
                    let v = self.expr(e)?;
                    self.state = self.vector(v);
                    self.state_written = true;
                }
                Stmt::Repeat(k, body) => {
                    for _ in 0..*k {
                        self.scopes.push(HashMap::new());
                        self.stmts(body)?;
                        self.scopes.pop();
                        self.steps += 1;
                        if self.steps > EVAL_STEP_LIMIT {
                            return Err(EvalError::StepLimit);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Evaluates `ast` on lane words. `state` is the incoming state vector.
pub fn eval_dsl(ast: &MapAst, lanes: usize, inputs: &[Vec<u32>], state: &[u32]) -> Result<EvalOutput, EvalError> {
    if inputs.len() != ast.n_inputs as usize {
        return Err(EvalError::Arity {
            expected: ast.n_inputs as usize,
            got: inputs.len(),
        });
    }
    for (k, x) in inputs.iter().enumerate() {
        if x.len() != lanes {
            return Err(EvalError::Width(k, lanes));
        }
    }
    let mut st = state.to_vec();
    st.resize(lanes, 0);
    let mut ev = Eval {
        elem: ast.elem,
        lanes,
        inputs,
        state: st,
        state_written: false,
        out: None,
        scopes: vec![HashMap::new()],
        steps: 0,
    };
    ev.stmts(&ast.stmts)?;
    let state = ev.state_written.then_some(ev.state);
    Ok(EvalOutput {
        out: ev.out.expect("checked by parser"),
        state,
    })
}

/// Reference for `map_stage`: same chunking, state held in `mem` words
/// `0..lanes`.
pub fn eval_stage(ast: &MapAst, lanes: usize, value: &Value, mem: &mut Memory) -> Result<Value, EvalError> {
    if ast.n_inputs != 1 {
        return Err(StageError::Arity(ast.n_inputs).into());
    }
    let split = split_value(value, ast.elem, lanes)?;
    let mut outs = Vec::with_capacity(split.chunks.len());
    for chunk in &split.chunks {
        let state: Vec<u32> = (0..lanes as u64).map(|a| mem.read(a)).collect();
        let r = eval_dsl(ast, lanes, std::slice::from_ref(chunk), &state)?;
        if let Some(s) = r.state {
            for (a, w) in s.into_iter().enumerate() {
                mem.write(a as u64, w);
            }
        }
        outs.push(match r.out {
            EvalValue::Vector(w) => ChunkOut::Vector(w),
            EvalValue::Scalar(w) => ChunkOut::Scalar(w),
        });
    }
    Ok(join_outputs(&outs, &split, ast.elem))
}
