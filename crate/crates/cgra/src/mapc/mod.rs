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

//! Compiler from the map-function language to CGRA programs:
//! parse, lower to a DFG, schedule, allocate registers, emit.

pub mod ast;
pub mod dfg;
pub mod emit;
pub mod eval;
pub mod gen;
pub mod parse;
pub mod regalloc;
pub mod schedule;
pub mod validate;

use thiserror::Error;

pub use ast::MapAst;
pub use dfg::{lower_to_dfg, Dfg, DfgError};
pub use eval::{eval_dsl, eval_stage, EvalError, EvalOutput, EvalValue};
pub use parse::{parse_dsl, ParseError};
pub use regalloc::{allocate_registers, validate_allocation, AllocError, Allocation};
pub use schedule::{schedule_dfg, validate_schedule, Schedule};
pub use validate::validate_program;

use crate::config::{CgraConfig, ConfigError};
use crate::program::CgraProgram;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Dfg(#[from] DfgError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error("segment for SPU {spu} has {len} instructions, imem holds {limit}")]
    ImemOverflow { spu: u32, len: usize, limit: u32 },
    #[error("internal check failed: {0}")]
    Internal(String),
}

/// Every intermediate product of one compilation.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub ast: MapAst,
    pub dfg: Dfg,
    pub schedule: Schedule,
    pub alloc: Allocation,
    pub program: CgraProgram,
}

pub fn compile_ast(ast: &MapAst, config: &CgraConfig) -> Result<Compiled, CompileError> {
    config.validate()?;
    let dfg = lower_to_dfg(ast)?;
    let schedule = schedule_dfg(&dfg, config);
    let alloc = allocate_registers(&dfg, &schedule, config)?;
    let program = emit::emit(&dfg, &schedule, &alloc, config);
    for seg in &program.segments {
        if seg.code.len() > config.imem_words as usize {
            return Err(CompileError::ImemOverflow {
                spu: seg.spu,
                len: seg.code.len(),
                limit: config.imem_words,
            });
        }
    }
    Ok(Compiled {
        ast: ast.clone(),
        dfg,
        schedule,
        alloc,
        program,
    })
}

/// Compiles and runs all three validators on the result.
pub fn compile_checked(src: &str, config: &CgraConfig) -> Result<Compiled, CompileError> {
    let c = compile_ast(&parse_dsl(src)?, config)?;
    c.validate(config).map_err(CompileError::Internal)?;
    Ok(c)
}

/// Compiles `src` for `config`.
pub fn compile(src: &str, config: &CgraConfig) -> Result<CgraProgram, CompileError> {
    Ok(compile_ast(&parse_dsl(src)?, config)?.program)
}

impl Compiled {
    /// Schedule, allocation and symbolic program checks.
    pub fn validate(&self, config: &CgraConfig) -> Result<(), String> {
        validate_schedule(&self.dfg, &self.schedule, config).map_err(|e| format!("schedule: {e}"))?;
        validate_allocation(&self.dfg, &self.schedule, &self.alloc, config).map_err(|e| format!("registers: {e}"))?;
        validate_program(&self.dfg, &self.program).map_err(|e| format!("program: {e}"))
    }
}

/// Result of running a compiled program on raw lane words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordRun {
    pub out: EvalValue,
    /// State words `0..lanes` after the run.
    pub state: Vec<u32>,
    pub cycles: u64,
}

/// Runs `prog` on lane words with `state` preloaded at address 0.
pub fn exec_words(
    prog: &CgraProgram,
    config: &CgraConfig,
    inputs: &[Vec<u32>],
    state: &[u32],
) -> Result<WordRun, crate::vm::VmError> {
    use acis_core::Value;
    let mut mem = crate::memory::Memory::new();
    for (a, &w) in state.iter().enumerate() {
        mem.write(a as u64, w);
    }
    let vals: Vec<Value> = inputs.iter().map(|w| crate::vm::vector_value(w, prog.elem)).collect();
    let r = crate::vm::exec(prog, config, &vals, &mut mem)?;
    let out = match &r.outputs[0] {
        Value::I32(x) => EvalValue::Scalar(*x as u32),
        Value::F32(x) => EvalValue::Scalar(x.to_bits()),
        Value::VecI32(xs) => EvalValue::Vector(xs.iter().map(|&x| x as u32).collect()),
        Value::VecF32(xs) => EvalValue::Vector(xs.iter().map(|x| x.to_bits()).collect()),
        other => unreachable!("VM produced {}", other.kind()),
    };
    let state = (0..config.lanes as u64).map(|a| mem.read(a)).collect();
    Ok(WordRun {
        out,
        state,
        cycles: r.cycles,
    })
}

/// Runs the reference evaluator with the same conventions as [`exec_words`].
pub fn eval_words(
    ast: &MapAst,
    lanes: usize,
    inputs: &[Vec<u32>],
    state: &[u32],
) -> Result<(EvalValue, Vec<u32>), EvalError> {
    let r = eval_dsl(ast, lanes, inputs, state)?;
    let mut init = state.to_vec();
    init.resize(lanes, 0);
    Ok((r.out, r.state.unwrap_or(init)))
}
