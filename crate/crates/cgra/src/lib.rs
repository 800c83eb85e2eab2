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

//! A CGRA of SIMD processing units: instruction set, assembler, banked
//! look-aside memory, a cycle-counting VM, and `mapc`, a compiler from a
//! small map-function language to CGRA programs.

pub mod asm;
pub mod config;
pub mod isa;
pub mod mapc;
pub mod memory;
pub mod program;
pub mod stage;
pub mod vm;

pub use asm::{assemble, disassemble, AsmError};
pub use config::{CgraConfig, ConfigError};
pub use isa::{Instruction, IsaError, Opcode};
pub use memory::{LookasideMemory, Memory};
pub use program::{BinaryError, CgraProgram, Elem, OutputSpec, Segment};
pub use stage::{map_stage, StageError};
pub use vm::{exec, exec_limited, ExecResult, VmError};
