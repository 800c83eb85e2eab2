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

//! Textual assembler and disassembler.
//!
//! One instruction per line, `;` starts a comment, `name:` defines a label.
//! Directives: `.elem i32|f32`, `.inputs N`, `.state`,
//! `.output vN|sN|vN lane0`, `.spu N` (starts a segment). Float variants
//! take a `.f` suffix; `VBCAST.fi` also converts i32 to f32.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::config::CgraConfig;
use crate::isa::{imm_signed, imm_unsigned, sext, Instruction, IsaError, Opcode, FLAG_CVT, FLAG_F32};
use crate::program::{CgraProgram, Elem, OutputSpec, Segment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AsmError {
    #[error("line {line}: unknown mnemonic `{name}`")]
    UnknownMnemonic { line: usize, name: String },
    #[error("line {line}: undefined label `{label}`")]
    UndefinedLabel { line: usize, label: String },
    #[error("line {line}: {class} register {index} out of range (have {limit})")]
    RegisterOutOfRange {
        line: usize,
        class: &'static str,
        index: u32,
        limit: u32,
    },
    #[error("segment for SPU {spu} has {len} instructions, imem holds {limit}")]
    ImemOverflow { spu: u32, len: usize, limit: u32 },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

fn syntax(line: usize, msg: impl Into<String>) -> AsmError {
    AsmError::Syntax { line, msg: msg.into() }
}

/// Whitespace-, comma- and case-insensitive token stream with comments removed.
pub fn tokens(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split(';').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect()
}

#[derive(Clone, Copy)]
enum Reg {
    V,
    S,
}

struct PendingBranch {
    seg: usize,
    at: usize,
    label: String,
    line: usize,
}

/// Assembles `text` for `config`.
pub fn assemble(text: &str, config: &CgraConfig) -> Result<CgraProgram, AsmError> {
    let mut prog = CgraProgram {
        config: *config,
        elem: Elem::I32,
        n_inputs: 0,
        uses_state: false,
        output: OutputSpec::Vector(0),
        segments: Vec::new(),
    };
    // Labels are scoped to their segment.
    let mut labels: Vec<HashMap<String, usize>> = Vec::new();
    let mut pending: Vec<PendingBranch> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut rest = raw.split(';').next().unwrap_or("").trim();
        while let Some(colon) = label_end(rest) {
            let name = rest[..colon].trim();
            if prog.segments.is_empty() {
                prog.segments.push(Segment {
                    spu: 0,
                    code: Vec::new(),
                });
                labels.push(HashMap::new());
            }
            let seg = prog.segments.len() - 1;
            let here = prog.segments[seg].code.len();
            if labels[seg].insert(name.to_string(), here).is_some() {
                return Err(syntax(line, format!("duplicate label `{name}`")));
            }
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }
        let (head, args) = match rest.find(char::is_whitespace) {
            Some(p) => (&rest[..p], rest[p..].trim()),
            None => (rest, ""),
        };
        let args: Vec<&str> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(str::trim).collect()
        };

        if let Some(dir) = head.strip_prefix('.') {
            directive(&mut prog, &mut labels, dir, &args, line)?;
            continue;
        }

        if prog.segments.is_empty() {
            prog.segments.push(Segment {
                spu: 0,
                code: Vec::new(),
            });
            labels.push(HashMap::new());
        }
        let seg = prog.segments.len() - 1;
        let at = prog.segments[seg].code.len();
        let (instr, label) = instruction(head, &args, line, config)?;
        if let Some(label) = label {
            pending.push(PendingBranch { seg, at, label, line });
        }
        prog.segments[seg].code.push(instr);
    }

    for b in pending {
        let target = *labels[b.seg].get(&b.label).ok_or(AsmError::UndefinedLabel {
            line: b.line,
            label: b.label.clone(),
        })?;
        let off = target as i64 - b.at as i64;
        let imm = imm_signed(off).map_err(|_| syntax(b.line, "branch offset out of range"))?;
        prog.segments[b.seg].code[b.at].imm = imm;
    }

    for seg in &prog.segments {
        if seg.code.len() > config.imem_words as usize {
            return Err(AsmError::ImemOverflow {
                spu: seg.spu,
                len: seg.code.len(),
                limit: config.imem_words,
            });
        }
    }
    Ok(prog)
}

fn label_end(s: &str) -> Option<usize> {
    let colon = s.find(':')?;
    let name = s[..colon].trim();
    let ok = !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit());
    ok.then_some(colon)
}

fn directive(
    prog: &mut CgraProgram,
    labels: &mut Vec<HashMap<String, usize>>,
    dir: &str,
    args: &[&str],
    line: usize,
) -> Result<(), AsmError> {
    // `.output v3 lane0` has a space-separated modifier.
    let words: Vec<&str> = args.iter().flat_map(|a| a.split_whitespace()).collect();
    match (dir.to_ascii_lowercase().as_str(), words.as_slice()) {
        ("elem", [e]) => {
            prog.elem =
                Elem::from_name(&e.to_ascii_lowercase()).ok_or_else(|| syntax(line, format!("unknown elem `{e}`")))?;
        }
        ("inputs", [n]) => {
            let n: u8 = n.parse().map_err(|_| syntax(line, "bad input count"))?;
            if n as u32 > prog.config.vregs {
                return Err(syntax(line, "more inputs than vector registers"));
            }
            prog.n_inputs = n;
        }
        ("state", []) => prog.uses_state = true,
        ("output", [r]) | ("output", [r, _]) => {
            let lane0 = match words.get(1) {
                None => false,
                Some(m) if m.eq_ignore_ascii_case("lane0") => true,
                Some(m) => return Err(syntax(line, format!("unknown output modifier `{m}`"))),
            };
            prog.output = match (parse_any_reg(r, line, &prog.config)?, lane0) {
                ((Reg::V, i), false) => OutputSpec::Vector(i),
                ((Reg::V, i), true) => OutputSpec::Lane0(i),
                ((Reg::S, i), false) => OutputSpec::Scalar(i),
                ((Reg::S, _), true) => return Err(syntax(line, "lane0 needs a vector register")),
            };
        }
        ("spu", [n]) => {
            let spu: u32 = n.parse().map_err(|_| syntax(line, "bad SPU index"))?;
            if spu >= prog.config.spu_count {
                return Err(syntax(line, format!("SPU {spu} out of range")));
            }
            prog.segments.push(Segment { spu, code: Vec::new() });
            labels.push(HashMap::new());
        }
        (d, _) => return Err(syntax(line, format!("bad directive `.{d}`"))),
    }
    Ok(())
}

fn parse_any_reg(tok: &str, line: usize, cfg: &CgraConfig) -> Result<(Reg, u8), AsmError> {
    let (class, limit, name) = match tok.chars().next() {
        Some('v' | 'V') => (Reg::V, cfg.vregs, "vector"),
        Some('s' | 'S') => (Reg::S, cfg.sregs, "scalar"),
        _ => return Err(syntax(line, format!("expected register, got `{tok}`"))),
    };
    let index: u32 = tok[1..]
        .parse()
        .map_err(|_| syntax(line, format!("bad register `{tok}`")))?;
    if index >= limit {
        return Err(AsmError::RegisterOutOfRange {
            line,
            class: name,
            index,
            limit,
        });
    }
    Ok((class, index as u8))
}

fn reg(tok: &str, want: Reg, line: usize, cfg: &CgraConfig) -> Result<u8, AsmError> {
    match (parse_any_reg(tok, line, cfg)?, want) {
        ((Reg::V, i), Reg::V) | ((Reg::S, i), Reg::S) => Ok(i),
        _ => Err(syntax(line, format!("wrong register class `{tok}`"))),
    }
}

fn int(tok: &str, line: usize) -> Result<i64, AsmError> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, tok),
    };
    let v = match body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        Some(h) => i64::from_str_radix(h, 16),
        None => body.parse::<i64>(),
    }
    .map_err(|_| syntax(line, format!("bad integer `{tok}`")))?;
    Ok(if neg { -v } else { v })
}

fn imm_err(line: usize) -> impl Fn(IsaError) -> AsmError {
    move |e| syntax(line, e.to_string())
}

/// Parses one instruction. Returns the unresolved branch label, if any.
fn instruction(
    head: &str,
    args: &[&str],
    line: usize,
    cfg: &CgraConfig,
) -> Result<(Instruction, Option<String>), AsmError> {
    let (name, suffix) = match head.find('.') {
        Some(p) => (&head[..p], Some(head[p + 1..].to_ascii_lowercase())),
        None => (head, None),
    };
    let op = Opcode::from_mnemonic(name).ok_or_else(|| AsmError::UnknownMnemonic {
        line,
        name: head.to_string(),
    })?;
    let float_ok = op.has_float_variant();
    let flags = match suffix.as_deref() {
        None => 0,
        Some("f") if float_ok => FLAG_F32,
        Some("fi") if op == Opcode::Vbcast => FLAG_F32 | FLAG_CVT,
        Some(_) => {
            return Err(AsmError::UnknownMnemonic {
                line,
                name: head.to_string(),
            })
        }
    };
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(syntax(
                line,
                format!("{} takes {n} operands, got {}", op.mnemonic(), args.len()),
            ))
        }
    };
    let (v, s) = (Reg::V, Reg::S);
    let mut label = None;
    let i = match op {
        Opcode::Nop => {
            arity(0)?;
            Instruction::nop()
        }
        Opcode::Halt => {
            if args.len() > 1 {
                return Err(syntax(line, "HALT takes at most one operand"));
            }
            let imm = match args.first() {
                Some(a) => imm_unsigned(int(a, line)?).map_err(imm_err(line))?,
                None => 0,
            };
            Instruction::new(op, 0, 0, 0, imm)
        }
        Opcode::Vadd | Opcode::Vsub | Opcode::Vmul | Opcode::Vmax | Opcode::Vmin => {
            arity(3)?;
            Instruction::new(
                op,
                reg(args[0], v, line, cfg)?,
                reg(args[1], v, line, cfg)?,
                reg(args[2], v, line, cfg)?,
                flags,
            )
        }
        Opcode::Vmac => {
            arity(4)?;
            let acc = reg(args[3], v, line, cfg)? as u16;
            Instruction::new(
                op,
                reg(args[0], v, line, cfg)?,
                reg(args[1], v, line, cfg)?,
                reg(args[2], v, line, cfg)?,
                flags | (acc << 6),
            )
        }
        Opcode::VscanAdd => {
            arity(2)?;
            Instruction::new(op, reg(args[0], v, line, cfg)?, reg(args[1], v, line, cfg)?, 0, flags)
        }
        Opcode::VreduceAdd => {
            arity(2)?;
            Instruction::new(op, reg(args[0], s, line, cfg)?, reg(args[1], v, line, cfg)?, 0, flags)
        }
        Opcode::Vbcast => {
            arity(2)?;
            Instruction::new(op, reg(args[0], v, line, cfg)?, reg(args[1], s, line, cfg)?, 0, flags)
        }
        Opcode::Vload => {
            arity(3)?;
            let stride = imm_unsigned(int(args[2], line)?).map_err(imm_err(line))?;
            Instruction::new(op, reg(args[0], v, line, cfg)?, reg(args[1], s, line, cfg)?, 0, stride)
        }
        Opcode::Vstore => {
            arity(3)?;
            let stride = imm_unsigned(int(args[2], line)?).map_err(imm_err(line))?;
            Instruction::new(op, 0, reg(args[0], s, line, cfg)?, reg(args[1], v, line, cfg)?, stride)
        }
        Opcode::Li => {
            arity(2)?;
            let imm = imm_signed(int(args[1], line)?).map_err(imm_err(line))?;
            Instruction::new(op, reg(args[0], s, line, cfg)?, 0, 0, imm)
        }
        Opcode::Sadd => {
            arity(4)?;
            let imm = imm_signed(int(args[3], line)?).map_err(imm_err(line))?;
            Instruction::new(
                op,
                reg(args[0], s, line, cfg)?,
                reg(args[1], s, line, cfg)?,
                reg(args[2], s, line, cfg)?,
                imm,
            )
        }
        Opcode::Bnz => {
            arity(2)?;
            let counter = reg(args[0], s, line, cfg)?;
            let target = args[1];
            let imm = if target.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
                imm_signed(int(target, line)?).map_err(imm_err(line))?
            } else {
                label = Some(target.to_string());
                0
            };
            Instruction::new(op, 0, counter, 0, imm)
        }
    };
    Ok((i, label))
}

/// Renders one instruction. `label` names the branch target, if known.
pub fn format_instruction(i: &Instruction, label: Option<&str>) -> String {
    let m = i.op.mnemonic();
    let f = if i.op == Opcode::Vbcast && i.imm & (FLAG_F32 | FLAG_CVT) == FLAG_F32 | FLAG_CVT {
        ".fi"
    } else if i.is_f32() && i.op.has_float_variant() {
        ".f"
    } else {
        ""
    };
    match i.op {
        Opcode::Nop => m.to_string(),
        Opcode::Halt if i.imm == 0 => m.to_string(),
        Opcode::Halt => format!("{m} {}", i.imm),
        Opcode::Vadd | Opcode::Vsub | Opcode::Vmul | Opcode::Vmax | Opcode::Vmin => {
            format!("{m}{f} v{}, v{}, v{}", i.dst, i.src1, i.src2)
        }
        Opcode::Vmac => format!("{m}{f} v{}, v{}, v{}, v{}", i.dst, i.src1, i.src2, i.mac_acc()),
        Opcode::VscanAdd => format!("{m}{f} v{}, v{}", i.dst, i.src1),
        Opcode::VreduceAdd => format!("{m}{f} s{}, v{}", i.dst, i.src1),
        Opcode::Vbcast => format!("{m}{f} v{}, s{}", i.dst, i.src1),
        Opcode::Vload => format!("{m} v{}, s{}, {}", i.dst, i.src1, i.imm),
        Opcode::Vstore => format!("{m} s{}, v{}, {}", i.src1, i.src2, i.imm),
        Opcode::Li => format!("{m} s{}, {}", i.dst, sext(i.imm)),
        Opcode::Sadd => format!("{m} s{}, s{}, s{}, {}", i.dst, i.src1, i.src2, sext(i.imm)),
        Opcode::Bnz => match label {
            Some(l) => format!("{m} s{}, {l}", i.src1),
            None => format!("{m} s{}, {}", i.src1, sext(i.imm)),
        },
    }
}

/// Canonical text for `prog`. Branch targets inside a segment get `L<n>` labels.
pub fn disassemble(prog: &CgraProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".elem {}", prog.elem.name());
    let _ = writeln!(out, ".inputs {}", prog.n_inputs);
    if prog.uses_state {
        out.push_str(".state\n");
    }
    let _ = match prog.output {
        OutputSpec::Vector(r) => writeln!(out, ".output v{r}"),
        OutputSpec::Scalar(r) => writeln!(out, ".output s{r}"),
        OutputSpec::Lane0(r) => writeln!(out, ".output v{r} lane0"),
    };
    for seg in &prog.segments {
        let _ = writeln!(out, ".spu {}", seg.spu);
        let n = seg.code.len() as i64;
        let targets: BTreeSet<usize> = seg
            .code
            .iter()
            .enumerate()
            .filter(|(_, i)| i.op == Opcode::Bnz)
            .map(|(at, i)| at as i64 + sext(i.imm) as i64)
            .filter(|t| (0..=n).contains(t))
            .map(|t| t as usize)
            .collect();
        let name = |t: usize| format!("L{t}");
        for (at, i) in seg.code.iter().enumerate() {
            if targets.contains(&at) {
                let _ = writeln!(out, "{}:", name(at));
            }
            let label = (i.op == Opcode::Bnz)
                .then(|| at as i64 + sext(i.imm) as i64)
                .filter(|t| (0..=n).contains(t))
                .map(|t| name(t as usize));
            let _ = writeln!(out, "    {}", format_instruction(i, label.as_deref()));
        }
        if targets.contains(&seg.code.len()) {
            let _ = writeln!(out, "{}:", name(seg.code.len()));
        }
    }
    out
}
