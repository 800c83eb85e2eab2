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

//! Syntax tree of the map-function language.
//!
//! ```text
//! program := ["elem" ("i32" | "f32")] stmt*
//! stmt    := "let" ident "=" expr | ident "=" expr | "out" "=" expr
//!          | "state" "=" expr | "repeat" int "{" stmt* "}"
//! expr    := term (("+" | "-") term)*
//! term    := atom ("*" atom)*
//! atom    := int | "in0" | "in1" | "state" | ident | "(" expr ")"
//!          | call "(" expr ("," expr)* ")"
//! call    := "scan_add" | "reduce_add" | "broadcast" | "max" | "min" | "mac"
//! ```
//!
//! Statements end at a newline or `;`; `#` starts a comment. Integer
//! literals are vectors with every lane equal to the literal and lie in
//! `-1024..=1023`. `reduce_add` yields a scalar; every other operation
//! yields a vector and broadcasts scalar operands implicitly. `broadcast`
//! takes a scalar. `let` bindings are scoped to their block.

use std::fmt;

use crate::program::Elem;

pub const LIT_MIN: i32 = -1024;
pub const LIT_MAX: i32 = 1023;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Max,
    Min,
}

impl BinOp {
    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Max => "max",
            BinOp::Min => "min",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Input(u8),
    State,
    Var(String),
    Lit(i32),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Mac(Box<Expr>, Box<Expr>, Box<Expr>),
    Scan(Box<Expr>),
    Reduce(Box<Expr>),
    Bcast(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Let(String, Expr),
    Assign(String, Expr, Pos),
    Out(Expr),
    State(Expr),
    Repeat(u32, Vec<Stmt>),
}

/// Value shape of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Vector,
    Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapAst {
    pub elem: Elem,
    pub stmts: Vec<Stmt>,
    /// Highest input index referenced plus one.
    pub n_inputs: u8,
    /// Whether `state` is read or written.
    pub uses_state: bool,
}

impl Expr {
    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match &self.kind {
            ExprKind::Input(_) | ExprKind::State | ExprKind::Var(_) | ExprKind::Lit(_) => 0,
            ExprKind::Bin(_, a, b) => a.size() + b.size(),
            ExprKind::Mac(a, b, c) => a.size() + b.size() + c.size(),
            ExprKind::Scan(a) | ExprKind::Reduce(a) | ExprKind::Bcast(a) => a.size(),
        }
    }
}

impl MapAst {
    /// Syntax-tree node count: statements plus expression nodes.
    pub fn node_count(&self) -> usize {
        fn count(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match s {
                    Stmt::Let(_, e) | Stmt::Assign(_, e, _) | Stmt::Out(e) | Stmt::State(e) => 1 + e.size(),
                    Stmt::Repeat(_, body) => 1 + count(body),
                })
                .sum()
        }
        count(&self.stmts)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match &e.kind {
        ExprKind::Input(k) => write!(f, "in{k}"),
        ExprKind::State => write!(f, "state"),
        ExprKind::Var(v) => write!(f, "{v}"),
        ExprKind::Lit(x) => write!(f, "{x}"),
        ExprKind::Bin(op @ (BinOp::Add | BinOp::Sub | BinOp::Mul), a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                _ => "*",
            };
            write!(f, "(")?;
            write_expr(f, a)?;
            write!(f, " {sym} ")?;
            write_expr(f, b)?;
            write!(f, ")")
        }
        ExprKind::Bin(op, a, b) => {
            write!(f, "{}(", op.name())?;
            write_expr(f, a)?;
            write!(f, ", ")?;
            write_expr(f, b)?;
            write!(f, ")")
        }
        ExprKind::Mac(a, b, c) => {
            write!(f, "mac(")?;
            write_expr(f, a)?;
            write!(f, ", ")?;
            write_expr(f, b)?;
            write!(f, ", ")?;
            write_expr(f, c)?;
            write!(f, ")")
        }
        ExprKind::Scan(a) | ExprKind::Reduce(a) | ExprKind::Bcast(a) => {
            let name = match &e.kind {
                ExprKind::Scan(_) => "scan_add",
                ExprKind::Reduce(_) => "reduce_add",
                _ => "broadcast",
            };
            write!(f, "{name}(")?;
            write_expr(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

fn write_stmts(f: &mut fmt::Formatter<'_>, stmts: &[Stmt], indent: usize) -> fmt::Result {
    let pad = "    ".repeat(indent);
    for s in stmts {
        match s {
            Stmt::Let(n, e) => writeln!(f, "{pad}let {n} = {e}")?,
            Stmt::Assign(n, e, _) => writeln!(f, "{pad}{n} = {e}")?,
            Stmt::Out(e) => writeln!(f, "{pad}out = {e}")?,
            Stmt::State(e) => writeln!(f, "{pad}state = {e}")?,
            Stmt::Repeat(k, body) => {
                writeln!(f, "{pad}repeat {k} {{")?;
                write_stmts(f, body, indent + 1)?;
                writeln!(f, "{pad}}}")?;
            }
        }
    }
    Ok(())
}

/// Renders source text that parses back to the same program.
impl fmt::Display for MapAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elem == Elem::F32 {
            writeln!(f, "elem f32")?;
        }
        write_stmts(f, &self.stmts, 0)
    }
}
