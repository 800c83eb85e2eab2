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

//! Lexer, recursive-descent parser and scope/type checker.

use std::collections::HashMap;

use thiserror::Error;

use super::ast::{BinOp, Expr, ExprKind, MapAst, Pos, Stmt, Ty, LIT_MAX, LIT_MIN};
use crate::program::Elem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    SyntaxError { pos: Pos, msg: String },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { pos: Pos, name: String },
    #[error("{pos}: loop bound must be an integer literal")]
    LoopBoundNotConstant { pos: Pos },
    #[error("{pos}: type error: {msg}")]
    TypeError { pos: Pos, msg: String },
    #[error("program never assigns `out`")]
    MissingOutput,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
    Newline,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos {
                line: li as u32 + 1,
                col: i as u32 + 1,
            };
            if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<i64>().unwrap_or(i64::MAX);
                out.push((Tok::Int(v), pos));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            } else if "=+-*(){},;".contains(c) {
                out.push((Tok::Sym(c), pos));
                i += 1;
            } else {
                return Err(ParseError::SyntaxError {
                    pos,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
        out.push((
            Tok::Newline,
            Pos {
                line: li as u32 + 1,
                col: chars.len() as u32 + 1,
            },
        ));
    }
    let end = Pos {
        line: src.lines().count() as u32 + 1,
        col: 1,
    };
    out.push((Tok::Eof, end));
    Ok(out)
}

const KEYWORDS: [&str; 13] = [
    "let",
    "out",
    "state",
    "repeat",
    "elem",
    "in0",
    "in1",
    "scan_add",
    "reduce_add",
    "broadcast",
    "max",
    "min",
    "mac",
];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::SyntaxError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Sym(';')) {
            self.bump();
        }
    }

    fn end_of_stmt(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Newline | Tok::Sym(';') => {
                self.bump();
                Ok(())
            }
            Tok::Eof | Tok::Sym('}') => Ok(()),
            _ => self.err("expected end of statement"),
        }
    }

    /// Statements until `}` (if `nested`) or end of input.
    fn block(&mut self, nested: bool) -> Result<Vec<Stmt>, ParseError> {
        let mut stmts = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                Tok::Eof if nested => return self.err("unclosed `{`"),
                Tok::Eof => return Ok(stmts),
                Tok::Sym('}') if nested => return Ok(stmts),
                _ => {}
            }
            stmts.push(self.stmt()?);
            self.end_of_stmt()?;
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let (tok, pos) = self.bump();
        let Tok::Ident(word) = tok else {
            return Err(ParseError::SyntaxError {
                pos,
                msg: "expected a statement".into(),
            });
        };
        match word.as_str() {
            "let" => {
                let (name, npos) = self.bump();
                let Tok::Ident(name) = name else {
                    return Err(ParseError::SyntaxError {
                        pos: npos,
                        msg: "expected a name".into(),
                    });
                };
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(ParseError::SyntaxError {
                        pos: npos,
                        msg: format!("`{name}` is reserved"),
                    });
                }
                self.expect('=')?;
                Ok(Stmt::Let(name, self.expr()?))
            }
            "out" => {
                self.expect('=')?;
                Ok(Stmt::Out(self.expr()?))
            }
            "state" => {
                self.expect('=')?;
                Ok(Stmt::State(self.expr()?))
            }
            "repeat" => {
                let bpos = self.pos();
                let k = match self.peek().clone() {
                    Tok::Int(k) if k <= u32::MAX as i64 => k as u32,
                    Tok::Int(_) => return self.err("loop bound too large"),
                    _ => return Err(ParseError::LoopBoundNotConstant { pos: bpos }),
                };
                self.bump();
                self.expect('{')?;
                let body = self.block(true)?;
                self.expect('}')?;
                Ok(Stmt::Repeat(k, body))
            }
            w if KEYWORDS.contains(&w) => Err(ParseError::SyntaxError {
                pos,
                msg: format!("cannot assign to `{w}`"),
            }),
            _ => {
                self.expect('=')?;
                Ok(Stmt::Assign(word, self.expr()?, pos))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.bump().1;
            let rhs = self.term()?;
            lhs = Expr {
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while *self.peek() == Tok::Sym('*') {
            let pos = self.bump().1;
            let rhs = self.atom()?;
            lhs = Expr {
                kind: ExprKind::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn literal(&self, v: i64, pos: Pos) -> Result<Expr, ParseError> {
        if v < LIT_MIN as i64 || v > LIT_MAX as i64 {
            return Err(ParseError::SyntaxError {
                pos,
                msg: format!("literal {v} outside {LIT_MIN}..={LIT_MAX}"),
            });
        }
        Ok(Expr {
            kind: ExprKind::Lit(v as i32),
            pos,
        })
    }

    fn args(&mut self, n: usize, name: &str) -> Result<Vec<Expr>, ParseError> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Sym(',') {
            self.bump();
            args.push(self.expr()?);
        }
        if args.len() != n {
            return self.err(format!("`{name}` takes {n} arguments, got {}", args.len()));
        }
        self.expect(')')?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.bump();
        let kind = match tok {
            Tok::Int(v) => return self.literal(v, pos),
            Tok::Sym('-') => match self.bump() {
                (Tok::Int(v), _) => return self.literal(-v, pos),
                (_, p) => {
                    return Err(ParseError::SyntaxError {
                        pos: p,
                        msg: "expected a literal after `-`".into(),
                    })
                }
            },
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                return Ok(e);
            }
            Tok::Ident(w) => match w.as_str() {
                "in0" => ExprKind::Input(0),
                "in1" => ExprKind::Input(1),
                "state" => ExprKind::State,
                "scan_add" | "reduce_add" | "broadcast" => {
                    let a = Box::new(self.args(1, &w)?.pop().unwrap());
                    match w.as_str() {
                        "scan_add" => ExprKind::Scan(a),
                        "reduce_add" => ExprKind::Reduce(a),
                        _ => ExprKind::Bcast(a),
                    }
                }
                "max" | "min" => {
                    let mut a = self.args(2, &w)?;
                    let b = Box::new(a.pop().unwrap());
                    let op = if w == "max" { BinOp::Max } else { BinOp::Min };
                    ExprKind::Bin(op, Box::new(a.pop().unwrap()), b)
                }
                "mac" => {
                    let mut a = self.args(3, &w)?;
                    let c = Box::new(a.pop().unwrap());
                    let b = Box::new(a.pop().unwrap());
                    ExprKind::Mac(Box::new(a.pop().unwrap()), b, c)
                }
                kw if KEYWORDS.contains(&kw) => {
                    return Err(ParseError::SyntaxError {
                        pos,
                        msg: format!("`{kw}` is not an expression"),
                    })
                }
                _ => ExprKind::Var(w),
            },
            _ => {
                return Err(ParseError::SyntaxError {
                    pos,
                    msg: "expected an expression".into(),
                })
            }
        };
        Ok(Expr { kind, pos })
    }
}

struct Checker {
    scopes: Vec<HashMap<String, Ty>>,
    n_inputs: u8,
    uses_state: bool,
    has_out: bool,
}

impl Checker {
    fn lookup(&self, name: &str) -> Option<Ty> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn expr(&mut self, e: &Expr) -> Result<Ty, ParseError> {
        Ok(match &e.kind {
            ExprKind::Input(k) => {
                self.n_inputs = self.n_inputs.max(k + 1);
                Ty::Vector
            }
            ExprKind::State => {
                self.uses_state = true;
                Ty::Vector
            }
            ExprKind::Lit(_) => Ty::Vector,
            ExprKind::Var(v) => self.lookup(v).ok_or_else(|| ParseError::UnknownIdentifier {
                pos: e.pos,
                name: v.clone(),
            })?,
            ExprKind::Bin(_, a, b) => {
                self.expr(a)?;
                self.expr(b)?;
                Ty::Vector
            }
            ExprKind::Mac(a, b, c) => {
                self.expr(a)?;
                self.expr(b)?;
                self.expr(c)?;
                Ty::Vector
            }
            ExprKind::Scan(a) => {
                self.expr(a)?;
                Ty::Vector
            }
            ExprKind::Reduce(a) => {
                self.expr(a)?;
                Ty::Scalar
            }
            ExprKind::Bcast(a) => {
                if self.expr(a)? != Ty::Scalar {
                    return Err(ParseError::TypeError {
                        pos: e.pos,
                        msg: "broadcast takes a scalar".into(),
                    });
                }
                Ty::Vector
            }
        })
    }

    /// `live` is false inside a `repeat 0` body.
    fn stmts(&mut self, stmts: &[Stmt], live: bool) -> Result<(), ParseError> {
        for s in stmts {
            match s {
                Stmt::Let(name, e) => {
                    let t = self.expr(e)?;
                    self.scopes.last_mut().unwrap().insert(name.clone(), t);
                }
                Stmt::Assign(name, e, pos) => {
                    let have = self.lookup(name).ok_or_else(|| ParseError::UnknownIdentifier {
                        pos: *pos,
                        name: name.clone(),
                    })?;
                    let t = self.expr(e)?;
                    if t != have {
                        return Err(ParseError::TypeError {
                            pos: *pos,
                            msg: format!("`{name}` is a {have:?}, assigned a {t:?}").to_lowercase(),
                        });
                    }
                }
                Stmt::Out(e) => {
                    self.expr(e)?;
                    self.has_out |= live;
                }
                Stmt::State(e) => {
                    self.expr(e)?;
                    self.uses_state = true;
                }
                Stmt::Repeat(k, body) => {
                    self.scopes.push(HashMap::new());
                    self.stmts(body, live && *k > 0)?;
                    self.scopes.pop();
                }
            }
        }
        Ok(())
    }
}

/// Parses and checks a map-function source.
pub fn parse_dsl(src: &str) -> Result<MapAst, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    p.skip_separators();
    let mut elem = Elem::I32;
    if *p.peek() == Tok::Ident("elem".into()) {
        p.bump();
        let (t, pos) = p.bump();
        elem = match t {
            Tok::Ident(e) => Elem::from_name(&e),
            _ => None,
        }
        .ok_or(ParseError::SyntaxError {
            pos,
            msg: "expected `i32` or `f32`".into(),
        })?;
        p.end_of_stmt()?;
    }
    let stmts = p.block(false)?;
    let mut c = Checker {
        scopes: vec![HashMap::new()],
        n_inputs: 0,
        uses_state: false,
        has_out: false,
    };
    c.stmts(&stmts, true)?;
    if !c.has_out {
        return Err(ParseError::MissingOutput);
    }
    Ok(MapAst {
        elem,
        stmts,
        n_inputs: c.n_inputs,
        uses_state: c.uses_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let ast = parse_dsl("out = scan_add(in0)").unwrap();
        assert_eq!(ast.node_count(), 3);
        assert_eq!(ast.n_inputs, 1);
        assert!(!ast.uses_state);
    }

    #[test]
    fn dot_product_shape() {
        let ast = parse_dsl("let t = in0 * in1; out = reduce_add(t)").unwrap();
        assert_eq!(ast.n_inputs, 2);
        let [Stmt::Let(name, prod), Stmt::Out(red)] = ast.stmts.as_slice() else {
            panic!()
        };
        assert_eq!(name, "t");
        assert!(matches!(&prod.kind, ExprKind::Bin(BinOp::Mul, a, b)
            if a.kind == ExprKind::Input(0) && b.kind == ExprKind::Input(1)));
        assert!(matches!(&red.kind, ExprKind::Reduce(v) if v.kind == ExprKind::Var("t".into())));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_dsl("out = undefined_var"),
            Err(ParseError::UnknownIdentifier {
                pos: Pos { line: 1, col: 7 },
                ..
            })
        ));
        assert!(matches!(
            parse_dsl("let k = 3\nrepeat k { out = in0 }"),
            Err(ParseError::LoopBoundNotConstant { .. })
        ));
        assert!(matches!(parse_dsl("out = in0 +"), Err(ParseError::SyntaxError { .. })));
        assert!(matches!(parse_dsl("out = 1024"), Err(ParseError::SyntaxError { .. })));
        assert!(matches!(
            parse_dsl("out = broadcast(in0)"),
            Err(ParseError::TypeError { .. })
        ));
        assert!(matches!(parse_dsl("let x = in0"), Err(ParseError::MissingOutput)));
        assert!(matches!(
            parse_dsl("repeat 0 { out = in0 }"),
            Err(ParseError::MissingOutput)
        ));
        assert!(matches!(
            parse_dsl("repeat 2 { let y = in0 }\nout = y"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_dsl("let s = reduce_add(in0)\ns = in0\nout = s"),
            Err(ParseError::TypeError { .. })
        ));
    }

    #[test]
    fn display_reparses() {
        let src = "elem f32\nlet x = in0 - -5 * max(in1, 2)\nrepeat 3 {\n  x = mac(x, in0, broadcast(reduce_add(x)))\n}\nstate = state + x\nout = scan_add(x)";
        let ast = parse_dsl(src).unwrap();
        let again = parse_dsl(&ast.to_string()).unwrap();
        assert_eq!(again.to_string(), ast.to_string());
        assert_eq!(again.elem, Elem::F32);
        assert!(again.uses_state);
    }
}
