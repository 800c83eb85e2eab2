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

//! Dataflow graph: loops unrolled, subexpressions hash-consed, dead nodes
//! removed.
//!
//! Scalars are represented by their broadcast vector, so `broadcast` and
//! implicit broadcasts lower to nothing. Node ids are topologically ordered.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::ast::{BinOp, Expr, ExprKind, MapAst, Stmt, Ty};
use crate::program::Elem;

/// Lowering stops once this many nodes and loop iterations were produced.
pub const MAX_DFG_NODES: usize = 100_000;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeOp {
    Input(u8),
    StateIn,
    Const(i32),
    Bin(BinOp),
    Mac,
    Scan,
    Reduce,
}

impl NodeOp {
    pub fn name(&self) -> String {
        match self {
            NodeOp::Input(k) => format!("in{k}"),
            NodeOp::StateIn => "state".into(),
            NodeOp::Const(k) => format!("const({k})"),
            NodeOp::Bin(op) => op.name().into(),
            NodeOp::Mac => "mac".into(),
            NodeOp::Scan => "scan_add".into(),
            NodeOp::Reduce => "reduce_add".into(),
        }
    }

    /// Inputs are bound before execution; everything else issues code.
    pub fn is_compute(&self) -> bool {
        !matches!(self, NodeOp::Input(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub op: NodeOp,
    pub args: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfg {
    pub elem: Elem,
    pub nodes: Vec<Node>,
    /// Input nodes by index; present even when unused.
    pub inputs: Vec<NodeId>,
    pub output: NodeId,
    /// Whether `out` is scalar-typed.
    pub output_scalar: bool,
    pub state_out: Option<NodeId>,
    pub uses_state: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DfgError {
    #[error("unrolling exceeds {MAX_DFG_NODES} nodes")]
    UnrollExplosion,
}

impl Dfg {
    pub fn compute_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].op.is_compute())
    }

    pub fn compute_count(&self) -> usize {
        self.compute_nodes().count()
    }

    /// One node per line: id, op, dependency ids.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (id, n) in self.nodes.iter().enumerate() {
            let _ = write!(s, "{id} {}", n.op.name());
            for a in &n.args {
                let _ = write!(s, " {a}");
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "out {}{}",
            self.output,
            if self.output_scalar { " scalar" } else { "" }
        );
        if let Some(st) = self.state_out {
            let _ = writeln!(s, "state {st}");
        }
        s
    }
}

#[derive(Clone, Copy)]
struct Sym {
    node: NodeId,
    ty: Ty,
}

struct Lower {
    nodes: Vec<Node>,
    cse: HashMap<(NodeOp, Vec<NodeId>), NodeId>,
    scopes: Vec<HashMap<String, Sym>>,
    state: Sym,
    state_written: bool,
    out: Option<Sym>,
    work: usize,
}

impl Lower {
    fn tick(&mut self) -> Result<(), DfgError> {
        self.work += 1;
        if self.work > MAX_DFG_NODES {
            return Err(DfgError::UnrollExplosion);
        }
        Ok(())
    }

    fn node(&mut self, op: NodeOp, args: Vec<NodeId>) -> Result<NodeId, DfgError> {
        self.tick()?;
        if let Some(&id) = self.cse.get(&(op, args.clone())) {
            return Ok(id);
        }
        let id = self.nodes.len();
        self.nodes.push(Node { op, args: args.clone() });
        self.cse.insert((op, args), id);
        Ok(id)
    }

    fn expr(&mut self, e: &Expr) -> Result<Sym, DfgError> {
        let vec = |node| Sym { node, ty: Ty::Vector };
        Ok(match &e.kind {
            ExprKind::Input(k) => vec(*k as NodeId),
            ExprKind::State => self.state,
            ExprKind::Lit(k) => vec(self.node(NodeOp::Const(*k), vec![])?),
            ExprKind::Var(v) => *self
                .scopes
                .iter()
                .rev()
                .find_map(|s| s.get(v))
                .expect("checked by parser"),
            ExprKind::Bin(op, a, b) => {
                let (a, b) = (self.expr(a)?.node, self.expr(b)?.node);
                vec(self.node(NodeOp::Bin(*op), vec![a, b])?)
            }
            ExprKind::Mac(a, b, c) => {
                let (a, b, c) = (self.expr(a)?.node, self.expr(b)?.node, self.expr(c)?.node);
                vec(self.node(NodeOp::Mac, vec![a, b, c])?)
            }
            ExprKind::Scan(a) => {
                let a = self.expr(a)?.node;
                vec(self.node(NodeOp::Scan, vec![a])?)
            }
            ExprKind::Reduce(a) => {
                let a = self.expr(a)?.node;
                Sym {
                    node: self.node(NodeOp::Reduce, vec![a])?,
                    ty: Ty::Scalar,
                }
            }
            ExprKind::Bcast(a) => vec(self.expr(a)?.node),
        })
    }

    fn stmts(&mut self, stmts: &[Stmt]) -> Result<(), DfgError> {
        for s in stmts {
            match s {
                Stmt::Let(name, e) => {
                    let v = self.expr(e)?;
                    self.scopes.last_mut().unwrap().insert(name.clone(), v);
                }
                Stmt::Assign(name, e, _) => {
                    let v = self.expr(e)?;
                    let slot = self
                        .scopes
                        .iter_mut()
                        .rev()
                        .find_map(|s| s.get_mut(name))
                        .expect("checked by parser");
                    *slot = v;
                }
                Stmt::Out(e) => self.out = Some(self.expr(e)?),
                Stmt::State(e) => {
                    let v = self.expr(e)?;
                    self.state = Sym {
                        node: v.node,
                        ty: Ty::Vector,
                    };
                    self.state_written = true;
                }
                Stmt::Repeat(k, body) => {
                    for _ in 0..*k {
                        self.tick()?;
                        self.scopes.push(HashMap::new());
                        self.stmts(body)?;
                        self.scopes.pop();
                    }
                }
            }
        }
        Ok(())
    }
}

/// Unrolls, hash-conses and prunes `ast` into a dataflow graph.
pub fn lower_to_dfg(ast: &MapAst) -> Result<Dfg, DfgError> {
    let mut l = Lower {
        nodes: Vec::new(),
        cse: HashMap::new(),
        scopes: vec![HashMap::new()],
        state: Sym {
            node: 0,
            ty: Ty::Vector,
        },
        state_written: false,
        out: None,
        work: 0,
    };
    for k in 0..ast.n_inputs {
        l.node(NodeOp::Input(k), vec![])?;
    }
    if ast.uses_state {
        l.state = Sym {
            node: l.node(NodeOp::StateIn, vec![])?,
            ty: Ty::Vector,
        };
    }
    l.stmts(&ast.stmts)?;
    let out = l.out.expect("checked by parser");
    let state_out = l.state_written.then_some(l.state.node);

    // Dead-code elimination; ids only ever point backwards.
    let mut live = vec![false; l.nodes.len()];
    live[out.node] = true;
    if let Some(s) = state_out {
        live[s] = true;
    }
    for id in (0..l.nodes.len()).rev() {
        if matches!(l.nodes[id].op, NodeOp::Input(_)) {
            live[id] = true;
        }
        if live[id] {
            for &a in &l.nodes[id].args {
                live[a] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; l.nodes.len()];
    let mut nodes = Vec::new();
    for (id, n) in l.nodes.into_iter().enumerate() {
        if live[id] {
            remap[id] = nodes.len();
            nodes.push(Node {
                op: n.op,
                args: n.args.iter().map(|&a| remap[a]).collect(),
            });
        }
    }
    Ok(Dfg {
        elem: ast.elem,
        inputs: (0..ast.n_inputs as usize).collect(),
        output: remap[out.node],
        output_scalar: out.ty == Ty::Scalar,
        state_out: state_out.map(|s| remap[s]),
        uses_state: ast.uses_state,
        nodes,
    })
}
