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

//! Random well-typed programs for compiler testing.

use rand::Rng;

use super::ast::Ty;
use crate::program::Elem;

pub struct GenConfig {
    pub elem: Elem,
    /// Maximum expression depth.
    pub max_depth: u32,
    pub max_stmts: usize,
    pub max_repeat: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            elem: Elem::I32,
            max_depth: 6,
            max_stmts: 5,
            max_repeat: 3,
        }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    two_inputs: bool,
    state: bool,
    /// Visible bindings per scope.
    scopes: Vec<Vec<(String, Ty)>>,
    next_name: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn vars(&self, ty: Ty) -> Vec<String> {
        self.scopes
            .iter()
            .flatten()
            .filter(|(_, t)| *t == ty)
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn leaf(&mut self) -> String {
        let vars = self.vars(Ty::Vector);
        let svars = self.vars(Ty::Scalar);
        loop {
            match self.rng.gen_range(0..6) {
                0 => return "in0".into(),
                1 if self.two_inputs => return "in1".into(),
                2 if self.state => return "state".into(),
                3 => return self.rng.gen_range(-1024..=1023).to_string(),
                4 if !vars.is_empty() => return vars[self.rng.gen_range(0..vars.len())].clone(),
                5 if !svars.is_empty() => return svars[self.rng.gen_range(0..svars.len())].clone(),
                _ => {}
            }
        }
    }

    fn scalar(&mut self, depth: u32) -> String {
        let svars = self.vars(Ty::Scalar);
        if !svars.is_empty() && (depth <= 1 || self.rng.gen_bool(0.3)) {
            return svars[self.rng.gen_range(0..svars.len())].clone();
        }
        format!("reduce_add({})", self.vector(depth.saturating_sub(1)))
    }

    fn vector(&mut self, depth: u32) -> String {
        if depth <= 1 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 => format!("({} + {})", self.vector(d), self.vector(d)),
            1 => format!("({} - {})", self.vector(d), self.vector(d)),
            2 => format!("({} * {})", self.vector(d), self.vector(d)),
            3 => format!("max({}, {})", self.vector(d), self.vector(d)),
            4 => format!("min({}, {})", self.vector(d), self.vector(d)),
            5 => format!("mac({}, {}, {})", self.vector(d), self.vector(d), self.vector(d)),
            6 => format!("scan_add({})", self.vector(d)),
            7 => format!("broadcast({})", self.scalar(d)),
            _ => format!("({} + {})", self.scalar(d), self.vector(d)),
        }
    }

    fn expr(&mut self, ty: Ty) -> String {
        let depth = self.rng.gen_range(1..=self.cfg.max_depth);
        match ty {
            Ty::Vector => {
                let e = self.vector(depth);
                // A bare scalar variable keeps its scalar type.
                if self.vars(Ty::Scalar).contains(&e) {
                    format!("broadcast({e})")
                } else {
                    e
                }
            }
            Ty::Scalar => self.scalar(depth),
        }
    }

    fn fresh(&mut self) -> String {
        self.next_name += 1;
        format!("t{}", self.next_name)
    }

    fn stmts(&mut self, out: &mut String, indent: usize, n: usize, nested: bool) {
        let pad = "    ".repeat(indent);
        for _ in 0..n {
            let assignable: Vec<(String, Ty)> = self.scopes.iter().flatten().cloned().collect();
            match self.rng.gen_range(0..5) {
                0 if !nested && indent < 2 => {
                    let k = self.rng.gen_range(0..=self.cfg.max_repeat);
                    out.push_str(&format!("{pad}repeat {k} {{\n"));
                    self.scopes.push(Vec::new());
                    let m = self.rng.gen_range(1..=2);
                    self.stmts(out, indent + 1, m, indent >= 1);
                    self.scopes.pop();
                    out.push_str(&format!("{pad}}}\n"));
                }
                1 if !assignable.is_empty() => {
                    let (name, ty) = assignable[self.rng.gen_range(0..assignable.len())].clone();
                    let e = self.expr(ty);
                    out.push_str(&format!("{pad}{name} = {e}\n"));
                }
                2 if self.state => {
                    let e = self.expr(Ty::Vector);
                    out.push_str(&format!("{pad}state = {e}\n"));
                }
                _ => {
                    let ty = if self.rng.gen_bool(0.3) { Ty::Scalar } else { Ty::Vector };
                    let e = self.expr(ty);
                    let name = self.fresh();
                    out.push_str(&format!("{pad}let {name} = {e}\n"));
                    self.scopes.last_mut().unwrap().push((name, ty));
                }
            }
        }
    }
}

/// Source text of a random program that parses and type-checks.
pub fn random_program<R: Rng>(rng: &mut R, cfg: &GenConfig) -> String {
    let two_inputs = rng.gen_bool(0.5);
    let state = rng.gen_bool(0.3);
    let mut g = Gen {
        rng,
        cfg,
        two_inputs,
        state,
        scopes: vec![Vec::new()],
        next_name: 0,
    };
    let mut out = String::new();
    if cfg.elem == Elem::F32 {
        out.push_str("elem f32\n");
    }
    let n = g.rng.gen_range(0..=cfg.max_stmts);
    g.stmts(&mut out, 0, n, false);
    let ty = if g.rng.gen_bool(0.2) { Ty::Scalar } else { Ty::Vector };
    let e = g.expr(ty);
    out.push_str(&format!("out = {e}\n"));
    out
}

/// Random lane words for `elem`: full-range integers, or floats of mixed
/// sign and magnitude.
pub fn random_lanes<R: Rng>(rng: &mut R, elem: Elem, lanes: usize) -> Vec<u32> {
    (0..lanes)
        .map(|_| match elem {
            Elem::I32 => rng.gen::<u32>(),
            Elem::F32 => {
                let mag = rng.gen_range(-4.0f32..4.0).exp2();
                let x = rng.gen_range(-1.0f32..1.0) * mag;
                x.to_bits()
            }
        })
        .collect()
}
