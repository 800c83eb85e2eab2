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

use std::sync::Arc;

use acis_cgra::mapc::{compile_ast, parse_dsl, MapAst};
use acis_cgra::{CgraConfig, CgraProgram, Elem};
use acis_core::value::vector_kind;
use acis_core::wire::CollectiveKind;
use acis_core::{DType, DTypeKind, ReduceOp};
use acis_dataplane::{SwitchPlan, SwitchStage};

use crate::FusionError;

#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveStage {
    pub kind: CollectiveKind,
    pub op: ReduceOp,
    pub dtype: DTypeKind,
    /// Root rank for bcast.
    pub root: u32,
    /// Expected element count per rank (allgatherv).
    pub counts: Option<Vec<u32>>,
}

impl CollectiveStage {
    pub fn new(kind: CollectiveKind, op: ReduceOp, dtype: DTypeKind) -> Self {
        CollectiveStage {
            kind,
            op,
            dtype,
            root: 0,
            counts: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapStage {
    pub program: Arc<CgraProgram>,
    /// DSL source tree; the oracle evaluates it instead of the binary.
    pub source: Option<MapAst>,
}

impl MapStage {
    /// Compiles `src` for `cfg`, keeping the tree for the oracle.
    pub fn from_source(src: &str, cfg: &CgraConfig) -> Result<Self, FusionError> {
        let ast = parse_dsl(src).map_err(acis_cgra::mapc::CompileError::from)?;
        let c = compile_ast(&ast, cfg)?;
        Ok(MapStage {
            program: Arc::new(c.program),
            source: Some(ast),
        })
    }

    pub fn from_program(program: CgraProgram) -> Self {
        MapStage {
            program: Arc::new(program),
            source: None,
        }
    }

    pub fn identity(elem: Elem, cfg: &CgraConfig) -> Result<Self, FusionError> {
        Self::from_source(&format!("elem {}\nout = in0", elem.name()), cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stage {
    Collective(CollectiveStage),
    Map(MapStage),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedPlan {
    /// Carried in the `op_id` header field.
    pub plan_id: u16,
    pub stages: Vec<Stage>,
    pub cgra: CgraConfig,
}

/// Element family shared by scalar and vector kinds.
fn family(kind: DTypeKind) -> DTypeKind {
    vector_kind(kind)
}

fn map_family(elem: Elem) -> DTypeKind {
    match elem {
        Elem::I32 => DTypeKind::VecI32,
        Elem::F32 => DTypeKind::VecF32,
    }
}

fn fusable(kind: CollectiveKind) -> bool {
    acis_dataplane::plan::fusable(kind)
}

impl FusedPlan {
    /// One collective followed by an identity map.
    pub fn single(plan_id: u16, stage: CollectiveStage, cgra: CgraConfig) -> Result<Self, FusionError> {
        let elem = match family(stage.dtype) {
            DTypeKind::VecI32 => Elem::I32,
            DTypeKind::VecF32 => Elem::F32,
            k => return Err(FusionError::DtypeChainMismatch(format!("map stages do not accept {k}"))),
        };
        let id = MapStage::identity(elem, &cgra)?;
        let plan = FusedPlan {
            plan_id,
            stages: vec![Stage::Collective(stage), Stage::Map(id)],
            cgra,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn first(&self) -> &CollectiveStage {
        match &self.stages[0] {
            Stage::Collective(c) => c,
            Stage::Map(_) => unreachable!("validated"),
        }
    }

    /// Element family flowing between stages.
    pub fn family(&self) -> DTypeKind {
        family(self.first().dtype)
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        let chain = |m: String| Err(FusionError::DtypeChainMismatch(m));
        if self.stages.len() < 2 {
            return chain(format!("a plan needs at least 2 stages, got {}", self.stages.len()));
        }
        if !self.stages.iter().any(|s| matches!(s, Stage::Collective(_))) {
            return chain("no collective stage".into());
        }
        if !matches!(self.stages[0], Stage::Collective(_)) {
            return Err(FusionError::InvalidPlan("the first stage must be a collective".into()));
        }
        let mut prev: Option<DTypeKind> = None;
        for (i, s) in self.stages.iter().enumerate() {
            let fam = match s {
                Stage::Collective(c) => {
                    if !fusable(c.kind) {
                        return Err(FusionError::InvalidPlan(format!(
                            "stage {i}: {} cannot be fused",
                            c.kind
                        )));
                    }
                    if c.dtype == DTypeKind::SparseF32 {
                        return chain(format!("stage {i}: sparse values cannot be fused"));
                    }
                    if c.kind == CollectiveKind::Allreduce && !c.op.is_fold(c.dtype) {
                        return Err(FusionError::InvalidPlan(format!(
                            "stage {i}: {} is not an element-wise reduction of {}",
                            c.op.name(),
                            c.dtype
                        )));
                    }
                    family(c.dtype)
                }
                Stage::Map(m) => {
                    if m.program.n_inputs != 1 {
                        return Err(FusionError::InvalidPlan(format!(
                            "stage {i}: map stages take one input"
                        )));
                    }
                    map_family(m.program.elem)
                }
            };
            if let Some(p) = prev {
                if p != fam {
                    return chain(format!("stage {i} takes {fam}, stage {} yields {p}", i - 1));
                }
            }
            prev = Some(fam);
        }
        Ok(())
    }

    /// The form installed on switches.
    pub fn switch_plan(&self) -> SwitchPlan {
        let stages = self
            .stages
            .iter()
            .map(|s| match s {
                Stage::Collective(c) => SwitchStage::Collective {
                    kind: c.kind,
                    op: c.op,
                    dtype: DType::new(c.dtype, 0),
                    root: c.root,
                },
                Stage::Map(m) => SwitchStage::Map(Arc::clone(&m.program)),
            })
            .collect();
        SwitchPlan {
            plan_id: self.plan_id,
            stages,
            cgra: self.cgra,
        }
    }
}
