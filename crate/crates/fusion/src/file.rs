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

//! Plan description files.
//!
//! ```toml
//! plan_id = 7
//!
//! [cgra]            # optional, defaults otherwise
//! lanes = 16
//!
//! [[stage]]
//! collective = "allgather"
//! dtype = "vec_i32"
//! counts = [1, 1]   # optional
//!
//! [[stage]]
//! map = "elem i32\nout = scan_add(in0)"
//!
//! [[stage]]
//! binary = "prefix.bin"   # relative to the plan file
//! ```

use std::path::Path;

use acis_cgra::{CgraConfig, CgraProgram};
use acis_core::wire::CollectiveKind;
use acis_core::{DTypeKind, ReduceOp};
use serde::Deserialize;
use thiserror::Error;

use crate::plan::{CollectiveStage, FusedPlan, MapStage, Stage};
use crate::FusionError;

#[derive(Debug, Error)]
pub enum PlanFileError {
    #[error("{0}")]
    Syntax(String),
    #[error("stage {stage}: {msg}")]
    Stage { stage: usize, msg: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Plan(#[from] FusionError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCgra {
    spu_count: Option<u32>,
    lanes: Option<u32>,
    vregs: Option<u32>,
    sregs: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileStage {
    collective: Option<String>,
    op: Option<String>,
    dtype: Option<String>,
    root: Option<u32>,
    counts: Option<Vec<u32>>,
    map: Option<String>,
    binary: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    plan_id: u16,
    cgra: Option<FileCgra>,
    stage: Vec<FileStage>,
}

fn stage(i: usize, s: FileStage, cgra: &CgraConfig, base: &Path) -> Result<Stage, PlanFileError> {
    let err = |msg: String| PlanFileError::Stage { stage: i, msg };
    match (s.collective, s.map, s.binary) {
        (Some(kind), None, None) => {
            let kind = CollectiveKind::from_name(&kind).ok_or_else(|| err(format!("unknown collective {kind:?}")))?;
            let dtype = s.dtype.ok_or_else(|| err("missing dtype".into()))?;
            let dtype = DTypeKind::from_name(&dtype).ok_or_else(|| err(format!("unknown dtype {dtype:?}")))?;
            let op = match s.op {
                Some(o) => ReduceOp::from_name(&o).ok_or_else(|| err(format!("unknown op {o:?}")))?,
                None => ReduceOp::Sum,
            };
            Ok(Stage::Collective(CollectiveStage {
                kind,
                op,
                dtype,
                root: s.root.unwrap_or(0),
                counts: s.counts,
            }))
        }
        (None, Some(src), None) => Ok(Stage::Map(MapStage::from_source(&src, cgra)?)),
        (None, None, Some(path)) => {
            let full = base.join(&path);
            let bytes = std::fs::read(&full).map_err(|source| PlanFileError::Io {
                path: full.display().to_string(),
                source,
            })?;
            let prog = CgraProgram::from_bytes(&bytes).map_err(|e| err(e.to_string()))?;
            Ok(Stage::Map(MapStage::from_program(prog)))
        }
        _ => Err(err("give exactly one of collective, map or binary".into())),
    }
}

/// Parses and validates a plan; binary paths resolve against `base`.
pub fn parse_plan_file(text: &str, base: &Path) -> Result<FusedPlan, PlanFileError> {
    let f: PlanFile = toml::from_str(text).map_err(|e| PlanFileError::Syntax(e.to_string()))?;
    let mut cgra = CgraConfig::default();
    if let Some(c) = f.cgra {
        cgra.spu_count = c.spu_count.unwrap_or(cgra.spu_count);
        cgra.lanes = c.lanes.unwrap_or(cgra.lanes);
        cgra.vregs = c.vregs.unwrap_or(cgra.vregs);
        cgra.sregs = c.sregs.unwrap_or(cgra.sregs);
    }
    let stages = f
        .stage
        .into_iter()
        .enumerate()
        .map(|(i, s)| stage(i, s, &cgra, base))
        .collect::<Result<_, _>>()?;
    let plan = FusedPlan {
        plan_id: f.plan_id,
        stages,
        cgra,
    };
    plan.validate()?;
    Ok(plan)
}

/// Reads a plan file from disk.
pub fn load_plan_file(path: &Path) -> Result<FusedPlan, PlanFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| PlanFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_plan_file(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_stage_plan() {
        let text = "plan_id = 3\n[[stage]]\ncollective = \"allgather\"\ndtype = \"vec_i32\"\n\
                    [[stage]]\nmap = \"elem i32\\nout = scan_add(in0)\"\n\
                    [[stage]]\ncollective = \"allgather\"\ndtype = \"vec_i32\"\n";
        let p = parse_plan_file(text, Path::new(".")).unwrap();
        assert_eq!(p.plan_id, 3);
        assert_eq!(p.stages.len(), 3);
        assert!(matches!(&p.stages[1], Stage::Map(m) if m.source.is_some()));
    }

    #[test]
    fn rejects_ambiguous_stage() {
        let text = "plan_id = 1\n[[stage]]\ncollective = \"allreduce\"\nmap = \"out = in0\"\n";
        assert!(matches!(
            parse_plan_file(text, Path::new(".")),
            Err(PlanFileError::Stage { stage: 0, .. })
        ));
    }

    #[test]
    fn map_only_is_a_chain_error() {
        let text = "plan_id = 1\n[[stage]]\nmap = \"out = in0\"\n[[stage]]\nmap = \"out = in0\"\n";
        assert!(matches!(
            parse_plan_file(text, Path::new(".")),
            Err(PlanFileError::Plan(FusionError::DtypeChainMismatch(_)))
        ));
    }
}
