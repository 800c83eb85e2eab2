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

//! Baseline collectives executed by hosts over the simulated network.
//!
//! Each collective compiles to a per-rank list of steps (sends, then
//! receives, then a local action) that a generic executor drives through the
//! engine. Results come from the bytes that actually crossed the network.

pub mod algo;
pub mod chunk;
pub mod exec;
pub mod gen;
pub mod oracle;

use acis_core::wire::CollectiveKind;
use acis_core::{DType, ReduceOp, Value, ValueError};
use acis_simnet::{SimError, VertexId};
use thiserror::Error;

pub use algo::AllreduceAlgo;
pub use chunk::Chunk;
pub use exec::{run_host, run_host_with, HostRun};
pub use oracle::oracle;

/// Per-rank result; `None` for ranks that receive nothing.
pub type Results = Vec<Option<Vec<Chunk>>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HostError {
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid collective call: {0}")]
    InvalidCall(String),
    #[error("rank {0} did not complete")]
    Incomplete(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Communicator {
    pub comm_id: u32,
    /// Host vertex of each rank.
    pub members: Vec<VertexId>,
}

impl Communicator {
    /// Ranks `0..n` on host vertices `0..n`.
    pub fn world(comm_id: u32, n: u32) -> Self {
        Communicator {
            comm_id,
            members: (0..n).collect(),
        }
    }

    pub fn size(&self) -> u32 {
        self.members.len() as u32
    }

    pub fn host(&self, rank: u32) -> VertexId {
        self.members[rank as usize]
    }

    pub fn rank_of(&self, host: VertexId) -> Option<u32> {
        self.members.iter().position(|&h| h == host).map(|r| r as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectiveCall {
    pub kind: CollectiveKind,
    pub root: u32,
    pub op: ReduceOp,
    pub dtype: DType,
    /// Per rank: one chunk, or for alltoall one block per destination rank.
    pub inputs: Vec<Vec<Chunk>>,
}

impl CollectiveCall {
    /// A call where rank `i` contributes `values[i]`.
    pub fn with_values(kind: CollectiveKind, op: ReduceOp, dtype: DType, values: Vec<Value>) -> Self {
        CollectiveCall {
            kind,
            root: 0,
            op,
            dtype,
            inputs: values.into_iter().map(|v| vec![Chunk::Val(v)]).collect(),
        }
    }

    /// A timing-only call over `n` ranks with `bytes`-sized contributions.
    pub fn opaque(kind: CollectiveKind, op: ReduceOp, dtype: DType, n: u32, bytes: usize) -> Self {
        let per_rank = if kind == CollectiveKind::Alltoall {
            Chunk::Opaque(bytes).split(n as usize, dtype.kind.elem_bytes())
        } else {
            vec![Chunk::Opaque(bytes)]
        };
        CollectiveCall {
            kind,
            root: 0,
            op,
            dtype,
            inputs: vec![per_rank; n as usize],
        }
    }

    pub fn with_root(mut self, root: u32) -> Self {
        self.root = root;
        self
    }

    pub fn n(&self) -> u32 {
        self.inputs.len() as u32
    }

    pub fn is_reduction(&self) -> bool {
        matches!(self.kind, CollectiveKind::Reduce | CollectiveKind::Allreduce)
    }

    pub fn validate(&self) -> Result<(), HostError> {
        let n = self.n() as usize;
        if n == 0 {
            return Err(HostError::InvalidCall("empty communicator".into()));
        }
        if self.kind == CollectiveKind::Fused {
            return Err(HostError::InvalidCall("fused plans run through the dataplane".into()));
        }
        if self.root as usize >= n {
            return Err(HostError::InvalidCall(format!("root {} out of range", self.root)));
        }
        if self.is_reduction() && !self.op.is_fold(self.dtype.kind) {
            return Err(ValueError::OpDtypeMismatch {
                op: self.op,
                kind: self.dtype.kind,
            }
            .into());
        }
        let want = if self.kind == CollectiveKind::Alltoall { n } else { 1 };
        for (r, inp) in self.inputs.iter().enumerate() {
            if inp.len() != want {
                return Err(HostError::InvalidCall(format!(
                    "rank {r} supplies {} chunks, expected {want}",
                    inp.len()
                )));
            }
            for c in inp {
                if let Chunk::Val(v) = c {
                    let kind_ok = if self.kind == CollectiveKind::Alltoall {
                        acis_core::value::vector_kind(v.kind()) == acis_core::value::vector_kind(self.dtype.kind)
                    } else {
                        v.kind() == self.dtype.kind
                    };
                    if !kind_ok || !v.is_well_formed() {
                        return Err(ValueError::KindMismatch {
                            expected: self.dtype.kind,
                            got: v.kind(),
                        }
                        .into());
                    }
                }
            }
        }
        Ok(())
    }
}
