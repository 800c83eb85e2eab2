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

//! Collective control tables: exact-match contexts keyed by communicator and
//! collective.

use std::collections::BTreeMap;
use std::sync::Arc;

use acis_core::wire::{CollectiveKind, PacketHeader};
use acis_core::{DType, ReduceOp};
use acis_simnet::VertexId;

use crate::plan::SwitchPlan;
use crate::reorder::ReorderLayout;
use crate::DataplaneError;

pub const DEFAULT_TABLE_CAPACITY: usize = 4096;

/// Identity of a contribution arriving at a switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ingress {
    Rank(u32),
    Switch(VertexId),
}

/// One destination of a multicast.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Egress {
    Host { rank: u32, vertex: VertexId },
    Switch(VertexId),
}

impl Egress {
    pub fn vertex(self) -> VertexId {
        match self {
            Egress::Host { vertex, .. } => vertex,
            Egress::Switch(v) => v,
        }
    }
}

/// `plan_id` is the fused plan id for [`CollectiveKind::Fused`] and 0
/// otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextKey {
    pub comm_id: u32,
    pub collective: CollectiveKind,
    pub plan_id: u16,
}

impl ContextKey {
    pub fn new(comm_id: u32, collective: CollectiveKind) -> Self {
        ContextKey {
            comm_id,
            collective,
            plan_id: 0,
        }
    }

    pub fn fused(comm_id: u32, plan_id: u16) -> Self {
        ContextKey {
            comm_id,
            collective: CollectiveKind::Fused,
            plan_id,
        }
    }

    pub fn of(h: &PacketHeader) -> Self {
        ContextKey {
            comm_id: h.comm_id,
            collective: h.collective,
            plan_id: if h.collective == CollectiveKind::Fused {
                h.op_id
            } else {
                0
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct CollectiveContext {
    pub key: ContextKey,
    pub op: ReduceOp,
    pub dtype: DType,
    /// Contributors in fold order.
    pub children: Vec<Ingress>,
    /// `None` at the tree root.
    pub parent: Option<VertexId>,
    pub multicast_targets: Vec<Egress>,
    pub root_rank: u32,
    /// Host vertex of every rank.
    pub members: Arc<Vec<VertexId>>,
    /// Stream layout; present at the root of gather-type collectives.
    pub layout: Option<Arc<ReorderLayout>>,
    /// Present for fused plans.
    pub plan: Option<Arc<SwitchPlan>>,
}

impl CollectiveContext {
    pub fn expected_contributors(&self) -> usize {
        self.children.len()
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    /// The collective whose traffic pattern the packets follow: the first
    /// stage of a fused plan, the collective itself otherwise.
    pub fn mechanics(&self) -> CollectiveKind {
        match &self.plan {
            Some(p) => p.first_collective(),
            None => self.key.collective,
        }
    }

    /// Position of `from` in the fold order.
    pub fn contributor_index(&self, from: Ingress) -> Option<usize> {
        self.children.iter().position(|&c| c == from)
    }

    pub fn validate(&self, vertex: VertexId) -> Result<(), DataplaneError> {
        let bad = |reason: &str| {
            Err(DataplaneError::InvalidContext {
                vertex,
                reason: reason.to_string(),
            })
        };
        let mut seen = self.children.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.children.len() {
            return bad("duplicate child");
        }
        if self.root_rank as usize >= self.members.len() {
            return bad("root rank outside communicator");
        }
        if (self.key.collective == CollectiveKind::Fused) != self.plan.is_some() {
            return bad("plan presence does not match collective");
        }
        Ok(())
    }
}

/// Bounded exact-match table of one switch.
#[derive(Clone, Debug)]
pub struct ContextTables {
    capacity: usize,
    entries: BTreeMap<ContextKey, Arc<CollectiveContext>>,
}

impl Default for ContextTables {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_TABLE_CAPACITY)
    }
}

impl ContextTables {
    pub fn with_capacity(capacity: usize) -> Self {
        ContextTables {
            capacity,
            entries: BTreeMap::new(),
        }
    }

    /// Installs or replaces the context under its key.
    pub fn install(&mut self, vertex: VertexId, ctx: CollectiveContext) -> Result<(), DataplaneError> {
        ctx.validate(vertex)?;
        if !self.entries.contains_key(&ctx.key) && self.entries.len() >= self.capacity {
            return Err(DataplaneError::TableOverflow(self.capacity));
        }
        self.entries.insert(ctx.key, Arc::new(ctx));
        Ok(())
    }

    pub fn remove(&mut self, key: &ContextKey) -> bool {
        self.entries.remove(key).is_some()
    }

    pub fn lookup(&self, key: &ContextKey) -> Result<&Arc<CollectiveContext>, DataplaneError> {
        self.entries.get(key).ok_or(DataplaneError::NoContext {
            comm_id: key.comm_id,
            collective: key.collective,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn ctx(comm_id: u32, collective: CollectiveKind, children: Vec<Ingress>) -> CollectiveContext {
        CollectiveContext {
            key: ContextKey::new(comm_id, collective),
            op: ReduceOp::Sum,
            dtype: DType::i32(),
            children,
            parent: None,
            multicast_targets: Vec::new(),
            root_rank: 0,
            members: Arc::new(vec![0, 1]),
            layout: None,
            plan: None,
        }
    }

    #[test]
    fn exact_match_lookup() {
        let mut t = ContextTables::default();
        t.install(2, ctx(7, CollectiveKind::Allreduce, vec![Ingress::Rank(0)]))
            .unwrap();
        let c = t.lookup(&ContextKey::new(7, CollectiveKind::Allreduce)).unwrap();
        assert_eq!(c.key.comm_id, 7);
        assert!(matches!(
            t.lookup(&ContextKey::new(7, CollectiveKind::Reduce)),
            Err(DataplaneError::NoContext { .. })
        ));
    }

    #[test]
    fn communicators_are_distinct() {
        let mut t = ContextTables::default();
        t.install(2, ctx(1, CollectiveKind::Allreduce, vec![Ingress::Rank(0)]))
            .unwrap();
        t.install(2, ctx(2, CollectiveKind::Allreduce, vec![Ingress::Rank(1)]))
            .unwrap();
        let a = t.lookup(&ContextKey::new(1, CollectiveKind::Allreduce)).unwrap();
        let b = t.lookup(&ContextKey::new(2, CollectiveKind::Allreduce)).unwrap();
        assert_ne!(a.children, b.children);
    }

    #[test]
    fn capacity_is_enforced() {
        let mut t = ContextTables::with_capacity(1);
        t.install(2, ctx(1, CollectiveKind::Bcast, vec![])).unwrap();
        t.install(2, ctx(1, CollectiveKind::Bcast, vec![])).unwrap();
        assert_eq!(
            t.install(2, ctx(2, CollectiveKind::Bcast, vec![])),
            Err(DataplaneError::TableOverflow(1))
        );
    }

    #[test]
    fn duplicate_children_rejected() {
        let mut t = ContextTables::default();
        let c = ctx(1, CollectiveKind::Reduce, vec![Ingress::Rank(0), Ingress::Rank(0)]);
        assert!(matches!(t.install(2, c), Err(DataplaneError::InvalidContext { .. })));
    }
}
