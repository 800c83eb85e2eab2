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

//! Control-plane installation: builds the per-switch contexts of one
//! collective over a pruned breadth-first tree of dataplane vertices.

use std::collections::BTreeSet;
use std::sync::Arc;

use acis_core::wire::CollectiveKind;
use acis_core::{DType, ReduceOp};
use acis_hostmpi::Communicator;
use acis_simnet::{Topology, VertexId};

use crate::context::{CollectiveContext, ContextKey, Egress, Ingress};
use crate::plan::SwitchPlan;
use crate::reorder::ReorderLayout;
use crate::switch::AcisSwitch;
use crate::DataplaneError;

/// The dataplane vertex that serves `host`.
pub fn acis_of(topo: &Topology, host: VertexId) -> VertexId {
    let sw = topo.attached_switch(host);
    let acis = topo.acis_vertices();
    if acis.contains(&sw) {
        sw
    } else {
        acis[0]
    }
}

/// Rooted collectives use the root rank's vertex, the rest use rank 0's.
pub fn tree_root(topo: &Topology, comm: &Communicator, mechanics: CollectiveKind, root: u32) -> VertexId {
    let r = match mechanics {
        CollectiveKind::Reduce | CollectiveKind::Gather | CollectiveKind::Bcast => root,
        _ => 0,
    };
    acis_of(topo, comm.host(r))
}

/// Everything needed to install one collective.
#[derive(Clone, Debug)]
pub struct InstallSpec {
    pub key: ContextKey,
    pub op: ReduceOp,
    pub dtype: DType,
    pub root: u32,
    /// Stream layout for gather-type traffic.
    pub layout: Option<Arc<ReorderLayout>>,
    pub plan: Option<Arc<SwitchPlan>>,
}

impl InstallSpec {
    pub fn mechanics(&self) -> CollectiveKind {
        match &self.plan {
            Some(p) => p.first_collective(),
            None => self.key.collective,
        }
    }
}

/// Tree shape of one installed collective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlPlane {
    pub root: VertexId,
    /// Members in BFS order, root first.
    pub vertices: Vec<VertexId>,
    /// First dataplane hop of each rank's contribution.
    pub first_hop: Vec<VertexId>,
}

/// Installs `spec` on every switch of the pruned tree.
pub fn install_collective(
    sw: &mut AcisSwitch,
    topo: &Topology,
    comm: &Communicator,
    spec: &InstallSpec,
) -> Result<ControlPlane, DataplaneError> {
    let mech = spec.mechanics();
    let n = comm.size();
    let root = tree_root(topo, comm, mech, spec.root);
    let tree = topo.bfs_tree(root).map_err(|e| DataplaneError::InvalidContext {
        vertex: root,
        reason: e.to_string(),
    })?;
    let nv = topo.n_vertices() as usize;
    let mut local: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for r in 0..n {
        local[acis_of(topo, comm.host(r)) as usize].push(r);
    }
    // smallest member rank below each vertex, leaves first
    let mut min_rank: Vec<Option<u32>> = vec![None; nv];
    for &v in tree.order.iter().rev() {
        let mut m = local[v as usize].first().copied();
        for &c in &tree.children[v as usize] {
            m = match (m, min_rank[c as usize]) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
        min_rank[v as usize] = m;
    }
    let kept: BTreeSet<VertexId> = tree
        .order
        .iter()
        .copied()
        .filter(|&v| min_rank[v as usize].is_some())
        .collect();
    let members = Arc::new(comm.members.clone());
    let reduce_type = matches!(mech, CollectiveKind::Reduce | CollectiveKind::Allreduce);
    let mut vertices = Vec::new();
    for &v in &tree.order {
        if !kept.contains(&v) {
            continue;
        }
        vertices.push(v);
        let is_root = v == root;
        let kids: Vec<VertexId> = tree.children[v as usize]
            .iter()
            .copied()
            .filter(|c| kept.contains(c))
            .collect();
        let children = if reduce_type {
            let mut c: Vec<(u32, Ingress)> = local[v as usize].iter().map(|&r| (r, Ingress::Rank(r))).collect();
            c.extend(
                kids.iter()
                    .map(|&k| (min_rank[k as usize].expect("kept"), Ingress::Switch(k))),
            );
            c.sort();
            c.into_iter().map(|(_, i)| i).collect()
        } else if !is_root {
            Vec::new()
        } else if mech == CollectiveKind::Bcast {
            vec![Ingress::Rank(spec.root)]
        } else {
            (0..n).map(Ingress::Rank).collect()
        };
        let skip_root_host = spec.key.collective == CollectiveKind::Bcast;
        let mut targets: Vec<Egress> = kids.iter().map(|&k| Egress::Switch(k)).collect();
        targets.extend(
            local[v as usize]
                .iter()
                .filter(|&&r| !(skip_root_host && r == spec.root))
                .map(|&r| Egress::Host {
                    rank: r,
                    vertex: comm.host(r),
                }),
        );
        let ctx = CollectiveContext {
            key: spec.key,
            op: spec.op,
            dtype: spec.dtype,
            children,
            parent: if is_root { None } else { tree.parent[v as usize] },
            multicast_targets: targets,
            root_rank: spec.root,
            members: Arc::clone(&members),
            layout: if is_root { spec.layout.clone() } else { None },
            plan: spec.plan.clone(),
        };
        sw.install(v, ctx)?;
    }
    let first_hop = (0..n)
        .map(|r| if reduce_type { acis_of(topo, comm.host(r)) } else { root })
        .collect();
    Ok(ControlPlane {
        root,
        vertices,
        first_hop,
    })
}
