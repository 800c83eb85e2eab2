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

//! Network graphs and deterministic routing.
//!
//! Vertex numbering: hosts occupy `0..n_hosts`, so a host's vertex id equals
//! its rank. Torus switch `i` (attached to host `i`) is vertex `n_hosts + i`.
//! A star's switch is vertex `n` and its accelerator vertex `n + 1`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub type VertexId = u32;
pub type LinkId = u32;

/// Upper bound on host count; routing tables are quadratic in vertex count.
pub const MAX_HOSTS: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopologySpec {
    Torus3D { dx: u32, dy: u32, dz: u32 },
    StarWithAccel { leaves: u32 },
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Torus3D { dx, dy, dz } => write!(f, "torus {dx}x{dy}x{dz}"),
            TopologySpec::StarWithAccel { leaves } => write!(f, "star {leaves}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Host,
    Switch,
    Accel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinkKind {
    HostToSwitch,
    SwitchToSwitch,
    AccelLink,
}

impl LinkKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkKind::HostToSwitch => "host_to_switch",
            LinkKind::SwitchToSwitch => "switch_to_switch",
            LinkKind::AccelLink => "accel_link",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub src: VertexId,
    pub dst: VertexId,
    pub kind: LinkKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopoError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("no route from {src} to {dst}")]
    Unreachable { src: VertexId, dst: VertexId },
    #[error("vertex {0} does not exist")]
    NoSuchVertex(VertexId),
}

/// A rooted spanning tree over ACiS-capable vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree {
    pub root: VertexId,
    /// Indexed by vertex id; `None` for the root and for non-members.
    pub parent: Vec<Option<VertexId>>,
    /// Indexed by vertex id, in discovery order.
    pub children: Vec<Vec<VertexId>>,
    /// Members in BFS order (root first).
    pub order: Vec<VertexId>,
}

#[derive(Clone, Debug)]
pub struct Topology {
    spec: TopologySpec,
    n_hosts: u32,
    kinds: Vec<VertexKind>,
    links: Vec<Link>,
    out: Vec<Vec<LinkId>>,
    by_pair: HashMap<(VertexId, VertexId), LinkId>,
    /// `next[at * n_vertices + dst]`, `LinkId::MAX` when unroutable.
    next: Vec<LinkId>,
}

impl Topology {
    pub fn build(spec: TopologySpec) -> Result<Self, TopoError> {
        let mut t = Self::build_graph(spec)?;
        t.out.resize(t.kinds.len(), Vec::new());
        let n = t.kinds.len();
        let mut next = vec![LinkId::MAX; n * n];
        for at in 0..n as VertexId {
            for dst in 0..n as VertexId {
                if let Ok(l) = t.compute_next(at, dst) {
                    next[at as usize * n + dst as usize] = l;
                }
            }
        }
        t.next = next;
        Ok(t)
    }

    fn build_graph(spec: TopologySpec) -> Result<Self, TopoError> {
        match spec {
            TopologySpec::Torus3D { dx, dy, dz } => {
                if dx == 0 || dy == 0 || dz == 0 {
                    return Err(TopoError::InvalidDimensions(format!("{dx}x{dy}x{dz}")));
                }
                let n = dx
                    .checked_mul(dy)
                    .and_then(|v| v.checked_mul(dz))
                    .filter(|&v| v <= MAX_HOSTS)
                    .ok_or_else(|| TopoError::InvalidDimensions(format!("{dx}x{dy}x{dz}")))?;
                let mut t = Topology::empty(spec, n);
                t.kinds.extend(std::iter::repeat_n(VertexKind::Switch, n as usize));
                for h in 0..n {
                    t.add_pair(h, n + h, LinkKind::HostToSwitch);
                }
                let dims = [dx, dy, dz];
                for s in 0..n {
                    let c = t.coords_of_index(s);
                    for d in 0..3 {
                        for step in [1, dims[d] - 1] {
                            let mut nc = c;
                            nc[d] = (c[d] + step) % dims[d];
                            let nb = t.index_of_coords(nc);
                            if nb != s {
                                t.add_link(n + s, n + nb, LinkKind::SwitchToSwitch);
                            }
                        }
                    }
                }
                Ok(t)
            }
            TopologySpec::StarWithAccel { leaves } => {
                if leaves == 0 || leaves > MAX_HOSTS {
                    return Err(TopoError::InvalidDimensions(format!("star with {leaves} leaves")));
                }
                let mut t = Topology::empty(spec, leaves);
                t.kinds.push(VertexKind::Switch);
                t.kinds.push(VertexKind::Accel);
                for h in 0..leaves {
                    t.add_pair(h, leaves, LinkKind::HostToSwitch);
                }
                t.add_pair(leaves, leaves + 1, LinkKind::AccelLink);
                Ok(t)
            }
        }
    }

    fn empty(spec: TopologySpec, n_hosts: u32) -> Self {
        Topology {
            spec,
            n_hosts,
            kinds: vec![VertexKind::Host; n_hosts as usize],
            links: Vec::new(),
            out: Vec::new(),
            by_pair: HashMap::new(),
            next: Vec::new(),
        }
    }

    fn add_link(&mut self, src: VertexId, dst: VertexId, kind: LinkKind) {
        if self.by_pair.contains_key(&(src, dst)) {
            return;
        }
        let id = self.links.len() as LinkId;
        self.links.push(Link { src, dst, kind });
        if self.out.len() < self.kinds.len() {
            self.out.resize(self.kinds.len(), Vec::new());
        }
        self.out[src as usize].push(id);
        self.by_pair.insert((src, dst), id);
    }

    fn add_pair(&mut self, a: VertexId, b: VertexId, kind: LinkKind) {
        self.add_link(a, b, kind);
        self.add_link(b, a, kind);
    }

    fn dims(&self) -> [u32; 3] {
        match self.spec {
            TopologySpec::Torus3D { dx, dy, dz } => [dx, dy, dz],
            TopologySpec::StarWithAccel { .. } => [1, 1, 1],
        }
    }

    fn coords_of_index(&self, i: u32) -> [u32; 3] {
        let [dx, dy, _] = self.dims();
        [i % dx, (i / dx) % dy, i / (dx * dy)]
    }

    fn index_of_coords(&self, c: [u32; 3]) -> u32 {
        let [dx, dy, _] = self.dims();
        c[0] + dx * (c[1] + dy * c[2])
    }

    pub fn spec(&self) -> TopologySpec {
        self.spec
    }

    pub fn n_hosts(&self) -> u32 {
        self.n_hosts
    }

    pub fn n_vertices(&self) -> u32 {
        self.kinds.len() as u32
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.kinds[v as usize]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> Link {
        self.links[id as usize]
    }

    pub fn out_links(&self, v: VertexId) -> &[LinkId] {
        &self.out[v as usize]
    }

    pub fn link_between(&self, a: VertexId, b: VertexId) -> Option<LinkId> {
        self.by_pair.get(&(a, b)).copied()
    }

    pub fn count_links(&self, kind: LinkKind) -> usize {
        self.links.iter().filter(|l| l.kind == kind).count()
    }

    /// The switch a host is cabled to.
    pub fn attached_switch(&self, host: VertexId) -> VertexId {
        match self.spec {
            TopologySpec::Torus3D { .. } => self.n_hosts + host,
            TopologySpec::StarWithAccel { leaves } => leaves,
        }
    }

    /// Vertices that run the collective dataplane.
    pub fn acis_vertices(&self) -> Vec<VertexId> {
        match self.spec {
            TopologySpec::Torus3D { .. } => (self.n_hosts..2 * self.n_hosts).collect(),
            TopologySpec::StarWithAccel { leaves } => vec![leaves + 1],
        }
    }

    /// Torus coordinates of a switch vertex.
    pub fn torus_coords(&self, switch: VertexId) -> [u32; 3] {
        self.coords_of_index(switch - self.n_hosts)
    }

    /// Switch vertex at the given torus coordinates.
    pub fn torus_switch(&self, c: [u32; 3]) -> VertexId {
        self.n_hosts + self.index_of_coords(c)
    }

    fn check(&self, v: VertexId) -> Result<(), TopoError> {
        if (v as usize) < self.kinds.len() {
            Ok(())
        } else {
            Err(TopoError::NoSuchVertex(v))
        }
    }

    /// First link of the deterministic route from `at` to `dst`.
    #[inline]
    pub fn next_link(&self, at: VertexId, dst: VertexId) -> Result<LinkId, TopoError> {
        let n = self.kinds.len();
        match self.next.get(at as usize * n + dst as usize) {
            Some(&l) if l != LinkId::MAX && (dst as usize) < n => Ok(l),
            _ => Err(TopoError::Unreachable { src: at, dst }),
        }
    }

    fn compute_next(&self, at: VertexId, dst: VertexId) -> Result<LinkId, TopoError> {
        self.check(at)?;
        self.check(dst)?;
        let unreachable = TopoError::Unreachable { src: at, dst };
        if at == dst {
            return Err(unreachable);
        }
        if let Some(l) = self.link_between(at, dst) {
            return Ok(l);
        }
        let next = match (self.spec, self.kind(at)) {
            (_, VertexKind::Host) => self.attached_switch(at),
            (TopologySpec::StarWithAccel { leaves }, VertexKind::Accel) => leaves,
            (TopologySpec::StarWithAccel { .. }, _) => return Err(unreachable),
            (TopologySpec::Torus3D { .. }, _) => {
                let target = match self.kind(dst) {
                    VertexKind::Host => self.attached_switch(dst),
                    _ => dst,
                };
                let (a, b) = (self.torus_coords(at), self.torus_coords(target));
                let dims = self.dims();
                let d = (0..3).find(|&d| a[d] != b[d]).ok_or(unreachable.clone())?;
                let fwd = (b[d] + dims[d] - a[d]) % dims[d];
                let mut c = a;
                c[d] = if fwd <= dims[d] - fwd {
                    (a[d] + 1) % dims[d]
                } else {
                    (a[d] + dims[d] - 1) % dims[d]
                };
                self.torus_switch(c)
            }
        };
        self.link_between(at, next).ok_or(unreachable)
    }

    /// Full ordered link path from `src` to `dst`.
    pub fn route(&self, src: VertexId, dst: VertexId) -> Result<Vec<LinkId>, TopoError> {
        if src == dst {
            return Err(TopoError::Unreachable { src, dst });
        }
        let mut path = Vec::new();
        let mut at = src;
        while at != dst {
            let l = self.next_link(at, dst)?;
            path.push(l);
            at = self.links[l as usize].dst;
            if path.len() > self.links.len() {
                return Err(TopoError::Unreachable { src, dst });
            }
        }
        Ok(path)
    }

    /// ACiS-capable neighbours of `v`, in link order.
    pub fn acis_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.out[v as usize]
            .iter()
            .map(|&l| self.links[l as usize].dst)
            .filter(|&u| self.kind(u) != VertexKind::Host && self.is_acis(u))
            .collect()
    }

    fn is_acis(&self, v: VertexId) -> bool {
        match self.spec {
            TopologySpec::Torus3D { .. } => self.kind(v) == VertexKind::Switch,
            TopologySpec::StarWithAccel { .. } => self.kind(v) == VertexKind::Accel,
        }
    }

    /// Breadth-first spanning tree over the dataplane vertices.
    pub fn bfs_tree(&self, root: VertexId) -> Result<SpanningTree, TopoError> {
        self.check(root)?;
        if !self.is_acis(root) {
            return Err(TopoError::NoSuchVertex(root));
        }
        let n = self.kinds.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut order = Vec::new();
        let mut q = VecDeque::from([root]);
        seen[root as usize] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            for u in self.acis_neighbors(v) {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    parent[u as usize] = Some(v);
                    children[v as usize].push(u);
                    q.push_back(u);
                }
            }
        }
        Ok(SpanningTree {
            root,
            parent,
            children,
            order,
        })
    }
}
