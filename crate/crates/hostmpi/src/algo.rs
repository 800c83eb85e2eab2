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

//! Per-rank step schedules for each baseline algorithm.
//!
//! A step first issues its sends, then waits for every listed receive, then
//! applies its local action. Messages are matched on `(tag, source rank)`.

use acis_core::wire::CollectiveKind;
use acis_core::DTypeKind;

use crate::CollectiveCall;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AllreduceAlgo {
    /// `log2 N` pairwise exchanges; power-of-two `N` only.
    RecursiveDoubling,
    /// Reduce-scatter then allgather around a ring.
    Ring,
    /// Linear reduce to rank 0 in rank order, then binomial broadcast.
    LinearBcast,
}

impl AllreduceAlgo {
    /// Integer reductions are order-insensitive and take the fast exchanges;
    /// other dtypes keep the left-fold order.
    pub fn default_for(kind: DTypeKind, n: u32) -> Self {
        match (kind.is_integer(), n.is_power_of_two()) {
            (true, true) => AllreduceAlgo::RecursiveDoubling,
            (true, false) => AllreduceAlgo::Ring,
            (false, _) => AllreduceAlgo::LinearBcast,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Src {
    Acc,
    Slot(usize),
    Block(usize),
    /// Several slots, length-framed.
    Slots(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dst {
    Acc,
    /// `acc = acc ⊕ x`.
    Combine,
    /// `acc = x ⊕ acc`.
    CombineLeft,
    Slot(usize),
    /// `slot = slot ⊕ x`.
    CombineSlot(usize),
    Slots(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    None,
    AccToSlot(usize),
    BlockToSlot(usize),
    /// `acc = slot[0] ⊕ slot[1] ⊕ …` in slot order.
    FoldSlots,
    /// `acc = concat(slots)`.
    ConcatSlots,
    /// `slots = split(acc, n)`.
    SplitAcc(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub sends: Vec<(u32, u32, Src)>,
    pub recvs: Vec<(u32, u32, Dst)>,
    pub action: Action,
}

impl Step {
    fn action(action: Action) -> Self {
        Step {
            sends: vec![],
            recvs: vec![],
            action,
        }
    }

    fn send(peer: u32, tag: u32, src: Src) -> Self {
        Step {
            sends: vec![(peer, tag, src)],
            recvs: vec![],
            action: Action::None,
        }
    }

    fn recv(peer: u32, tag: u32, dst: Dst) -> Self {
        Step {
            sends: vec![],
            recvs: vec![(peer, tag, dst)],
            action: Action::None,
        }
    }
}

pub type Program = Vec<Step>;

/// Tags are `phase << 16 | round` so that concatenated phases never collide.
fn tag(phase: u32, round: u32) -> u32 {
    (phase << 16) | round
}

fn lowbit(v: u32) -> u32 {
    v & v.wrapping_neg()
}

/// Children offsets of relative rank `vr` in a binomial tree of `n` ranks,
/// largest subtree first.
fn binomial_children(vr: u32, n: u32) -> Vec<u32> {
    let limit = if vr == 0 { n.next_power_of_two() } else { lowbit(vr) };
    let mut out = Vec::new();
    let mut m = limit >> 1;
    while m > 0 {
        if vr + m < n {
            out.push(m);
        }
        m >>= 1;
    }
    out
}

fn abs_rank(rel: u32, root: u32, n: u32) -> u32 {
    (rel + root) % n
}

pub fn bcast(r: u32, n: u32, root: u32, phase: u32) -> Program {
    let vr = (r + n - root) % n;
    let mut p = Vec::new();
    if vr != 0 {
        let parent = abs_rank(vr - lowbit(vr), root, n);
        p.push(Step::recv(parent, tag(phase, 0), Dst::Acc));
    }
    let sends: Vec<_> = binomial_children(vr, n)
        .into_iter()
        .map(|m| (abs_rank(vr + m, root, n), tag(phase, 0), Src::Acc))
        .collect();
    if !sends.is_empty() {
        p.push(Step {
            sends,
            recvs: vec![],
            action: Action::None,
        });
    }
    p
}

pub fn reduce_binomial(r: u32, n: u32, root: u32, phase: u32) -> Program {
    let vr = (r + n - root) % n;
    let mut kids = binomial_children(vr, n);
    kids.reverse();
    let mut p = Vec::new();
    if !kids.is_empty() {
        p.push(Step {
            sends: vec![],
            recvs: kids
                .into_iter()
                .map(|m| (abs_rank(vr + m, root, n), tag(phase, 0), Dst::Combine))
                .collect(),
            action: Action::None,
        });
    }
    if vr != 0 {
        p.push(Step::send(abs_rank(vr - lowbit(vr), root, n), tag(phase, 0), Src::Acc));
    }
    p
}

pub fn reduce_linear(r: u32, n: u32, root: u32, phase: u32) -> Program {
    if r != root {
        return vec![Step::send(root, tag(phase, 0), Src::Acc)];
    }
    if n == 1 {
        return vec![];
    }
    vec![
        Step::action(Action::AccToSlot(root as usize)),
        Step {
            sends: vec![],
            recvs: (0..n)
                .filter(|&s| s != root)
                .map(|s| (s, tag(phase, 0), Dst::Slot(s as usize)))
                .collect(),
            action: Action::FoldSlots,
        },
    ]
}

pub fn allreduce_rd(r: u32, n: u32, phase: u32) -> Program {
    let mut p = Vec::new();
    let mut k = 0;
    while (1u32 << k) < n {
        let partner = r ^ (1 << k);
        let dst = if partner < r { Dst::CombineLeft } else { Dst::Combine };
        p.push(Step {
            sends: vec![(partner, tag(phase, k), Src::Acc)],
            recvs: vec![(partner, tag(phase, k), dst)],
            action: Action::None,
        });
        k += 1;
    }
    p
}

pub fn allreduce_ring(r: u32, n: u32, phase: u32) -> Program {
    if n == 1 {
        return vec![];
    }
    let (nu, ru) = (n as usize, r as usize);
    let next = (r + 1) % n;
    let prev = (r + n - 1) % n;
    let mut p = vec![Step::action(Action::SplitAcc(nu))];
    for s in 0..nu - 1 {
        p.push(Step {
            sends: vec![(next, tag(phase, s as u32), Src::Slot((ru + nu - s) % nu))],
            recvs: vec![(prev, tag(phase, s as u32), Dst::CombineSlot((ru + 2 * nu - s - 1) % nu))],
            action: Action::None,
        });
    }
    for s in 0..nu - 1 {
        let t = tag(phase + 1, s as u32);
        p.push(Step {
            sends: vec![(next, t, Src::Slot((ru + 1 + nu - s) % nu))],
            recvs: vec![(prev, t, Dst::Slot((ru + nu - s) % nu))],
            action: Action::None,
        });
    }
    p.push(Step::action(Action::ConcatSlots));
    p
}

pub fn allgather_ring(r: u32, n: u32, phase: u32) -> Program {
    let (nu, ru) = (n as usize, r as usize);
    let next = (r + 1) % n;
    let prev = (r + n - 1) % n;
    let mut p = vec![Step::action(Action::AccToSlot(ru))];
    for s in 0..nu.saturating_sub(1) {
        p.push(Step {
            sends: vec![(next, tag(phase, s as u32), Src::Slot((ru + nu - s) % nu))],
            recvs: vec![(prev, tag(phase, s as u32), Dst::Slot((ru + 2 * nu - s - 1) % nu))],
            action: Action::None,
        });
    }
    p
}

pub fn gather_binomial(r: u32, n: u32, root: u32, phase: u32) -> Program {
    let vr = (r + n - root) % n;
    let ranks = |lo: u32, hi: u32| -> Vec<usize> { (lo..hi.min(n)).map(|v| abs_rank(v, root, n) as usize).collect() };
    let mut p = vec![Step::action(Action::AccToSlot(r as usize))];
    let mut mask = 1;
    while mask < n {
        if vr & mask != 0 {
            p.push(Step::send(
                abs_rank(vr - mask, root, n),
                tag(phase, mask),
                Src::Slots(ranks(vr, vr + mask)),
            ));
            break;
        }
        if vr + mask < n {
            p.push(Step::recv(
                abs_rank(vr + mask, root, n),
                tag(phase, mask),
                Dst::Slots(ranks(vr + mask, vr + 2 * mask)),
            ));
        }
        mask <<= 1;
    }
    p
}

pub fn alltoall_pairwise(r: u32, n: u32, phase: u32) -> Program {
    let mut p = vec![Step::action(Action::BlockToSlot(r as usize))];
    for s in 1..n {
        let to = (r + s) % n;
        let from = (r + n - s) % n;
        p.push(Step {
            sends: vec![(to, tag(phase, s), Src::Block(to as usize))],
            recvs: vec![(from, tag(phase, s), Dst::Slot(from as usize))],
            action: Action::None,
        });
    }
    p
}

/// Program for rank `r` of `call`.
pub fn program(call: &CollectiveCall, algo: AllreduceAlgo, r: u32) -> Program {
    let (n, root) = (call.n(), call.root);
    let int = call.dtype.kind.is_integer();
    match call.kind {
        CollectiveKind::Bcast => bcast(r, n, root, 0),
        CollectiveKind::Reduce if int => reduce_binomial(r, n, root, 0),
        CollectiveKind::Reduce => reduce_linear(r, n, root, 0),
        CollectiveKind::Allreduce => match algo {
            AllreduceAlgo::RecursiveDoubling if n.is_power_of_two() => allreduce_rd(r, n, 0),
            AllreduceAlgo::RecursiveDoubling | AllreduceAlgo::Ring => allreduce_ring(r, n, 0),
            AllreduceAlgo::LinearBcast => {
                let mut p = reduce_linear(r, n, 0, 0);
                p.extend(bcast(r, n, 0, 1));
                p
            }
        },
        CollectiveKind::Gather => gather_binomial(r, n, root, 0),
        CollectiveKind::Allgather => allgather_ring(r, n, 0),
        CollectiveKind::Alltoall => alltoall_pairwise(r, n, 0),
        CollectiveKind::Fused => Vec::new(),
    }
}
