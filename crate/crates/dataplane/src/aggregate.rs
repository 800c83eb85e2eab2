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

//! Reduction state: one entry per `(context, tag, seq)` that folds the
//! contributions of every child exactly once.

use std::collections::{BTreeMap, HashMap, HashSet};

use acis_core::{fold, DType, DTypeKind, ReduceOp, Value};
use acis_simnet::{Payload, Time};

use crate::context::{CollectiveContext, ContextKey, Ingress};
use crate::DataplaneError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AggKey {
    pub ctx: ContextKey,
    pub tag: u32,
    pub seq: u32,
}

#[derive(Clone, Debug)]
pub struct AggregationState {
    pub key: AggKey,
    /// Indexed by contributor position in the fold order.
    slots: Vec<Option<Payload>>,
    arrived: usize,
    /// Running value in eager mode.
    partial: Option<Payload>,
    pub opened_at: Time,
}

impl AggregationState {
    pub fn arrived(&self) -> usize {
        self.arrived
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Buffered,
    Complete(Payload),
}

/// `a ⊕ b` on encoded payloads; opaque operands keep the left length.
pub fn combine(op: ReduceOp, kind: DTypeKind, a: &Payload, b: &Payload) -> Result<Payload, DataplaneError> {
    fold_payloads(op, kind, &[a, b])
}

/// Left fold over encoded payloads in slice order.
pub fn fold_payloads(op: ReduceOp, kind: DTypeKind, items: &[&Payload]) -> Result<Payload, DataplaneError> {
    let Some(first) = items.first() else {
        return Err(DataplaneError::InvalidContext {
            vertex: 0,
            reason: "fold over no contributions".into(),
        });
    };
    if items.iter().any(|p| p.is_opaque()) {
        return Ok(Payload::Opaque(first.len()));
    }
    let values: Vec<Value> = items
        .iter()
        .map(|p| Value::decode(kind, p.bytes().expect("not opaque")))
        .collect::<Result<_, _>>()?;
    let dtype = DType::new(kind, values[0].len() as u32);
    Ok(Payload::Bytes(fold(op, &dtype, &values)?.encode()))
}

/// Open and completed aggregation keys of one switch.
#[derive(Clone, Debug)]
pub struct AggTable {
    capacity: usize,
    /// Fold on arrival instead of in contributor order.
    eager: bool,
    open: HashMap<AggKey, AggregationState>,
    completed: HashSet<AggKey>,
    pub completions: u64,
}

impl AggTable {
    pub fn new(capacity: usize, eager: bool) -> Self {
        AggTable {
            capacity,
            eager,
            open: HashMap::new(),
            completed: HashSet::new(),
            completions: 0,
        }
    }

    pub fn open_keys(&self) -> usize {
        self.open.len()
    }

    pub fn state(&self, key: &AggKey) -> Option<&AggregationState> {
        self.open.get(key)
    }

    /// Accepts one contribution. `Complete` is returned exactly once per key,
    /// when the last expected contributor arrives.
    pub fn aggregate(
        &mut self,
        ctx: &CollectiveContext,
        key: AggKey,
        from: Ingress,
        payload: Payload,
        now: Time,
    ) -> Result<Outcome, DataplaneError> {
        let idx = ctx
            .contributor_index(from)
            .ok_or(DataplaneError::UnknownContributor { from })?;
        let dup = DataplaneError::DuplicateContribution {
            from,
            tag: key.tag,
            seq: key.seq,
        };
        if self.completed.contains(&key) {
            return Err(dup);
        }
        let expected = ctx.expected_contributors();
        if !self.open.contains_key(&key) && self.open.len() >= self.capacity {
            return Err(DataplaneError::TableOverflow(self.capacity));
        }
        let st = self.open.entry(key).or_insert_with(|| AggregationState {
            key,
            slots: vec![None; expected],
            arrived: 0,
            partial: None,
            opened_at: now,
        });
        if st.slots[idx].is_some() {
            return Err(dup);
        }
        st.arrived += 1;
        if self.eager {
            st.slots[idx] = Some(Payload::Opaque(0));
            st.partial = Some(match st.partial.take() {
                None => payload,
                Some(acc) => combine(ctx.op, ctx.dtype.kind, &acc, &payload)?,
            });
        } else {
            st.slots[idx] = Some(payload);
        }
        if st.arrived < expected {
            return Ok(Outcome::Buffered);
        }
        let st = self.open.remove(&key).expect("open");
        self.completed.insert(key);
        self.completions += 1;
        let result = if self.eager {
            st.partial.expect("eager partial")
        } else {
            let items: Vec<&Payload> = st.slots.iter().map(|s| s.as_ref().expect("all arrived")).collect();
            fold_payloads(ctx.op, ctx.dtype.kind, &items)?
        };
        Ok(Outcome::Complete(result))
    }
}

/// Segments received so far and the expected count.
type Segments = (u32, Vec<Option<Payload>>);

/// Reassembles whole messages per `(context, tag, contributor)` for dtypes
/// that cannot be folded segment by segment.
#[derive(Clone, Debug, Default)]
pub struct Assembler {
    pending: BTreeMap<(ContextKey, u32, Ingress), Segments>,
}

impl Assembler {
    /// Returns the whole message once all `total` segments are present.
    pub fn push(
        &mut self,
        key: (ContextKey, u32, Ingress),
        seg: u32,
        total: u32,
        payload: Payload,
    ) -> Result<Option<Payload>, DataplaneError> {
        let total = total.max(1);
        if seg >= total {
            return Err(DataplaneError::SlotOverflow {
                rank: ingress_rank(key.2),
                seg,
            });
        }
        let e = self
            .pending
            .entry(key)
            .or_insert_with(|| (0, vec![None; total as usize]));
        let slot = &mut e.1[seg as usize];
        if slot.is_some() {
            return Err(DataplaneError::DuplicateContribution {
                from: key.2,
                tag: key.1,
                seq: seg,
            });
        }
        *slot = Some(payload);
        e.0 += 1;
        if e.0 < total {
            return Ok(None);
        }
        let (_, parts) = self.pending.remove(&key).expect("pending");
        Ok(Some(join(parts.into_iter().map(|p| p.expect("complete")))))
    }
}

fn ingress_rank(i: Ingress) -> u32 {
    match i {
        Ingress::Rank(r) => r,
        Ingress::Switch(v) => v,
    }
}

/// Concatenates payload segments; any opaque part makes the result opaque.
pub fn join(parts: impl IntoIterator<Item = Payload>) -> Payload {
    let mut bytes = Vec::new();
    let mut len = 0;
    let mut opaque = false;
    for p in parts {
        len += p.len();
        match p {
            Payload::Bytes(b) => bytes.extend_from_slice(&b),
            Payload::Opaque(_) => opaque = true,
        }
    }
    if opaque {
        Payload::Opaque(len)
    } else {
        Payload::Bytes(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::tests::ctx;
    use acis_core::wire::CollectiveKind;

    fn key(seq: u32) -> AggKey {
        AggKey {
            ctx: ContextKey::new(1, CollectiveKind::Allreduce),
            tag: 0,
            seq,
        }
    }

    fn i32p(x: i32) -> Payload {
        Payload::Bytes(Value::I32(x).encode())
    }

    #[test]
    fn two_contributors_complete_on_second() {
        let c = ctx(1, CollectiveKind::Allreduce, vec![Ingress::Rank(0), Ingress::Rank(1)]);
        let mut t = AggTable::new(16, false);
        assert_eq!(
            t.aggregate(&c, key(0), Ingress::Rank(0), i32p(3), 0).unwrap(),
            Outcome::Buffered
        );
        assert_eq!(
            t.aggregate(&c, key(0), Ingress::Rank(1), i32p(4), 5).unwrap(),
            Outcome::Complete(i32p(7))
        );
        assert_eq!(t.open_keys(), 0);
    }

    #[test]
    fn single_contributor_completes_immediately() {
        let c = ctx(1, CollectiveKind::Allreduce, vec![Ingress::Rank(0)]);
        let mut t = AggTable::new(16, false);
        assert_eq!(
            t.aggregate(&c, key(0), Ingress::Rank(0), i32p(9), 0).unwrap(),
            Outcome::Complete(i32p(9))
        );
    }

    #[test]
    fn duplicate_and_unknown_rejected() {
        let c = ctx(1, CollectiveKind::Allreduce, vec![Ingress::Rank(0), Ingress::Rank(1)]);
        let mut t = AggTable::new(16, false);
        t.aggregate(&c, key(0), Ingress::Rank(0), i32p(3), 0).unwrap();
        assert!(matches!(
            t.aggregate(&c, key(0), Ingress::Rank(0), i32p(3), 0),
            Err(DataplaneError::DuplicateContribution { .. })
        ));
        assert!(matches!(
            t.aggregate(&c, key(0), Ingress::Rank(5), i32p(3), 0),
            Err(DataplaneError::UnknownContributor { .. })
        ));
        t.aggregate(&c, key(0), Ingress::Rank(1), i32p(4), 0).unwrap();
        assert!(matches!(
            t.aggregate(&c, key(0), Ingress::Rank(1), i32p(4), 0),
            Err(DataplaneError::DuplicateContribution { .. })
        ));
    }

    #[test]
    fn table_overflow() {
        let c = ctx(1, CollectiveKind::Allreduce, vec![Ingress::Rank(0), Ingress::Rank(1)]);
        let mut t = AggTable::new(1, false);
        t.aggregate(&c, key(0), Ingress::Rank(0), i32p(1), 0).unwrap();
        assert_eq!(
            t.aggregate(&c, key(1), Ingress::Rank(0), i32p(1), 0),
            Err(DataplaneError::TableOverflow(1))
        );
    }

    #[test]
    fn assembler_joins_in_segment_order() {
        let mut a = Assembler::default();
        let k = (ContextKey::new(1, CollectiveKind::Reduce), 0, Ingress::Rank(2));
        assert_eq!(a.push(k, 1, 2, Payload::Bytes(vec![3, 4])).unwrap(), None);
        assert_eq!(
            a.push(k, 0, 2, Payload::Bytes(vec![1, 2])).unwrap(),
            Some(Payload::Bytes(vec![1, 2, 3, 4]))
        );
    }
}
