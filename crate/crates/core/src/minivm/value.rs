// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Per-VM unique object identifier. Zero is never issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Oid(pub u64);

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Value {
    #[default]
    Null,
    Int(i64),
    Ref(Oid),
}

impl Value {
    pub fn as_ref(&self) -> Option<Oid> {
        match self {
            Value::Ref(o) => Some(*o),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Value::Null | Value::Int(0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeapObject {
    pub oid: Oid,
    pub type_name: String,
    pub fields: BTreeMap<String, Value>,
    /// 1-based ordinal among objects of this type constructed in this VM.
    pub construction_seq: u32,
}

impl HeapObject {
    pub fn references(&self) -> impl Iterator<Item = Oid> + '_ {
        self.fields.values().filter_map(Value::as_ref)
    }
}

/// Object store with a monotonically increasing ID counter.
#[derive(Debug, Clone, Default)]
pub struct Heap {
    objects: BTreeMap<Oid, HeapObject>,
    next_oid: u64,
    seq_by_type: HashMap<String, u32>,
    allocation_log: Vec<Oid>,
}

impl Heap {
    /// The first issued oid is `base + 1`.
    pub fn with_base(base: u64) -> Heap {
        Heap { next_oid: base, ..Heap::default() }
    }

    pub fn allocate(&mut self, type_name: &str) -> Oid {
        self.next_oid += 1;
        let oid = Oid(self.next_oid);
        let seq = self.seq_by_type.entry(type_name.to_string()).or_insert(0);
        *seq += 1;
        self.objects.insert(
            oid,
            HeapObject { oid, type_name: type_name.to_string(), fields: BTreeMap::new(), construction_seq: *seq },
        );
        self.allocation_log.push(oid);
        oid
    }

    pub fn get(&self, oid: Oid) -> Option<&HeapObject> {
        self.objects.get(&oid)
    }

    pub fn get_mut(&mut self, oid: Oid) -> Option<&mut HeapObject> {
        self.objects.get_mut(&oid)
    }

    pub fn contains(&self, oid: Oid) -> bool {
        self.objects.contains_key(&oid)
    }

    pub fn remove(&mut self, oid: Oid) -> Option<HeapObject> {
        self.objects.remove(&oid)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &HeapObject> {
        self.objects.values()
    }

    pub fn oids(&self) -> impl Iterator<Item = Oid> + '_ {
        self.objects.keys().copied()
    }

    /// Every oid ever issued, in issue order.
    pub fn allocation_log(&self) -> &[Oid] {
        &self.allocation_log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oids_start_at_one_and_never_repeat() {
        let mut h = Heap::default();
        let a = h.allocate("C");
        assert_eq!(a, Oid(1));
        h.remove(a);
        let b = h.allocate("C");
        assert_ne!(a, b);
        assert_eq!(h.allocation_log(), &[Oid(1), Oid(2)]);
    }

    #[test]
    fn construction_seq_is_dense_per_type() {
        let mut h = Heap::default();
        let cs: Vec<_> = (0..3).map(|_| h.allocate("C")).collect();
        let d = h.allocate("D");
        let seqs: Vec<u32> = cs.iter().map(|o| h.get(*o).unwrap().construction_seq).collect();
        assert_eq!(seqs, vec![1, 2, 3]);
        assert_eq!(h.get(d).unwrap().construction_seq, 1);
    }
}
