// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::{ThreadCapture, TemplateKey, WireValue};
use crate::minivm::{HeapObject, Oid, Value, Vm};

/// Field value with references expressed in node-local terms, so template
/// contents can be compared across snapshots.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Norm {
    Null,
    Int(i64),
    Obj(u64),
    Template(TemplateKey),
}

/// The boot-time objects of one VM, by portable name, together with the
/// contents the peer node is known to hold for each.
#[derive(Debug, Clone, Default)]
pub struct TemplateRegistry {
    by_key: BTreeMap<TemplateKey, Oid>,
    by_oid: BTreeMap<Oid, TemplateKey>,
    baseline: BTreeMap<TemplateKey, BTreeMap<String, Norm>>,
}

impl TemplateRegistry {
    /// Registry with the boot snapshot as baseline.
    pub fn from_boot(vm: &Vm) -> TemplateRegistry {
        let mut reg = TemplateRegistry::default();
        for (oid, obj) in vm.boot_objects() {
            let key = TemplateKey::new(obj.type_name.clone(), obj.construction_seq);
            reg.by_key.insert(key.clone(), *oid);
            reg.by_oid.insert(*oid, key);
        }
        let snapshot: Vec<(TemplateKey, BTreeMap<String, Norm>)> =
            vm.boot_objects().values().map(|o| (key_of_obj(o), reg.normalize_fields(o))).collect();
        reg.baseline = snapshot.into_iter().collect();
        reg
    }

    /// Takes the current contents of every template as the new baseline.
    /// Used where the peer has just handed over its view of the templates.
    pub fn rebase(&mut self, vm: &Vm) {
        let current: Vec<(TemplateKey, BTreeMap<String, Norm>)> = self
            .by_key
            .iter()
            .filter_map(|(k, o)| vm.heap().get(*o).map(|obj| (k.clone(), self.normalize_fields(obj))))
            .collect();
        self.baseline.extend(current);
    }

    pub fn key_of(&self, oid: Oid) -> Option<&TemplateKey> {
        self.by_oid.get(&oid)
    }

    pub fn oid_of(&self, key: &TemplateKey) -> Option<Oid> {
        self.by_key.get(key).copied()
    }

    pub fn contains_key(&self, key: &TemplateKey) -> bool {
        self.by_key.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &TemplateKey> {
        self.by_key.keys()
    }

    fn normalize_fields(&self, obj: &HeapObject) -> BTreeMap<String, Norm> {
        obj.fields
            .iter()
            .map(|(k, v)| {
                let n = match v {
                    Value::Null => Norm::Null,
                    Value::Int(i) => Norm::Int(*i),
                    Value::Ref(o) => match self.by_oid.get(o) {
                        Some(key) => Norm::Template(key.clone()),
                        None => Norm::Obj(o.0),
                    },
                };
                (k.clone(), n)
            })
            .collect()
    }

    fn normalize_wire(&self, cap: &ThreadCapture, v: &WireValue) -> Norm {
        match v {
            WireValue::Null => Norm::Null,
            WireValue::Int(i) => Norm::Int(*i),
            WireValue::Template(k) => Norm::Template(k.clone()),
            WireValue::Ref { mid, cid } => match cap.sender_id(*mid, *cid) {
                Some(id) => match self.by_oid.get(&Oid(id)) {
                    Some(key) => Norm::Template(key.clone()),
                    None => Norm::Obj(id),
                },
                None => Norm::Null,
            },
        }
    }
}

fn key_of_obj(o: &HeapObject) -> TemplateKey {
    TemplateKey::new(o.type_name.clone(), o.construction_seq)
}

/// Drops template records whose contents match the registry baseline and
/// rewrites references to them as template names.
pub fn elide_templates(capture: &ThreadCapture, registry: &TemplateRegistry) -> ThreadCapture {
    let mut elided: BTreeMap<u64, TemplateKey> = BTreeMap::new();
    for r in &capture.objects {
        let Some(id) = capture.sender_id(r.mid, r.cid) else { continue };
        let Some(key) = registry.key_of(Oid(id)) else { continue };
        let Some(base) = registry.baseline.get(key) else { continue };
        let fields: BTreeMap<String, Norm> =
            r.fields.iter().map(|(k, v)| (k.clone(), registry.normalize_wire(capture, v))).collect();
        if &fields == base {
            elided.insert(id, key.clone());
        }
    }
    if elided.is_empty() {
        return capture.clone();
    }
    let dir = capture.direction;
    let id_of = |mid: Option<u64>, cid: Option<u64>| match dir {
        super::Direction::Out => mid,
        super::Direction::Back => cid,
    };
    let rewrite = |v: &WireValue| match v {
        WireValue::Ref { mid, cid } => match id_of(*mid, *cid).and_then(|id| elided.get(&id)) {
            Some(key) => WireValue::Template(key.clone()),
            None => v.clone(),
        },
        _ => v.clone(),
    };
    let gone: BTreeSet<u64> = elided.keys().copied().collect();
    let mut out = capture.clone();
    out.objects.retain(|r| id_of(r.mid, r.cid).is_none_or(|id| !gone.contains(&id)));
    out.mapping.retain(|m| id_of(m.mid, m.cid).is_none_or(|id| !gone.contains(&id)));
    for f in &mut out.frames {
        f.locals = f.locals.iter().map(rewrite).collect();
        f.stack = f.stack.iter().map(rewrite).collect();
    }
    for v in out.statics.values_mut() {
        *v = rewrite(v);
    }
    for r in &mut out.objects {
        for v in r.fields.values_mut() {
            *v = rewrite(v);
        }
    }
    out
}
