// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use crate::minivm::{Oid, Value, Vm};

/// Objects reachable from `roots` through object fields. Fails with the
/// first reference to a missing object.
pub fn reachable_from(vm: &Vm, roots: impl IntoIterator<Item = Oid>) -> Result<BTreeSet<Oid>, Oid> {
    let mut marked = BTreeSet::new();
    let mut work: Vec<Oid> = roots.into_iter().collect();
    while let Some(o) = work.pop() {
        if marked.contains(&o) {
            continue;
        }
        let obj = vm.heap().get(o).ok_or(o)?;
        marked.insert(o);
        work.extend(obj.references().filter(|r| !marked.contains(r)));
    }
    Ok(marked)
}

/// Mark-sweep over the whole VM. Roots are every thread's frames, all
/// statics and the boot-time objects. Returns the removed ids.
pub fn collect_garbage(vm: &mut Vm) -> Vec<Oid> {
    let mut roots: Vec<Oid> = vm
        .threads()
        .flat_map(|t| t.frames.iter().flat_map(|f| f.locals.iter().chain(f.stack.iter())))
        .chain(vm.statics().values())
        .filter_map(Value::as_ref)
        .collect();
    roots.extend(vm.boot_objects().keys().copied());
    // dangling refs are left for the interpreter to report
    let mut marked = BTreeSet::new();
    let mut work = roots;
    while let Some(o) = work.pop() {
        if !marked.insert(o) {
            continue;
        }
        if let Some(obj) = vm.heap().get(o) {
            work.extend(obj.references());
        }
    }
    let dead: Vec<Oid> = vm.heap().oids().filter(|o| !marked.contains(o)).collect();
    for o in &dead {
        vm.heap_mut().remove(*o);
    }
    dead
}
