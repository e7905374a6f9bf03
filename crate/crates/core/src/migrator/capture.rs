// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::gc::reachable_from;
use super::{CapturedFrame, Direction, MappingRow, MigrationError, ObjectRecord, ThreadCapture, WireValue};
use super::merge::CloneSession;
use crate::minivm::{Frame, Oid, Program, ThreadState, Tid, Value, Vm};

/// Statics visible to the methods on a stack.
pub fn frame_scope(program: &Program, frames: &[Frame]) -> BTreeSet<String> {
    frames.iter().flat_map(|f| program.static_scope(f.method).iter().cloned()).collect()
}

/// Captures a suspended thread. Outbound captures name objects by their
/// local id as MID; return captures name them as CID with no MID known.
pub fn capture(vm: &Vm, tid: Tid, direction: Direction) -> Result<ThreadCapture, MigrationError> {
    let t = vm.thread(tid).ok_or(MigrationError::UnknownThread(tid))?;
    let scope = frame_scope(vm.program(), &t.frames);
    match direction {
        Direction::Out => capture_scoped(vm, tid, direction, &scope, &|o| (Some(o.0), None)),
        Direction::Back => capture_scoped(vm, tid, direction, &scope, &|o| (None, Some(o.0))),
    }
}

/// Return capture on the clone for a thread installed by `resume`.
pub fn capture_return(vm: &Vm, session: &CloneSession) -> Result<ThreadCapture, MigrationError> {
    capture_scoped(vm, session.tid, Direction::Back, &session.scope, &|o| (session.mid_of(o), Some(o.0)))
}

/// Captures `tid` with an explicit statics scope and id assignment.
pub fn capture_scoped(
    vm: &Vm,
    tid: Tid,
    direction: Direction,
    scope: &BTreeSet<String>,
    ids: &dyn Fn(Oid) -> (Option<u64>, Option<u64>),
) -> Result<ThreadCapture, MigrationError> {
    let t = vm.thread(tid).ok_or(MigrationError::UnknownThread(tid))?;
    if t.state != ThreadState::Suspended {
        return Err(MigrationError::NotSuspended(tid));
    }
    let program = vm.program();
    if let Some(f) = t.frames.iter().find(|f| program.method(f.method).is_native) {
        return Err(MigrationError::NativeFrame(tid, program.method(f.method).name.clone()));
    }

    let statics: BTreeMap<String, Value> =
        scope.iter().map(|k| (k.clone(), vm.statics().get(k).copied().unwrap_or(Value::Null))).collect();
    let roots = t.frames.iter().flat_map(|f| f.locals.iter().chain(f.stack.iter())).chain(statics.values());
    let reachable = reachable_from(vm, roots.filter_map(Value::as_ref)).map_err(|o| MigrationError::DanglingReference(o.0))?;

    let wire = |v: &Value| match v {
        Value::Null => WireValue::Null,
        Value::Int(i) => WireValue::Int(*i),
        Value::Ref(o) => {
            let (mid, cid) = ids(*o);
            WireValue::Ref { mid, cid }
        }
    };
    let frames = t
        .frames
        .iter()
        .map(|f| CapturedFrame {
            method: program.method(f.method).name.clone(),
            pc: f.pc,
            locals: f.locals.iter().map(wire).collect(),
            stack: f.stack.iter().map(wire).collect(),
        })
        .collect();
    let mut objects: Vec<ObjectRecord> = reachable
        .iter()
        .map(|o| {
            let obj = vm.heap().get(*o).expect("reachable objects exist");
            let (mid, cid) = ids(*o);
            ObjectRecord {
                mid,
                cid,
                type_name: obj.type_name.clone(),
                construction_seq: obj.construction_seq,
                fields: obj.fields.iter().map(|(k, v)| (k.clone(), wire(v))).collect(),
            }
        })
        .collect();
    let cap_dir = direction;
    objects.sort_by_key(|r| match cap_dir {
        Direction::Out => (r.mid, r.cid),
        Direction::Back => (r.cid, r.mid),
    });
    let mapping = objects.iter().map(|r| MappingRow { mid: r.mid, cid: r.cid }).collect();
    let statics = statics.iter().map(|(k, v)| (k.clone(), wire(v))).collect();
    Ok(ThreadCapture { direction, frames, objects, statics, mapping })
}
