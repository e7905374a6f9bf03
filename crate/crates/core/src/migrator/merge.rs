// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::{
    Direction, MappingRow, MigrationError, ThreadCapture, TemplateRegistry, WireValue,
};
use crate::minivm::{Frame, Oid, ThreadState, Tid, Value, Vm, VmError};

/// Clone-side state for one migrated thread, alive until its return capture
/// has been taken.
#[derive(Debug, Clone)]
pub struct CloneSession {
    pub tid: Tid,
    /// Statics shipped with the thread; the same set goes back.
    pub scope: BTreeSet<String>,
    /// Bound mapping rows `(mid, cid)`, one per received record.
    pub rows: Vec<MappingRow>,
    pub registry: TemplateRegistry,
    mid_by_cid: BTreeMap<Oid, u64>,
}

impl CloneSession {
    pub fn mid_of(&self, cid: Oid) -> Option<u64> {
        self.mid_by_cid.get(&cid).copied()
    }
}

/// Device-side record of a thread that left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Departure {
    pub tid: Tid,
    /// MIDs of every object record that was sent.
    pub outbound: BTreeSet<u64>,
}

impl Departure {
    pub fn new(tid: Tid, sent: &ThreadCapture) -> Departure {
        Departure { tid, outbound: sent.objects.iter().filter_map(|r| r.mid).collect() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeReport {
    /// Existing objects overwritten in place.
    pub updated: Vec<Oid>,
    /// Objects created for records with no MID.
    pub created: Vec<Oid>,
    /// Template objects overwritten by name.
    pub templates: Vec<Oid>,
    /// Sent objects that did not come back.
    pub orphaned: Vec<Oid>,
}

fn expect_direction(c: &ThreadCapture, expected: Direction) -> Result<(), MigrationError> {
    if c.direction != expected {
        return Err(MigrationError::WrongDirection { expected, found: c.direction });
    }
    Ok(())
}

fn resolve(
    capture: &ThreadCapture,
    local: &BTreeMap<u64, Oid>,
    registry: &TemplateRegistry,
    v: &WireValue,
) -> Result<Value, MigrationError> {
    Ok(match v {
        WireValue::Null => Value::Null,
        WireValue::Int(i) => Value::Int(*i),
        WireValue::Ref { mid, cid } => {
            let id = capture.sender_id(*mid, *cid).ok_or(MigrationError::MissingId)?;
            Value::Ref(*local.get(&id).ok_or(MigrationError::DanglingReference(id))?)
        }
        WireValue::Template(k) => Value::Ref(registry.oid_of(k).ok_or_else(|| MigrationError::MissingTemplate(k.clone()))?),
    })
}

fn template_ref_check(capture: &ThreadCapture, registry: &TemplateRegistry) -> Result<(), MigrationError> {
    for v in capture.values() {
        if let WireValue::Template(k) = v {
            if !registry.contains_key(k) {
                return Err(MigrationError::MissingTemplate(k.clone()));
            }
        }
    }
    Ok(())
}

/// Validates names in frames and statics before anything is written.
fn check_names(vm: &Vm, capture: &ThreadCapture) -> Result<(), MigrationError> {
    for f in &capture.frames {
        if vm.program().method_id(&f.method).is_none() {
            return Err(MigrationError::UnknownMethod(f.method.clone()));
        }
    }
    for k in capture.statics.keys() {
        if !vm.program().is_static(k) {
            return Err(MigrationError::UnknownStatic(k.clone()));
        }
    }
    for r in &capture.objects {
        if vm.program().type_decl(&r.type_name).is_none() {
            return Err(MigrationError::UnknownType(r.type_name.clone()));
        }
    }
    Ok(())
}

/// Writes fields, statics and decodes frames once every record has a local id.
fn overlay(
    vm: &mut Vm,
    capture: &ThreadCapture,
    local: &BTreeMap<u64, Oid>,
    registry: &TemplateRegistry,
) -> Result<Vec<Frame>, MigrationError> {
    for r in &capture.objects {
        let id = capture.sender_id(r.mid, r.cid).ok_or(MigrationError::MissingId)?;
        let fields = r
            .fields
            .iter()
            .map(|(k, v)| Ok((k.clone(), resolve(capture, local, registry, v)?)))
            .collect::<Result<BTreeMap<_, _>, MigrationError>>()?;
        vm.heap_mut().get_mut(local[&id]).expect("bound above").fields = fields;
    }
    for (k, v) in &capture.statics {
        let v = resolve(capture, local, registry, v)?;
        vm.set_static(k, v);
    }
    let mut frames = Vec::with_capacity(capture.frames.len());
    for f in &capture.frames {
        let method = vm.program().method_id(&f.method).expect("checked");
        let conv = |vs: &[WireValue]| vs.iter().map(|v| resolve(capture, local, registry, v)).collect::<Result<Vec<_>, _>>();
        frames.push(Frame { method, pc: f.pc, locals: conv(&f.locals)?, stack: conv(&f.stack)? });
    }
    Ok(frames)
}

/// Installs an outbound capture on a freshly booted VM. Every record gets a
/// local identity: templates bind to their local instance by name, the rest
/// are allocated fresh. The new thread is runnable and re-integrates when
/// its top frame returns.
pub fn resume(capture: &ThreadCapture, vm: &mut Vm) -> Result<CloneSession, MigrationError> {
    expect_direction(capture, Direction::Out)?;
    if let Some(row) = capture.mapping.iter().find(|r| r.cid.is_some()) {
        return Err(MigrationError::RowAlreadyBound(row.mid.unwrap_or(0)));
    }
    let mut seen = BTreeSet::new();
    for r in &capture.objects {
        let mid = r.mid.ok_or(MigrationError::MissingId)?;
        if r.cid.is_some() {
            return Err(MigrationError::RowAlreadyBound(mid));
        }
        if !seen.insert(mid) {
            return Err(MigrationError::DuplicateId(mid));
        }
    }
    check_names(vm, capture)?;
    let mut registry = TemplateRegistry::from_boot(vm);
    template_ref_check(capture, &registry)?;

    let mut local = BTreeMap::new();
    let mut rows = Vec::with_capacity(capture.objects.len());
    for r in &capture.objects {
        let mid = r.mid.expect("checked");
        let oid = match registry.oid_of(&r.template_key()) {
            Some(o) => o,
            None => vm.allocate_object(&r.type_name).map_err(|_| MigrationError::UnknownType(r.type_name.clone()))?,
        };
        local.insert(mid, oid);
        rows.push(MappingRow { mid: Some(mid), cid: Some(oid.0) });
    }
    let frames = overlay(vm, capture, &local, &registry)?;
    let tid = vm.install_thread(frames, true);
    registry.rebase(vm);
    Ok(CloneSession {
        tid,
        scope: capture.statics.keys().cloned().collect(),
        rows,
        registry,
        mid_by_cid: local.into_iter().map(|(m, o)| (o, m)).collect(),
    })
}

/// Applies a return capture to the thread's home VM. Records with a MID are
/// written over the existing object, records without one become new
/// objects, template records bind by name. The thread takes the returned
/// frames and becomes runnable.
pub fn merge(
    vm: &mut Vm,
    departure: &Departure,
    capture: &ThreadCapture,
    registry: &TemplateRegistry,
) -> Result<MergeReport, MigrationError> {
    expect_direction(capture, Direction::Back)?;
    let tid = departure.tid;
    match vm.thread(tid).map(|t| t.state) {
        None => return Err(MigrationError::UnknownThread(tid)),
        Some(ThreadState::Away | ThreadState::Suspended) => {}
        Some(_) => return Err(MigrationError::NotSuspended(tid)),
    }
    let (mut mids, mut cids) = (BTreeSet::new(), BTreeSet::new());
    for r in &capture.objects {
        let cid = r.cid.ok_or(MigrationError::MissingId)?;
        if !cids.insert(cid) {
            return Err(MigrationError::DuplicateId(cid));
        }
        if let Some(m) = r.mid {
            if !mids.insert(m) {
                return Err(MigrationError::DuplicateId(m));
            }
            if registry.oid_of(&r.template_key()).is_none() && !vm.heap().contains(Oid(m)) {
                return Err(MigrationError::MidNotFound(m));
            }
        }
    }
    check_names(vm, capture)?;
    template_ref_check(capture, registry)?;

    let mut report = MergeReport::default();
    let mut local = BTreeMap::new();
    for r in &capture.objects {
        let cid = r.cid.expect("checked");
        let oid = if let Some(o) = registry.oid_of(&r.template_key()) {
            report.templates.push(o);
            o
        } else if let Some(m) = r.mid {
            report.updated.push(Oid(m));
            Oid(m)
        } else {
            let o = vm.allocate_object(&r.type_name).map_err(|_| MigrationError::UnknownType(r.type_name.clone()))?;
            report.created.push(o);
            o
        };
        local.insert(cid, oid);
    }
    let frames = overlay(vm, capture, &local, registry)?;
    let t = vm.thread_mut(tid).ok_or(VmError::UnknownThread(tid))?;
    t.frames = frames;
    t.remote_root = None;
    t.state = ThreadState::Runnable;
    report.orphaned = departure.outbound.difference(&mids).map(|m| Oid(*m)).collect();
    Ok(report)
}
