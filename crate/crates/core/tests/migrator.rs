// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::{clone_vm, park_at_entry, program};
use offload_core::fixtures;
use offload_core::migrator::{
    capture, capture_return, collect_garbage, deserialize, elide_templates, merge, resume, serialize, CapturedFrame,
    Departure, Direction, MappingRow, MigrationError, ObjectRecord, TemplateKey, TemplateRegistry, ThreadCapture,
    WireValue,
};
use offload_core::minivm::{NoHooks, Oid, Program, RunStop, ThreadState, VmClock};
use proptest::prelude::*;

/// Ships the thread parked at `method`'s entry to a clone, runs it to
/// re-integration and merges it back. Returns the device output.
fn offload_once(p: &Arc<Program>, input: &[i64], method: &str, elide: bool) -> (Vec<i64>, usize, usize) {
    let (mut dev, tid) = park_at_entry(p, input, method);
    let registry = TemplateRegistry::from_boot(&dev);
    let mut out = capture(&dev, tid, Direction::Out).unwrap();
    if elide {
        out = elide_templates(&out, &registry);
    }
    let sent = serialize(&out);
    let departure = Departure::new(tid, &out);
    dev.mark_away(tid).unwrap();
    dev.guard_objects(departure.outbound.iter().map(|m| Oid(*m)));

    let mut cln = clone_vm(p, 10);
    let session = resume(&deserialize(&sent).unwrap(), &mut cln).unwrap();
    assert_eq!(cln.run_thread(session.tid, &mut NoHooks).unwrap(), RunStop::Reintegrated);
    let mut back = capture_return(&cln, &session).unwrap();
    if elide {
        back = elide_templates(&back, &session.registry);
    }
    let returned = serialize(&back);

    dev.release_guards();
    merge(&mut dev, &departure, &deserialize(&returned).unwrap(), &registry).unwrap();
    collect_garbage(&mut dev);
    assert_eq!(dev.run_thread(tid, &mut NoHooks).unwrap(), RunStop::Finished);
    (dev.output().to_vec(), sent.len(), returned.len())
}

#[test]
fn chain_capture_has_three_records_with_unbound_rows() {
    let p = program(fixtures::CHAIN_REWIRE);
    let (vm, tid) = park_at_entry(&p, &[], "G.work");
    let c = capture(&vm, tid, Direction::Out).unwrap();
    let mids: Vec<_> = c.objects.iter().map(|o| o.mid).collect();
    assert_eq!(mids, vec![Some(1), Some(2), Some(3)]);
    assert!(c.objects.iter().all(|o| o.cid.is_none()));
    assert_eq!(
        c.mapping,
        (1..=3).map(|m| MappingRow { mid: Some(m), cid: None }).collect::<Vec<_>>()
    );
    assert_eq!(c.frames.iter().map(|f| f.method.as_str()).collect::<Vec<_>>(), vec!["G.main", "G.work"]);
}

#[test]
fn chain_round_trip_binds_updates_creates_and_orphans() {
    let p = program(fixtures::CHAIN_REWIRE);
    let (mut dev, tid) = park_at_entry(&p, &[], "G.work");
    let registry = TemplateRegistry::from_boot(&dev);
    let out = capture(&dev, tid, Direction::Out).unwrap();
    let departure = Departure::new(tid, &out);

    let mut cln = clone_vm(&p, 10);
    let session = resume(&out, &mut cln).unwrap();
    let rows: Vec<_> = session.rows.iter().map(|r| (r.mid.unwrap(), r.cid.unwrap())).collect();
    assert_eq!(rows, vec![(1, 11), (2, 12), (3, 13)]);

    cln.run_thread(session.tid, &mut NoHooks).unwrap();
    let back = capture_return(&cln, &session).unwrap();
    let ids: Vec<_> = back.objects.iter().map(|o| (o.cid, o.mid)).collect();
    assert_eq!(ids, vec![(Some(11), Some(1)), (Some(13), Some(3)), (Some(14), None), (Some(15), None)]);

    let report = merge(&mut dev, &departure, &back, &registry).unwrap();
    assert_eq!(report.updated, vec![Oid(1), Oid(3)]);
    assert_eq!(report.created.len(), 2);
    assert!(report.created.iter().all(|o| o.0 > 3));
    assert_eq!(report.orphaned, vec![Oid(2)]);

    let roots = dev.thread(tid).unwrap().frames.iter().flat_map(|f| f.locals.clone()).filter_map(|v| v.as_ref());
    let live = offload_core::migrator::reachable_from(&dev, roots).unwrap();
    assert!(!live.contains(&Oid(2)));
    assert!(live.contains(&Oid(1)) && live.contains(&Oid(3)));

    assert_eq!(collect_garbage(&mut dev), vec![Oid(2)]);
    assert_eq!(dev.run_thread(tid, &mut NoHooks).unwrap(), RunStop::Finished);
    assert_eq!(dev.output(), &[94]);
}

#[test]
fn end_to_end_output_matches_monolithic_runs() {
    let cases: [(&str, &[i64], &str); 5] = [
        (fixtures::CHAIN_REWIRE, &[], "G.work"),
        (fixtures::CALL_TRIANGLE, &[1], "C.a"),
        (fixtures::CALL_TRIANGLE, &[0], "C.b"),
        (fixtures::TEMPLATE_TABLE, &[0], "App.lookup"),
        (fixtures::TEMPLATE_TABLE, &[1], "App.lookup"),
    ];
    for (src, input, method) in cases {
        let p = program(src);
        let mono = offload_core::minivm::run(&p, input, &VmClock::device(), &mut NoHooks).unwrap().output;
        for elide in [false, true] {
            assert_eq!(offload_once(&p, input, method, elide).0, mono, "{method} elide={elide}");
        }
    }
}

#[test]
fn unmutated_templates_are_elided() {
    let p = program(fixtures::TEMPLATE_TABLE);
    let (vm, tid) = park_at_entry(&p, &[0], "App.lookup");
    let registry = TemplateRegistry::from_boot(&vm);
    assert_eq!(registry.len(), 5);
    let full = capture(&vm, tid, Direction::Out).unwrap();
    assert_eq!(full.objects.len(), 5);
    let slim = elide_templates(&full, &registry);
    assert_eq!(full.objects.len() - slim.objects.len(), 5);
    assert!(slim.mapping.is_empty());
    assert_eq!(slim.statics["Lib.table"], WireValue::Template(TemplateKey::new("Entry", 5)));
    assert!(serialize(&slim).len() < serialize(&full).len());
}

#[test]
fn mutated_template_is_sent_in_full() {
    let p = program(fixtures::TEMPLATE_TABLE);
    let (vm, tid) = park_at_entry(&p, &[1], "App.lookup");
    let registry = TemplateRegistry::from_boot(&vm);
    let slim = elide_templates(&capture(&vm, tid, Direction::Out).unwrap(), &registry);
    assert_eq!(slim.objects.len(), 1);
    assert_eq!(slim.objects[0].construction_seq, 3);
    assert_eq!(slim.objects[0].fields["weight"], WireValue::Int(100));
}

#[test]
fn elision_changes_bytes_but_not_output() {
    let p = program(fixtures::TEMPLATE_TABLE);
    for input in [0, 1] {
        let (a, sent_a, _) = offload_once(&p, &[input], "App.lookup", false);
        let (b, sent_b, _) = offload_once(&p, &[input], "App.lookup", true);
        assert_eq!(a, b);
        assert!(sent_b < sent_a);
    }
}

#[test]
fn no_templates_means_elision_is_identity() {
    let p = program(fixtures::CHAIN_REWIRE);
    let (vm, tid) = park_at_entry(&p, &[], "G.work");
    let c = capture(&vm, tid, Direction::Out).unwrap();
    assert_eq!(elide_templates(&c, &TemplateRegistry::from_boot(&vm)), c);
}

#[test]
fn frames_only_capture_and_discard_leaves_run_unchanged() {
    let p = program(fixtures::CALL_TRIANGLE);
    let (mut vm, tid) = park_at_entry(&p, &[1], "C.c");
    let c = capture(&vm, tid, Direction::Out).unwrap();
    assert!(c.objects.is_empty() && c.statics.is_empty());
    assert_eq!(c.frames.len(), 3);
    vm.resume_thread(tid).unwrap();
    vm.run_thread(tid, &mut NoHooks).unwrap();
    assert_eq!(vm.output(), &[1007]);
}

#[test]
fn capture_requires_a_parked_thread() {
    let p = program(fixtures::CALL_TRIANGLE);
    let (mut vm, tid) = park_at_entry(&p, &[1], "C.a");
    vm.resume_thread(tid).unwrap();
    assert_eq!(capture(&vm, tid, Direction::Out), Err(MigrationError::NotSuspended(tid)));
    assert_eq!(capture(&vm, 42, Direction::Out), Err(MigrationError::UnknownThread(42)));
}

#[test]
fn captures_are_canonical() {
    let p = program(fixtures::CHAIN_REWIRE);
    let (vm, tid) = park_at_entry(&p, &[], "G.work");
    let a = serialize(&capture(&vm, tid, Direction::Out).unwrap());
    let b = serialize(&capture(&vm, tid, Direction::Out).unwrap());
    assert_eq!(a, b);
    let (vm2, tid2) = park_at_entry(&p, &[], "G.work");
    assert_eq!(a, serialize(&capture(&vm2, tid2, Direction::Out).unwrap()));
}

fn one_int_capture() -> ThreadCapture {
    ThreadCapture {
        direction: Direction::Out,
        frames: vec![],
        objects: vec![ObjectRecord {
            mid: Some(7),
            cid: None,
            type_name: "T".into(),
            construction_seq: 1,
            fields: BTreeMap::from([("f".to_string(), WireValue::Int(1))]),
        }],
        statics: BTreeMap::new(),
        mapping: vec![MappingRow { mid: Some(7), cid: None }],
    }
}

#[test]
fn integers_are_big_endian_at_their_slot() {
    let bytes = serialize(&one_int_capture());
    // magic, version, direction, 0 frames, 1 object, mid, cid, "T", seq, 1 field, "f", tag
    let slot = 4 + 2 + 1 + 4 + 4 + 8 + 8 + (2 + 1) + 4 + 4 + (2 + 1) + 1;
    assert_eq!(&bytes[slot - 1..slot + 8], &[1, 0, 0, 0, 0, 0, 0, 0, 1]);
    assert_eq!(&bytes[..7], b"CCAP\x00\x01\x00");
}

#[test]
fn malformed_streams_are_rejected() {
    let bytes = serialize(&one_int_capture());
    for cut in 0..bytes.len() {
        assert!(deserialize(&bytes[..cut]).is_err(), "prefix {cut} accepted");
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert_eq!(deserialize(&bad), Err(MigrationError::BadMagic));
    let mut bad = bytes.clone();
    bad[5] = 9;
    assert_eq!(deserialize(&bad), Err(MigrationError::UnsupportedVersion(9)));
    let mut bad = bytes.clone();
    let tag_at = bytes.len() - 4 - 16 - 4 - 9;
    bad[tag_at] = 7;
    assert_eq!(deserialize(&bad), Err(MigrationError::BadTag(7)));
    let mut long = bytes.clone();
    long.push(0);
    assert_eq!(deserialize(&long), Err(MigrationError::TrailingBytes(1)));
}

#[test]
fn immediate_return_restores_device_state() {
    let p = program(fixtures::CHAIN_REWIRE);
    let (mut dev, tid) = park_at_entry(&p, &[], "G.work");
    let before_heap: Vec<_> = dev.heap().iter().cloned().collect();
    let before_frames = dev.thread(tid).unwrap().frames.clone();
    let registry = TemplateRegistry::from_boot(&dev);
    let out = capture(&dev, tid, Direction::Out).unwrap();
    let departure = Departure::new(tid, &out);
    let mut cln = clone_vm(&p, 10);
    let session = resume(&out, &mut cln).unwrap();
    cln.request_suspend(session.tid).unwrap();
    let back = capture_return(&cln, &session).unwrap();
    let report = merge(&mut dev, &departure, &back, &registry).unwrap();
    assert!(report.created.is_empty() && report.orphaned.is_empty());
    assert_eq!(dev.heap().iter().cloned().collect::<Vec<_>>(), before_heap);
    assert_eq!(dev.thread(tid).unwrap().frames, before_frames);
    assert_eq!(dev.thread(tid).unwrap().state, ThreadState::Runnable);
    dev.run_thread(tid, &mut NoHooks).unwrap();
    assert_eq!(dev.output(), &[94]);
}

#[test]
fn resume_of_empty_capture_leaves_heap_untouched() {
    let p = program(fixtures::CALL_TRIANGLE);
    let (vm, tid) = park_at_entry(&p, &[0], "C.b");
    let c = capture(&vm, tid, Direction::Out).unwrap();
    let mut cln = clone_vm(&p, 10);
    let s = resume(&c, &mut cln).unwrap();
    assert!(cln.heap().is_empty());
    assert_eq!(cln.run_thread(s.tid, &mut NoHooks).unwrap(), RunStop::Reintegrated);
}

#[test]
fn resume_and_merge_reject_inconsistent_captures() {
    let p = program(fixtures::CHAIN_REWIRE);
    let (mut dev, tid) = park_at_entry(&p, &[], "G.work");
    let registry = TemplateRegistry::from_boot(&dev);
    let out = capture(&dev, tid, Direction::Out).unwrap();

    let mut bound = out.clone();
    bound.mapping[0].cid = Some(99);
    assert_eq!(resume(&bound, &mut clone_vm(&p, 10)).unwrap_err(), MigrationError::RowAlreadyBound(1));
    let mut renamed = out.clone();
    renamed.frames[1].method = "G.nope".into();
    assert_eq!(resume(&renamed, &mut clone_vm(&p, 10)).unwrap_err(), MigrationError::UnknownMethod("G.nope".into()));
    let mut ghost = out.clone();
    ghost.statics.insert("X.y".into(), WireValue::Template(TemplateKey::new("Node", 9)));
    assert!(resume(&ghost, &mut clone_vm(&p, 10)).is_err());
    assert!(matches!(
        resume(&ThreadCapture { direction: Direction::Back, ..out.clone() }, &mut clone_vm(&p, 10)),
        Err(MigrationError::WrongDirection { .. })
    ));

    let departure = Departure::new(tid, &out);
    let mut cln = clone_vm(&p, 10);
    let session = resume(&out, &mut cln).unwrap();
    cln.run_thread(session.tid, &mut NoHooks).unwrap();
    let back = capture_return(&cln, &session).unwrap();
    let mut unknown = back.clone();
    unknown.objects[0].mid = Some(77);
    assert_eq!(merge(&mut dev, &departure, &unknown, &registry).unwrap_err(), MigrationError::MidNotFound(77));
    let mut dup = back.clone();
    dup.objects[1].mid = Some(1);
    assert_eq!(merge(&mut dev, &departure, &dup, &registry).unwrap_err(), MigrationError::DuplicateId(1));
}

#[test]
fn missing_template_on_receiver_is_an_error() {
    let p = program(fixtures::TEMPLATE_TABLE);
    let (vm, tid) = park_at_entry(&p, &[0], "App.lookup");
    let mut slim = elide_templates(&capture(&vm, tid, Direction::Out).unwrap(), &TemplateRegistry::from_boot(&vm));
    slim.statics.insert("Lib.table".into(), WireValue::Template(TemplateKey::new("Entry", 6)));
    assert_eq!(
        resume(&slim, &mut clone_vm(&p, 10)).unwrap_err(),
        MigrationError::MissingTemplate(TemplateKey::new("Entry", 6))
    );
}

fn arb_value() -> impl Strategy<Value = WireValue> {
    prop_oneof![
        Just(WireValue::Null),
        any::<i64>().prop_map(WireValue::Int),
        (proptest::option::of(1u64..), proptest::option::of(1u64..)).prop_map(|(mid, cid)| WireValue::Ref { mid, cid }),
        ("[A-Za-z]{1,6}", any::<u32>()).prop_map(|(t, s)| WireValue::Template(TemplateKey::new(t, s))),
    ]
}

fn arb_capture() -> impl Strategy<Value = ThreadCapture> {
    let frame = ("[A-Z]\\.[a-z]{1,5}", any::<u32>(), prop::collection::vec(arb_value(), 0..4), prop::collection::vec(arb_value(), 0..4))
        .prop_map(|(method, pc, locals, stack)| CapturedFrame { method, pc, locals, stack });
    let object = (
        proptest::option::of(1u64..),
        proptest::option::of(1u64..),
        "[A-Z][a-z]{0,5}",
        any::<u32>(),
        prop::collection::btree_map("[a-z]{1,4}", arb_value(), 0..4),
    )
        .prop_map(|(mid, cid, type_name, construction_seq, fields)| ObjectRecord { mid, cid, type_name, construction_seq, fields });
    (
        prop_oneof![Just(Direction::Out), Just(Direction::Back)],
        prop::collection::vec(frame, 0..4),
        prop::collection::vec(object, 0..4),
        prop::collection::btree_map("[A-Z]\\.[a-z]{1,4}", arb_value(), 0..3),
        prop::collection::vec((proptest::option::of(1u64..), proptest::option::of(1u64..)), 0..4),
    )
        .prop_map(|(direction, frames, objects, statics, rows)| ThreadCapture {
            direction,
            frames,
            objects,
            statics,
            mapping: rows.into_iter().map(|(mid, cid)| MappingRow { mid, cid }).collect(),
        })
}

proptest! {
    #[test]
    fn serialization_round_trips(c in arb_capture()) {
        let bytes = serialize(&c);
        prop_assert_eq!(deserialize(&bytes).unwrap(), c);
    }
}
