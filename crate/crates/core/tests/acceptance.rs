// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line,
//! then asserts. Run with `--nocapture` to see the lines.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{arb_program, park_at_entry, program};
use offload_core::analyzer::{build_call_graph, classify_methods, derive_locations, enumerate_legal};
use offload_core::fixtures;
use offload_core::migrator::{
    capture, capture_return, collect_garbage, deserialize, elide_templates, merge, resume, serialize, Departure,
    Direction, TemplateRegistry,
};
use offload_core::minivm::{run, NoHooks, Oid, Program, RunStop, Speed, VTime, Vm, VmClock, VmConfig};
use offload_core::optimizer::{brute_force_solve, check_constraints, evaluate_cost, rewrite, solve, PartitionModel};
use offload_core::pipeline::profile_program;
use offload_core::profiler::{
    build_cost_model, profile, profile_executions, Location, NetworkModel, NodeKind, ProfileNode, TreeAssembler,
};
use offload_core::report::compare;
use offload_core::runtime::{run_distributed, CloneNode, ExecutionConditions, InProcess};
use offload_core::workloads::{Size, Workload};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn verdict(n: u32, what: &str, ok: bool, detail: impl std::fmt::Display) {
    println!("acceptance {n:>2}: {} {what} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "acceptance {n} failed: {what} ({detail})");
}

const CLONE_SPEED: u32 = 20;
const NETS: fn() -> [NetworkModel; 2] = || [NetworkModel::wifi(), NetworkModel::three_g()];

/// Every legal partition of `p`, with locations derived from the constraints.
fn legal_partitions(p: &Program, network: &str) -> Vec<PartitionModel> {
    let (g, s) = (build_call_graph(p), classify_methods(p));
    enumerate_legal(&g, &s)
        .unwrap()
        .map(|cand| {
            let mut q = PartitionModel::all_local(&g.methods, network);
            q.l = derive_locations(&cand, &g, &s).unwrap();
            q.r.extend(cand.r);
            q
        })
        .collect()
}

fn run_partition(
    p: &Arc<Program>,
    partition: &PartitionModel,
    net: &NetworkModel,
    input: &[i64],
) -> offload_core::runtime::DistributedResult {
    let rewritten = Arc::new(rewrite(p, partition).unwrap());
    let mut node = CloneNode::new();
    node.install("w", Arc::clone(&rewritten));
    let cond = ExecutionConditions { network: net.clone(), clone_speed: Speed::from_integer(CLONE_SPEED), clone_available: true };
    run_distributed(&rewritten, "w", &cond, input, &mut InProcess::new(Arc::new(node)), true).unwrap()
}

#[test]
fn solver_matches_brute_force_on_random_programs() {
    let start = Instant::now();
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    let strategy = arb_program(12);
    let (mut agree, mut clean, mut max_migratable, mut offloaded) = (0, 0, 0, 0);
    let cases = 100;
    for k in 0..cases {
        let gen = strategy.new_tree(&mut runner).unwrap().current();
        let p = program(&gen.source());
        let (g, s) = (build_call_graph(&p), classify_methods(&p));
        max_migratable = max_migratable.max(s.migratable.len());
        let net = if k % 2 == 0 { NetworkModel::wifi() } else { NetworkModel::new("lan", 5, 400, 10) };
        let pairs = profile_executions(&p, &[vec![]], &VmClock::new(Speed::from_integer(CLONE_SPEED))).unwrap();
        let model = build_cost_model(&pairs, &net).unwrap();
        let best = solve(&model, &g, &s).unwrap();
        let oracle = brute_force_solve(&model, &g, &s).unwrap();
        agree += usize::from(best.objective == oracle.objective);
        clean += usize::from(check_constraints(&best, &g, &s).is_empty() && check_constraints(&oracle, &g, &s).is_empty());
        offloaded += usize::from(!best.is_local());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "solver objective equals brute force and passes the constraint checker",
        agree == cases && clean == cases && max_migratable <= 12 && elapsed < Duration::from_secs(60),
        format!(
            "{agree}/{cases} agree, {clean}/{cases} clean, {offloaded} offload, <= {max_migratable} migratable, {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn triangle_has_exactly_five_legal_partitions() {
    let p = program(fixtures::CALL_TRIANGLE);
    let (g, s) = (build_call_graph(&p), classify_methods(&p));
    let got: BTreeSet<BTreeSet<String>> = enumerate_legal(&g, &s).unwrap().map(|c| c.migrants()).collect();
    let set = |xs: &[&str]| xs.iter().map(|x| format!("C.{x}")).collect::<BTreeSet<_>>();
    let want: BTreeSet<_> = [set(&[]), set(&["a"]), set(&["b"]), set(&["c"]), set(&["b", "c"])].into_iter().collect();
    verdict(2, "legal partitions of the triangle fixture", got == want, format!("{} sets", got.len()));
}

fn conserved(node: &ProfileNode) -> bool {
    if node.is_leaf() {
        return true;
    }
    let sum = node.children.iter().fold(VTime::ZERO, |acc, c| acc + c.cost);
    sum == node.cost && node.children.iter().all(conserved)
}

#[test]
fn profile_trees_conserve_cost() {
    let mut runs: Vec<(Arc<Program>, Vec<i64>)> = vec![
        (program(fixtures::CALL_TRIANGLE), vec![0]),
        (program(fixtures::CALL_TRIANGLE), vec![1]),
        (program(fixtures::TWO_CALLS), vec![]),
        (program(fixtures::CHAIN_REWIRE), vec![]),
        (program(fixtures::TEMPLATE_TABLE), vec![0]),
        (program(fixtures::TEMPLATE_TABLE), vec![1]),
        (program(fixtures::NATIVE_MIX), vec![4]),
        (program(fixtures::SAFE_POINTS), vec![5]),
    ];
    for w in Workload::ALL {
        for s in [Size::Small, Size::Medium] {
            runs.push((w.program(), w.input(s, 1)));
        }
    }
    let mut trees = 0;
    let mut ok = true;
    for (p, input) in &runs {
        for (loc, clock) in [(Location::Device, VmClock::device()), (Location::Clone, VmClock::clone_node())] {
            let t = profile(p, input, loc, &clock).unwrap();
            ok &= conserved(&t.root);
            ok &= t.root.cost == run(p, input, &clock, &mut NoHooks).unwrap().elapsed;
            trees += 1;
        }
    }

    // main enters at 0, a runs 0..10, a again 12..20, main returns at 20
    let mut asm = TreeAssembler::new();
    let at = VTime::from_units;
    asm.enter("M.main", at(0), 0);
    asm.enter("M.a", at(0), 0);
    asm.exit(at(10), 0);
    asm.enter("M.a", at(12), 0);
    asm.exit(at(20), 0);
    asm.exit(at(20), 0);
    let root = asm.finish().unwrap();
    let residual = root.residual().map(|r| r.cost);
    ok &= residual == Some(at(20) - at(0) - (at(10) - at(0)) - (at(20) - at(12)));

    let two = profile(&program(fixtures::TWO_CALLS), &[], Location::Device, &VmClock::device()).unwrap();
    let child_sum = two.root.children.iter().filter(|c| c.kind == NodeKind::Call).fold(VTime::ZERO, |acc, c| acc + c.cost);
    ok &= two.root.residual().map(|r| r.cost) == Some(two.root.cost - child_sum);
    verdict(3, "every call node's cost equals the sum of its children", ok, format!("{trees} trees, residual {residual:?}"));
}

#[test]
fn distributed_output_is_identical_for_every_legal_partition() {
    let (mut runs, mut mismatches, mut migrations) = (0, 0, 0);
    for w in Workload::ALL {
        let p = w.program();
        assert!(classify_methods(&p).migratable.len() <= 12);
        for size in Size::ALL {
            let input = w.input(size, 1);
            let oracle = w.oracle(&input).unwrap();
            for net in NETS() {
                for partition in legal_partitions(&p, &net.name) {
                    let r = run_partition(&p, &partition, &net, &input);
                    runs += 1;
                    migrations += r.migrations.len();
                    mismatches += usize::from(r.output != oracle);
                }
            }
        }
    }
    verdict(
        4,
        "distributed output equals the device-only output",
        mismatches == 0 && runs > 0,
        format!("{runs} runs, {migrations} migrations, {mismatches} mismatches"),
    );
}

#[test]
fn distributed_time_equals_the_cost_model() {
    let (mut checked, mut off) = (0, Vec::new());
    for w in Workload::ALL {
        let p = w.program();
        for size in Size::ALL {
            let input = w.input(size, 1);
            let profiled = profile_program(&p, std::slice::from_ref(&input), Speed::from_integer(CLONE_SPEED)).unwrap();
            for net in NETS() {
                let model = profiled.model.with_network(&net);
                let mut partitions = legal_partitions(&p, &net.name);
                partitions.push(profiled.decide(&net).unwrap().partition);
                for partition in partitions {
                    let predicted = evaluate_cost(&partition, &model).unwrap();
                    let r = run_partition(&p, &partition, &net, &input);
                    checked += 1;
                    if r.elapsed != predicted {
                        off.push(format!("{w} {size} {} {:?}", net.name, partition.migrants()));
                    }
                }
            }
        }
    }
    verdict(5, "distributed elapsed time equals evaluate_cost exactly", off.is_empty(), format!("{checked} runs, off: {off:?}"));
}

#[test]
fn compare_table_shows_the_network_pattern() {
    let nets = NETS();
    let rows = compare(&Workload::ALL, &Size::ALL, &nets, Speed::from_integer(CLONE_SPEED), 1).unwrap();
    let speedup = |w: &str, s: Size, n: &str| {
        rows.iter().find(|r| r.workload == w && r.size == s && r.network == n).unwrap().speedup()
    };
    let locals = |n: &str| rows.iter().filter(|r| r.network == n && r.label() == "Local").count();
    let (wifi_local, g3_local) = (locals("wifi"), locals("3g"));
    let mut monotone = true;
    let mut large_wifi = Vec::new();
    let mut wifi_beats_3g = true;
    for w in Workload::ALL {
        for n in ["wifi", "3g"] {
            let s: Vec<f64> = Size::ALL.iter().map(|z| speedup(w.name(), *z, n)).collect();
            monotone &= s[0] <= s[1] && s[1] <= s[2] && s[0] < s[2];
        }
        let lw = speedup(w.name(), Size::Large, "wifi");
        wifi_beats_3g &= lw > speedup(w.name(), Size::Large, "3g");
        large_wifi.push(format!("{w} {lw:.2}"));
    }
    let all_local_unit = rows.iter().filter(|r| r.label() == "Local").all(|r| format!("{:.2}", r.speedup()) == "1.00");
    let large_ok = Workload::ALL.iter().all(|w| speedup(w.name(), Size::Large, "wifi") > 3.0);
    let outputs_ok = rows.iter().all(|r| r.output_matches);
    verdict(
        6,
        "more Local under 3g, speedup grows with size, large wifi speedup above 3x",
        g3_local > wifi_local && monotone && large_ok && wifi_beats_3g && all_local_unit && outputs_ok,
        format!("Local wifi {wifi_local} vs 3g {g3_local}; large wifi {}", large_wifi.join(", ")),
    );
}

#[test]
fn chain_migration_updates_creates_and_orphans() {
    let p = program(fixtures::CHAIN_REWIRE);
    let (mut dev, tid) = park_at_entry(&p, &[], "G.work");
    let registry = TemplateRegistry::from_boot(&dev);
    let out = capture(&dev, tid, Direction::Out).unwrap();
    let departure = Departure::new(tid, &out);
    dev.mark_away(tid).unwrap();
    let mut cln = Vm::new(Arc::clone(&p), VmConfig { oid_base: 10, ..VmConfig::default() }).unwrap();
    let session = resume(&deserialize(&serialize(&out)).unwrap(), &mut cln).unwrap();
    assert_eq!(cln.run_thread(session.tid, &mut NoHooks).unwrap(), RunStop::Reintegrated);
    let back = capture_return(&cln, &session).unwrap();
    let report = merge(&mut dev, &departure, &deserialize(&serialize(&back)).unwrap(), &registry).unwrap();
    let reclaimed = collect_garbage(&mut dev);
    assert_eq!(dev.run_thread(tid, &mut NoHooks).unwrap(), RunStop::Finished);
    let ok = out.objects.len() == 3
        && report.updated == vec![Oid(1), Oid(3)]
        && report.created.len() == 2
        && report.orphaned == vec![Oid(2)]
        && reclaimed == vec![Oid(2)]
        && dev.output() == [1 + 3 + 40 + 50];
    verdict(
        7,
        "mapping-table round trip of the chain fixture",
        ok,
        format!("updated {:?}, created {:?}, orphaned {:?}", report.updated, report.created, report.orphaned),
    );
}

#[test]
fn unmutated_templates_are_not_transmitted() {
    let p = program(fixtures::TEMPLATE_TABLE);
    let mut lines = Vec::new();
    let mut ok = true;
    for (input, expect_fewer) in [(0, 5), (1, 4)] {
        let (vm, tid) = park_at_entry(&p, &[input], "App.lookup");
        let registry = TemplateRegistry::from_boot(&vm);
        let full = capture(&vm, tid, Direction::Out).unwrap();
        let elided = elide_templates(&full, &registry);
        let fewer = full.objects.len() - elided.objects.len();
        ok &= fewer == expect_fewer;
        if input == 1 {
            // the bumped third entry is the one still sent
            ok &= elided.objects.len() == 1 && elided.objects[0].construction_seq == 3;
        }

        let partition = {
            let mut q = PartitionModel::all_local(&build_call_graph(&p).methods, "wifi");
            q.r.insert("App.lookup".into(), true);
            q.l.insert("App.lookup".into(), true);
            q
        };
        let r = run_partition(&p, &partition, &NetworkModel::wifi(), &[input]);
        let mono = run(&p, &[input], &VmClock::device(), &mut NoHooks).unwrap();
        ok &= r.output == mono.output;
        lines.push(format!("input {input}: {} -> {} records", full.objects.len(), elided.objects.len()));
    }
    verdict(8, "template elision drops exactly the unmutated templates", ok, lines.join("; "));
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::new();
    for (i, b) in bytes.iter().enumerate() {
        s.push_str(&format!("{b:02x}"));
        s.push(if i % 32 == 31 { '\n' } else { ' ' });
    }
    s.trim_end().to_string() + "\n"
}

#[test]
fn captures_round_trip_and_match_golden_bytes() {
    let encode = || {
        let p = program(fixtures::CHAIN_REWIRE);
        let (vm, tid) = park_at_entry(&p, &[], "G.work");
        serialize(&capture(&vm, tid, Direction::Out).unwrap())
    };
    let (a, b) = (encode(), encode());
    let decoded = deserialize(&a).unwrap();
    let mut ok = a == b && serialize(&decoded) == a;

    let mut round_trips = 0;
    for (src, input, method) in [
        (fixtures::CALL_TRIANGLE, vec![1], "C.c"),
        (fixtures::TEMPLATE_TABLE, vec![1], "App.lookup"),
        (fixtures::SAFE_POINTS, vec![5], "S.twice"),
    ] {
        let (vm, tid) = park_at_entry(&program(src), &input, method);
        let c = capture(&vm, tid, Direction::Out).unwrap();
        ok &= deserialize(&serialize(&c)).unwrap() == c;
        round_trips += 1;
    }

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/chain_work_out.hex");
    if std::env::var_os("OFFLOAD_BLESS").is_some() {
        std::fs::write(&golden, hex(&a)).unwrap();
    }
    let stored = std::fs::read_to_string(&golden).unwrap_or_default();
    ok &= stored == hex(&a);
    verdict(9, "capture encoding is stable and round-trips", ok, format!("{} bytes, {round_trips} round trips", a.len()));
}

#[test]
fn suspending_at_every_instruction_boundary_is_invisible() {
    let p = program(fixtures::SAFE_POINTS);
    let input = [5];
    let mono = run(&p, &input, &VmClock::device(), &mut NoHooks).unwrap();

    let mut vm = Vm::new(Arc::clone(&p), VmConfig::default()).unwrap();
    let tid = vm.start(&input);
    let mut trace = 0;
    while vm.run_thread_for(tid, &mut NoHooks, 1).unwrap().is_none() {
        trace += 1;
    }
    trace += 1;

    let mut perturbed = Vec::new();
    for k in 0..trace {
        let mut vm = Vm::new(Arc::clone(&p), VmConfig::default()).unwrap();
        let tid = vm.start(&input);
        if k > 0 {
            assert_eq!(vm.run_thread_for(tid, &mut NoHooks, k).unwrap(), None);
        }
        vm.request_suspend(tid).unwrap();
        assert_eq!(vm.run_thread(tid, &mut NoHooks).unwrap(), RunStop::Suspended);
        vm.resume_thread(tid).unwrap();
        assert_eq!(vm.run_thread(tid, &mut NoHooks).unwrap(), RunStop::Finished);
        let r = vm.execution_result(tid);
        if r.output != mono.output || r.elapsed != mono.elapsed {
            perturbed.push(k);
        }
    }
    verdict(
        10,
        "suspend/resume at every instruction boundary leaves output unchanged",
        trace == 200 && perturbed.is_empty(),
        format!("{trace} boundaries, perturbed at {perturbed:?}"),
    );
}
