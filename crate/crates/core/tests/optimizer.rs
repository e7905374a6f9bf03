// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use std::sync::Arc;

use common::{arb_program, program};
use offload_core::analyzer::{build_call_graph, classify_methods, derive_locations, enumerate_legal, CallGraph, MethodSets};
use offload_core::fixtures;
use offload_core::minivm::{print_program, run, Instruction, NoHooks, Program, Speed, VTime, VmClock};
use offload_core::optimizer::{
    brute_force_solve, build_integer_program, check_constraints, evaluate_cost, rewrite, solve, PartitionDatabase,
    PartitionModel,
};
use offload_core::profiler::{build_cost_model, profile_executions, CostModel, NetworkModel};
use proptest::prelude::*;

fn model_for(p: &Arc<Program>, inputs: &[Vec<i64>], speed: &str, net: &NetworkModel) -> (CostModel, CallGraph, MethodSets) {
    let speed: Speed = speed.parse().unwrap();
    let pairs = profile_executions(p, inputs, &VmClock::new(speed)).unwrap();
    (build_cost_model(&pairs, net).unwrap(), build_call_graph(p), classify_methods(p))
}

fn cheap_net() -> NetworkModel {
    NetworkModel::new("lan", 10, 100, 10)
}

#[test]
fn triangle_prefers_migrating_the_expensive_leaf() {
    let p = program(fixtures::CALL_TRIANGLE);
    let (model, g, s) = model_for(&p, &[vec![0], vec![1]], "20", &cheap_net());
    let best = solve(&model, &g, &s).unwrap();
    assert_eq!(best.migrants(), ["C.c".to_string()].into_iter().collect());
    assert!(best.objective < model.all_local());
    assert!(best.l["C.c"]);
    assert!(!best.l["C.a"]);

    // by hand: all-local is 17 + 123; with R={c} the second run pays C_s(c)
    // and runs c's 102 units at 1/20
    let cs_c = model.invocations().find(|(_, i)| i.method == "C.c").unwrap().1.cs;
    let expected = VTime::from_units(17 + 123 - 102) + VTime::from_ratio(102, 20) + cs_c;
    assert_eq!(best.objective, expected);
    assert_eq!(evaluate_cost(&best, &model).unwrap(), expected);
    assert_eq!(brute_force_solve(&model, &g, &s).unwrap(), best);
}

#[test]
fn all_local_costs_the_monolithic_device_time() {
    let p = program(fixtures::CALL_TRIANGLE);
    let (model, g, _) = model_for(&p, &[vec![0], vec![1]], "20", &NetworkModel::wifi());
    let local = PartitionModel::all_local(&g.methods, "wifi");
    assert_eq!(evaluate_cost(&local, &model).unwrap(), VTime::from_units(17 + 123));
}

#[test]
fn slower_clone_never_wins() {
    let p = program(fixtures::CALL_TRIANGLE);
    let (model, g, s) = model_for(&p, &[vec![1]], "0.5", &cheap_net());
    let best = solve(&model, &g, &s).unwrap();
    assert!(best.is_local());
    assert_eq!(best.label(), "Local");
    assert_eq!(best.objective, model.all_local());
}

#[test]
fn single_method_program_stays_local() {
    let p = program("TYPE A\nMETHOD main 0\n BUSY 1000\n RET\n");
    let (model, g, s) = model_for(&p, &[vec![]], "20", &cheap_net());
    assert!(brute_force_solve(&model, &g, &s).unwrap().is_local());
    assert!(solve(&model, &g, &s).unwrap().is_local());
}

#[test]
fn rewrite_of_empty_partition_is_identity() {
    let p = program(fixtures::CALL_TRIANGLE);
    let local = PartitionModel::all_local(&build_call_graph(&p).methods, "wifi");
    assert_eq!(print_program(&rewrite(&p, &local).unwrap()), print_program(&p));
}

#[test]
fn rewrite_wraps_exactly_the_migrant() {
    let p = program(fixtures::CALL_TRIANGLE);
    let g = build_call_graph(&p);
    let mut part = PartitionModel::all_local(&g.methods, "wifi");
    part.r.insert("C.c".into(), true);
    let q = rewrite(&p, &part).unwrap();
    let c = q.method_by_name("C.c").unwrap();
    assert_eq!(
        c.body,
        vec![Instruction::Migrate, Instruction::Busy(100), Instruction::Const(1000), Instruction::Reintegrate, Instruction::Ret]
    );
    for name in ["C.main", "C.a", "C.b"] {
        assert_eq!(q.method_by_name(name).unwrap().body, p.method_by_name(name).unwrap().body);
    }
    part.r.insert("C.zzz".into(), true);
    assert!(rewrite(&p, &part).is_err());
}

#[test]
fn rewritten_jumps_to_returns_hit_the_marker() {
    let p = program(fixtures::CALL_TRIANGLE);
    let g = build_call_graph(&p);
    let mut part = PartitionModel::all_local(&g.methods, "wifi");
    part.r.insert("C.a".into(), true);
    let q = rewrite(&p, &part).unwrap();
    let a = &q.method_by_name("C.a").unwrap().body;
    // the JZ skipped to `LOAD 1` (old index 8) which is new index 9
    assert!(a.contains(&Instruction::Jz(9)));
    assert_eq!(a[9], Instruction::Load(1));
    for input in [0, 1] {
        let orig = run(&p, &[input], &VmClock::device(), &mut NoHooks).unwrap();
        let rewritten = run(&Arc::new(q.clone()), &[input], &VmClock::device(), &mut NoHooks).unwrap();
        assert_eq!(orig, rewritten);
    }
}

#[test]
fn database_round_trips_and_keeps_one_entry_per_network() {
    let p = program(fixtures::CALL_TRIANGLE);
    let mut db = PartitionDatabase::new();
    for net in [NetworkModel::wifi(), NetworkModel::three_g(), cheap_net()] {
        let (model, g, s) = model_for(&p, &[vec![1]], "20", &net);
        db.insert(format!("triangle@{}", net.name), solve(&model, &g, &s).unwrap());
    }
    let (model, g, s) = model_for(&p, &[vec![1]], "20", &cheap_net());
    db.insert("triangle@lan", solve(&model, &g, &s).unwrap());
    assert_eq!(db.len(), 3);
    assert_eq!(PartitionDatabase::parse(&db.to_text()).unwrap(), db);
    let twice = format!("{0}{0}", db.to_text());
    assert!(PartitionDatabase::parse(&twice).is_err());
    assert!(PartitionDatabase::parse("PARTITION x\nprogram a\n").is_err());
}

#[test]
fn integer_program_dump_lists_every_constraint_family() {
    let p = program(fixtures::NATIVE_MIX);
    let (model, g, s) = model_for(&p, &[vec![]], "20", &cheap_net());
    let ip = build_integer_program(&model, &g, &s);
    let lp = ip.to_lp();
    for needle in ["Minimize", "Subject To", "dc0_a:", "pin_N.main:", "nat_Ctr_0:", "tc0:", "Binary", "R_N.tally", "End"] {
        assert!(lp.contains(needle), "missing {needle}");
    }
    let best = solve(&model, &g, &s).unwrap();
    assert!(ip.violated(&best).is_empty());
    assert_eq!(ip.evaluate(&best), best.objective);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn solver_matches_exhaustive_search(gen in arb_program(8), wifi in any::<bool>()) {
        let p = program(&gen.source());
        let net = if wifi { NetworkModel::wifi() } else { cheap_net() };
        let (model, g, s) = model_for(&p, &[vec![]], "20", &net);
        let best = solve(&model, &g, &s).unwrap();
        let oracle = brute_force_solve(&model, &g, &s).unwrap();
        prop_assert_eq!(best.objective, oracle.objective);
        prop_assert_eq!(best.migrants(), oracle.migrants());
        prop_assert!(check_constraints(&best, &g, &s).is_empty());
        prop_assert_eq!(evaluate_cost(&best, &model).unwrap(), best.objective);

        let ip = build_integer_program(&model, &g, &s);
        prop_assert!(ip.violated(&best).is_empty());
        prop_assert_eq!(ip.evaluate(&best), best.objective);

        let local = PartitionModel::all_local(&g.methods, &net.name);
        prop_assert!(check_constraints(&local, &g, &s).is_empty());
        prop_assert!(ip.violated(&local).is_empty());

        for cand in enumerate_legal(&g, &s).unwrap() {
            let l = derive_locations(&cand, &g, &s).unwrap();
            let mut q = PartitionModel::all_local(&g.methods, &net.name);
            q.r.extend(cand.r.clone());
            q.l = l;
            prop_assert!(check_constraints(&q, &g, &s).is_empty());
            prop_assert!(best.objective <= evaluate_cost(&q, &model).unwrap());
        }
    }

    #[test]
    fn rewritten_programs_behave_identically_without_migration(gen in arb_program(8)) {
        let p = program(&gen.source());
        let (model, g, s) = model_for(&p, &[vec![]], "20", &cheap_net());
        let best = solve(&model, &g, &s).unwrap();
        let q = Arc::new(rewrite(&p, &best).unwrap());
        let a = run(&p, &[], &VmClock::device(), &mut NoHooks).unwrap();
        let b = run(&q, &[], &VmClock::device(), &mut NoHooks).unwrap();
        prop_assert_eq!(a, b);
    }
}
