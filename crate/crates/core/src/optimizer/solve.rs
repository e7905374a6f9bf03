// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::check::check_constraints;
use super::{evaluate_cost, OptimizerError, PartitionModel};
use crate::analyzer::{all_candidates, CallGraph, LocationConstraint, MethodSets, ParityUnionFind, ENUMERATION_LIMIT};
use crate::minivm::VTime;
use crate::profiler::{CostModel, MethodCosts};

type Key = (VTime, usize, Vec<String>);

struct Search<'a> {
    graph: &'a CallGraph,
    sets: &'a MethodSets,
    costs: BTreeMap<String, MethodCosts>,
    /// Callers of each migratable method, from DC.
    callers: Vec<Vec<String>>,
    best: Option<(Key, Vec<bool>, BTreeMap<String, bool>)>,
}

impl Search<'_> {
    fn cost_at(&self, m: &str, on_clone: bool) -> VTime {
        match self.costs.get(m) {
            Some(c) if on_clone => c.c1,
            Some(c) => c.c0,
            None => VTime::ZERO,
        }
    }

    fn migration_cost(&self, chosen: &[bool]) -> VTime {
        self.sets
            .migratable
            .iter()
            .zip(chosen)
            .filter(|(_, on)| **on)
            .map(|(m, _)| self.costs.get(m).map(|c| c.cs).unwrap_or(VTime::ZERO))
            .sum()
    }

    fn lower_bound(&self, uf: &mut ParityUnionFind, chosen: &[bool]) -> VTime {
        let mut total = self.migration_cost(chosen);
        for m in &self.graph.methods {
            total += match uf.fixed_location(m) {
                Some(l) => self.cost_at(m, l),
                None => self.cost_at(m, false).min(self.cost_at(m, true)),
            };
        }
        total
    }

    /// Cheapest location assignment consistent with `uf`. A component not
    /// tied to the device takes its cheaper parity; on a tie its
    /// smallest-named member goes to the device.
    fn best_locations(&self, uf: &mut ParityUnionFind) -> (VTime, BTreeMap<String, bool>) {
        let mut comps: BTreeMap<usize, Vec<(String, bool)>> = BTreeMap::new();
        for m in &self.graph.methods {
            let (root, parity) = uf.find(uf.node(m).expect("known method"));
            comps.entry(root).or_default().push((m.clone(), parity));
        }
        let mut total = VTime::ZERO;
        let mut l = BTreeMap::new();
        for (root, members) in comps {
            let price = |flip: bool| members.iter().map(|(m, p)| self.cost_at(m, p ^ flip)).sum::<VTime>();
            let flip = if root == ParityUnionFind::DEVICE {
                false
            } else {
                let (keep, flipped) = (price(false), price(true));
                if keep == flipped {
                    members[0].1
                } else {
                    flipped < keep
                }
            };
            total += price(flip);
            for (m, p) in members {
                l.insert(m, p ^ flip);
            }
        }
        (total, l)
    }

    fn key(&self, cost: VTime, chosen: &[bool]) -> Key {
        let names: Vec<String> =
            self.sets.migratable.iter().zip(chosen).filter(|(_, on)| **on).map(|(m, _)| m.clone()).collect();
        (cost, names.len(), names)
    }

    fn nests(&self, k: usize, chosen: &[bool]) -> bool {
        let m = &self.sets.migratable[k];
        self.graph.transitively_calls(m, m)
            || self.sets.migratable[..k]
                .iter()
                .zip(chosen)
                .any(|(o, on)| *on && (self.graph.transitively_calls(o, m) || self.graph.transitively_calls(m, o)))
    }

    fn dfs(&mut self, k: usize, uf: ParityUnionFind, chosen: &mut Vec<bool>) {
        if k == self.sets.migratable.len() {
            let mut uf = uf;
            let (comp, l) = self.best_locations(&mut uf);
            let key = self.key(comp + self.migration_cost(chosen), chosen);
            if self.best.as_ref().is_none_or(|(b, _, _)| key < *b) {
                self.best = Some((key, chosen.clone(), l));
            }
            return;
        }
        let m = self.sets.migratable[k].clone();
        for on in [false, true] {
            if on && self.nests(k, chosen) {
                continue;
            }
            let mut next = uf.clone();
            let consistent = self.callers[k].iter().all(|caller| {
                let c = if on {
                    LocationConstraint::Differ(caller.clone(), m.clone())
                } else {
                    LocationConstraint::Same(caller.clone(), m.clone())
                };
                next.apply(&c).is_ok()
            });
            if !consistent {
                continue;
            }
            chosen.push(on);
            let bound = self.lower_bound(&mut next, chosen);
            if self.best.as_ref().is_none_or(|(b, _, _)| bound <= b.0) {
                self.dfs(k + 1, next, chosen);
            }
            chosen.pop();
        }
    }
}

fn base_constraints(graph: &CallGraph, sets: &MethodSets) -> ParityUnionFind {
    let mut uf = ParityUnionFind::new(&graph.methods);
    let mut fixed = Vec::new();
    for m in &sets.v_m {
        fixed.push(LocationConstraint::Device(m.clone()));
    }
    for g in sets.v_nat.values() {
        let first = g.iter().next().expect("group is nonempty");
        fixed.extend(g.iter().skip(1).map(|o| LocationConstraint::Same(first.clone(), o.clone())));
    }
    for (a, b) in &graph.dc {
        if !sets.is_migratable(b) {
            fixed.push(LocationConstraint::Same(a.clone(), b.clone()));
        }
    }
    for c in fixed {
        uf.apply(&c).expect("the all-local assignment is always feasible");
    }
    uf
}

/// Exact minimum by branch and bound over `R`, deciding migratable methods
/// in name order. Locations follow from the parity constraints.
pub fn solve(model: &CostModel, graph: &CallGraph, sets: &MethodSets) -> Result<PartitionModel, OptimizerError> {
    let callers = sets
        .migratable
        .iter()
        .map(|m| graph.dc.iter().filter(|(_, b)| b == m).map(|(a, _)| a.clone()).collect())
        .collect();
    let mut search = Search { graph, sets, costs: model.method_costs(), callers, best: None };
    search.dfs(0, base_constraints(graph, sets), &mut Vec::new());
    let ((objective, _, _), chosen, l) = search.best.expect("the all-local assignment is always feasible");
    let mut r: BTreeMap<String, bool> = graph.methods.iter().map(|m| (m.clone(), false)).collect();
    for (m, on) in sets.migratable.iter().zip(chosen) {
        r.insert(m.clone(), on);
    }
    let p = PartitionModel { r, l, objective, network: model.network.name.clone() };
    debug_assert_eq!(evaluate_cost(&p, model).ok(), Some(objective));
    Ok(p)
}

/// Exhaustive reference: every `R` over the migratable methods, and for each
/// every location assignment passing the direct constraint check.
pub fn brute_force_solve(model: &CostModel, graph: &CallGraph, sets: &MethodSets) -> Result<PartitionModel, OptimizerError> {
    let n = sets.migratable.len();
    if n > ENUMERATION_LIMIT {
        return Err(OptimizerError::TooLarge { count: n, limit: ENUMERATION_LIMIT });
    }
    let methods: Vec<String> = graph.methods.iter().cloned().collect();
    let mut best: Option<(Key, PartitionModel)> = None;
    for cand in all_candidates(&sets.migratable) {
        let mut p = PartitionModel::all_local(&methods, &model.network.name);
        p.r.extend(cand.r.clone());
        p.l.clear();
        let r_only = PartitionModel { l: BTreeMap::new(), ..p.clone() };
        if !check_constraints(&r_only, graph, sets).is_empty() {
            continue;
        }
        let mut found: Option<(VTime, PartitionModel)> = None;
        assign(&methods, 0, &mut p, graph, sets, model, &mut found);
        if let Some((cost, mut q)) = found {
            q.objective = cost;
            let (len, names) = q.tie_key();
            let key = (cost, len, names);
            if best.as_ref().is_none_or(|(b, _)| key < *b) {
                best = Some((key, q));
            }
        }
    }
    Ok(best.expect("the all-local assignment is always feasible").1)
}

fn assign(
    methods: &[String],
    k: usize,
    p: &mut PartitionModel,
    graph: &CallGraph,
    sets: &MethodSets,
    model: &CostModel,
    found: &mut Option<(VTime, PartitionModel)>,
) {
    if k == methods.len() {
        let cost = evaluate_cost(p, model).expect("total assignment");
        if found.as_ref().is_none_or(|(c, _)| cost < *c) {
            *found = Some((cost, p.clone()));
        }
        return;
    }
    for l in [false, true] {
        p.l.insert(methods[k].clone(), l);
        if check_constraints(p, graph, sets).is_empty() {
            assign(methods, k + 1, p, graph, sets, model, found);
        }
    }
    p.l.remove(&methods[k]);
}
