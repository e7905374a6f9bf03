// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::PartitionModel;
use crate::analyzer::{CallGraph, MethodSets};

/// A failed placement rule, named by the methods involved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintViolation {
    /// Caller shares a node with a migrant it calls.
    CallerColocated(String, String),
    /// Caller sits apart from a non-migrant it calls.
    CallerSplit(String, String),
    PinnedOffDevice(String),
    NativeGroupSplit(String, String),
    NestedMigrants(String, String),
    /// A method that may not be a migration point has one.
    IllegalMigrant(String),
}

fn get(map: &BTreeMap<String, bool>, m: &str) -> Option<bool> {
    map.get(m).copied()
}

/// Re-tests every rule directly against the relations. Unassigned `L` values
/// are skipped so the check also works on partial assignments.
pub fn check_constraints(p: &PartitionModel, graph: &CallGraph, sets: &MethodSets) -> Vec<ConstraintViolation> {
    use ConstraintViolation::*;
    let mut out = Vec::new();
    let r = |m: &str| get(&p.r, m).unwrap_or(false);
    for m in p.migrants() {
        if !sets.is_migratable(&m) {
            out.push(IllegalMigrant(m));
        }
    }
    for (a, b) in &graph.dc {
        if let (Some(la), Some(lb)) = (get(&p.l, a), get(&p.l, b)) {
            if r(b) && la == lb {
                out.push(CallerColocated(a.clone(), b.clone()));
            }
            if !r(b) && la != lb {
                out.push(CallerSplit(a.clone(), b.clone()));
            }
        }
    }
    for m in &sets.v_m {
        if get(&p.l, m) == Some(true) {
            out.push(PinnedOffDevice(m.clone()));
        }
    }
    for group in sets.v_nat.values() {
        for a in group {
            for b in group {
                if a < b {
                    if let (Some(la), Some(lb)) = (get(&p.l, a), get(&p.l, b)) {
                        if la != lb {
                            out.push(NativeGroupSplit(a.clone(), b.clone()));
                        }
                    }
                }
            }
        }
    }
    for (a, b) in &graph.tc {
        if r(a) && r(b) {
            out.push(NestedMigrants(a.clone(), b.clone()));
        }
    }
    out
}
