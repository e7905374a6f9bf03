// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Static analysis over the call graph.
//!
//! Produces the direct-call relation DC and its transitive closure TC, the
//! pinned method set, the per-type native colocation groups, and a legality
//! check for candidate partitions. Calls in the VM are resolved statically,
//! so DC is exact; it is still a superset of every observed call edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::minivm::{Instruction, Program};

/// Upper bound on migratable methods for exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzerError {
    #[error("{count} migratable methods exceeds the enumeration limit of {limit}")]
    TooManyMethods { count: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    pub methods: BTreeSet<String>,
    pub dc: BTreeSet<(String, String)>,
    pub tc: BTreeSet<(String, String)>,
}

impl CallGraph {
    pub fn directly_calls(&self, caller: &str, callee: &str) -> bool {
        self.dc.contains(&(caller.to_string(), callee.to_string()))
    }

    pub fn transitively_calls(&self, caller: &str, callee: &str) -> bool {
        self.tc.contains(&(caller.to_string(), callee.to_string()))
    }

    /// Adjacency view of DC.
    pub fn callees(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = self.methods.iter().map(|m| (m.as_str(), Vec::new())).collect();
        for (a, b) in &self.dc {
            adj.entry(a.as_str()).or_default().push(b.as_str());
        }
        adj
    }
}

/// Transitive closure of a relation, by depth-first search from every node.
pub fn transitive_closure(
    nodes: &BTreeSet<String>,
    edges: &BTreeSet<(String, String)>,
) -> BTreeSet<(String, String)> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a.as_str()).or_default().push(b.as_str());
    }
    let mut tc = BTreeSet::new();
    for start in nodes {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut stack: Vec<&str> = adj.get(start.as_str()).cloned().unwrap_or_default();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            tc.insert((start.clone(), n.to_string()));
            if let Some(next) = adj.get(n) {
                stack.extend(next.iter().copied());
            }
        }
    }
    tc
}

pub fn build_call_graph(program: &Program) -> CallGraph {
    let methods: BTreeSet<String> = program.methods().iter().map(|m| m.name.clone()).collect();
    let mut dc = BTreeSet::new();
    for m in program.methods() {
        for ins in &m.body {
            if let Instruction::Call { target, .. } = ins {
                dc.insert((m.name.clone(), program.method(*target).name.clone()));
            }
        }
    }
    let tc = transitive_closure(&methods, &dc);
    CallGraph { methods, dc, tc }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PinReason {
    Entry,
    /// `PINNED` on an application method.
    Declared,
    /// Native bound to a device-only host handler.
    PinnedNative,
    /// Body performs device I/O (`IN`/`OUT`).
    DeviceIo,
    /// Runs once per node at VM start to build the templates.
    Boot,
}

impl PinReason {
    fn label(self) -> &'static str {
        match self {
            PinReason::Entry => "entry",
            PinReason::Declared => "declared",
            PinReason::PinnedNative => "native",
            PinReason::DeviceIo => "io",
            PinReason::Boot => "boot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSets {
    pub entry: String,
    /// Methods that must run on the device.
    pub v_m: BTreeSet<String>,
    pub pin_reasons: BTreeMap<String, PinReason>,
    /// Declaring type -> its native methods.
    pub v_nat: BTreeMap<String, BTreeSet<String>>,
    /// Natives forced to the device because a group member is pinned.
    pub derived_pins: BTreeSet<String>,
    pub natives: BTreeSet<String>,
    /// Non-native methods outside `v_m`, sorted by name.
    pub migratable: Vec<String>,
}

impl MethodSets {
    pub fn is_migratable(&self, method: &str) -> bool {
        self.migratable.binary_search_by(|m| m.as_str().cmp(method)).is_ok()
    }

    /// Native group containing `method`, if any.
    pub fn group_of(&self, method: &str) -> Option<&BTreeSet<String>> {
        self.v_nat.values().find(|g| g.contains(method))
    }
}

pub fn classify_methods(program: &Program) -> MethodSets {
    let entry = program.method(program.entry()).name.clone();
    let mut pin_reasons = BTreeMap::new();
    pin_reasons.insert(entry.clone(), PinReason::Entry);
    if let Some(boot) = program.boot() {
        pin_reasons.insert(program.method(boot).name.clone(), PinReason::Boot);
    }
    let mut v_nat: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut natives = BTreeSet::new();
    for m in program.methods() {
        if pin_reasons.contains_key(&m.name) {
            continue;
        }
        if m.is_native {
            natives.insert(m.name.clone());
            v_nat.entry(m.type_name.clone()).or_default().insert(m.name.clone());
            if m.is_pinned {
                pin_reasons.insert(m.name.clone(), PinReason::PinnedNative);
            }
        } else if m.is_pinned {
            pin_reasons.insert(m.name.clone(), PinReason::Declared);
        } else if m.contains(|i| matches!(i, Instruction::In | Instruction::Out)) {
            pin_reasons.insert(m.name.clone(), PinReason::DeviceIo);
        }
    }
    let v_m: BTreeSet<String> = pin_reasons.keys().cloned().collect();
    let derived_pins = v_nat
        .values()
        .filter(|g| g.iter().any(|m| v_m.contains(m)))
        .flat_map(|g| g.iter().filter(|m| !v_m.contains(*m)).cloned())
        .collect();
    let migratable = program
        .methods()
        .iter()
        .filter(|m| !m.is_native && !v_m.contains(&m.name))
        .map(|m| m.name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    MethodSets { entry, v_m, pin_reasons, v_nat, derived_pins, natives, migratable }
}

/// A choice of migration points: `r[m] = true` places a migration point at
/// the entry of `m` and a re-integration point at its exits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct PartitionCandidate {
    pub r: BTreeMap<String, bool>,
}

impl PartitionCandidate {
    /// Candidate over `domain` with exactly `migrants` set.
    pub fn over<'a>(domain: impl IntoIterator<Item = &'a String>, migrants: &BTreeSet<String>) -> PartitionCandidate {
        PartitionCandidate { r: domain.into_iter().map(|m| (m.clone(), migrants.contains(m))).collect() }
    }

    pub fn of<'a>(migrants: impl IntoIterator<Item = &'a str>) -> PartitionCandidate {
        PartitionCandidate { r: migrants.into_iter().map(|m| (m.to_string(), true)).collect() }
    }

    pub fn migrates(&self, method: &str) -> bool {
        self.r.get(method).copied().unwrap_or(false)
    }

    pub fn migrants(&self) -> BTreeSet<String> {
        self.r.iter().filter(|(_, on)| **on).map(|(m, _)| m.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// A pinned method was made a migration point.
    Pinned(String),
    /// The method is native or unknown and cannot be a migration point.
    NotMigratable(String),
    /// `outer` transitively calls `inner` and both migrate.
    Nested { outer: String, inner: String },
    /// No location assignment satisfies the placement constraints; names the
    /// method where the contradiction closed.
    Location(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Legality {
    pub violations: Vec<Violation>,
}

impl Legality {
    pub fn is_legal(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One pairwise or fixed placement constraint over `L`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocationConstraint {
    Same(String, String),
    Differ(String, String),
    Device(String),
}

/// The placement constraints induced by a migration-point choice:
/// callers of a migrant sit on the other node, callers of a non-migrant sit
/// with it, pinned methods stay on the device, and native groups stay together.
pub fn location_constraints(
    candidate: &PartitionCandidate,
    graph: &CallGraph,
    sets: &MethodSets,
) -> Vec<LocationConstraint> {
    let mut out = Vec::new();
    for (caller, callee) in &graph.dc {
        if candidate.migrates(callee) {
            out.push(LocationConstraint::Differ(caller.clone(), callee.clone()));
        } else {
            out.push(LocationConstraint::Same(caller.clone(), callee.clone()));
        }
    }
    for m in &sets.v_m {
        out.push(LocationConstraint::Device(m.clone()));
    }
    for group in sets.v_nat.values() {
        let mut it = group.iter();
        if let Some(first) = it.next() {
            for other in it {
                out.push(LocationConstraint::Same(first.clone(), other.clone()));
            }
        }
    }
    out
}

/// Union-find over methods where each node stores its parity relative to its
/// root. A dedicated node stands for "device" (location 0).
#[derive(Debug, Clone)]
pub struct ParityUnionFind {
    index: BTreeMap<String, usize>,
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl ParityUnionFind {
    pub const DEVICE: usize = 0;

    pub fn new<'a>(methods: impl IntoIterator<Item = &'a String>) -> ParityUnionFind {
        let index: BTreeMap<String, usize> = methods.into_iter().enumerate().map(|(i, m)| (m.clone(), i + 1)).collect();
        let n = index.len() + 1;
        ParityUnionFind { index, parent: (0..n).collect(), parity: vec![false; n] }
    }

    pub fn node(&self, method: &str) -> Option<usize> {
        self.index.get(method).copied()
    }

    /// Root and parity of `x` relative to that root.
    pub fn find(&mut self, x: usize) -> (usize, bool) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur] != cur {
            path.push(cur);
            cur = self.parent[cur];
        }
        let root = cur;
        // compress: accumulate parities from the top of the path down
        let mut acc = false;
        for &n in path.iter().rev() {
            acc ^= self.parity[n];
            self.parity[n] = acc;
            self.parent[n] = root;
        }
        (root, if x == root { false } else { self.parity[x] })
    }

    /// Requires `L(a) xor L(b) == differ`. Returns false on contradiction.
    pub fn relate(&mut self, a: usize, b: usize, differ: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return (pa ^ pb) == differ;
        }
        // keep the device node as a root so fixed locations read off directly
        let (child, root, pc, pr) = if rb == Self::DEVICE { (ra, rb, pa, pb) } else { (rb, ra, pb, pa) };
        self.parent[child] = root;
        self.parity[child] = pc ^ pr ^ differ;
        true
    }

    pub fn apply(&mut self, c: &LocationConstraint) -> Result<(), String> {
        let node = |uf: &Self, m: &str| uf.node(m).ok_or_else(|| m.to_string());
        let ok = match c {
            LocationConstraint::Same(a, b) => {
                let (x, y) = (node(self, a)?, node(self, b)?);
                self.relate(x, y, false)
            }
            LocationConstraint::Differ(a, b) => {
                let (x, y) = (node(self, a)?, node(self, b)?);
                self.relate(x, y, true)
            }
            LocationConstraint::Device(a) => {
                let x = node(self, a)?;
                self.relate(x, Self::DEVICE, false)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(match c {
                LocationConstraint::Same(_, b) | LocationConstraint::Differ(_, b) => b.clone(),
                LocationConstraint::Device(a) => a.clone(),
            })
        }
    }

    /// Location of `method` if it is tied to the device node.
    pub fn fixed_location(&mut self, method: &str) -> Option<bool> {
        let n = self.node(method)?;
        let (root, parity) = self.find(n);
        (root == Self::DEVICE).then_some(parity)
    }

    /// A full assignment. Components not tied to the device put their root on
    /// the device.
    pub fn assignment(&mut self) -> BTreeMap<String, bool> {
        let names: Vec<(String, usize)> = self.index.iter().map(|(m, i)| (m.clone(), *i)).collect();
        names.into_iter().map(|(m, i)| (m, self.find(i).1)).collect()
    }
}

/// Solves the placement constraints for `candidate`.
pub fn derive_locations(
    candidate: &PartitionCandidate,
    graph: &CallGraph,
    sets: &MethodSets,
) -> Result<BTreeMap<String, bool>, Violation> {
    let mut uf = ParityUnionFind::new(&graph.methods);
    for c in location_constraints(candidate, graph, sets) {
        uf.apply(&c).map_err(Violation::Location)?;
    }
    Ok(uf.assignment())
}

pub fn is_legal(candidate: &PartitionCandidate, graph: &CallGraph, sets: &MethodSets) -> Legality {
    let mut violations = Vec::new();
    let migrants = candidate.migrants();
    for m in &migrants {
        if sets.v_m.contains(m) {
            violations.push(Violation::Pinned(m.clone()));
        } else if !sets.is_migratable(m) {
            violations.push(Violation::NotMigratable(m.clone()));
        }
    }
    for outer in &migrants {
        for inner in &migrants {
            if graph.transitively_calls(outer, inner) {
                violations.push(Violation::Nested { outer: outer.clone(), inner: inner.clone() });
            }
        }
    }
    if violations.is_empty() {
        if let Err(v) = derive_locations(candidate, graph, sets) {
            violations.push(v);
        }
    }
    Legality { violations }
}

/// Every legal candidate over the migratable methods, in lexicographic order
/// of the `(R(m1), R(m2), ...)` tuple with methods sorted by name.
pub fn enumerate_legal<'a>(
    graph: &'a CallGraph,
    sets: &'a MethodSets,
) -> Result<impl Iterator<Item = PartitionCandidate> + 'a, AnalyzerError> {
    let n = sets.migratable.len();
    if n > ENUMERATION_LIMIT {
        return Err(AnalyzerError::TooManyMethods { count: n, limit: ENUMERATION_LIMIT });
    }
    Ok(all_candidates(&sets.migratable).filter(move |c| is_legal(c, graph, sets).is_legal()))
}

/// All `2^n` candidates over `domain` in lexicographic order (last method
/// varies fastest).
pub fn all_candidates(domain: &[String]) -> impl Iterator<Item = PartitionCandidate> + '_ {
    let n = domain.len();
    (0u64..(1u64 << n)).map(move |bits| PartitionCandidate {
        r: domain.iter().enumerate().map(|(i, m)| (m.clone(), bits >> (n - 1 - i) & 1 == 1)).collect(),
    })
}

/// Deterministic text report, one tuple per line, sorted within sections.
pub fn report(graph: &CallGraph, sets: &MethodSets) -> String {
    let mut out = String::new();
    for m in &graph.methods {
        let _ = writeln!(out, "METHOD {m}");
    }
    for (a, b) in &graph.dc {
        let _ = writeln!(out, "DC {a} {b}");
    }
    for (a, b) in &graph.tc {
        let _ = writeln!(out, "TC {a} {b}");
    }
    for (m, why) in &sets.pin_reasons {
        let _ = writeln!(out, "PINNED {m} {}", why.label());
    }
    for (ty, group) in &sets.v_nat {
        let members: Vec<&str> = group.iter().map(String::as_str).collect();
        let _ = writeln!(out, "NATGROUP {ty} {}", members.join(" "));
    }
    for m in &sets.derived_pins {
        let _ = writeln!(out, "DERIVED_PIN {m}");
    }
    for m in &sets.migratable {
        let _ = writeln!(out, "MIGRATABLE {m}");
    }
    out
}
