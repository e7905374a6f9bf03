// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{NetworkModel, NodeKind, ProfileError, ProfileNode, ProfileTree};
use crate::minivm::VTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvocationCost {
    pub invocation: u32,
    pub method: String,
    /// Computation cost on the device.
    pub cc0: VTime,
    /// Computation cost on the clone.
    pub cc1: VTime,
    /// Migration cost if this invocation were shipped.
    pub cs: VTime,
    pub bytes_out: u64,
    pub bytes_in: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionCosts {
    pub id: usize,
    pub weight: u64,
    pub invocations: Vec<InvocationCost>,
}

/// Per-method sums over every invocation of every execution, weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MethodCosts {
    pub c0: VTime,
    pub c1: VTime,
    pub cs: VTime,
    pub invocations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    pub network: NetworkModel,
    pub executions: Vec<ExecutionCosts>,
}

impl CostModel {
    pub fn invocations(&self) -> impl Iterator<Item = (&ExecutionCosts, &InvocationCost)> {
        self.executions.iter().flat_map(|e| e.invocations.iter().map(move |i| (e, i)))
    }

    pub fn method_costs(&self) -> BTreeMap<String, MethodCosts> {
        let mut out: BTreeMap<String, MethodCosts> = BTreeMap::new();
        for (e, i) in self.invocations() {
            let m = out.entry(i.method.clone()).or_default();
            m.c0 += i.cc0 * e.weight;
            m.c1 += i.cc1 * e.weight;
            m.cs += i.cs * e.weight;
            m.invocations += e.weight;
        }
        out
    }

    /// Same measurements priced under another network.
    pub fn with_network(&self, network: &NetworkModel) -> CostModel {
        let mut m = self.clone();
        m.network = network.clone();
        for e in &mut m.executions {
            for i in &mut e.invocations {
                i.cs = network.migration_cost(i.bytes_out, i.bytes_in);
            }
        }
        m
    }

    /// Cost of running everything on the device.
    pub fn all_local(&self) -> VTime {
        self.method_costs().values().map(|m| m.c0).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = self.network.to_text();
        for e in &self.executions {
            let _ = writeln!(out, "execution {} weight {}", e.id, e.weight);
            for i in &e.invocations {
                let _ = writeln!(
                    out,
                    "invocation {} {} {} {} {} {} {}",
                    i.invocation, i.method, i.cc0, i.cc1, i.cs, i.bytes_out, i.bytes_in
                );
            }
        }
        out
    }
}

/// Checks that two trees have the same shape and labels. Returns the first
/// invocation where they diverge.
pub fn check_isomorphic(a: &ProfileNode, b: &ProfileNode) -> Result<(), u32> {
    if a.kind != b.kind || a.method != b.method || a.invocation != b.invocation || a.children.len() != b.children.len() {
        return Err(a.invocation);
    }
    a.children.iter().zip(&b.children).try_for_each(|(x, y)| check_isomorphic(x, y))
}

fn own_cost(n: &ProfileNode) -> VTime {
    if n.is_leaf() {
        n.cost
    } else {
        n.residual().map(|r| r.cost).unwrap_or(VTime::ZERO)
    }
}

/// Distills `(device, clone)` tree pairs into per-invocation costs. A leaf's
/// computation cost is its own annotation; a non-leaf's is its residual.
pub fn build_cost_model(pairs: &[(ProfileTree, ProfileTree)], network: &NetworkModel) -> Result<CostModel, ProfileError> {
    let mut executions = Vec::with_capacity(pairs.len());
    for (dev, cln) in pairs {
        check_isomorphic(&dev.root, &cln.root)
            .map_err(|invocation| ProfileError::ShapeMismatch { execution: dev.execution, invocation })?;
        let invocations = dev
            .root
            .calls()
            .zip(cln.root.calls())
            .map(|(d, c)| {
                debug_assert_eq!(d.kind, NodeKind::Call);
                InvocationCost {
                    invocation: d.invocation,
                    method: d.method.clone(),
                    cc0: own_cost(d),
                    cc1: own_cost(c),
                    cs: network.migration_cost(d.bytes_out, d.bytes_in),
                    bytes_out: d.bytes_out,
                    bytes_in: d.bytes_in,
                }
            })
            .collect();
        executions.push(ExecutionCosts { id: dev.execution, weight: 1, invocations });
    }
    Ok(CostModel { network: network.clone(), executions })
}
