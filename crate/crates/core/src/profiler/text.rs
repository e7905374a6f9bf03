// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Line-oriented storage for profile trees and cost models.

use std::fmt::Write as _;

use super::{CostModel, ExecutionCosts, InvocationCost, Location, NetworkModel, NodeKind, ProfileError, ProfileNode, ProfileTree};
use crate::minivm::VTime;

fn err(line: usize, message: impl Into<String>) -> ProfileError {
    ProfileError::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, ProfileError> {
    s.parse().map_err(|_| err(line, format!("bad number `{s}`")))
}

impl ProfileTree {
    /// Header line, then one node per line in preorder:
    /// `depth kind method invocation cost bytes_out bytes_in`.
    pub fn to_text(&self) -> String {
        let loc = match self.location {
            Location::Device => 0,
            Location::Clone => 1,
        };
        let mut out = format!("tree location {loc} execution {}\n", self.execution);
        let mut stack = vec![(0usize, &self.root)];
        while let Some((d, n)) = stack.pop() {
            let kind = match n.kind {
                NodeKind::Call => "call",
                NodeKind::Residual => "residual",
            };
            let _ = writeln!(out, "{d} {kind} {} {} {} {} {}", n.method, n.invocation, n.cost, n.bytes_out, n.bytes_in);
            stack.extend(n.children.iter().rev().map(|c| (d + 1, c)));
        }
        out
    }
}

pub fn parse_profile_tree(text: &str) -> Result<ProfileTree, ProfileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty profile"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (location, execution) = match h.as_slice() {
        ["tree", "location", l, "execution", e] => {
            let loc = match *l {
                "0" => Location::Device,
                "1" => Location::Clone,
                _ => return Err(err(hl, "location must be 0 or 1")),
            };
            (loc, num(hl, e)?)
        }
        _ => return Err(err(hl, "expected `tree location <l> execution <e>`")),
    };
    // open[d] is the node currently open at depth d
    let mut open: Vec<ProfileNode> = Vec::new();
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let [d, kind, method, inv, cost, out, inb] = f.as_slice() else {
            return Err(err(ln, "expected 7 fields"));
        };
        let depth: usize = num(ln, d)?;
        let kind = match *kind {
            "call" => NodeKind::Call,
            "residual" => NodeKind::Residual,
            k => return Err(err(ln, format!("unknown kind `{k}`"))),
        };
        let node = ProfileNode {
            invocation: num(ln, inv)?,
            method: method.to_string(),
            kind,
            cost: cost.parse::<VTime>().map_err(|_| err(ln, format!("bad time `{cost}`")))?,
            children: Vec::new(),
            bytes_out: num(ln, out)?,
            bytes_in: num(ln, inb)?,
        };
        if depth > open.len() || (depth == 0 && !open.is_empty()) {
            return Err(err(ln, "bad depth"));
        }
        while open.len() > depth {
            let done = open.pop().expect("nonempty");
            open.last_mut().ok_or_else(|| err(ln, "second root"))?.children.push(done);
        }
        open.push(node);
    }
    while open.len() > 1 {
        let done = open.pop().expect("nonempty");
        open.last_mut().expect("parent").children.push(done);
    }
    let root = open.pop().ok_or_else(|| err(hl, "no nodes"))?;
    Ok(ProfileTree { root, location, execution })
}

pub fn parse_cost_model(text: &str) -> Result<CostModel, ProfileError> {
    let mut header = String::new();
    let mut executions: Vec<ExecutionCosts> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["execution", id, "weight", w] => {
                executions.push(ExecutionCosts { id: num(ln, id)?, weight: num(ln, w)?, invocations: Vec::new() })
            }
            ["invocation", inv, method, c0, c1, cs, out, inb] => {
                let t = |s: &str| s.parse::<VTime>().map_err(|_| err(ln, format!("bad time `{s}`")));
                let e = executions.last_mut().ok_or_else(|| err(ln, "invocation before execution"))?;
                e.invocations.push(InvocationCost {
                    invocation: num(ln, inv)?,
                    method: method.to_string(),
                    cc0: t(c0)?,
                    cc1: t(c1)?,
                    cs: t(cs)?,
                    bytes_out: num(ln, out)?,
                    bytes_in: num(ln, inb)?,
                });
            }
            _ if executions.is_empty() => {
                header.push_str(line);
                header.push('\n');
            }
            _ => return Err(err(ln, format!("unexpected line `{line}`"))),
        }
    }
    let network: NetworkModel = header.parse().map_err(|e: super::ParseNetworkError| err(1, e.0))?;
    Ok(CostModel { network, executions })
}
