// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! The linearized 0-1 program, for inspection and as a third check on
//! solver output.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use super::PartitionModel;
use crate::analyzer::{CallGraph, MethodSets};
use crate::minivm::VTime;
use crate::profiler::CostModel;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    R(String),
    L(String),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::R(m) => write!(f, "R_{m}"),
            Var::L(m) => write!(f, "L_{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(i64, Var)>,
    pub relation: Relation,
    pub rhs: i64,
}

impl LinearConstraint {
    fn new(name: String, terms: &[(i64, Var)], relation: Relation, rhs: i64) -> LinearConstraint {
        let mut merged: BTreeMap<Var, i64> = BTreeMap::new();
        for (c, v) in terms {
            *merged.entry(v.clone()).or_default() += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| *c != 0).map(|(v, c)| (c, v)).collect();
        LinearConstraint { name, terms, relation, rhs }
    }

    pub fn holds(&self, value: impl Fn(&Var) -> i64) -> bool {
        let lhs: i64 = self.terms.iter().map(|(c, v)| c * value(v)).sum();
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerProgram {
    pub network: String,
    pub variables: Vec<Var>,
    pub constant: VTime,
    pub objective: Vec<(VTime, Var)>,
    pub constraints: Vec<LinearConstraint>,
}

fn value_of(p: &PartitionModel, v: &Var) -> i64 {
    let b = match v {
        Var::R(m) => p.r.get(m),
        Var::L(m) => p.l.get(m),
    };
    i64::from(b.copied().unwrap_or(false))
}

impl IntegerProgram {
    pub fn evaluate(&self, p: &PartitionModel) -> VTime {
        self.objective
            .iter()
            .filter(|(_, v)| value_of(p, v) == 1)
            .fold(self.constant, |acc, (c, _)| acc + *c)
    }

    /// Names of constraints `p` violates.
    pub fn violated(&self, p: &PartitionModel) -> Vec<&str> {
        self.constraints.iter().filter(|c| !c.holds(|v| value_of(p, v))).map(|c| c.name.as_str()).collect()
    }

    /// LP-style text.
    pub fn to_lp(&self) -> String {
        let mut out = format!("\\ partition problem, network {}\nMinimize\n obj: {}", self.network, self.constant.as_f64());
        for (c, v) in &self.objective {
            let _ = write!(out, " {} {:.6} {v}", if c.numer() < 0 { "-" } else { "+" }, c.as_f64().abs());
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            for (k, v) in &c.terms {
                let _ = write!(out, " {} {} {v}", if *k < 0 { "-" } else { "+" }, k.abs());
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {rel} {}", c.rhs);
        }
        out.push_str("Binary\n");
        for v in &self.variables {
            let _ = writeln!(out, " {v}");
        }
        out.push_str("End\n");
        out
    }
}

pub fn build_integer_program(model: &CostModel, graph: &CallGraph, sets: &MethodSets) -> IntegerProgram {
    use Relation::*;
    let costs = model.method_costs();
    let r = |m: &str| Var::R(m.to_string());
    let l = |m: &str| Var::L(m.to_string());
    let variables = graph.methods.iter().flat_map(|m| [r(m), l(m)]).collect();

    let mut constant = VTime::ZERO;
    let mut objective = Vec::new();
    for (m, c) in &costs {
        constant += c.c0;
        if c.c1 != c.c0 {
            objective.push((c.c1 - c.c0, l(m)));
        }
        if c.cs != VTime::ZERO {
            objective.push((c.cs, r(m)));
        }
    }

    let mut cons = Vec::new();
    for (k, (a, b)) in graph.dc.iter().enumerate() {
        // migrant callee: opposite sides; otherwise: same side
        cons.push(LinearConstraint::new(format!("dc{k}_a"), &[(1, l(a)), (1, l(b)), (-1, r(b))], Ge, 0));
        cons.push(LinearConstraint::new(format!("dc{k}_b"), &[(1, l(a)), (1, l(b)), (1, r(b))], Le, 2));
        cons.push(LinearConstraint::new(format!("dc{k}_c"), &[(1, l(a)), (-1, l(b)), (-1, r(b))], Le, 0));
        cons.push(LinearConstraint::new(format!("dc{k}_d"), &[(-1, l(a)), (1, l(b)), (-1, r(b))], Le, 0));
    }
    for m in &sets.v_m {
        cons.push(LinearConstraint::new(format!("pin_{m}"), &[(1, l(m))], Eq, 0));
    }
    for m in graph.methods.iter().filter(|m| !sets.is_migratable(m)) {
        cons.push(LinearConstraint::new(format!("fixed_{m}"), &[(1, r(m))], Eq, 0));
    }
    for (ty, g) in &sets.v_nat {
        let first = g.iter().next().expect("nonempty group");
        for (k, o) in g.iter().skip(1).enumerate() {
            cons.push(LinearConstraint::new(format!("nat_{ty}_{k}"), &[(1, l(first)), (-1, l(o))], Eq, 0));
        }
    }
    for (k, (a, b)) in graph.tc.iter().enumerate() {
        cons.push(LinearConstraint::new(format!("tc{k}"), &[(1, r(a)), (1, r(b))], Le, 1));
    }
    IntegerProgram { network: model.network.name.clone(), variables, constant, objective, constraints: cons }
}
