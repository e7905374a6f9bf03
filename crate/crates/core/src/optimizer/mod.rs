// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Choosing migration points.
//!
//! Each method `m` gets two 0-1 variables: `R(m)`, whether a migration point
//! sits at its entry, and `L(m)`, where it runs. The objective sums device or
//! clone computation cost per invocation plus migration cost for every
//! invocation of a migrant. The solver here is exact; a brute-force route
//! and a linearized program dump exist for cross-checking.

mod check;
mod db;
mod ilp;
mod rewrite;
mod solve;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::minivm::VTime;
use crate::profiler::CostModel;

pub use check::{check_constraints, ConstraintViolation};
pub use db::{DbEntry, PartitionDatabase};
pub use ilp::{build_integer_program, IntegerProgram, LinearConstraint, Relation, Var};
pub use rewrite::rewrite;
pub use solve::{brute_force_solve, solve};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OptimizerError {
    #[error("method {0} has invocations but no assignment")]
    Unassigned(String),
    #[error("unknown method {0}")]
    UnknownMethod(String),
    #[error("{count} migratable methods exceeds the limit of {limit}")]
    TooLarge { count: usize, limit: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A full assignment of `R` and `L` with its objective value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionModel {
    pub r: BTreeMap<String, bool>,
    pub l: BTreeMap<String, bool>,
    pub objective: VTime,
    pub network: String,
}

impl PartitionModel {
    /// Everything on the device, no migration points.
    pub fn all_local<'a>(methods: impl IntoIterator<Item = &'a String>, network: &str) -> PartitionModel {
        let (r, l): (BTreeMap<_, _>, BTreeMap<_, _>) =
            methods.into_iter().map(|m| ((m.clone(), false), (m.clone(), false))).unzip();
        PartitionModel { r, l, objective: VTime::ZERO, network: network.to_string() }
    }

    pub fn migrants(&self) -> BTreeSet<String> {
        self.r.iter().filter(|(_, on)| **on).map(|(m, _)| m.clone()).collect()
    }

    pub fn migrates(&self, method: &str) -> bool {
        self.r.get(method).copied().unwrap_or(false)
    }

    pub fn is_local(&self) -> bool {
        self.r.values().all(|on| !on)
    }

    /// `Local` for the no-migration partition, else `Offload`.
    pub fn label(&self) -> &'static str {
        if self.is_local() {
            "Local"
        } else {
            "Offload"
        }
    }

    /// Ordering key for equal objectives: fewer migrants, then names.
    pub(crate) fn tie_key(&self) -> (usize, Vec<String>) {
        let m: Vec<String> = self.migrants().into_iter().collect();
        (m.len(), m)
    }
}

/// Objective of `partition` under `model`.
pub fn evaluate_cost(partition: &PartitionModel, model: &CostModel) -> Result<VTime, OptimizerError> {
    let mut total = VTime::ZERO;
    for (e, i) in model.invocations() {
        let l = *partition.l.get(&i.method).ok_or_else(|| OptimizerError::Unassigned(i.method.clone()))?;
        let r = *partition.r.get(&i.method).ok_or_else(|| OptimizerError::Unassigned(i.method.clone()))?;
        let comp = if l { i.cc1 } else { i.cc0 };
        let migr = if r { i.cs } else { VTime::ZERO };
        total += (comp + migr) * e.weight;
    }
    Ok(total)
}
