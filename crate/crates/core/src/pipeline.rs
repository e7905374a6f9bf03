// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! The offline half glued together: analyze, profile on both nodes, build
//! a cost model, solve, rewrite.

use std::sync::Arc;

use thiserror::Error;

use crate::analyzer::{build_call_graph, classify_methods, CallGraph, MethodSets};
use crate::minivm::{Program, Speed, VmClock};
use crate::optimizer::{evaluate_cost, rewrite, solve, OptimizerError, PartitionDatabase, PartitionModel};
use crate::profiler::{build_cost_model, profile_executions, CostModel, NetworkModel, ProfileError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// A program with its static analysis and a measured cost model. The model
/// keeps raw byte counts, so it can be re-priced for any network.
#[derive(Debug, Clone)]
pub struct Profiled {
    pub program: Arc<Program>,
    pub graph: CallGraph,
    pub sets: MethodSets,
    pub model: CostModel,
}

/// Analyzes `program` and profiles it on every input in `inputs`.
pub fn profile_program(
    program: &Arc<Program>,
    inputs: &[Vec<i64>],
    clone_speed: Speed,
) -> Result<Profiled, PipelineError> {
    let graph = build_call_graph(program);
    let sets = classify_methods(program);
    let pairs = profile_executions(program, inputs, &VmClock::new(clone_speed))?;
    let model = build_cost_model(&pairs, &NetworkModel::wifi())?;
    Ok(Profiled { program: Arc::clone(program), graph, sets, model })
}

/// The optimum for one network.
#[derive(Debug, Clone)]
pub struct Decision {
    pub model: CostModel,
    pub partition: PartitionModel,
    /// Cost of running everything on the device, from the same model.
    pub local_cost: crate::minivm::VTime,
}

impl Decision {
    /// Estimated speedup over the all-local run.
    pub fn speedup(&self) -> f64 {
        self.local_cost.ratio_to(self.partition.objective)
    }
}

impl Profiled {
    pub fn decide(&self, network: &NetworkModel) -> Result<Decision, PipelineError> {
        let model = self.model.with_network(network);
        let partition = solve(&model, &self.graph, &self.sets)?;
        debug_assert_eq!(evaluate_cost(&partition, &model).ok(), Some(partition.objective));
        let local_cost = model.all_local();
        Ok(Decision { model, partition, local_cost })
    }

    /// Solves for each network and collects the results into a database.
    pub fn database(&self, program_id: &str, networks: &[NetworkModel]) -> Result<PartitionDatabase, PipelineError> {
        let mut db = PartitionDatabase::new();
        for net in networks {
            db.insert(program_id, self.decide(net)?.partition);
        }
        Ok(db)
    }

    pub fn rewritten(&self, partition: &PartitionModel) -> Result<Arc<Program>, PipelineError> {
        Ok(Arc::new(rewrite(&self.program, partition)?))
    }
}
