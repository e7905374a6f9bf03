// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! The comparison table: each workload at each size under each network,
//! run on the device alone, on the clone alone, and partitioned.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::minivm::{run, NoHooks, Speed, VTime, VmClock};
use crate::pipeline::{profile_program, PipelineError};
use crate::profiler::NetworkModel;
use crate::runtime::{run_distributed, CloneNode, ExecutionConditions, InProcess, RuntimeError};
use crate::workloads::{Size, Workload};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Vm(#[from] crate::minivm::VmError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub workload: String,
    pub size: Size,
    pub network: String,
    pub monolithic: VTime,
    pub clone_only: VTime,
    pub distributed: VTime,
    /// Solver objective for the executed partition.
    pub predicted: VTime,
    pub migrants: Vec<String>,
    pub migrations: usize,
    pub output_matches: bool,
}

impl RunReport {
    pub fn speedup(&self) -> f64 {
        self.monolithic.ratio_to(self.distributed)
    }

    pub fn label(&self) -> &'static str {
        if self.migrants.is_empty() {
            "Local"
        } else {
            "Offload"
        }
    }
}

/// Profiles the workload on its own input, partitions for `net`, and runs
/// the result.
pub fn run_cell(
    workload: Workload,
    size: Size,
    net: &NetworkModel,
    clone_speed: Speed,
    seed: u64,
) -> Result<RunReport, ReportError> {
    let program = workload.program();
    let input = workload.input(size, seed);
    let mono = run(&program, &input, &VmClock::device(), &mut NoHooks)?;
    let clone_only = run(&program, &input, &VmClock::new(clone_speed), &mut NoHooks)?;

    let profiled = profile_program(&program, std::slice::from_ref(&input), clone_speed)?;
    let partition = profiled.decide(net)?.partition;
    let rewritten = profiled.rewritten(&partition)?;
    let mut node = CloneNode::new();
    node.install(workload.name(), Arc::clone(&rewritten));
    let cond = ExecutionConditions { network: net.clone(), clone_speed, clone_available: true };
    let dist = run_distributed(&rewritten, workload.name(), &cond, &input, &mut InProcess::new(Arc::new(node)), true)?;

    Ok(RunReport {
        workload: workload.name().to_string(),
        size,
        network: net.name.clone(),
        monolithic: mono.elapsed,
        clone_only: clone_only.elapsed,
        distributed: dist.elapsed,
        predicted: partition.objective,
        migrants: partition.migrants().into_iter().collect(),
        migrations: dist.migrations.len(),
        output_matches: dist.output == mono.output,
    })
}

/// Every (workload, size, network) cell, in that nesting order.
pub fn compare(
    workloads: &[Workload],
    sizes: &[Size],
    nets: &[NetworkModel],
    clone_speed: Speed,
    seed: u64,
) -> Result<Vec<RunReport>, ReportError> {
    let mut rows = Vec::new();
    for w in workloads {
        for s in sizes {
            for n in nets {
                rows.push(run_cell(*w, *s, n, clone_speed, seed)?);
            }
        }
    }
    Ok(rows)
}

pub fn format_table(rows: &[RunReport]) -> String {
    let mut out = format!(
        "{:<8} {:<6} {:<7} {:>12} {:>12} {:>12} {:>8}  {:<8} {}\n",
        "workload", "size", "network", "device", "clone", "partitioned", "speedup", "decision", "migrants"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<8} {:<6} {:<7} {:>12.2} {:>12.2} {:>12.2} {:>8.2}  {:<8} {}",
            r.workload,
            r.size.to_string(),
            r.network,
            r.monolithic.as_f64(),
            r.clone_only.as_f64(),
            r.distributed.as_f64(),
            r.speedup(),
            r.label(),
            if r.migrants.is_empty() { "-".to_string() } else { r.migrants.join(",") },
        );
    }
    out
}
