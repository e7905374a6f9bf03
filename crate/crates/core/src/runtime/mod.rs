// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Running a partitioned program. The device VM executes normally; when a
//! thread reaches a migration point it is captured, shipped to a clone,
//! run to its re-integration point and merged back.

mod node;
pub mod wire;

use std::collections::BTreeSet;
use std::sync::Arc;

use log::{debug, warn};
use thiserror::Error;

use crate::migrator::{
    capture, collect_garbage, deserialize, elide_templates, merge, serialize, Departure, Direction,
    MigrationError, TemplateRegistry,
};
use crate::minivm::{ExecutionResult, NoHooks, Oid, Program, RunStop, Speed, Tid, VTime, Vm, VmClock, VmConfig, VmError};
use crate::optimizer::{rewrite, OptimizerError, PartitionDatabase, PartitionModel};
use crate::profiler::NetworkModel;

pub use node::{
    serve_clone, serve_connection, CloneNode, InProcess, NativeState, TcpTransport, Transport, CLONE_OID_BASE,
};

/// Environment variable naming a clone address for socket mode.
pub const CLONE_ADDR_ENV: &str = "CC_CLONE_ADDR";

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Vm(#[from] VmError),
    #[error(transparent)]
    Migration(#[from] MigrationError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("clone reported: {0}")]
    Remote(String),
    #[error("no program installed as {0}")]
    UnknownProgram(String),
    #[error("thread stopped unexpectedly ({0:?})")]
    UnexpectedStop(RunStop),
}

/// What the device sees when deciding how to run.
#[derive(Debug, Clone)]
pub struct ExecutionConditions {
    pub network: NetworkModel,
    pub clone_speed: Speed,
    pub clone_available: bool,
}

impl ExecutionConditions {
    pub fn new(network: NetworkModel) -> ExecutionConditions {
        ExecutionConditions { network, clone_speed: Speed::from_integer(20), clone_available: true }
    }
}

/// Lookup outcome: the binary to run and the partition it came from.
#[derive(Debug, Clone)]
pub struct Selected {
    pub program_id: String,
    pub program: Arc<Program>,
    pub partition: PartitionModel,
    /// True when nothing matched and the original program is used.
    pub fallback: bool,
}

/// Picks the database entry for the current network and rewrites the
/// original program accordingly. Without a match, or without a clone, the
/// original program runs entirely on the device.
pub fn lookup_partition(
    db: &PartitionDatabase,
    cond: &ExecutionConditions,
    program_id: &str,
    original: &Arc<Program>,
) -> Result<Selected, RuntimeError> {
    let hit = db.get(&cond.network.name).filter(|e| cond.clone_available && e.program_id == program_id);
    match hit {
        Some(entry) => {
            let program = Arc::new(rewrite(original, &entry.partition)?);
            Ok(Selected {
                program_id: partitioned_id(program_id, &cond.network.name),
                program,
                partition: entry.partition.clone(),
                fallback: false,
            })
        }
        None => {
            if cond.clone_available {
                warn!("no partition of {program_id} for network {}; running locally", cond.network.name);
            } else {
                debug!("clone unavailable; running {program_id} locally");
            }
            let names: Vec<String> = original.methods().iter().map(|m| m.name.clone()).collect();
            Ok(Selected {
                program_id: program_id.to_string(),
                program: Arc::clone(original),
                partition: PartitionModel::all_local(&names, &cond.network.name),
                fallback: true,
            })
        }
    }
}

/// Identifier under which a clone should install a rewritten binary.
pub fn partitioned_id(program_id: &str, network: &str) -> String {
    format!("{program_id}@{network}")
}

/// Charges a transfer of `bytes` to `clock` and returns the time taken.
pub fn transfer(bytes: u64, net: &NetworkModel, clock: &mut VmClock) -> VTime {
    let t = net.transfer_time(bytes);
    clock.charge(t);
    t
}

/// One completed round trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrationRecord {
    pub method: String,
    pub bytes_out: u64,
    pub bytes_in: u64,
    pub transfer_time: VTime,
    pub clone_work: u64,
    pub clone_time: VTime,
    pub objects_updated: usize,
    pub objects_created: usize,
    pub objects_reclaimed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributedResult {
    pub output: Vec<i64>,
    /// Device compute, suspend/resume and transfer charges, plus clone
    /// compute converted to time.
    pub elapsed: VTime,
    /// Work units executed on the device.
    pub device_work: u64,
    pub migrations: Vec<MigrationRecord>,
}

impl DistributedResult {
    pub fn total_bytes(&self) -> u64 {
        self.migrations.iter().map(|m| m.bytes_out + m.bytes_in).sum()
    }
}

/// Runs `program` (normally a rewritten binary) on a device VM, migrating at
/// every MIGRATE marker unless `migrate` is false or no clone is available.
pub fn run_distributed(
    program: &Arc<Program>,
    program_id: &str,
    cond: &ExecutionConditions,
    input: &[i64],
    transport: &mut dyn Transport,
    migrate: bool,
) -> Result<DistributedResult, RuntimeError> {
    let config = VmConfig { migration_enabled: migrate && cond.clone_available, ..VmConfig::default() };
    let mut vm = Vm::new(Arc::clone(program), config)?;
    let registry = TemplateRegistry::from_boot(&vm);
    let tid = vm.start(input);
    let mut migrations = Vec::new();
    loop {
        match vm.run_thread(tid, &mut NoHooks)? {
            RunStop::Finished => break,
            RunStop::MigrationPoint => {
                let record = offload(&mut vm, tid, &registry, program_id, cond, transport)?;
                debug!(
                    "{} migrated: {} bytes out, {} back, {} clone work",
                    record.method, record.bytes_out, record.bytes_in, record.clone_work
                );
                migrations.push(record);
            }
            other => return Err(RuntimeError::UnexpectedStop(other)),
        }
    }
    let ExecutionResult { output, elapsed, work, .. } = vm.execution_result(tid);
    Ok(DistributedResult { output, elapsed, device_work: work, migrations })
}

fn offload(
    vm: &mut Vm,
    tid: Tid,
    registry: &TemplateRegistry,
    program_id: &str,
    cond: &ExecutionConditions,
    transport: &mut dyn Transport,
) -> Result<MigrationRecord, RuntimeError> {
    let method = vm
        .thread(tid)
        .and_then(|t| t.frames.last())
        .map(|f| vm.program().method(f.method).name.clone())
        .unwrap_or_default();
    let out = elide_templates(&capture(vm, tid, Direction::Out)?, registry);
    let departure = Departure::new(tid, &out);
    let sent = serialize(&out);
    vm.mark_away(tid)?;
    vm.guard_objects(departure.outbound.iter().map(|m| Oid(*m)));

    let net = &cond.network;
    vm.clock_mut().charge(VTime::from_units(net.suspend_resume));
    let mut transfer_time = transfer(sent.len() as u64, net, vm.clock_mut());
    let (clone_work, returned) = match transport.migrate(program_id, sent.clone()) {
        Ok(reply) => reply,
        Err(e) => {
            vm.release_guards();
            return Err(e);
        }
    };
    let clone_time = cond.clone_speed.time_for(clone_work);
    vm.clock_mut().charge(clone_time);
    transfer_time += transfer(returned.len() as u64, net, vm.clock_mut());

    let back = deserialize(&returned)?;
    vm.release_guards();
    let report = merge(vm, &departure, &back, registry)?;
    let reclaimed: BTreeSet<Oid> = collect_garbage(vm).into_iter().collect();
    Ok(MigrationRecord {
        method,
        bytes_out: sent.len() as u64,
        bytes_in: returned.len() as u64,
        transfer_time,
        clone_work,
        clone_time,
        objects_updated: report.updated.len(),
        objects_created: report.created.len(),
        objects_reclaimed: reclaimed.len(),
    })
}
