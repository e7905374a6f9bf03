// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Instrumented executions and the cost model derived from them.
//!
//! Each profiled run yields a tree with one call node per application-method
//! invocation. A non-leaf node gets one residual child holding the time spent
//! in its own body. Device trees additionally carry the capture sizes that a
//! migration at each edge would ship in each direction.

mod cost;
mod network;
mod text;

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::migrator::{self, Direction, MigrationError, TemplateRegistry};
use crate::minivm::{Hooks, MethodId, Program, RunStop, Tid, VTime, Vm, VmClock, VmConfig, VmError};

pub use cost::{build_cost_model, check_isomorphic, CostModel, ExecutionCosts, InvocationCost, MethodCosts};
pub use network::{NetworkModel, ParseNetworkError, DEFAULT_SUSPEND_RESUME};
pub use text::{parse_cost_model, parse_profile_tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error(transparent)]
    Vm(#[from] VmError),
    #[error("size probe failed: {0}")]
    Probe(#[from] MigrationError),
    #[error("profiled run did not finish: stopped with {0:?}")]
    Unfinished(RunStop),
    #[error("execution {execution}: device and clone trees differ at invocation {invocation}")]
    ShapeMismatch { execution: usize, invocation: u32 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Call,
    Residual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileNode {
    /// Preorder number among call nodes; a residual shares its parent's.
    pub invocation: u32,
    pub method: String,
    pub kind: NodeKind,
    pub cost: VTime,
    pub children: Vec<ProfileNode>,
    /// Serialized capture length at entry to this invocation.
    pub bytes_out: u64,
    /// Serialized capture length at its exit.
    pub bytes_in: u64,
}

impl ProfileNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// The residual child of a non-leaf call node.
    pub fn residual(&self) -> Option<&ProfileNode> {
        self.children.iter().find(|c| c.kind == NodeKind::Residual)
    }

    /// Preorder walk over every node, including residuals.
    pub fn walk(&self) -> Vec<&ProfileNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn calls(&self) -> impl Iterator<Item = &ProfileNode> {
        self.walk().into_iter().filter(|n| n.kind == NodeKind::Call)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Device = 0,
    Clone = 1,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileTree {
    pub root: ProfileNode,
    pub location: Location,
    pub execution: usize,
}

impl ProfileTree {
    pub fn invocation_count(&self) -> usize {
        self.root.calls().count()
    }
}

/// Assembles a profile tree from method entry/exit events.
#[derive(Debug, Default)]
pub struct TreeAssembler {
    stack: Vec<OpenNode>,
    next_invocation: u32,
    finished: Option<ProfileNode>,
}

#[derive(Debug)]
struct OpenNode {
    invocation: u32,
    method: String,
    start: VTime,
    children: Vec<ProfileNode>,
    bytes_out: u64,
}

impl TreeAssembler {
    pub fn new() -> TreeAssembler {
        TreeAssembler::default()
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn enter(&mut self, method: &str, now: VTime, bytes_out: u64) {
        self.stack.push(OpenNode {
            invocation: self.next_invocation,
            method: method.to_string(),
            start: now,
            children: Vec::new(),
            bytes_out,
        });
        self.next_invocation += 1;
    }

    /// Closes the innermost open invocation.
    pub fn exit(&mut self, now: VTime, bytes_in: u64) {
        let open = self.stack.pop().expect("exit matches an entry");
        let cost = now - open.start;
        let mut children = open.children;
        if !children.is_empty() {
            let spent: VTime = children.iter().map(|c| c.cost).sum();
            children.push(ProfileNode {
                invocation: open.invocation,
                method: open.method.clone(),
                kind: NodeKind::Residual,
                cost: cost - spent,
                children: Vec::new(),
                bytes_out: 0,
                bytes_in: 0,
            });
        }
        let node = ProfileNode {
            invocation: open.invocation,
            method: open.method,
            kind: NodeKind::Call,
            cost,
            children,
            bytes_out: open.bytes_out,
            bytes_in,
        };
        match self.stack.last_mut() {
            Some(parent) => parent.children.push(node),
            None => self.finished = Some(node),
        }
    }

    /// The root, once every invocation has exited.
    pub fn finish(self) -> Option<ProfileNode> {
        if self.stack.is_empty() {
            self.finished
        } else {
            None
        }
    }
}

/// What an entry-time capture needs to reproduce the return capture.
struct Probe {
    scope: BTreeSet<String>,
    registry: TemplateRegistry,
}

/// VM hooks feeding a [`TreeAssembler`]. With `measure` set, every non-root
/// edge is probed with the migrator at entry and exit.
struct TreeBuilder {
    program: Arc<Program>,
    tree: TreeAssembler,
    probes: Vec<Option<Probe>>,
    measure: Option<TemplateRegistry>,
}

impl TreeBuilder {
    fn probe_entry(&self, vm: &mut Vm, tid: Tid) -> Result<(u64, Probe), MigrationError> {
        vm.request_suspend(tid)?;
        let cap = migrator::capture(vm, tid, Direction::Out)?;
        let boot = self.measure.as_ref().expect("measuring");
        let bytes = migrator::serialize(&migrator::elide_templates(&cap, boot)).len() as u64;
        let mut registry = boot.clone();
        registry.rebase(vm);
        vm.resume_thread(tid)?;
        Ok((bytes, Probe { scope: cap.statics.keys().cloned().collect(), registry }))
    }

    fn probe_exit(vm: &mut Vm, tid: Tid, probe: &Probe) -> Result<u64, MigrationError> {
        vm.request_suspend(tid)?;
        let cap = migrator::capture_scoped(vm, tid, Direction::Back, &probe.scope, &|o| (None, Some(o.0)))?;
        let bytes = migrator::serialize(&migrator::elide_templates(&cap, &probe.registry)).len() as u64;
        vm.resume_thread(tid)?;
        Ok(bytes)
    }
}

impl Hooks for TreeBuilder {
    fn on_enter(&mut self, vm: &mut Vm, tid: Tid, method: MethodId, now: VTime) -> Result<(), VmError> {
        let (bytes_out, probe) = if self.measure.is_some() && self.tree.depth() > 0 {
            let (b, p) = self.probe_entry(vm, tid).map_err(|e| VmError::Hook(e.to_string()))?;
            (b, Some(p))
        } else {
            (0, None)
        };
        let name = &self.program.method(method).name;
        self.tree.enter(name, now, bytes_out);
        self.probes.push(probe);
        Ok(())
    }

    fn on_exit(&mut self, vm: &mut Vm, tid: Tid, _method: MethodId, now: VTime) -> Result<(), VmError> {
        let bytes_in = match self.probes.pop().flatten() {
            Some(p) => Self::probe_exit(vm, tid, &p).map_err(|e| VmError::Hook(e.to_string()))?,
            None => 0,
        };
        self.tree.exit(now, bytes_in);
        Ok(())
    }
}

fn run_profiled(
    program: &Arc<Program>,
    input: &[i64],
    location: Location,
    clock: &VmClock,
    measure: bool,
    execution: usize,
) -> Result<ProfileTree, ProfileError> {
    let mut vm = Vm::new(Arc::clone(program), VmConfig::with_speed(clock.speed()))?;
    let mut builder = TreeBuilder {
        program: Arc::clone(program),
        tree: TreeAssembler::new(),
        probes: Vec::new(),
        measure: measure.then(|| TemplateRegistry::from_boot(&vm)),
    };
    let tid = vm.start(input);
    match vm.run_thread(tid, &mut builder)? {
        RunStop::Finished => {}
        other => return Err(ProfileError::Unfinished(other)),
    }
    let root = builder.tree.finish().expect("root exited");
    Ok(ProfileTree { root, location, execution })
}

/// Profiles one run on a node of the given speed. Edge sizes are left at 0.
pub fn profile(
    program: &Arc<Program>,
    input: &[i64],
    location: Location,
    clock: &VmClock,
) -> Result<ProfileTree, ProfileError> {
    run_profiled(program, input, location, clock, false, 0)
}

/// Device profile with the capture size of every edge filled in. Each probe
/// captures, elides and serializes exactly as a real migration would, then
/// discards the bytes.
pub fn measure_edge_sizes(program: &Arc<Program>, input: &[i64]) -> Result<ProfileTree, ProfileError> {
    run_profiled(program, input, Location::Device, &VmClock::device(), true, 0)
}

/// Device and clone trees for every input, numbered in order.
pub fn profile_executions(
    program: &Arc<Program>,
    inputs: &[Vec<i64>],
    clone_clock: &VmClock,
) -> Result<Vec<(ProfileTree, ProfileTree)>, ProfileError> {
    inputs
        .iter()
        .enumerate()
        .map(|(e, input)| {
            let mut dev = measure_edge_sizes(program, input)?;
            dev.execution = e;
            let mut cln = run_profiled(program, input, Location::Clone, clone_clock, false, e)?;
            cln.execution = e;
            Ok((dev, cln))
        })
        .collect()
}
