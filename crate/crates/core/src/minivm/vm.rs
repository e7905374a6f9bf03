// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! The interpreter: threads with virtual stacks over a shared heap.
//!
//! Execution advances one instruction per [`Vm::step`]. Suspension, blocking
//! and migration all take effect between steps, so every observable thread
//! state sits at an instruction boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::clock::{Speed, VTime, VmClock};
use super::program::{Instruction, MethodId, Program};
use super::value::{Heap, HeapObject, Oid, Value};

pub type Tid = u32;

pub const DEFAULT_MAX_FRAMES: usize = 4096;
const QUANTUM: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub method: MethodId,
    pub pc: u32,
    pub locals: Vec<Value>,
    pub stack: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreadState {
    Runnable,
    /// Parked at a safe point, by request or at a migration point.
    Suspended,
    /// Waiting for a guarded object to be released.
    Blocked(Oid),
    /// Executing on another node.
    Away,
    Finished,
}

#[derive(Debug, Clone)]
pub struct VmThread {
    pub tid: Tid,
    pub frames: Vec<Frame>,
    pub state: ThreadState,
    pub suspend_requested: bool,
    pub result: Option<Value>,
    /// Stack depth of the migrant root frame when this thread arrived from another node.
    pub remote_root: Option<usize>,
    pending_enter: Option<MethodId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    NullAccess,
    NotAnObject,
    NotAnInteger,
    DanglingReference(Oid),
    StackUnderflow,
    StackOverflow,
    BadLocal(u32),
    PcOutOfRange,
    InputExhausted,
    Native,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::NullAccess => write!(f, "null field access"),
            FaultKind::NotAnObject => write!(f, "operand is not an object reference"),
            FaultKind::NotAnInteger => write!(f, "operand is not an integer"),
            FaultKind::DanglingReference(o) => write!(f, "dangling reference {o}"),
            FaultKind::StackUnderflow => write!(f, "operand stack underflow"),
            FaultKind::StackOverflow => write!(f, "call stack overflow"),
            FaultKind::BadLocal(i) => write!(f, "local {i} out of range"),
            FaultKind::PcOutOfRange => write!(f, "pc past end of method"),
            FaultKind::InputExhausted => write!(f, "input exhausted"),
            FaultKind::Native => write!(f, "native handler failed"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VmError {
    #[error("runtime fault in {method} at pc {pc}: {kind}{}", detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default())]
    Fault { method: String, pc: u32, kind: FaultKind, detail: Option<String> },
    #[error("unknown thread {0}")]
    UnknownThread(Tid),
    #[error("thread {0} already finished")]
    ThreadFinished(Tid),
    #[error("thread {0} is not suspended")]
    NotSuspended(Tid),
    #[error("unknown type {0}")]
    UnknownType(String),
    #[error("all threads are blocked")]
    Deadlock,
    #[error("boot method did not finish: {0}")]
    Boot(String),
    #[error("instrumentation hook failed: {0}")]
    Hook(String),
}

/// What happened during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    Continue,
    /// An application method was entered (frame pushed).
    Entered(MethodId),
    /// An application method returned.
    Exited(MethodId),
    /// The thread hit a migration marker and parked itself.
    MigrationPoint,
    /// The migrant root frame returned on this (remote) node; the thread is parked.
    Reintegrated(MethodId),
    Finished,
    Suspended,
    Blocked,
    /// Thread is away or otherwise not runnable.
    Idle,
}

/// Why [`Vm::run_thread`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStop {
    Finished,
    MigrationPoint,
    Reintegrated,
    Suspended,
    Blocked,
    Idle,
}

/// Instrumentation fired at application-method entry and exit.
pub trait Hooks {
    fn on_enter(&mut self, _vm: &mut Vm, _tid: Tid, _method: MethodId, _now: VTime) -> Result<(), VmError> {
        Ok(())
    }
    fn on_exit(&mut self, _vm: &mut Vm, _tid: Tid, _method: MethodId, _now: VTime) -> Result<(), VmError> {
        Ok(())
    }
}

pub struct NoHooks;
impl Hooks for NoHooks {}

#[derive(Debug, Clone)]
pub struct VmConfig {
    pub speed: Speed,
    pub max_frames: usize,
    /// First issued oid is `oid_base + 1`.
    pub oid_base: u64,
    /// Whether MIGRATE markers park the thread. Off on clones and for never-migrate runs.
    pub migration_enabled: bool,
}

impl Default for VmConfig {
    fn default() -> VmConfig {
        VmConfig { speed: Speed::DEVICE, max_frames: DEFAULT_MAX_FRAMES, oid_base: 0, migration_enabled: false }
    }
}

impl VmConfig {
    pub fn with_speed(speed: Speed) -> VmConfig {
        VmConfig { speed, ..VmConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionResult {
    pub output: Vec<i64>,
    pub elapsed: VTime,
    pub work: u64,
    pub return_value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuspendedThread {
    pub tid: Tid,
    pub frames: Vec<Frame>,
}

pub struct Vm {
    program: Arc<Program>,
    config: VmConfig,
    heap: Heap,
    statics: BTreeMap<String, Value>,
    threads: BTreeMap<Tid, VmThread>,
    next_tid: Tid,
    clock: VmClock,
    input: Vec<i64>,
    input_pos: usize,
    output: Vec<i64>,
    native_state: BTreeMap<String, i64>,
    guarded: BTreeSet<Oid>,
    boot_objects: BTreeMap<Oid, HeapObject>,
}

impl fmt::Debug for Vm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vm")
            .field("program", &self.program)
            .field("objects", &self.heap.len())
            .field("threads", &self.threads.len())
            .field("elapsed", &self.clock.elapsed())
            .finish()
    }
}

impl Vm {
    /// Creates a VM and runs the program's boot method, if any. Objects
    /// allocated during boot form the template set; boot time is not counted.
    pub fn new(program: Arc<Program>, config: VmConfig) -> Result<Vm, VmError> {
        let statics = program.static_keys().map(|k| (k, Value::Null)).collect();
        let mut vm = Vm {
            heap: Heap::with_base(config.oid_base),
            clock: VmClock::new(config.speed),
            program,
            config,
            statics,
            threads: BTreeMap::new(),
            next_tid: 0,
            input: Vec::new(),
            input_pos: 0,
            output: Vec::new(),
            native_state: BTreeMap::new(),
            guarded: BTreeSet::new(),
            boot_objects: BTreeMap::new(),
        };
        if let Some(boot) = vm.program.boot() {
            let saved = vm.config.migration_enabled;
            vm.config.migration_enabled = false;
            let tid = vm.spawn(boot, Vec::new());
            match vm.run_thread(tid, &mut NoHooks) {
                Ok(RunStop::Finished) => {}
                Ok(other) => return Err(VmError::Boot(format!("stopped with {other:?}"))),
                Err(e) => return Err(VmError::Boot(e.to_string())),
            }
            vm.threads.remove(&tid);
            vm.config.migration_enabled = saved;
            vm.output.clear();
        }
        vm.boot_objects = vm.heap.iter().map(|o| (o.oid, o.clone())).collect();
        vm.clock.reset();
        Ok(vm)
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }

    pub fn config(&self) -> &VmConfig {
        &self.config
    }

    pub fn set_migration_enabled(&mut self, on: bool) {
        self.config.migration_enabled = on;
    }

    pub fn clock(&self) -> &VmClock {
        &self.clock
    }

    pub fn clock_mut(&mut self) -> &mut VmClock {
        &mut self.clock
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    pub fn heap_mut(&mut self) -> &mut Heap {
        &mut self.heap
    }

    pub fn statics(&self) -> &BTreeMap<String, Value> {
        &self.statics
    }

    pub fn set_static(&mut self, key: &str, value: Value) -> bool {
        match self.statics.get_mut(key) {
            Some(slot) => {
                *slot = value;
                true
            }
            None => false,
        }
    }

    pub fn output(&self) -> &[i64] {
        &self.output
    }

    pub fn set_input(&mut self, input: &[i64]) {
        self.input = input.to_vec();
        self.input_pos = 0;
    }

    /// Remaining unread input.
    pub fn pending_input(&self) -> &[i64] {
        &self.input[self.input_pos..]
    }

    /// Objects as they stood right after boot.
    /// Per-type state kept by native handlers.
    pub fn native_state(&self) -> &BTreeMap<String, i64> {
        &self.native_state
    }

    pub fn set_native_state(&mut self, state: BTreeMap<String, i64>) {
        self.native_state = state;
    }

    pub fn boot_objects(&self) -> &BTreeMap<Oid, HeapObject> {
        &self.boot_objects
    }

    pub fn thread(&self, tid: Tid) -> Option<&VmThread> {
        self.threads.get(&tid)
    }

    pub fn thread_mut(&mut self, tid: Tid) -> Option<&mut VmThread> {
        self.threads.get_mut(&tid)
    }

    pub fn threads(&self) -> impl Iterator<Item = &VmThread> {
        self.threads.values()
    }

    pub fn allocate_object(&mut self, type_name: &str) -> Result<Oid, VmError> {
        if self.program.type_decl(type_name).is_none() {
            return Err(VmError::UnknownType(type_name.to_string()));
        }
        Ok(self.heap.allocate(type_name))
    }

    /// Creates a runnable thread at `method` with the given arguments.
    pub fn spawn(&mut self, method: MethodId, args: Vec<Value>) -> Tid {
        let m = self.program.method(method);
        let mut locals = args;
        locals.resize(m.locals as usize, Value::Null);
        let frame = Frame { method, pc: 0, locals, stack: Vec::new() };
        let tid = self.next_tid;
        self.next_tid += 1;
        self.threads.insert(
            tid,
            VmThread {
                tid,
                frames: vec![frame],
                state: ThreadState::Runnable,
                suspend_requested: false,
                result: None,
                remote_root: None,
                pending_enter: Some(method),
            },
        );
        tid
    }

    /// Starts the program's entry method on a fresh thread.
    pub fn start(&mut self, input: &[i64]) -> Tid {
        self.set_input(input);
        self.spawn(self.program.entry(), Vec::new())
    }

    /// Installs a thread from captured frames. `remote` marks the bottom-most
    /// captured top frame as the migrant root: its return re-integrates.
    pub fn install_thread(&mut self, frames: Vec<Frame>, remote: bool) -> Tid {
        let tid = self.next_tid;
        self.next_tid += 1;
        let depth = frames.len();
        self.threads.insert(
            tid,
            VmThread {
                tid,
                frames,
                state: ThreadState::Runnable,
                suspend_requested: false,
                result: None,
                remote_root: remote.then_some(depth),
                pending_enter: None,
            },
        );
        tid
    }

    pub fn remove_thread(&mut self, tid: Tid) -> Option<VmThread> {
        self.threads.remove(&tid)
    }

    /// Parks the thread at the next instruction boundary. Interpretation is
    /// synchronous, so that boundary is the current one.
    pub fn request_suspend(&mut self, tid: Tid) -> Result<SuspendedThread, VmError> {
        let t = self.threads.get_mut(&tid).ok_or(VmError::UnknownThread(tid))?;
        match t.state {
            ThreadState::Finished => return Err(VmError::ThreadFinished(tid)),
            ThreadState::Runnable | ThreadState::Blocked(_) => t.state = ThreadState::Suspended,
            ThreadState::Suspended | ThreadState::Away => {}
        }
        Ok(SuspendedThread { tid, frames: t.frames.clone() })
    }

    /// Suspends every live thread.
    pub fn suspend_all(&mut self) -> Vec<Tid> {
        let tids: Vec<Tid> = self.threads.keys().copied().collect();
        tids.into_iter().filter(|t| self.request_suspend(*t).is_ok()).collect()
    }

    pub fn resume_thread(&mut self, tid: Tid) -> Result<(), VmError> {
        let t = self.threads.get_mut(&tid).ok_or(VmError::UnknownThread(tid))?;
        match t.state {
            ThreadState::Suspended | ThreadState::Away => {
                t.state = ThreadState::Runnable;
                Ok(())
            }
            ThreadState::Finished => Err(VmError::ThreadFinished(tid)),
            _ => Err(VmError::NotSuspended(tid)),
        }
    }

    pub fn mark_away(&mut self, tid: Tid) -> Result<(), VmError> {
        let t = self.threads.get_mut(&tid).ok_or(VmError::UnknownThread(tid))?;
        if t.state != ThreadState::Suspended {
            return Err(VmError::NotSuspended(tid));
        }
        t.state = ThreadState::Away;
        Ok(())
    }

    /// Objects local threads may not write until released (blocking rule
    /// while their owner thread is away).
    pub fn guard_objects(&mut self, oids: impl IntoIterator<Item = Oid>) {
        self.guarded.extend(oids);
    }

    pub fn release_guards(&mut self) {
        self.guarded.clear();
    }

    pub fn is_guarded(&self, oid: Oid) -> bool {
        self.guarded.contains(&oid)
    }

    /// Executes one instruction of `tid`.
    pub fn step(&mut self, tid: Tid) -> Result<StepEvent, VmError> {
        let program = Arc::clone(&self.program);
        let max_frames = self.config.max_frames;
        let migration_enabled = self.config.migration_enabled;
        let Vm { threads, heap, statics, clock, input, input_pos, output, native_state, guarded, .. } = self;
        let thread = threads.get_mut(&tid).ok_or(VmError::UnknownThread(tid))?;
        match thread.state {
            ThreadState::Runnable => {}
            ThreadState::Suspended => return Ok(StepEvent::Suspended),
            ThreadState::Finished => return Ok(StepEvent::Finished),
            ThreadState::Away => return Ok(StepEvent::Idle),
            ThreadState::Blocked(o) => {
                if guarded.contains(&o) {
                    return Ok(StepEvent::Blocked);
                }
                thread.state = ThreadState::Runnable;
            }
        }
        if thread.suspend_requested {
            thread.suspend_requested = false;
            thread.state = ThreadState::Suspended;
            return Ok(StepEvent::Suspended);
        }

        let depth = thread.frames.len();
        let frame = thread.frames.last_mut().expect("runnable thread has a frame");
        let method = program.method(frame.method);
        let pc = frame.pc;
        macro_rules! fault {
            ($kind:expr) => {
                fault!($kind, None)
            };
            ($kind:expr, $detail:expr) => {
                return Err(VmError::Fault { method: method.name.clone(), pc, kind: $kind, detail: $detail })
            };
        }
        macro_rules! pop {
            () => {
                match frame.stack.pop() {
                    Some(v) => v,
                    None => fault!(FaultKind::StackUnderflow),
                }
            };
        }
        macro_rules! pop_int {
            () => {
                match pop!() {
                    Value::Int(i) => i,
                    _ => fault!(FaultKind::NotAnInteger),
                }
            };
        }
        macro_rules! pop_obj {
            () => {
                match pop!() {
                    Value::Ref(o) => {
                        if !heap.contains(o) {
                            fault!(FaultKind::DanglingReference(o));
                        }
                        o
                    }
                    Value::Null => fault!(FaultKind::NullAccess),
                    Value::Int(_) => fault!(FaultKind::NotAnObject),
                }
            };
        }
        let Some(ins) = method.body.get(pc as usize) else {
            fault!(FaultKind::PcOutOfRange);
        };

        let mut event = StepEvent::Continue;
        let mut next_pc = pc + 1;
        match ins {
            Instruction::Const(k) => frame.stack.push(Value::Int(*k)),
            Instruction::Load(i) => match frame.locals.get(*i as usize) {
                Some(v) => frame.stack.push(*v),
                None => fault!(FaultKind::BadLocal(*i)),
            },
            Instruction::Store(i) => {
                let v = pop!();
                match frame.locals.get_mut(*i as usize) {
                    Some(slot) => *slot = v,
                    None => fault!(FaultKind::BadLocal(*i)),
                }
            }
            Instruction::Add | Instruction::Sub | Instruction::Mul => {
                let b = pop_int!();
                let a = pop_int!();
                frame.stack.push(Value::Int(match ins {
                    Instruction::Add => a.wrapping_add(b),
                    Instruction::Sub => a.wrapping_sub(b),
                    _ => a.wrapping_mul(b),
                }));
            }
            Instruction::Jmp(t) => next_pc = *t,
            Instruction::Jz(t) => {
                if pop!().is_zero() {
                    next_pc = *t;
                }
            }
            Instruction::Call { target, argc } => {
                let callee = program.method(*target);
                let argc = *argc as usize;
                if frame.stack.len() < argc {
                    fault!(FaultKind::StackUnderflow);
                }
                let args = frame.stack.split_off(frame.stack.len() - argc);
                if callee.is_native {
                    let tag = callee.handler.as_deref().unwrap_or_default();
                    let handler = program.handler(tag).expect("natives resolve at load time");
                    let state = native_state.entry(callee.type_name.clone()).or_insert(0);
                    match handler.invoke(&args, state) {
                        Ok(v) => frame.stack.push(v),
                        Err(msg) => fault!(FaultKind::Native, Some(format!("{}: {msg}", callee.name))),
                    }
                    clock.advance(1 + handler.cost);
                    frame.pc = next_pc;
                    return Ok(StepEvent::Continue);
                }
                if depth >= max_frames {
                    fault!(FaultKind::StackOverflow);
                }
                frame.pc = next_pc;
                let mut locals = args;
                locals.resize(callee.locals as usize, Value::Null);
                thread.frames.push(Frame { method: *target, pc: 0, locals, stack: Vec::new() });
                clock.advance(ins.cost_units());
                return Ok(StepEvent::Entered(*target));
            }
            Instruction::Ret => {
                let v = frame.stack.pop().unwrap_or(Value::Null);
                let done = thread.frames.pop().expect("frame present");
                clock.advance(ins.cost_units());
                match thread.frames.last_mut() {
                    None => {
                        thread.state = ThreadState::Finished;
                        thread.result = Some(v);
                        return Ok(StepEvent::Exited(done.method));
                    }
                    Some(caller) => caller.stack.push(v),
                }
                if thread.remote_root == Some(depth) {
                    thread.remote_root = None;
                    thread.state = ThreadState::Suspended;
                    return Ok(StepEvent::Reintegrated(done.method));
                }
                return Ok(StepEvent::Exited(done.method));
            }
            Instruction::New(t) => {
                let oid = heap.allocate(t);
                frame.stack.push(Value::Ref(oid));
            }
            Instruction::GetF(f) => {
                let o = pop_obj!();
                let v = heap.get(o).and_then(|obj| obj.fields.get(f)).copied().unwrap_or(Value::Null);
                frame.stack.push(v);
            }
            Instruction::PutF(f) => {
                let v = pop!();
                let o = pop_obj!();
                if guarded.contains(&o) {
                    // undo the pops, retry after release
                    frame.stack.push(Value::Ref(o));
                    frame.stack.push(v);
                    thread.state = ThreadState::Blocked(o);
                    return Ok(StepEvent::Blocked);
                }
                heap.get_mut(o).expect("checked above").fields.insert(f.clone(), v);
            }
            Instruction::GetS(k) => frame.stack.push(statics.get(k).copied().unwrap_or(Value::Null)),
            Instruction::PutS(k) => {
                let v = pop!();
                statics.insert(k.clone(), v);
            }
            Instruction::Busy(_) | Instruction::Nop | Instruction::Reintegrate => {}
            Instruction::In => {
                let Some(v) = input.get(*input_pos).copied() else {
                    fault!(FaultKind::InputExhausted);
                };
                *input_pos += 1;
                frame.stack.push(Value::Int(v));
            }
            Instruction::Out => {
                let v = pop_int!();
                output.push(v);
            }
            Instruction::Migrate => {
                if migration_enabled && thread.remote_root.is_none() {
                    event = StepEvent::MigrationPoint;
                }
            }
        }
        let frame = thread.frames.last_mut().expect("frame present");
        frame.pc = next_pc;
        clock.advance(ins.cost_units());
        if event == StepEvent::MigrationPoint {
            thread.state = ThreadState::Suspended;
        }
        Ok(event)
    }

    /// Runs one thread until it finishes or parks, firing hooks at
    /// application-method boundaries.
    pub fn run_thread(&mut self, tid: Tid, hooks: &mut dyn Hooks) -> Result<RunStop, VmError> {
        self.run_thread_for(tid, hooks, usize::MAX).map(|s| s.unwrap_or(RunStop::Idle))
    }

    /// Like [`Vm::run_thread`] but executes at most `budget` instructions.
    /// Returns `None` if the budget ran out first.
    pub fn run_thread_for(
        &mut self,
        tid: Tid,
        hooks: &mut dyn Hooks,
        budget: usize,
    ) -> Result<Option<RunStop>, VmError> {
        let t = self.threads.get_mut(&tid).ok_or(VmError::UnknownThread(tid))?;
        if let Some(m) = t.pending_enter.take() {
            let now = self.clock.elapsed();
            hooks.on_enter(self, tid, m, now)?;
        }
        let mut executed = 0;
        while executed < budget {
            let ev = self.step(tid)?;
            match ev {
                StepEvent::Continue => {}
                StepEvent::Entered(m) => {
                    let now = self.clock.elapsed();
                    hooks.on_enter(self, tid, m, now)?;
                }
                StepEvent::Exited(m) => {
                    let now = self.clock.elapsed();
                    hooks.on_exit(self, tid, m, now)?;
                    if self.threads[&tid].state == ThreadState::Finished {
                        return Ok(Some(RunStop::Finished));
                    }
                }
                StepEvent::Reintegrated(m) => {
                    let now = self.clock.elapsed();
                    hooks.on_exit(self, tid, m, now)?;
                    return Ok(Some(RunStop::Reintegrated));
                }
                StepEvent::MigrationPoint => return Ok(Some(RunStop::MigrationPoint)),
                StepEvent::Finished => return Ok(Some(RunStop::Finished)),
                StepEvent::Suspended => return Ok(Some(RunStop::Suspended)),
                StepEvent::Blocked => return Ok(Some(RunStop::Blocked)),
                StepEvent::Idle => return Ok(Some(RunStop::Idle)),
            }
            executed += 1;
        }
        Ok(None)
    }

    /// Round-robin over all runnable threads until none can make progress.
    pub fn run_all(&mut self, hooks: &mut dyn Hooks) -> Result<(), VmError> {
        loop {
            let tids: Vec<Tid> = self.threads.keys().copied().collect();
            let mut progressed = false;
            let mut blocked = false;
            for tid in tids {
                match self.threads[&tid].state {
                    ThreadState::Runnable => {}
                    ThreadState::Blocked(o) if !self.guarded.contains(&o) => {}
                    ThreadState::Blocked(_) => {
                        blocked = true;
                        continue;
                    }
                    _ => continue,
                }
                let before = self.threads[&tid].frames.clone();
                let stop = self.run_thread_for(tid, hooks, QUANTUM)?;
                if stop != Some(RunStop::Blocked) || self.threads[&tid].frames != before {
                    progressed = true;
                }
                if stop == Some(RunStop::Blocked) {
                    blocked = true;
                }
            }
            if !progressed {
                return if blocked { Err(VmError::Deadlock) } else { Ok(()) };
            }
        }
    }

    pub fn execution_result(&self, tid: Tid) -> ExecutionResult {
        ExecutionResult {
            output: self.output.clone(),
            elapsed: self.clock.elapsed(),
            work: self.clock.work(),
            return_value: self.threads.get(&tid).and_then(|t| t.result).unwrap_or(Value::Null),
        }
    }

    /// Current frame snapshot helper for diagnostics.
    pub fn describe_top(&self, tid: Tid) -> Option<String> {
        let t = self.threads.get(&tid)?;
        let f = t.frames.last()?;
        Some(format!("{}@{}", self.program.method(f.method).name, f.pc))
    }
}

/// Runs `program` to completion on a fresh VM whose speed is taken from `clock`.
pub fn run(
    program: &Arc<Program>,
    input: &[i64],
    clock: &VmClock,
    hooks: &mut dyn Hooks,
) -> Result<ExecutionResult, VmError> {
    let mut vm = Vm::new(Arc::clone(program), VmConfig::with_speed(clock.speed()))?;
    let tid = vm.start(input);
    match vm.run_thread(tid, hooks)? {
        RunStop::Finished => Ok(vm.execution_result(tid)),
        other => Err(VmError::Hook(format!("main thread stopped early: {other:?}"))),
    }
}
