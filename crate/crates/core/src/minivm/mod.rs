// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! A small stack-based application VM: typed methods of bytecode, threads
//! with virtual stacks, a heap of uniquely numbered objects, and
//! deterministic virtual time.

mod asm;
mod clock;
mod natives;
mod program;
mod value;
mod vm;

pub use asm::{load_program, load_program_with, print_program, LoadError};
pub use clock::{ParseSpeedError, ParseTimeError, Speed, VTime, VmClock};
pub use natives::{HandlerKind, HostHandler, NativeRegistry};
pub use program::{Instruction, Method, MethodId, Program, TypeDecl};
pub use value::{Heap, HeapObject, Oid, Value};
pub use vm::{
    run, ExecutionResult, FaultKind, Frame, Hooks, NoHooks, RunStop, StepEvent, SuspendedThread, ThreadState, Tid,
    Vm, VmConfig, VmError, VmThread, DEFAULT_MAX_FRAMES,
};
