// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Automatic partitioning of applications between a device and a faster
//! clone, with thread-granularity migration.
//!
//! The pipeline: [`analyzer`] derives call relations and pinning from the
//! program text, [`profiler`] runs instrumented executions on both nodes and
//! turns them into a cost model, [`optimizer`] picks migration points by
//! solving a 0-1 program and rewrites the binary, and [`runtime`] executes
//! the rewritten program, shipping threads through [`migrator`].

pub mod analyzer;
#[cfg(feature = "cli")]
pub mod cli;
pub mod fixtures;
pub mod migrator;
pub mod minivm;
pub mod optimizer;
pub mod pipeline;
pub mod profiler;
pub mod report;
pub mod runtime;
pub mod workloads;
