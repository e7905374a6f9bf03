// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! WebAssembly bindings for the static demo page. Every entry point takes
//! plain values and returns a JSON string; the page does the drawing.

use std::collections::BTreeSet;
use std::sync::Arc;

use offload_core::analyzer::{build_call_graph, classify_methods, enumerate_legal, report};
use offload_core::minivm::{load_program, Speed};
use offload_core::pipeline::profile_program;
use offload_core::profiler::NetworkModel;
use offload_core::report::run_cell;
use offload_core::workloads::{Size, Workload};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn speed(clone_speed: f64) -> Result<Speed, String> {
    Speed::from_f64(clone_speed).map_err(|e| e.0)
}

fn lookup(workload: &str, size: &str) -> Result<(Workload, Size), String> {
    let w = Workload::by_name(workload).ok_or_else(|| format!("unknown workload {workload:?}"))?;
    Ok((w, size.parse()?))
}

/// Partitions one workload for a custom network and runs it.
pub fn explore_json(
    workload: &str,
    size: &str,
    latency: u32,
    bandwidth: u32,
    clone_speed: f64,
) -> Result<Value, String> {
    let (w, s) = lookup(workload, size)?;
    if bandwidth == 0 {
        return Err("bandwidth must be positive".into());
    }
    let net = NetworkModel::new("custom", latency.into(), bandwidth.into(), 10);
    let row = run_cell(w, s, &net, speed(clone_speed)?, 1).map_err(|e| e.to_string())?;
    Ok(json!({
        "workload": row.workload,
        "size": row.size.to_string(),
        "device": row.monolithic.as_f64(),
        "clone": row.clone_only.as_f64(),
        "partitioned": row.distributed.as_f64(),
        "speedup": (row.speedup() * 100.0).round() / 100.0,
        "decision": row.label(),
        "migrants": row.migrants,
        "migrations": row.migrations,
        "outputMatches": row.output_matches,
    }))
}

/// Predicted speedup and decision as latency varies, for a fixed bandwidth.
pub fn sweep_json(workload: &str, size: &str, bandwidth: u32, clone_speed: f64) -> Result<Value, String> {
    let (w, s) = lookup(workload, size)?;
    if bandwidth == 0 {
        return Err("bandwidth must be positive".into());
    }
    let input = w.input(s, 1);
    let profiled = profile_program(&w.program(), &[input], speed(clone_speed)?).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for latency in (0..=1000).step_by(50) {
        let net = NetworkModel::new("custom", latency, bandwidth.into(), 10);
        let d = profiled.decide(&net).map_err(|e| e.to_string())?;
        points.push(json!({
            "latency": latency,
            "speedup": d.speedup(),
            "decision": d.partition.label(),
            "migrants": d.partition.migrants().into_iter().collect::<Vec<_>>(),
        }));
    }
    Ok(Value::Array(points))
}

/// Static analysis of user-supplied program text: pinning, call relations
/// and the legal sets of migration points.
pub fn analyze_json(source: &str) -> Result<Value, String> {
    let program = Arc::new(load_program(source).map_err(|e| e.to_string())?);
    let graph = build_call_graph(&program);
    let sets = classify_methods(&program);
    let legal: Vec<BTreeSet<String>> = match enumerate_legal(&graph, &sets) {
        Ok(it) => it.map(|c| c.migrants()).collect(),
        Err(e) => return Err(e.to_string()),
    };
    Ok(json!({
        "report": report(&graph, &sets),
        "migratable": sets.migratable,
        "legal": legal,
    }))
}

fn respond(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn workloads() -> String {
    json!(Workload::ALL.iter().map(|w| json!({"name": w.name(), "source": w.source()})).collect::<Vec<_>>())
        .to_string()
}

#[wasm_bindgen]
pub fn explore(workload: &str, size: &str, latency: u32, bandwidth: u32, clone_speed: f64) -> Result<String, JsError> {
    respond(explore_json(workload, size, latency, bandwidth, clone_speed))
}

#[wasm_bindgen]
pub fn sweep(workload: &str, size: &str, bandwidth: u32, clone_speed: f64) -> Result<String, JsError> {
    respond(sweep_json(workload, size, bandwidth, clone_speed))
}

#[wasm_bindgen]
pub fn analyze(source: &str) -> Result<String, JsError> {
    respond(analyze_json(source))
}
