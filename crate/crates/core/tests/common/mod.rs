// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::sync::Arc;

use offload_core::minivm::{load_program, Hooks, MethodId, Program, RunStop, Tid, VTime, Vm, VmConfig, VmError};

pub fn program(src: &str) -> Arc<Program> {
    Arc::new(load_program(src).expect("fixture loads"))
}

/// Suspends the thread the first time `target` is entered.
pub struct StopAtEntry {
    pub target: MethodId,
    pub hit: bool,
}

impl Hooks for StopAtEntry {
    fn on_enter(&mut self, vm: &mut Vm, tid: Tid, method: MethodId, _now: VTime) -> Result<(), VmError> {
        if method == self.target && !self.hit {
            self.hit = true;
            vm.request_suspend(tid)?;
        }
        Ok(())
    }
}

/// Runs the entry method until `method` is entered and returns the parked VM.
pub fn park_at_entry(p: &Arc<Program>, input: &[i64], method: &str) -> (Vm, Tid) {
    let mut vm = Vm::new(Arc::clone(p), VmConfig::default()).unwrap();
    let tid = vm.start(input);
    let mut hook = StopAtEntry { target: p.method_id(method).expect("method exists"), hit: false };
    let stop = vm.run_thread(tid, &mut hook).unwrap();
    assert_eq!(stop, RunStop::Suspended, "never entered {method}");
    (vm, tid)
}

pub fn clone_vm(p: &Arc<Program>, oid_base: u64) -> Vm {
    Vm::new(Arc::clone(p), VmConfig { oid_base, ..VmConfig::default() }).unwrap()
}

use proptest::prelude::*;

/// Shape of a random acyclic program. Method `i` may only call methods with
/// a larger index, so call graphs are DAGs.
#[derive(Debug, Clone)]
pub struct GenProgram {
    pub methods: Vec<GenMethod>,
    pub main_calls: u16,
    pub with_natives: bool,
}

#[derive(Debug, Clone)]
pub struct GenMethod {
    pub busy: u64,
    pub callees: u16,
    pub pinned: bool,
    pub alloc: bool,
    /// Bit 0: counter.inc, bit 1: counter.get, bit 2: the pinned location native.
    pub natives: u8,
}

impl GenProgram {
    pub fn method_name(i: usize) -> String {
        format!("P.m{i}")
    }

    pub fn source(&self) -> String {
        let n = self.methods.len();
        let mut s = String::from("ENTRY P.main\nTYPE P\nSTATIC cache\nMETHOD main 0\n  CONST 0\n");
        for j in 0..n {
            if self.main_calls >> j & 1 == 1 {
                s.push_str(&format!("  CALL P.m{j} 0\n  ADD\n"));
            }
        }
        s.push_str("  OUT\n  RET\n");
        for (i, m) in self.methods.iter().enumerate() {
            s.push_str(&format!("METHOD m{i} 0{}\n", if m.pinned { " PINNED" } else { "" }));
            if m.busy > 0 {
                s.push_str(&format!("  BUSY {}\n", m.busy));
            }
            s.push_str(&format!("  CONST {i}\n"));
            for j in (i + 1)..n {
                if m.callees >> (j - i - 1) & 1 == 1 {
                    s.push_str(&format!("  CALL P.m{j} 0\n  ADD\n"));
                }
            }
            if self.with_natives {
                for (bit, name) in [(0, "N.inc"), (1, "N.get"), (2, "N.gps")] {
                    if m.natives >> bit & 1 == 1 {
                        s.push_str(&format!("  CALL {name} 0\n  ADD\n"));
                    }
                }
            }
            if m.alloc {
                s.push_str(&format!(
                    "  NEW Box\n  STORE 0\n  LOAD 0\n  CONST {i}\n  PUTF v\n  LOAD 0\n  GETS P.cache\n  PUTF next\n  LOAD 0\n  PUTS P.cache\n  LOAD 0\n  GETF v\n  ADD\n"
                ));
            }
            s.push_str("  RET\n");
        }
        s.push_str("TYPE Box\n");
        if self.with_natives {
            s.push_str("TYPE N\nMETHOD inc 0 NATIVE @counter.inc\nMETHOD get 0 NATIVE @counter.get\nMETHOD gps 0 NATIVE @location\n");
        }
        s
    }
}

pub fn arb_program(max_methods: usize) -> impl Strategy<Value = GenProgram> {
    let method = (0u64..4000, any::<u16>(), prop::bool::weighted(0.1), prop::bool::weighted(0.3), any::<u8>())
        .prop_map(|(busy, callees, pinned, alloc, natives)| GenMethod { busy, callees, pinned, alloc, natives: natives & 0b111 });
    (prop::collection::vec(method, 1..=max_methods), 1u16.., prop::bool::weighted(0.5))
        .prop_map(|(methods, main_calls, with_natives)| GenProgram { methods, main_calls, with_natives })
}
