// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Host-side handlers backing `NATIVE` methods.
//!
//! Handlers are keyed by tag. A handler flagged `pinned` touches a
//! device-only resource, so every native bound to it is pinned to the device.
//! Stateful handlers keep their state per declaring type, which is why the
//! analyzer groups natives of one type together.

use std::collections::BTreeMap;

use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandlerKind {
    /// Mixes integer arguments into one integer.
    Hash,
    /// Device location reading (constant in simulation).
    Location,
    /// Camera frame checksum (constant in simulation).
    Camera,
    /// Increments and returns the declaring type's native counter.
    CounterInc,
    /// Returns the declaring type's native counter.
    CounterGet,
    /// Returns its first argument, or null.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostHandler {
    pub tag: String,
    pub kind: HandlerKind,
    pub pinned: bool,
    /// Work units charged on top of the CALL instruction.
    pub cost: u64,
    /// Required arity, if fixed.
    pub arity: Option<u32>,
}

impl HostHandler {
    fn new(tag: &str, kind: HandlerKind, pinned: bool, cost: u64, arity: Option<u32>) -> HostHandler {
        HostHandler { tag: tag.to_string(), kind, pinned, cost, arity }
    }

    /// Runs the handler. `state` is the per-type native state slot.
    pub fn invoke(&self, args: &[Value], state: &mut i64) -> Result<Value, String> {
        match self.kind {
            HandlerKind::Hash => {
                let mut h: u64 = 0xcbf2_9ce4_8422_2325;
                for a in args {
                    let v = match a {
                        Value::Int(i) => *i as u64,
                        Value::Null => 0,
                        Value::Ref(_) => return Err("hash expects integer arguments".into()),
                    };
                    h ^= v;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
                Ok(Value::Int((h >> 1) as i64 % 1_000_003))
            }
            HandlerKind::Location => Ok(Value::Int(37_422_000)),
            HandlerKind::Camera => Ok(Value::Int(0x5eed)),
            HandlerKind::CounterInc => {
                *state += 1;
                Ok(Value::Int(*state))
            }
            HandlerKind::CounterGet => Ok(Value::Int(*state)),
            HandlerKind::Identity => Ok(args.first().copied().unwrap_or(Value::Null)),
        }
    }
}

/// The platform's set of host handlers, marked once per platform.
#[derive(Debug, Clone)]
pub struct NativeRegistry {
    handlers: BTreeMap<String, HostHandler>,
}

impl NativeRegistry {
    pub fn empty() -> NativeRegistry {
        NativeRegistry { handlers: BTreeMap::new() }
    }

    pub fn register(&mut self, handler: HostHandler) {
        self.handlers.insert(handler.tag.clone(), handler);
    }

    pub fn get(&self, tag: &str) -> Option<&HostHandler> {
        self.handlers.get(tag)
    }
}

impl Default for NativeRegistry {
    fn default() -> NativeRegistry {
        use HandlerKind::*;
        let mut r = NativeRegistry::empty();
        r.register(HostHandler::new("hash", Hash, false, 2, None));
        r.register(HostHandler::new("location", Location, true, 5, Some(0)));
        r.register(HostHandler::new("camera", Camera, true, 5, Some(0)));
        r.register(HostHandler::new("counter.inc", CounterInc, false, 1, Some(0)));
        r.register(HostHandler::new("counter.get", CounterGet, false, 1, Some(0)));
        r.register(HostHandler::new("identity", Identity, false, 1, Some(1)));
        r
    }
}
