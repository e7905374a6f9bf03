// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Text assembly for programs.
//!
//! ```text
//! ENTRY C.main            # optional, defaults to the first non-native method
//! BOOT Boot.init          # optional, objects built here become templates
//! TYPE C
//! STATIC total
//! METHOD main 0
//!   IN
//!   CALL C.work 1
//!   OUT
//!   RET
//! METHOD work 1
//! Lloop:
//!   LOAD 0
//!   JZ Ldone
//!   ...
//! METHOD where 0 NATIVE PINNED @location
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::natives::NativeRegistry;
use super::program::{Instruction, Method, MethodId, Program, TypeDecl};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no entry method")]
    NoEntry,
    #[error("unresolved method reference {0}")]
    UnresolvedMethod(String),
    #[error("duplicate method {0}")]
    DuplicateMethod(String),
    #[error("duplicate type {0}")]
    DuplicateType(String),
    #[error("unknown type {0}")]
    UnknownType(String),
    #[error("unknown static {0}")]
    UnknownStatic(String),
    #[error("{method}: unknown label {label}")]
    UnknownLabel { method: String, label: String },
    #[error("{method}: jump target {target} out of range")]
    BadJump { method: String, target: u32 },
    #[error("call to {callee} passes {argc} arguments, expected {arity}")]
    ArityMismatch { callee: String, argc: u32, arity: u32 },
    #[error("native {method} has no host handler {tag:?}")]
    NoHandler { method: String, tag: String },
    #[error("method {0} has an empty body")]
    EmptyBody(String),
    #[error("entry method {0} must not be native")]
    NativeEntry(String),
}

struct RawMethod {
    type_name: String,
    name: String,
    arity: u32,
    native: bool,
    pinned: bool,
    tag: Option<String>,
    line: usize,
    body: Vec<(usize, RawIns)>,
    labels: HashMap<String, u32>,
}

enum RawIns {
    Ready(Instruction),
    Jmp(String),
    Jz(String),
    Call(String, u32),
}

fn perr(line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Parse { line, message: message.into() }
}

fn is_label(tok: &str) -> bool {
    tok.len() > 2 && tok.starts_with('L') && tok.ends_with(':')
}

/// Parse and resolve program text using the default host handlers.
pub fn load_program(source: &str) -> Result<Program, LoadError> {
    load_program_with(source, &NativeRegistry::default())
}

pub fn load_program_with(source: &str, registry: &NativeRegistry) -> Result<Program, LoadError> {
    let mut types: Vec<(String, Vec<String>)> = Vec::new();
    let mut raw: Vec<RawMethod> = Vec::new();
    let mut entry_name: Option<(usize, String)> = None;
    let mut boot_name: Option<(usize, String)> = None;

    for (idx, full) in source.lines().enumerate() {
        let line = idx + 1;
        let text = full.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut toks: Vec<&str> = text.split_whitespace().collect();
        if is_label(toks[0]) {
            let label = toks[0].trim_end_matches(':').to_string();
            let m = raw.last_mut().ok_or_else(|| perr(line, "label outside of a method"))?;
            if m.native {
                return Err(perr(line, "label inside a native method"));
            }
            let pos = m.body.len() as u32;
            if m.labels.insert(label.clone(), pos).is_some() {
                return Err(perr(line, format!("duplicate label {label}")));
            }
            toks.remove(0);
            if toks.is_empty() {
                continue;
            }
        }
        let op = toks[0].to_ascii_uppercase();
        let args = &toks[1..];
        let want = |n: usize| -> Result<(), LoadError> {
            if args.len() != n {
                Err(perr(line, format!("{op} expects {n} operand(s), got {}", args.len())))
            } else {
                Ok(())
            }
        };
        match op.as_str() {
            "ENTRY" => {
                want(1)?;
                entry_name = Some((line, args[0].to_string()));
                continue;
            }
            "BOOT" => {
                want(1)?;
                boot_name = Some((line, args[0].to_string()));
                continue;
            }
            "TYPE" => {
                want(1)?;
                let name = args[0].to_string();
                if types.iter().any(|(t, _)| *t == name) {
                    return Err(LoadError::DuplicateType(name));
                }
                types.push((name, Vec::new()));
                continue;
            }
            "STATIC" => {
                want(1)?;
                let (_, statics) = types.last_mut().ok_or_else(|| perr(line, "STATIC outside of a TYPE"))?;
                if statics.iter().any(|s| s == args[0]) {
                    return Err(perr(line, format!("duplicate static {}", args[0])));
                }
                statics.push(args[0].to_string());
                continue;
            }
            "METHOD" => {
                if args.len() < 2 {
                    return Err(perr(line, "METHOD expects <name> <arity> [NATIVE] [PINNED] [@tag]"));
                }
                let (type_name, _) = types.last().ok_or_else(|| perr(line, "METHOD outside of a TYPE"))?;
                let arity: u32 = args[1].parse().map_err(|_| perr(line, format!("bad arity {}", args[1])))?;
                let mut native = false;
                let mut pinned = false;
                let mut tag = None;
                for flag in &args[2..] {
                    match flag.to_ascii_uppercase().as_str() {
                        "NATIVE" => native = true,
                        "PINNED" => pinned = true,
                        _ if flag.starts_with('@') && flag.len() > 1 => tag = Some(flag[1..].to_string()),
                        other => return Err(perr(line, format!("unknown method flag {other}"))),
                    }
                }
                if tag.is_some() && !native {
                    return Err(perr(line, "handler tag on a non-native method"));
                }
                let qualified = format!("{}.{}", type_name, args[0]);
                if raw.iter().any(|m| format!("{}.{}", m.type_name, m.name) == qualified) {
                    return Err(LoadError::DuplicateMethod(qualified));
                }
                raw.push(RawMethod {
                    type_name: type_name.clone(),
                    name: args[0].to_string(),
                    arity,
                    native,
                    pinned,
                    tag,
                    line,
                    body: Vec::new(),
                    labels: HashMap::new(),
                });
                continue;
            }
            _ => {}
        }

        let int = |s: &str| -> Result<i64, LoadError> { s.parse().map_err(|_| perr(line, format!("bad integer {s}"))) };
        let idx_arg = |s: &str| -> Result<u32, LoadError> { s.parse().map_err(|_| perr(line, format!("bad index {s}"))) };
        let ins = match op.as_str() {
            "CONST" => {
                want(1)?;
                RawIns::Ready(Instruction::Const(int(args[0])?))
            }
            "LOAD" => {
                want(1)?;
                RawIns::Ready(Instruction::Load(idx_arg(args[0])?))
            }
            "STORE" => {
                want(1)?;
                RawIns::Ready(Instruction::Store(idx_arg(args[0])?))
            }
            "ADD" | "SUB" | "MUL" | "RET" | "IN" | "OUT" | "NOP" | "MIGRATE" | "REINTEGRATE" => {
                want(0)?;
                RawIns::Ready(match op.as_str() {
                    "ADD" => Instruction::Add,
                    "SUB" => Instruction::Sub,
                    "MUL" => Instruction::Mul,
                    "RET" => Instruction::Ret,
                    "IN" => Instruction::In,
                    "OUT" => Instruction::Out,
                    "NOP" => Instruction::Nop,
                    "MIGRATE" => Instruction::Migrate,
                    _ => Instruction::Reintegrate,
                })
            }
            "JMP" => {
                want(1)?;
                RawIns::Jmp(args[0].to_string())
            }
            "JZ" => {
                want(1)?;
                RawIns::Jz(args[0].to_string())
            }
            "CALL" => {
                want(2)?;
                RawIns::Call(args[0].to_string(), idx_arg(args[1])?)
            }
            "NEW" => {
                want(1)?;
                RawIns::Ready(Instruction::New(args[0].to_string()))
            }
            "GETF" | "PUTF" => {
                want(1)?;
                let f = args[0].to_string();
                RawIns::Ready(if op == "GETF" { Instruction::GetF(f) } else { Instruction::PutF(f) })
            }
            "GETS" | "PUTS" => {
                want(1)?;
                let k = args[0].to_string();
                RawIns::Ready(if op == "GETS" { Instruction::GetS(k) } else { Instruction::PutS(k) })
            }
            "BUSY" => {
                want(1)?;
                let k: u64 = args[0].parse().map_err(|_| perr(line, format!("bad BUSY amount {}", args[0])))?;
                RawIns::Ready(Instruction::Busy(k))
            }
            other => return Err(perr(line, format!("unknown instruction {other}"))),
        };
        let m = raw.last_mut().ok_or_else(|| perr(line, "instruction outside of a method"))?;
        if m.native {
            return Err(perr(line, "native methods have no body"));
        }
        m.body.push((line, ins));
    }

    resolve(types, raw, entry_name, boot_name, registry)
}

fn resolve(
    types: Vec<(String, Vec<String>)>,
    raw: Vec<RawMethod>,
    entry_name: Option<(usize, String)>,
    boot_name: Option<(usize, String)>,
    registry: &NativeRegistry,
) -> Result<Program, LoadError> {
    let mut by_name = HashMap::new();
    for (i, m) in raw.iter().enumerate() {
        by_name.insert(format!("{}.{}", m.type_name, m.name), MethodId(i as u32));
    }
    let type_names: BTreeSet<&str> = types.iter().map(|(t, _)| t.as_str()).collect();
    let static_keys: BTreeSet<String> =
        types.iter().flat_map(|(t, fs)| fs.iter().map(move |f| format!("{t}.{f}"))).collect();

    let entry = match &entry_name {
        Some((_, name)) => *by_name.get(name).ok_or_else(|| LoadError::UnresolvedMethod(name.clone()))?,
        None => raw
            .iter()
            .position(|m| !m.native)
            .map(|i| MethodId(i as u32))
            .ok_or(LoadError::NoEntry)?,
    };
    let boot = match &boot_name {
        Some((_, name)) => Some(*by_name.get(name).ok_or_else(|| LoadError::UnresolvedMethod(name.clone()))?),
        None => None,
    };

    let arities: Vec<u32> = raw.iter().map(|m| m.arity).collect();
    let mut handlers = BTreeMap::new();
    let mut native_registry = BTreeMap::new();
    let mut methods = Vec::with_capacity(raw.len());
    for (i, m) in raw.into_iter().enumerate() {
        let qualified = format!("{}.{}", m.type_name, m.name);
        let mut pinned = m.pinned;
        if m.native {
            let tag = m.tag.clone().unwrap_or_else(|| qualified.clone());
            let h = registry
                .get(&tag)
                .ok_or_else(|| LoadError::NoHandler { method: qualified.clone(), tag: tag.clone() })?;
            if let Some(a) = h.arity {
                if a != m.arity {
                    return Err(LoadError::Parse {
                        line: m.line,
                        message: format!("handler {tag} takes {a} argument(s), {qualified} declares {}", m.arity),
                    });
                }
            }
            pinned |= h.pinned;
            handlers.insert(tag.clone(), h.clone());
            native_registry.insert(qualified.clone(), tag);
        } else if m.body.is_empty() {
            return Err(LoadError::EmptyBody(qualified));
        }
        if MethodId(i as u32) == entry {
            if m.native {
                return Err(LoadError::NativeEntry(qualified));
            }
            pinned = true;
        }

        let len = m.body.len() as u32;
        let label = |l: &str| -> Result<u32, LoadError> {
            m.labels
                .get(l)
                .copied()
                .ok_or_else(|| LoadError::UnknownLabel { method: qualified.clone(), label: l.to_string() })
        };
        let mut body = Vec::with_capacity(m.body.len());
        let mut locals = m.arity;
        for (_, ins) in &m.body {
            let ins = match ins {
                RawIns::Ready(i) => i.clone(),
                RawIns::Jmp(l) => Instruction::Jmp(label(l)?),
                RawIns::Jz(l) => Instruction::Jz(label(l)?),
                RawIns::Call(name, argc) => {
                    let target = *by_name.get(name).ok_or_else(|| LoadError::UnresolvedMethod(name.clone()))?;
                    let arity = arities[target.index()];
                    if arity != *argc {
                        return Err(LoadError::ArityMismatch { callee: name.clone(), argc: *argc, arity });
                    }
                    Instruction::Call { target, argc: *argc }
                }
            };
            match &ins {
                Instruction::Load(k) | Instruction::Store(k) => locals = locals.max(k + 1),
                Instruction::New(t) if !type_names.contains(t.as_str()) => {
                    return Err(LoadError::UnknownType(t.clone()))
                }
                Instruction::GetS(k) | Instruction::PutS(k) if !static_keys.contains(k) => {
                    return Err(LoadError::UnknownStatic(k.clone()))
                }
                _ => {}
            }
            if let Some(t) = ins.jump_target() {
                if t >= len {
                    return Err(LoadError::BadJump { method: qualified.clone(), target: t });
                }
            }
            body.push(ins);
        }
        methods.push(Method {
            type_name: m.type_name,
            arity: m.arity,
            body,
            is_native: m.native,
            is_pinned: pinned,
            handler: native_registry.get(&qualified).cloned(),
            name: qualified,
            locals,
        });
    }

    let types: Vec<TypeDecl> = types
        .into_iter()
        .map(|(name, static_fields)| {
            let ms: Vec<MethodId> =
                (0..methods.len()).filter(|&i| methods[i].type_name == name).map(|i| MethodId(i as u32)).collect();
            let natives = ms.iter().copied().filter(|id| methods[id.index()].is_native).collect();
            TypeDecl { name, static_fields, methods: ms, native_methods: natives }
        })
        .collect();

    let mut program = Program {
        types,
        methods,
        entry,
        boot,
        native_registry,
        handlers,
        by_name,
        static_scope: Vec::new(),
    };
    program.compute_static_scopes();
    Ok(program)
}

fn mnemonic(ins: &Instruction, program: &Program, out: &mut String) {
    match ins {
        Instruction::Const(k) => write!(out, "CONST {k}"),
        Instruction::Load(i) => write!(out, "LOAD {i}"),
        Instruction::Store(i) => write!(out, "STORE {i}"),
        Instruction::Add => write!(out, "ADD"),
        Instruction::Sub => write!(out, "SUB"),
        Instruction::Mul => write!(out, "MUL"),
        Instruction::Jmp(t) => write!(out, "JMP L{t}"),
        Instruction::Jz(t) => write!(out, "JZ L{t}"),
        Instruction::Call { target, argc } => write!(out, "CALL {} {argc}", program.method(*target).name),
        Instruction::Ret => write!(out, "RET"),
        Instruction::New(t) => write!(out, "NEW {t}"),
        Instruction::GetF(f) => write!(out, "GETF {f}"),
        Instruction::PutF(f) => write!(out, "PUTF {f}"),
        Instruction::GetS(k) => write!(out, "GETS {k}"),
        Instruction::PutS(k) => write!(out, "PUTS {k}"),
        Instruction::Busy(k) => write!(out, "BUSY {k}"),
        Instruction::In => write!(out, "IN"),
        Instruction::Out => write!(out, "OUT"),
        Instruction::Nop => write!(out, "NOP"),
        Instruction::Migrate => write!(out, "MIGRATE"),
        Instruction::Reintegrate => write!(out, "REINTEGRATE"),
    }
    .expect("writing to a String never fails");
}

/// Canonical text form. `load_program(&print_program(p))` reproduces `p`.
pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ENTRY {}", program.method(program.entry).name);
    if let Some(b) = program.boot {
        let _ = writeln!(out, "BOOT {}", program.method(b).name);
    }
    for t in &program.types {
        let _ = writeln!(out, "TYPE {}", t.name);
        for s in &t.static_fields {
            let _ = writeln!(out, "STATIC {s}");
        }
        for id in &t.methods {
            let m = program.method(*id);
            let _ = write!(out, "METHOD {} {}", m.short_name(), m.arity);
            if m.is_native {
                out.push_str(" NATIVE");
            }
            if m.is_pinned {
                out.push_str(" PINNED");
            }
            if let Some(tag) = &m.handler {
                let _ = write!(out, " @{tag}");
            }
            out.push('\n');
            let targets: BTreeSet<u32> = m.body.iter().filter_map(Instruction::jump_target).collect();
            for (pc, ins) in m.body.iter().enumerate() {
                if targets.contains(&(pc as u32)) {
                    let _ = writeln!(out, "L{pc}:");
                }
                out.push_str("  ");
                mnemonic(ins, program, &mut out);
                out.push('\n');
            }
        }
    }
    out
}
