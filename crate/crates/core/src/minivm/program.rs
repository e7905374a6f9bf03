// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::natives::HostHandler;

/// Index of a method inside its [`Program`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodId(pub u32);

impl MethodId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Const(i64),
    Load(u32),
    Store(u32),
    Add,
    Sub,
    Mul,
    Jmp(u32),
    Jz(u32),
    Call { target: MethodId, argc: u32 },
    Ret,
    New(String),
    GetF(String),
    PutF(String),
    /// `Type.field` static key.
    GetS(String),
    PutS(String),
    Busy(u64),
    In,
    Out,
    Nop,
    /// Migration point inserted by the rewriter at method entry.
    Migrate,
    /// Re-integration marker inserted by the rewriter before every return.
    Reintegrate,
}

impl Instruction {
    /// Virtual work units consumed by one execution.
    pub fn cost_units(&self) -> u64 {
        match self {
            Instruction::Busy(k) => *k,
            Instruction::Migrate | Instruction::Reintegrate => 0,
            _ => 1,
        }
    }

    pub fn jump_target(&self) -> Option<u32> {
        match self {
            Instruction::Jmp(t) | Instruction::Jz(t) => Some(*t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Method {
    /// Qualified `Type.method` name.
    pub name: String,
    pub type_name: String,
    pub arity: u32,
    pub body: Vec<Instruction>,
    pub is_native: bool,
    pub is_pinned: bool,
    /// Host handler tag, natives only.
    pub handler: Option<String>,
    /// Local slots needed by the body (at least `arity`).
    pub locals: u32,
}

impl Method {
    pub fn short_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }

    pub fn contains(&self, pred: impl Fn(&Instruction) -> bool) -> bool {
        self.body.iter().any(pred)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub static_fields: Vec<String>,
    pub methods: Vec<MethodId>,
    pub native_methods: Vec<MethodId>,
}

/// A loaded executable: types, methods, and resolved cross references.
#[derive(Clone, PartialEq, Eq)]
pub struct Program {
    pub(crate) types: Vec<TypeDecl>,
    pub(crate) methods: Vec<Method>,
    pub(crate) entry: MethodId,
    pub(crate) boot: Option<MethodId>,
    /// native method name -> host handler tag
    pub(crate) native_registry: BTreeMap<String, String>,
    pub(crate) handlers: BTreeMap<String, HostHandler>,
    pub(crate) by_name: HashMap<String, MethodId>,
    pub(crate) static_scope: Vec<BTreeSet<String>>,
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Program")
            .field("types", &self.types.iter().map(|t| &t.name).collect::<Vec<_>>())
            .field("methods", &self.methods.len())
            .field("entry", &self.method(self.entry).name)
            .finish()
    }
}

impl Program {
    pub fn types(&self) -> &[TypeDecl] {
        &self.types
    }

    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn method(&self, id: MethodId) -> &Method {
        &self.methods[id.index()]
    }

    pub fn method_id(&self, name: &str) -> Option<MethodId> {
        self.by_name.get(name).copied()
    }

    pub fn method_by_name(&self, name: &str) -> Option<&Method> {
        self.method_id(name).map(|id| self.method(id))
    }

    pub fn method_ids(&self) -> impl Iterator<Item = MethodId> + '_ {
        (0..self.methods.len() as u32).map(MethodId)
    }

    pub fn entry(&self) -> MethodId {
        self.entry
    }

    pub fn boot(&self) -> Option<MethodId> {
        self.boot
    }

    pub fn native_registry(&self) -> &BTreeMap<String, String> {
        &self.native_registry
    }

    pub fn handler(&self, tag: &str) -> Option<&HostHandler> {
        self.handlers.get(tag)
    }

    /// Static keys (`Type.field`) a thread running `method` may touch, over
    /// everything `method` can transitively call.
    pub fn static_scope(&self, method: MethodId) -> &BTreeSet<String> {
        &self.static_scope[method.index()]
    }

    pub fn is_static(&self, key: &str) -> bool {
        match key.split_once('.') {
            Some((ty, field)) => self
                .type_decl(ty)
                .is_some_and(|t| t.static_fields.iter().any(|f| f == field)),
            None => false,
        }
    }

    /// All static keys in declaration order.
    pub fn static_keys(&self) -> impl Iterator<Item = String> + '_ {
        self.types
            .iter()
            .flat_map(|t| t.static_fields.iter().map(move |f| format!("{}.{}", t.name, f)))
    }

    /// Replace method bodies, keeping every other part of the program.
    pub(crate) fn with_bodies(&self, bodies: BTreeMap<MethodId, Vec<Instruction>>) -> Program {
        let mut out = self.clone();
        for (id, body) in bodies {
            out.methods[id.index()].body = body;
        }
        out
    }

    pub(crate) fn compute_static_scopes(&mut self) {
        let n = self.methods.len();
        let direct: Vec<BTreeSet<String>> = self
            .methods
            .iter()
            .map(|m| {
                let mut keys: BTreeSet<String> = self
                    .type_decl(&m.type_name)
                    .map(|t| t.static_fields.iter().map(|f| format!("{}.{}", t.name, f)).collect())
                    .unwrap_or_default();
                for ins in &m.body {
                    if let Instruction::GetS(k) | Instruction::PutS(k) = ins {
                        keys.insert(k.clone());
                    }
                }
                keys
            })
            .collect();
        let callees: Vec<Vec<usize>> = self
            .methods
            .iter()
            .map(|m| {
                m.body
                    .iter()
                    .filter_map(|i| match i {
                        Instruction::Call { target, .. } => Some(target.index()),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        let mut scopes = Vec::with_capacity(n);
        for start in 0..n {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            let mut keys = BTreeSet::new();
            while let Some(m) = stack.pop() {
                if std::mem::replace(&mut seen[m], true) {
                    continue;
                }
                keys.extend(direct[m].iter().cloned());
                stack.extend(callees[m].iter().copied());
            }
            scopes.push(keys);
        }
        self.static_scope = scopes;
    }
}
