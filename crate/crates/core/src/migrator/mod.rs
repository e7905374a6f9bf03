// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Thread-granularity state transfer between VMs.
//!
//! A suspended thread is captured as portable frames plus the closure of
//! heap objects and statics it can reach. The receiving VM overlays that
//! state on a freshly booted heap; on the way back the originating VM merges
//! the returned state into its own heap through the object mapping table.
//! Objects built during boot exist identically on both sides and are named by
//! `(type, construction_seq)` instead of being shipped while unchanged.

mod capture;
mod gc;
mod merge;
mod templates;
mod wire;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::minivm::{Tid, VmError};

pub use capture::{capture, capture_return, capture_scoped, frame_scope};
pub use gc::{collect_garbage, reachable_from};
pub use merge::{merge, resume, CloneSession, Departure, MergeReport};
pub use templates::{elide_templates, TemplateRegistry};
pub use wire::{deserialize, serialize, FORMAT_VERSION, MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Device to clone.
    Out,
    /// Clone back to device.
    Back,
}

/// A template object's name, valid on every node running the same program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemplateKey {
    pub type_name: String,
    pub seq: u32,
}

impl TemplateKey {
    pub fn new(type_name: impl Into<String>, seq: u32) -> TemplateKey {
        TemplateKey { type_name: type_name.into(), seq }
    }
}

/// A value in portable form. Object references carry the `(mid, cid)` pair;
/// a zero id on the wire means "none".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WireValue {
    Null,
    Int(i64),
    Ref { mid: Option<u64>, cid: Option<u64> },
    Template(TemplateKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedFrame {
    pub method: String,
    pub pc: u32,
    pub locals: Vec<WireValue>,
    pub stack: Vec<WireValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectRecord {
    pub mid: Option<u64>,
    pub cid: Option<u64>,
    pub type_name: String,
    pub construction_seq: u32,
    pub fields: BTreeMap<String, WireValue>,
}

impl ObjectRecord {
    pub fn template_key(&self) -> TemplateKey {
        TemplateKey::new(self.type_name.clone(), self.construction_seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MappingRow {
    pub mid: Option<u64>,
    pub cid: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadCapture {
    pub direction: Direction,
    /// Bottom-up.
    pub frames: Vec<CapturedFrame>,
    pub objects: Vec<ObjectRecord>,
    pub statics: BTreeMap<String, WireValue>,
    pub mapping: Vec<MappingRow>,
}

impl ThreadCapture {
    /// The sender-side identity of a reference or record: mid outbound, cid on
    /// the way back.
    pub fn sender_id(&self, mid: Option<u64>, cid: Option<u64>) -> Option<u64> {
        match self.direction {
            Direction::Out => mid,
            Direction::Back => cid,
        }
    }

    pub fn record_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.objects.iter().filter_map(|r| self.sender_id(r.mid, r.cid))
    }

    /// Every value in frames, statics and object fields.
    pub fn values(&self) -> impl Iterator<Item = &WireValue> {
        self.frames
            .iter()
            .flat_map(|f| f.locals.iter().chain(f.stack.iter()))
            .chain(self.statics.values())
            .chain(self.objects.iter().flat_map(|o| o.fields.values()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MigrationError {
    #[error("thread {0} is not suspended at a safe point")]
    NotSuspended(Tid),
    #[error("thread {0} has a native frame ({1}); refusing to migrate")]
    NativeFrame(Tid, String),
    #[error("unknown thread {0}")]
    UnknownThread(Tid),
    #[error("capture direction is {found:?}, expected {expected:?}")]
    WrongDirection { expected: Direction, found: Direction },
    #[error("unknown method {0}")]
    UnknownMethod(String),
    #[error("unknown type {0}")]
    UnknownType(String),
    #[error("unknown static {0}")]
    UnknownStatic(String),
    #[error("mapping row for mid {0} is already bound")]
    RowAlreadyBound(u64),
    #[error("mid {0} not found on this node")]
    MidNotFound(u64),
    #[error("duplicate object id {0} in capture")]
    DuplicateId(u64),
    #[error("reference to object {0} missing from capture")]
    DanglingReference(u64),
    #[error("template {}#{} absent on receiver", .0.type_name, .0.seq)]
    MissingTemplate(TemplateKey),
    #[error("object record without an id")]
    MissingId,
    #[error("capture stream truncated")]
    Truncated,
    #[error("bad capture magic")]
    BadMagic,
    #[error("unsupported capture format version {0}")]
    UnsupportedVersion(u16),
    #[error("bad direction byte {0}")]
    BadDirection(u8),
    #[error("bad value tag {0}")]
    BadTag(u8),
    #[error("invalid UTF-8 in capture")]
    BadUtf8,
    #[error("{0} trailing bytes after capture")]
    TrailingBytes(usize),
    #[error(transparent)]
    Vm(#[from] VmError),
}
