// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Byte encoding of captures. All integers are big-endian; strings are
//! u16-length-prefixed UTF-8; a zero object id stands for "none".

use std::collections::BTreeMap;

use super::{CapturedFrame, Direction, MappingRow, MigrationError, ObjectRecord, TemplateKey, ThreadCapture, WireValue};

pub const MAGIC: &[u8; 4] = b"CCAP";
pub const FORMAT_VERSION: u16 = 1;

const TAG_NULL: u8 = 0;
const TAG_INT: u8 = 1;
const TAG_REF: u8 = 2;
const TAG_TEMPLATE: u8 = 3;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn id(&mut self, v: Option<u64>) {
        self.u64(v.unwrap_or(0));
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("section fits in u32"));
    }
    fn str(&mut self, s: &str) {
        self.u16(u16::try_from(s.len()).expect("name fits in u16"));
        self.0.extend_from_slice(s.as_bytes());
    }
    fn value(&mut self, v: &WireValue) {
        match v {
            WireValue::Null => self.u8(TAG_NULL),
            WireValue::Int(i) => {
                self.u8(TAG_INT);
                self.0.extend_from_slice(&i.to_be_bytes());
            }
            WireValue::Ref { mid, cid } => {
                self.u8(TAG_REF);
                self.id(*mid);
                self.id(*cid);
            }
            WireValue::Template(k) => {
                self.u8(TAG_TEMPLATE);
                self.str(&k.type_name);
                self.u32(k.seq);
            }
        }
    }
    fn values(&mut self, vs: &[WireValue]) {
        self.len(vs.len());
        for v in vs {
            self.value(v);
        }
    }
}

pub fn serialize(capture: &ThreadCapture) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(256));
    w.0.extend_from_slice(MAGIC);
    w.u16(FORMAT_VERSION);
    w.u8(match capture.direction {
        Direction::Out => 0,
        Direction::Back => 1,
    });
    w.len(capture.frames.len());
    for f in &capture.frames {
        w.str(&f.method);
        w.u32(f.pc);
        w.values(&f.locals);
        w.values(&f.stack);
    }
    w.len(capture.objects.len());
    for o in &capture.objects {
        w.id(o.mid);
        w.id(o.cid);
        w.str(&o.type_name);
        w.u32(o.construction_seq);
        w.len(o.fields.len());
        for (k, v) in &o.fields {
            w.str(k);
            w.value(v);
        }
    }
    w.len(capture.statics.len());
    for (k, v) in &capture.statics {
        w.str(k);
        w.value(v);
    }
    w.len(capture.mapping.len());
    for m in &capture.mapping {
        w.id(m.mid);
        w.id(m.cid);
    }
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MigrationError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len()).ok_or(MigrationError::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, MigrationError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, MigrationError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, MigrationError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, MigrationError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn id(&mut self) -> Result<Option<u64>, MigrationError> {
        Ok(Some(self.u64()?).filter(|v| *v != 0))
    }
    fn count(&mut self) -> Result<usize, MigrationError> {
        let n = self.u32()? as usize;
        // every element takes at least one byte
        if n > self.buf.len() - self.pos {
            return Err(MigrationError::Truncated);
        }
        Ok(n)
    }
    fn str(&mut self) -> Result<String, MigrationError> {
        let n = self.u16()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| MigrationError::BadUtf8)
    }
    fn value(&mut self) -> Result<WireValue, MigrationError> {
        match self.u8()? {
            TAG_NULL => Ok(WireValue::Null),
            TAG_INT => Ok(WireValue::Int(i64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))),
            TAG_REF => Ok(WireValue::Ref { mid: self.id()?, cid: self.id()? }),
            TAG_TEMPLATE => {
                let type_name = self.str()?;
                Ok(WireValue::Template(TemplateKey { type_name, seq: self.u32()? }))
            }
            t => Err(MigrationError::BadTag(t)),
        }
    }
    fn values(&mut self) -> Result<Vec<WireValue>, MigrationError> {
        let n = self.count()?;
        (0..n).map(|_| self.value()).collect()
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<ThreadCapture, MigrationError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).map_err(|_| MigrationError::BadMagic)? != MAGIC {
        return Err(MigrationError::BadMagic);
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(MigrationError::UnsupportedVersion(version));
    }
    let direction = match r.u8()? {
        0 => Direction::Out,
        1 => Direction::Back,
        d => return Err(MigrationError::BadDirection(d)),
    };
    let mut frames = Vec::new();
    for _ in 0..r.count()? {
        let method = r.str()?;
        let pc = r.u32()?;
        let locals = r.values()?;
        let stack = r.values()?;
        frames.push(CapturedFrame { method, pc, locals, stack });
    }
    let mut objects = Vec::new();
    for _ in 0..r.count()? {
        let mid = r.id()?;
        let cid = r.id()?;
        let type_name = r.str()?;
        let construction_seq = r.u32()?;
        let mut fields = BTreeMap::new();
        for _ in 0..r.count()? {
            let k = r.str()?;
            fields.insert(k, r.value()?);
        }
        objects.push(ObjectRecord { mid, cid, type_name, construction_seq, fields });
    }
    let mut statics = BTreeMap::new();
    for _ in 0..r.count()? {
        let k = r.str()?;
        statics.insert(k, r.value()?);
    }
    let mut mapping = Vec::new();
    for _ in 0..r.count()? {
        mapping.push(MappingRow { mid: r.id()?, cid: r.id()? });
    }
    if r.pos != bytes.len() {
        return Err(MigrationError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(ThreadCapture { direction, frames, objects, statics, mapping })
}
