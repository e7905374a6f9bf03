// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{OptimizerError, PartitionModel};
use crate::minivm::VTime;

/// An entry being parsed: network, program, objective, R, L.
type Pending = (String, Option<String>, Option<VTime>, BTreeMap<String, bool>, BTreeMap<String, bool>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbEntry {
    /// Identifier of the original program. Clones install the rewritten
    /// binary as `id@network`.
    pub program_id: String,
    pub partition: PartitionModel,
}

/// Partitions keyed by network name, one per network.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartitionDatabase {
    entries: BTreeMap<String, DbEntry>,
}

impl PartitionDatabase {
    pub fn new() -> PartitionDatabase {
        PartitionDatabase::default()
    }

    /// Replaces any previous entry for the same network.
    pub fn insert(&mut self, program_id: impl Into<String>, partition: PartitionModel) {
        let program_id = program_id.into();
        self.entries.insert(partition.network.clone(), DbEntry { program_id, partition });
    }

    pub fn get(&self, network: &str) -> Option<&DbEntry> {
        self.entries.get(network)
    }

    pub fn networks(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (net, e) in &self.entries {
            let _ = writeln!(out, "PARTITION {net}");
            let _ = writeln!(out, "program {}", e.program_id);
            let _ = writeln!(out, "objective {}", e.partition.objective);
            for (m, r) in &e.partition.r {
                let l = e.partition.l.get(m).copied().unwrap_or(false);
                let _ = writeln!(out, "method {m} R={} L={}", u8::from(*r), u8::from(l));
            }
            out.push_str("END\n");
        }
        out
    }

    pub fn parse(text: &str) -> Result<PartitionDatabase, OptimizerError> {
        let err = |line: usize, message: &str| OptimizerError::Parse { line, message: message.to_string() };
        let bit = |line: usize, s: &str, prefix: &str| match s.strip_prefix(prefix) {
            Some("0") => Ok(false),
            Some("1") => Ok(true),
            _ => Err(err(line, "expected R=0|1 L=0|1")),
        };
        let mut db = PartitionDatabase::new();
        let mut cur: Option<Pending> = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match (f.as_slice(), cur.as_mut()) {
                (["PARTITION", net], None) => {
                    if db.entries.contains_key(*net) {
                        return Err(err(ln, "duplicate network"));
                    }
                    cur = Some((net.to_string(), None, None, BTreeMap::new(), BTreeMap::new()));
                }
                (["program", id], Some(c)) => c.1 = Some(id.to_string()),
                (["objective", v], Some(c)) => c.2 = Some(v.parse().map_err(|_| err(ln, "bad objective"))?),
                (["method", m, r, l], Some(c)) => {
                    c.3.insert(m.to_string(), bit(ln, r, "R=")?);
                    c.4.insert(m.to_string(), bit(ln, l, "L=")?);
                }
                (["END"], Some(_)) => {
                    let (network, id, obj, r, l) = cur.take().expect("open entry");
                    let program_id = id.ok_or_else(|| err(ln, "missing program id"))?;
                    let objective = obj.ok_or_else(|| err(ln, "missing objective"))?;
                    db.insert(program_id, PartitionModel { r, l, objective, network });
                }
                _ => return Err(err(ln, &format!("unexpected `{line}`"))),
            }
        }
        if cur.is_some() {
            return Err(err(text.lines().count(), "missing END"));
        }
        Ok(db)
    }
}
