// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::{OptimizerError, PartitionModel};
use crate::minivm::{Instruction, Program};

/// Inserts a migration marker at the entry of every migrant and a
/// re-integration marker before each of its returns. Jump targets are
/// remapped so that a jump to a return lands on its marker.
pub fn rewrite(program: &Program, partition: &PartitionModel) -> Result<Program, OptimizerError> {
    let mut bodies = BTreeMap::new();
    for m in partition.migrants() {
        let id = program.method_id(&m).ok_or_else(|| OptimizerError::UnknownMethod(m.clone()))?;
        let body = &program.method(id).body;
        let mut new_index = Vec::with_capacity(body.len() + 1);
        let mut at = 1u32;
        for ins in body {
            new_index.push(at);
            at += if matches!(ins, Instruction::Ret) { 2 } else { 1 };
        }
        new_index.push(at);
        let mut out = vec![Instruction::Migrate];
        for ins in body {
            let ins = match ins {
                Instruction::Jmp(t) => Instruction::Jmp(new_index[*t as usize]),
                Instruction::Jz(t) => Instruction::Jz(new_index[*t as usize]),
                Instruction::Ret => {
                    out.push(Instruction::Reintegrate);
                    Instruction::Ret
                }
                other => other.clone(),
            };
            out.push(ins);
        }
        bodies.insert(id, out);
    }
    for m in partition.r.keys() {
        if program.method_id(m).is_none() {
            return Err(OptimizerError::UnknownMethod(m.clone()));
        }
    }
    Ok(program.with_bodies(bodies))
}
