// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Three sample applications with different cost shapes, plus seeded input
//! generators. Compute is BUSY work: a virus scan that is linear in file
//! bytes, an image search with an expensive per-image leaf, and a behavior
//! profiler that is exponential in category-tree depth.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::minivm::{load_program, run, NoHooks, Program, VmClock, VmError};

/// Signature scanner. Boot builds a table of eight signatures, shared as
/// templates. `check` compares one chunk against every signature.
pub const SCAN: &str = "\
ENTRY Scan.main
BOOT Sigs.boot
TYPE Sigs
STATIC list
METHOD boot 0
  CONST 0
  STORE 0
  CONST 8
  STORE 1
Lmake:
  LOAD 1
  JZ Ldone
  NEW Sig
  STORE 2
  LOAD 2
  LOAD 1
  CONST 23
  MUL
  PUTF val
  LOAD 2
  LOAD 0
  PUTF next
  LOAD 2
  STORE 0
  LOAD 1
  CONST 1
  SUB
  STORE 1
  JMP Lmake
Ldone:
  LOAD 0
  PUTS Sigs.list
  RET
TYPE Sig
TYPE File
TYPE Chunk
TYPE Scan
METHOD main 0
  CALL Scan.load 0
  CALL Scan.scan_all 1
  OUT
  RET
METHOD load 0
  CONST 0
  STORE 0
  IN
  STORE 1
Lfile:
  LOAD 1
  JZ Lend
  CALL Scan.read_file 0
  STORE 2
  LOAD 2
  LOAD 0
  PUTF next
  LOAD 2
  STORE 0
  LOAD 1
  CONST 1
  SUB
  STORE 1
  JMP Lfile
Lend:
  LOAD 0
  RET
METHOD read_file 0
  NEW File
  STORE 0
  CONST 0
  STORE 1
  IN
  STORE 2
Lchunk:
  LOAD 2
  JZ Ldone
  NEW Chunk
  STORE 3
  LOAD 3
  IN
  PUTF val
  LOAD 3
  LOAD 1
  PUTF next
  LOAD 3
  STORE 1
  LOAD 2
  CONST 1
  SUB
  STORE 2
  JMP Lchunk
Ldone:
  LOAD 0
  LOAD 1
  PUTF chunks
  LOAD 0
  RET
METHOD scan_all 1
  CONST 0
  STORE 1
Lfile:
  LOAD 0
  JZ Ldone
  LOAD 1
  LOAD 0
  CALL Scan.scan_file 1
  ADD
  STORE 1
  LOAD 0
  GETF next
  STORE 0
  JMP Lfile
Ldone:
  LOAD 1
  RET
METHOD scan_file 1
  LOAD 0
  GETF chunks
  STORE 0
  CONST 0
  STORE 1
Lchunk:
  LOAD 0
  JZ Ldone
  LOAD 1
  LOAD 0
  GETF val
  CALL Scan.check 1
  ADD
  STORE 1
  LOAD 0
  GETF next
  STORE 0
  JMP Lchunk
Ldone:
  LOAD 1
  RET
METHOD check 1
  GETS Sigs.list
  STORE 1
  CONST 0
  STORE 2
Lsig:
  LOAD 1
  JZ Ldone
  BUSY 12
  LOAD 0
  LOAD 1
  GETF val
  SUB
  JZ Lhit
Lnext:
  LOAD 1
  GETF next
  STORE 1
  JMP Lsig
Lhit:
  LOAD 2
  CONST 1
  ADD
  STORE 2
  JMP Lnext
Ldone:
  LOAD 2
  RET
";

/// Image search over images stored as lists of pixel blocks. `detect` is
/// the heavy per-image leaf; `thumb` is cheap.
pub const SEARCH: &str = "\
ENTRY Search.main
TYPE Image
TYPE Pixel
TYPE Search
METHOD main 0
  CALL Search.load 0
  CALL Search.find_all 1
  OUT
  RET
METHOD load 0
  CONST 0
  STORE 0
  IN
  STORE 1
Limage:
  LOAD 1
  JZ Lend
  CALL Search.read_image 0
  STORE 2
  LOAD 2
  LOAD 0
  PUTF next
  LOAD 2
  STORE 0
  LOAD 1
  CONST 1
  SUB
  STORE 1
  JMP Limage
Lend:
  LOAD 0
  RET
METHOD read_image 0
  NEW Image
  STORE 0
  CONST 0
  STORE 1
  IN
  STORE 2
Lpixel:
  LOAD 2
  JZ Ldone
  NEW Pixel
  STORE 3
  LOAD 3
  IN
  PUTF val
  LOAD 3
  LOAD 1
  PUTF next
  LOAD 3
  STORE 1
  LOAD 2
  CONST 1
  SUB
  STORE 2
  JMP Lpixel
Ldone:
  LOAD 0
  LOAD 1
  PUTF pixels
  LOAD 0
  RET
METHOD find_all 1
  CONST 0
  STORE 1
Limage:
  LOAD 0
  JZ Ldone
  LOAD 0
  CALL Search.thumb 1
  LOAD 1
  ADD
  LOAD 0
  CALL Search.detect 1
  ADD
  STORE 1
  LOAD 0
  GETF next
  STORE 0
  JMP Limage
Ldone:
  LOAD 1
  RET
METHOD thumb 1
  BUSY 5
  LOAD 0
  GETF pixels
  JZ Lempty
  CONST 0
  RET
Lempty:
  CONST 1000
  RET
METHOD detect 1
  LOAD 0
  GETF pixels
  STORE 0
  CONST 0
  STORE 1
  BUSY 100
Lpixel:
  LOAD 0
  JZ Ldone
  BUSY 400
  LOAD 0
  GETF val
  JZ Ldark
Lnext:
  LOAD 0
  GETF next
  STORE 0
  JMP Lpixel
Ldark:
  LOAD 1
  CONST 1
  ADD
  STORE 1
  JMP Lnext
Ldone:
  LOAD 1
  RET
";

/// Interest profiling over a binary category tree. The browsing history
/// stays small; `walk` is recursive, so only `profile` or the per-node
/// `score` can migrate.
pub const PROFILE: &str = "\
ENTRY Ads.main
TYPE Visit
TYPE Ads
METHOD main 0
  CALL Ads.load 0
  STORE 0
  IN
  STORE 1
  LOAD 0
  LOAD 1
  CALL Ads.profile 2
  OUT
  RET
METHOD load 0
  CONST 0
  STORE 0
  IN
  STORE 1
Lvisit:
  LOAD 1
  JZ Lend
  NEW Visit
  STORE 2
  LOAD 2
  IN
  PUTF cat
  LOAD 2
  LOAD 0
  PUTF next
  LOAD 2
  STORE 0
  LOAD 1
  CONST 1
  SUB
  STORE 1
  JMP Lvisit
Lend:
  LOAD 0
  RET
METHOD profile 2
  LOAD 0
  LOAD 1
  CONST 1
  CALL Ads.walk 3
  RET
METHOD walk 3
  LOAD 0
  LOAD 2
  CALL Ads.score 2
  STORE 3
  LOAD 1
  JZ Lleaf
  LOAD 1
  CONST 1
  SUB
  STORE 1
  LOAD 2
  CONST 2
  MUL
  STORE 2
  LOAD 3
  LOAD 0
  LOAD 1
  LOAD 2
  CALL Ads.walk 3
  ADD
  LOAD 0
  LOAD 1
  LOAD 2
  CONST 1
  ADD
  CALL Ads.walk 3
  ADD
  RET
Lleaf:
  LOAD 3
  RET
METHOD score 2
  CONST 0
  STORE 2
Lvisit:
  LOAD 0
  JZ Ldone
  BUSY 8
  LOAD 0
  GETF cat
  LOAD 1
  SUB
  JZ Lhit
Lnext:
  LOAD 0
  GETF next
  STORE 0
  JMP Lvisit
Lhit:
  LOAD 2
  LOAD 1
  ADD
  STORE 2
  JMP Lnext
Ldone:
  LOAD 2
  RET
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Size {
    Small,
    Medium,
    Large,
}

impl Size {
    pub const ALL: [Size; 3] = [Size::Small, Size::Medium, Size::Large];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Size::Small => "small",
            Size::Medium => "medium",
            Size::Large => "large",
        })
    }
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Size, String> {
        match s {
            "small" => Ok(Size::Small),
            "medium" => Ok(Size::Medium),
            "large" => Ok(Size::Large),
            other => Err(format!("unknown size {other:?} (small, medium, large)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Scan,
    Search,
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Workload {
    pub kind: Kind,
}

impl Workload {
    pub const ALL: [Workload; 3] =
        [Workload { kind: Kind::Scan }, Workload { kind: Kind::Search }, Workload { kind: Kind::Profile }];

    pub fn by_name(name: &str) -> Option<Workload> {
        Workload::ALL.into_iter().find(|w| w.name() == name)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Scan => "scan",
            Kind::Search => "search",
            Kind::Profile => "profile",
        }
    }

    pub fn source(&self) -> &'static str {
        match self.kind {
            Kind::Scan => SCAN,
            Kind::Search => SEARCH,
            Kind::Profile => PROFILE,
        }
    }

    pub fn program(&self) -> Arc<Program> {
        Arc::new(load_program(self.source()).expect("bundled workload assembles"))
    }

    /// The input stream for one run. Same size and seed, same input.
    pub fn input(&self, size: Size, seed: u64) -> Vec<i64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (self.kind as u64) << 32);
        let mut out = Vec::new();
        match self.kind {
            Kind::Scan => {
                // files, chunks per file
                let (files, chunks) = [(2, 2), (6, 10), (16, 40)][size.index()];
                out.push(files);
                for _ in 0..files {
                    out.push(chunks);
                    out.extend((0..chunks).map(|_| rng.random_range(0..200)));
                }
            }
            Kind::Search => {
                // images, pixel blocks per image
                let (images, pixels) = [(1, 1), (6, 16), (24, 48)][size.index()];
                out.push(images);
                for _ in 0..images {
                    out.push(pixels);
                    out.extend((0..pixels).map(|_| rng.random_range(0..4)));
                }
            }
            Kind::Profile => {
                let depth = [1, 5, 9][size.index()];
                let leaves = 1i64 << (depth + 1);
                out.push(8);
                out.extend((0..8).map(|_| rng.random_range(1..leaves)));
                out.push(depth);
            }
        }
        out
    }

    /// Expected output: the monolithic device run.
    pub fn oracle(&self, input: &[i64]) -> Result<Vec<i64>, VmError> {
        Ok(run(&self.program(), input, &VmClock::device(), &mut NoHooks)?.output)
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::classify_methods;

    #[test]
    fn workloads_assemble_and_stay_small() {
        for w in Workload::ALL {
            let p = w.program();
            assert!(classify_methods(&p).migratable.len() <= 12, "{w}");
            assert_eq!(Workload::by_name(w.name()), Some(w));
        }
    }

    #[test]
    fn inputs_are_deterministic_per_seed() {
        for w in Workload::ALL {
            assert_eq!(w.input(Size::Medium, 7), w.input(Size::Medium, 7));
            assert_ne!(w.input(Size::Medium, 7), w.input(Size::Medium, 8), "{w}");
        }
    }

    #[test]
    fn cost_grows_with_size() {
        for w in Workload::ALL {
            let p = w.program();
            let work: Vec<u64> = Size::ALL
                .iter()
                .map(|s| run(&p, &w.input(*s, 1), &VmClock::device(), &mut NoHooks).unwrap().work)
                .collect();
            assert!(work[0] < work[1] && work[1] < work[2], "{w}: {work:?}");
        }
    }
}
