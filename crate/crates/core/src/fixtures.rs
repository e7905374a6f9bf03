// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Small hand-written programs used by tests, examples and the demo.

/// `main` reads `n` and calls `a(n)`; `a` always calls the cheap `b` and, when
/// `n != 0`, the expensive `c`. Output is `b()` or `b() + c()`.
///
/// Hand trace (work units): `n = 0` costs 17 and prints 7; `n = 1` costs
/// 123 and prints 1007.
pub const CALL_TRIANGLE: &str = "\
ENTRY C.main
TYPE C
METHOD main 0
  IN
  CALL C.a 1
  OUT
  RET
METHOD a 1
  CALL C.b 0
  STORE 1
  LOAD 0
  JZ Lskip
  CALL C.c 0
  LOAD 1
  ADD
  STORE 1
Lskip:
  LOAD 1
  RET
METHOD b 0
  BUSY 5
  CONST 7
  RET
METHOD c 0
  BUSY 100
  CONST 1000
  RET
";

/// `main` calls `a` twice; the first `a` calls `b` and `c`, the second
/// calls nothing. Shaped like a two-level execution trace with a residual at
/// every level.
pub const TWO_CALLS: &str = "\
ENTRY M.main
TYPE M
METHOD main 0
  CONST 1
  CALL M.a 1
  STORE 0
  BUSY 1
  CONST 0
  CALL M.a 1
  LOAD 0
  ADD
  OUT
  RET
METHOD a 1
  LOAD 0
  JZ Lleaf
  CALL M.b 0
  CALL M.c 0
  ADD
  RET
Lleaf:
  BUSY 5
  CONST 3
  RET
METHOD b 0
  BUSY 2
  CONST 1
  RET
METHOD c 0
  BUSY 3
  CONST 2
  RET
";

/// List-mutating program whose migrant `work` drops the middle object of a
/// three-object chain and links in two fresh objects.
///
/// Before: `head -> o2 -> o3`. After `work`: `head -> o3 -> n1 -> n2`.
pub const CHAIN_REWIRE: &str = "\
ENTRY G.main
TYPE G
METHOD main 0
  NEW Node
  STORE 0
  NEW Node
  STORE 1
  NEW Node
  STORE 2
  LOAD 0
  CONST 1
  PUTF val
  LOAD 1
  CONST 2
  PUTF val
  LOAD 2
  CONST 3
  PUTF val
  LOAD 0
  LOAD 1
  PUTF next
  LOAD 1
  LOAD 2
  PUTF next
  CONST 0
  STORE 1
  CONST 0
  STORE 2
  LOAD 0
  CALL G.work 1
  STORE 4
  LOAD 0
  CALL G.sum 1
  OUT
  RET
METHOD work 1
  LOAD 0
  GETF next
  GETF next
  STORE 1
  LOAD 0
  LOAD 1
  PUTF next
  NEW Node
  STORE 2
  LOAD 2
  CONST 40
  PUTF val
  NEW Node
  STORE 3
  LOAD 3
  CONST 50
  PUTF val
  LOAD 2
  LOAD 3
  PUTF next
  LOAD 1
  LOAD 2
  PUTF next
  BUSY 200
  CONST 0
  RET
METHOD sum 1
  CONST 0
  STORE 1
Lloop:
  LOAD 0
  JZ Ldone
  LOAD 1
  LOAD 0
  GETF val
  ADD
  STORE 1
  LOAD 0
  GETF next
  STORE 0
  JMP Lloop
Ldone:
  LOAD 1
  RET
TYPE Node
";

/// Boot builds a five-entry table of template objects hanging off
/// `Lib.table`. `lookup` sums their weights; with input `1` it first bumps the
/// weight of the third entry, mutating that template.
pub const TEMPLATE_TABLE: &str = "\
ENTRY App.main
BOOT Lib.boot
TYPE Lib
STATIC table
METHOD boot 0
  CONST 0
  STORE 0
  CONST 5
  STORE 1
Lmake:
  LOAD 1
  JZ Ldone
  NEW Entry
  STORE 2
  LOAD 2
  LOAD 1
  PUTF weight
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
  PUTS Lib.table
  RET
TYPE Entry
TYPE App
METHOD main 0
  IN
  STORE 0
  LOAD 0
  JZ Lplain
  GETS Lib.table
  GETF next
  GETF next
  CONST 100
  PUTF weight
Lplain:
  CALL App.lookup 0
  OUT
  RET
METHOD lookup 0
  GETS Lib.table
  STORE 0
  CONST 0
  STORE 1
Lloop:
  LOAD 0
  JZ Lend
  LOAD 1
  LOAD 0
  GETF weight
  ADD
  STORE 1
  LOAD 0
  GETF next
  STORE 0
  BUSY 50
  JMP Lloop
Lend:
  LOAD 1
  RET
";

/// Natives: a pinned location reader and a pair of counter natives that share
/// native state on type `Ctr`.
pub const NATIVE_MIX: &str = "\
ENTRY N.main
TYPE N
METHOD main 0
  CALL N.where 0
  CALL N.tally 1
  OUT
  RET
METHOD where 0
  CALL GPS.read 0
  RET
METHOD tally 1
  CALL Ctr.inc 0
  CALL Ctr.get 0
  ADD
  LOAD 0
  ADD
  RET
TYPE GPS
METHOD read 0 NATIVE @location
TYPE Ctr
METHOD inc 0 NATIVE @counter.inc
METHOD get 0 NATIVE @counter.get
";

/// Loop, calls, allocation and static traffic in one thread; 200
/// instructions from start to finish with input `5`. Used to sweep
/// suspension points.
pub const SAFE_POINTS: &str = "\
ENTRY S.main
TYPE S
STATIC acc
METHOD main 0
  IN
  STORE 0
  CONST 0
  PUTS S.acc
Lloop:
  LOAD 0
  JZ Ldone
  LOAD 0
  CALL S.cell 1
  GETS S.acc
  ADD
  PUTS S.acc
  LOAD 0
  CONST 1
  SUB
  STORE 0
  JMP Lloop
Ldone:
  GETS S.acc
  OUT
  NOP
  RET
METHOD cell 1
  NEW Cell
  STORE 1
  NEW Cell
  STORE 2
  BUSY 2
  LOAD 1
  LOAD 0
  LOAD 0
  MUL
  PUTF v
  LOAD 1
  GETS S.acc
  PUTF prev
  LOAD 0
  CALL S.twice 1
  LOAD 1
  GETF v
  ADD
  RET
METHOD twice 1
  BUSY 3
  LOAD 0
  LOAD 0
  ADD
  LOAD 0
  ADD
  RET
TYPE Cell
";
