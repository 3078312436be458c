"""The program under test: interprets the matcher program over each
instruction of a module, recording matcher-table byte accesses and
control-flow probe edges.

Probes fire at pipeline stage boundaries (module entry, verify outcome, one
dispatch probe per instruction opcode, result), so the edge map sees the
dispatch skeleton but nothing of the table-driven matching itself; pattern
distinctions only show up in the matcher map. Matching is per IR instruction
(no DAG construction); terminators are control glue and are not selected.

Selection outcome for a given (matcher opcode, result type, operand types,
constant operands, enabled features) tuple is a pure function, so module
selection memoizes per-signature interpreter runs: the cached visited-byte
mask is OR-ed into the run's matcher map. Trace mode always runs the real
interpreter and records every byte access including repeats; the bitmap
keeps first-access-only information.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .coverage import CoverageState
from .ir.instructions import Instruction
from .ir.module import FunctionDef, ModuleUnit
from .ir.types import TypeDesc, VectorType, format_type
from .ir.values import ArgRef, Const, GlobalRef, InstrRef
from .ir.types import ADDR
from .target import (
    ENTRY_NAMES,
    MatcherProgram,
    OP_CHECK_CONST_RANGE,
    OP_CHECK_FEATURE,
    OP_CHECK_IS_CONST,
    OP_CHECK_OPCODE,
    OP_CHECK_TYPE,
    OP_EMIT,
    OP_FAIL,
    OP_SCOPE,
    TargetSpec,
    TypeClass,
    const_in_range,
)
from .verifier import Violation, verify_module

# Probe ids for pipeline stage boundaries.
PROBE_MODULE = 1
PROBE_VERIFY_OK = 2
PROBE_VERIFY_REJECT = 3
PROBE_RESULT_OK = 4
PROBE_RESULT_FINDING = 5
PROBE_PARSE_FAIL = 6
PROBE_DISPATCH_BASE = 16

# Dispatch probes fire per instruction CLASS, not per opcode: the matcher
# interpreter is one code path, and the surrounding compiler only branches at
# the granularity of structural instruction families. This is what makes
# branch coverage a poor proxy for pattern coverage here.
_CLASS_OF = {}
for _op in ("add", "sub", "mul", "sdiv", "udiv", "srem", "urem"):
    _CLASS_OF[_op] = 0
for _op in ("fadd", "fsub", "fmul", "fdiv", "frem", "fneg"):
    _CLASS_OF[_op] = 1
for _op in ("shl", "lshr", "ashr", "and", "or", "xor"):
    _CLASS_OF[_op] = 2
for _op in ("extractelement", "insertelement", "shufflevector"):
    _CLASS_OF[_op] = 3
for _op in ("extractvalue", "insertvalue"):
    _CLASS_OF[_op] = 4
for _op in ("trunc", "zext", "sext", "fptrunc", "fptoui", "fptosi", "uitofp", "sitofp", "ptrtoint", "inttoptr", "bitcast"):
    _CLASS_OF[_op] = 5
for _op in ("icmp", "fcmp", "select"):
    _CLASS_OF[_op] = 6
for _op in ("alloca", "load", "store", "getelementptr"):
    _CLASS_OF[_op] = 7
_CLASS_OF["call"] = 8
_CLASS_OF["phi"] = 9

MISSING_PATTERN = "MissingPattern"
INJECTED_ABORT = "InjectedAbort"
HANG_SENTINEL = "HangSentinel"
VERIFIER_REJECT = "VerifierReject"

STEP_BUDGET_FACTOR = 10


class MalformedTable(Exception):
    """The interpreter decoded past an entry boundary: a target-compile bug."""


@dataclass(frozen=True)
class FailureSignature:
    kind: str
    root_opcode: str
    type_summary: str
    byte_index: int
    target: str

    def render(self) -> str:
        return (
            f"kind: {self.kind}\nroot: {self.root_opcode}\ntypes: {self.type_summary}\n"
            f"byte_index: {self.byte_index}\ntarget: {self.target}\n"
        )


@dataclass(frozen=True)
class SelectionEntry:
    function: str
    block: str
    index: int
    opcode: str
    pattern_id: Optional[str]
    machine_op: Optional[str]


@dataclass
class SelectionResult:
    verdict: str  # "ok" | "finding" | "verifier-reject"
    entries: List[SelectionEntry] = field(default_factory=list)
    finding: Optional[FailureSignature] = None
    violations: List[Violation] = field(default_factory=list)
    instructions: int = 0

    @property
    def ok(self) -> bool:
        return self.verdict == "ok"


@dataclass
class TraceEvent:
    index: int
    kind: str
    length: int


def matcher_opcode_of(m: ModuleUnit, ins: Instruction) -> str:
    """Dispatch key: intrinsic calls get their own synthetic opcode."""
    if ins.opcode == "call" and ins.callee is not None and m.intrinsic(ins.callee) is not None:
        return f"call:@{ins.callee}"
    return ins.opcode


def _signature_root(mop: str, slot_types: Sequence[Optional[TypeDesc]]) -> str:
    vec = type(slot_types[0]) is VectorType or (
        len(slot_types) > 1 and type(slot_types[1]) is VectorType
    )
    return f"{mop}-vector" if vec else mop


def _type_summary(slot_types: Sequence[Optional[TypeDesc]]) -> str:
    ops = ", ".join(format_type(t) for t in slot_types[1:])
    return f"({ops}) -> {format_type(slot_types[0])}"


class _TypeResolver:
    """Fast operand typing for a module that already verified clean."""

    def __init__(self, m: ModuleUnit) -> None:
        self.m = m
        self.params = {f.name: f.params for f in m.functions}
        self.results = {
            f.name: {b.label: [i.result_type for i in b.iter_instrs()] for b in f.blocks}
            for f in m.functions
        }
        self.intrinsic_names = frozenset(d.name for d in m.intrinsics)

    def operand_type(self, v) -> Optional[TypeDesc]:
        k = type(v)
        if k is Const:
            return v.type
        if k is InstrRef:
            return self.results[v.func][v.block][v.index]
        if k is ArgRef:
            return self.params[v.func][v.index]
        if k is GlobalRef:
            return ADDR
        return None


class Selector:
    """Module-level selection against one compiled target."""

    def __init__(
        self,
        prog: MatcherProgram,
        target: TargetSpec,
        enabled: Optional[FrozenSet[str]] = None,
    ) -> None:
        self.prog = prog
        self.target = target
        self.enabled = frozenset(target.features) if enabled is None else frozenset(enabled)
        self.enabled_ids = frozenset(
            i for i, name in enumerate(prog.feature_names) if name in self.enabled
        )
        self._cache: Dict[tuple, tuple] = {}
        self._budget = STEP_BUDGET_FACTOR * max(1, prog.size)
        # Constant operands only influence matching through CHECK_IS_CONST and
        # membership in each CHECK_CONST_RANGE interval, so cache keys quantize
        # constants down to (type, per-range membership) per matcher opcode.
        self._slot_ranges: Dict[str, Dict[int, Tuple[Tuple[int, int], ...]]] = {}
        for p in prog.patterns:
            mop = p.matcher_opcode()
            for c in p.checks:
                if c.const_range is not None:
                    slots = self._slot_ranges.setdefault(mop, {})
                    slots[c.slot] = slots.get(c.slot, ()) + (c.const_range,)

    # -- single-instruction interpretation -----------------------------------
    def interpret(
        self,
        mop: str,
        slot_types: Sequence[Optional[TypeDesc]],
        slot_consts: Sequence[Optional[Const]],
        ir_opcode: str,
        trace: Optional[List[TraceEvent]] = None,
    ) -> Tuple[str, Optional[int], int, int]:
        """Run the byte program. Returns (kind, pattern ordinal, byte index at
        stop, visited-byte mask). kind is one of emit/missing/abort/hang."""
        data = self.prog.data
        size = len(data)
        mop_id = self.prog.opcode_ids.get(mop, 0xFFFF)
        pos = 0
        stack: List[int] = []
        steps = 0
        visited = 0

        while True:
            if pos >= size:
                raise MalformedTable(f"decode ran past the table end at {pos}")
            op = data[pos]
            if op == OP_SCOPE:
                length = 5
            elif op == OP_CHECK_OPCODE:
                length = 3
            elif op == OP_CHECK_TYPE:
                length = 7
            elif op == OP_CHECK_FEATURE:
                length = 3
            elif op == OP_CHECK_IS_CONST:
                length = 2
            elif op == OP_CHECK_CONST_RANGE:
                length = 18
            elif op == OP_EMIT:
                length = 3
            elif op == OP_FAIL:
                length = 1
            else:
                raise MalformedTable(f"unknown entry opcode {op:#x} at byte {pos}")
            if pos + length > size:
                raise MalformedTable(f"entry at {pos} runs past the table end")
            visited |= ((1 << length) - 1) << pos
            if trace is not None:
                trace.append(TraceEvent(pos, ENTRY_NAMES[op], length))
            steps += length
            if steps > self._budget:
                return HANG_SENTINEL, None, pos, visited

            passed = True
            if op == OP_SCOPE:
                (skip,) = struct.unpack_from("<I", data, pos + 1)
                stack.append(pos + 5 + skip)
                pos += 5
                continue
            if op == OP_CHECK_OPCODE:
                (want,) = struct.unpack_from("<H", data, pos + 1)
                passed = want == mop_id
            elif op == OP_CHECK_TYPE:
                slot = data[pos + 1]
                tc = TypeClass(data[pos + 2], struct.unpack_from("<I", data, pos + 3)[0])
                t = slot_types[slot] if slot < len(slot_types) else None
                passed = tc.matches(t)
            elif op == OP_CHECK_FEATURE:
                (flag,) = struct.unpack_from("<H", data, pos + 1)
                passed = flag in self.enabled_ids
            elif op == OP_CHECK_IS_CONST:
                slot = data[pos + 1]
                passed = slot != 0 and slot < len(slot_consts) and slot_consts[slot] is not None
            elif op == OP_CHECK_CONST_RANGE:
                slot = data[pos + 1]
                lo, hi = struct.unpack_from("<qq", data, pos + 2)
                c = slot_consts[slot] if slot < len(slot_consts) else None
                passed = c is not None and const_in_range(c, lo, hi)
            elif op == OP_EMIT:
                (ordinal,) = struct.unpack_from("<H", data, pos + 1)
                for fs in self.target.faults:
                    if fs.triggers(ir_opcode, slot_types):
                        kind = INJECTED_ABORT if fs.effect == "abort" else HANG_SENTINEL
                        return kind, None, pos, visited
                return "emit", ordinal, pos, visited
            else:  # OP_FAIL
                passed = False

            if passed:
                pos += length
            else:
                if not stack:
                    return MISSING_PATTERN, None, pos, visited
                target = stack.pop()
                if target > size:
                    raise MalformedTable(f"scope target {target} past the table end")
                if target == size:
                    return MISSING_PATTERN, None, pos, visited
                pos = target

    def select_instruction(
        self,
        m: ModuleUnit,
        resolver: _TypeResolver,
        ins: Instruction,
        cov: Optional[CoverageState],
        trace: Optional[List[TraceEvent]] = None,
    ) -> Tuple[str, Optional[int], int, int, Tuple[Optional[TypeDesc], ...]]:
        """Select one instruction, recording table accesses into `cov`.

        Selection is a pure function of the instruction's matcher opcode,
        result/operand types, and constant operands; repeats hit a memo whose
        stored byte mask is merged into the run's matcher map.
        """
        opcode = ins.opcode
        if opcode == "call" and ins.callee in resolver.intrinsic_names:
            mop = f"call:@{ins.callee}"
        else:
            mop = opcode
        ranges = self._slot_ranges.get(mop)
        key: List[object] = [mop, ins.result_type]
        results = resolver.results
        params = resolver.params
        for slot, v in enumerate(ins.operands, start=1):
            k = type(v)
            if k is Const:
                slot_rs = ranges.get(slot) if ranges else None
                if slot_rs:
                    key.append(
                        (v.type, tuple(const_in_range(v, lo, hi) for lo, hi in slot_rs))
                    )
                else:
                    key.append((v.type, True))
            elif k is InstrRef:
                key.append(results[v.func][v.block][v.index])
            elif k is ArgRef:
                key.append(params[v.func][v.index])
            else:
                key.append(ADDR)
        key_t = tuple(key)
        hit = self._cache.get(key_t) if trace is None else None
        if hit is None:
            slot_types: List[Optional[TypeDesc]] = [ins.result_type]
            slot_consts: List[Optional[Const]] = [None]
            for v in ins.operands:
                slot_types.append(resolver.operand_type(v))
                slot_consts.append(v if type(v) is Const else None)
            kind, ordinal, stop, visited = self.interpret(mop, slot_types, slot_consts, opcode, trace)
            hit = (kind, ordinal, stop, visited, tuple(slot_types))
            if trace is None:
                self._cache[key_t] = hit
        if cov is not None:
            cov.matcher.set_mask(hit[3])
        return hit

    def run_module(
        self,
        m: ModuleUnit,
        cov: CoverageState,
        trace: Optional[List[TraceEvent]] = None,
        collect_entries: bool = False,
        skip_verify: bool = False,
    ) -> SelectionResult:
        edge = cov.edge
        edge.record(PROBE_MODULE)
        if skip_verify:
            violations: List[Violation] = []
        else:
            violations = verify_module(m)
        if violations:
            edge.record(PROBE_VERIFY_REJECT)
            return SelectionResult("verifier-reject", violations=violations)
        edge.record(PROBE_VERIFY_OK)

        resolver = _TypeResolver(m)
        result = SelectionResult("ok")
        patterns = self.prog.patterns
        select_one = self.select_instruction
        count = 0
        for f in m.functions:
            for b in f.blocks:
                idx = -1
                for ins in b.phis + b.body if b.phis else b.body:
                    idx += 1
                    count += 1
                    edge.record(PROBE_DISPATCH_BASE + _CLASS_OF[ins.opcode])
                    kind, ordinal, stop, _, slot_types = select_one(m, resolver, ins, cov, trace)
                    if kind == "emit":
                        if collect_entries:
                            p = patterns[ordinal]
                            result.entries.append(
                                SelectionEntry(f.name, b.label, idx, ins.opcode, p.pattern_id, p.emits)
                            )
                        continue
                    mop = matcher_opcode_of(m, ins)
                    sig = FailureSignature(
                        MISSING_PATTERN if kind == "missing" else kind,
                        _signature_root(mop, slot_types),
                        _type_summary(slot_types),
                        stop,
                        self.target.name,
                    )
                    if collect_entries:
                        result.entries.append(
                            SelectionEntry(f.name, b.label, idx, ins.opcode, None, None)
                        )
                    result.verdict = "finding"
                    result.finding = sig
                    result.instructions = count
                    edge.record(PROBE_RESULT_FINDING)
                    return result
        result.instructions = count
        edge.record(PROBE_RESULT_OK)
        return result


def select_instruction(
    prog: MatcherProgram,
    t: TargetSpec,
    m: ModuleUnit,
    ins: Instruction,
    cov: CoverageState,
    enabled: Optional[FrozenSet[str]] = None,
    trace: Optional[List[TraceEvent]] = None,
) -> SelectionEntry:
    """One-shot selection of a single instruction (pre: module verifies clean)."""
    sel = Selector(prog, t, enabled)
    resolver = _TypeResolver(m)
    kind, ordinal, stop, _, slot_types = sel.select_instruction(m, resolver, ins, cov, trace)
    if kind == "emit":
        p = prog.patterns[ordinal]
        return SelectionEntry("", "", -1, ins.opcode, p.pattern_id, p.emits)
    return SelectionEntry("", "", -1, ins.opcode, None, None)


def select_module(
    prog: MatcherProgram,
    t: TargetSpec,
    m: ModuleUnit,
    cov: CoverageState,
    enabled: Optional[FrozenSet[str]] = None,
    trace: Optional[List[TraceEvent]] = None,
) -> SelectionResult:
    """Select every instruction of a module in deterministic order."""
    sel = Selector(prog, t, enabled)
    return sel.run_module(m, cov, trace=trace, collect_entries=True)
