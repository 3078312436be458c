"""Structural validity checking for modules.

A module is valid when every operand satisfies its modeled type constraints,
every use is dominated by its definition (phi uses are checked against the
incoming edge), phis have exactly one incoming per predecessor, terminators
are well-formed, and immediate indices are in range. Violations are returned
as data; verification never raises for malformed input.

Unreachable blocks are permitted and flagged by dominance analysis, but their
interior is exempt from dominance checking (there is no path on which a
use-before-def could be observed), mirroring how LLVM's verifier treats
unreachable code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .ir.dominators import cached_dominators
from .ir.instructions import Br, CondBr, Instruction, Ret, Switch
from .ir.module import FunctionDef, ModuleUnit
from .ir.optable import OPCODE_ARITY, OPCODE_CHECKS
from .ir.types import (
    ADDR,
    ArrayType,
    IntType,
    TypeDesc,
    VECTOR_COUNTS,
    format_type,
    is_int,
    is_sized,
)
from .ir.values import (
    ArgRef,
    Const,
    GlobalRef,
    InstrRef,
    ValueRef,
    const_payload_ok,
)

TYPE_MISMATCH = "TypeMismatch"
USE_BEFORE_DEF = "UseBeforeDef"
DOMINANCE_VIOLATION = "DominanceViolation"
PHI_ARITY = "PhiArity"
BAD_TERMINATOR = "BadTerminator"
BAD_INDEX = "BadIndex"
NAME_CLASH = "NameClash"


@dataclass(frozen=True)
class Violation:
    kind: str
    location: Tuple[str, str, int]  # (function, block, instruction index; -1 = block level)
    message: str

    def __str__(self) -> str:
        func, block, idx = self.location
        where = f"@{func}:{block}" if block else f"@{func}"
        if idx >= 0:
            where += f":{idx}"
        return f"{where}: {self.kind}: {self.message}"


class _FuncContext:
    """Per-function lookup tables shared by all checks."""

    def __init__(self, m: ModuleUnit, f: FunctionDef) -> None:
        self.m = m
        self.f = f
        self.blocks = {b.label: b for b in f.blocks}
        self.result_types: Dict[str, List[Optional[TypeDesc]]] = {
            b.label: [ins.result_type for ins in b.iter_instrs()] for b in f.blocks
        }
        self.preds = f.predecessors()
        self.dom = cached_dominators(f)
        self.domsets = self.dom.dominator_sets()

    def ref_type(self, v: ValueRef) -> Tuple[Optional[TypeDesc], Optional[str]]:
        """(type, error message). Value-less or dangling refs yield an error."""
        k = type(v)
        if k is Const:
            if not const_payload_ok(v.type, v.payload):
                return None, f"constant payload does not fit type {v.type}"
            return v.type, None
        if k is GlobalRef:
            if self.m.global_var(v.name) is None:
                return None, f"unknown global @{v.name}"
            return ADDR, None
        if k is ArgRef:
            if v.func != self.f.name or not 0 <= v.index < len(self.f.params):
                return None, f"bad argument reference {v}"
            return self.f.params[v.index], None
        if k is InstrRef:
            if v.func != self.f.name:
                return None, f"cross-function reference {v}"
            types = self.result_types.get(v.block)
            if types is None or not 0 <= v.index < len(types):
                return None, f"dangling instruction reference {v}"
            t = types[v.index]
            if t is None:
                return None, f"reference to a value-less instruction {v}"
            return t, None
        return None, f"unrecognized reference {v!r}"

    def dominates_use(self, d: InstrRef, use_block: str, use_index: int) -> bool:
        """Does the definition dominate the use position (block, combined idx)?"""
        if use_block in self.dom.unreachable:
            return True  # unreachable interiors are exempt
        if d.block == use_block:
            return d.index < use_index
        return d.block in self.domsets.get(use_block, frozenset())


_END = 1 << 30  # position after all instructions (terminator operands)


def verify_module(m: ModuleUnit) -> List[Violation]:
    """Check the whole module; an empty list means valid."""
    out: List[Violation] = []

    seen: Dict[str, str] = {}
    for g in m.globals:
        if g.name in seen:
            out.append(Violation(NAME_CLASH, (g.name, "", -1), f"duplicate global @{g.name}"))
        seen[g.name] = "global"
        if g.init is not None and (g.init.type != g.type or not const_payload_ok(g.type, g.init.payload)):
            out.append(Violation(TYPE_MISMATCH, (g.name, "", -1), "initializer does not fit the global's type"))
    for d in m.intrinsics:
        if d.name in seen:
            out.append(Violation(NAME_CLASH, (d.name, "", -1), f"duplicate symbol @{d.name}"))
        seen[d.name] = "intrinsic"
    for f in m.functions:
        if f.name in seen:
            out.append(Violation(NAME_CLASH, (f.name, "", -1), f"duplicate symbol @{f.name}"))
        seen[f.name] = "function"

    for f in m.functions:
        _verify_function(m, f, out)
    return out


def _verify_function(m: ModuleUnit, f: FunctionDef, out: List[Violation]) -> None:
    if not f.blocks:
        out.append(Violation(BAD_TERMINATOR, (f.name, "", -1), "function has no blocks"))
        return
    labels = set()
    for b in f.blocks:
        if b.label in labels:
            out.append(Violation(NAME_CLASH, (f.name, b.label, -1), f"duplicate block label {b.label}"))
        labels.add(b.label)

    ctx = _FuncContext(m, f)

    entry = f.blocks[0].label
    if ctx.preds.get(entry):
        out.append(
            Violation(BAD_TERMINATOR, (f.name, entry, -1), "entry block must have no predecessors")
        )

    for b in f.blocks:
        preds = ctx.preds.get(b.label, [])
        for idx, ins in enumerate(b.phis):
            if ins.opcode != "phi":
                out.append(Violation(PHI_ARITY, (f.name, b.label, idx), "non-phi in the phi section"))
                continue
            _verify_phi(ctx, b.label, idx, ins, preds, out)
        nphis = len(b.phis)
        for bi, ins in enumerate(b.body):
            idx = nphis + bi
            if ins.opcode == "phi":
                out.append(
                    Violation(PHI_ARITY, (f.name, b.label, idx), "phi must precede all body instructions")
                )
                continue
            _verify_instr(ctx, b.label, idx, ins, out)
        _verify_terminator(ctx, b, out)


def _operand_types(
    ctx: _FuncContext, block: str, idx: int, ins: Instruction, out: List[Violation]
) -> Optional[List[Optional[TypeDesc]]]:
    result_types = ctx.result_types
    fname = ctx.f.name
    check_dom = block not in ctx.dom.unreachable
    domset = ctx.domsets.get(block)
    types: List[Optional[TypeDesc]] = []
    ok = True
    for v in ins.operands:
        k = type(v)
        if k is Const:
            if const_payload_ok(v.type, v.payload):
                types.append(v.type)
            else:
                out.append(
                    Violation(USE_BEFORE_DEF, (fname, block, idx), f"constant payload does not fit type {v.type}")
                )
                types.append(None)
                ok = False
            continue
        if k is InstrRef:
            col = result_types.get(v.block)
            t = None
            if col is not None and 0 <= v.index < len(col) and v.func == fname:
                t = col[v.index]
            if t is None:
                out.append(
                    Violation(USE_BEFORE_DEF, (fname, block, idx), f"dangling or value-less reference {v}")
                )
                types.append(None)
                ok = False
                continue
            types.append(t)
            if check_dom:
                if v.block == block:
                    if v.index >= idx:
                        out.append(
                            Violation(
                                USE_BEFORE_DEF,
                                (fname, block, idx),
                                f"use at index {idx} precedes definition {v.index} in the same block",
                            )
                        )
                        ok = False
                elif v.block not in domset:
                    out.append(
                        Violation(
                            DOMINANCE_VIOLATION,
                            (fname, block, idx),
                            f"definition {v.block}:{v.index} does not dominate this use",
                        )
                    )
                    ok = False
            continue
        t, err = ctx.ref_type(v)
        if err is not None:
            out.append(Violation(USE_BEFORE_DEF, (fname, block, idx), err))
            ok = False
        types.append(t)
    return types if ok else None


def _verify_instr(ctx: _FuncContext, block: str, idx: int, ins: Instruction, out: List[Violation]) -> None:
    loc = (ctx.f.name, block, idx)
    op = ins.opcode

    if op == "call":
        _verify_call(ctx, block, idx, ins, out)
        return
    if op == "phi":
        return  # handled by section checks

    check = OPCODE_CHECKS.get(op)
    if check is None:
        out.append(Violation(TYPE_MISMATCH, loc, f"unknown opcode {op!r}"))
        return
    if len(ins.operands) != OPCODE_ARITY[op]:
        out.append(
            Violation(
                TYPE_MISMATCH,
                loc,
                f"{op} takes {OPCODE_ARITY[op]} operands, got {len(ins.operands)}",
            )
        )
        return
    types = _operand_types(ctx, block, idx, ins, out)
    if types is None:
        return
    msg = check(ins, types)
    if msg is not None:
        out.append(Violation(TYPE_MISMATCH, loc, f"{op}: {msg}"))

    # Index immediates that must stay in range.
    if op in ("extractvalue", "insertvalue"):
        agg = types[0]
        if isinstance(agg, ArrayType):
            if ins.agg_index is None or not 0 <= ins.agg_index < agg.count:
                out.append(Violation(BAD_INDEX, loc, f"aggregate index {ins.agg_index} out of range"))
    elif op == "shufflevector":
        t0 = types[0]
        if ins.mask is not None and hasattr(t0, "count"):
            limit = 2 * t0.count
            for lane in ins.mask:
                if not 0 <= lane < limit:
                    out.append(Violation(BAD_INDEX, loc, f"shuffle mask lane {lane} out of range 0..{limit - 1}"))
                    break


def _verify_call(ctx: _FuncContext, block: str, idx: int, ins: Instruction, out: List[Violation]) -> None:
    loc = (ctx.f.name, block, idx)
    callee = ins.callee
    decl = ctx.m.intrinsic(callee) if callee else None
    if decl is not None:
        params, ret = decl.params, decl.return_type
    else:
        target = ctx.m.function(callee) if callee else None
        if target is None:
            out.append(Violation(USE_BEFORE_DEF, loc, f"call to unknown symbol @{callee}"))
            return
        params, ret = target.params, target.return_type
    types = _operand_types(ctx, block, idx, ins, out)
    if types is None:
        return
    if len(types) != len(params):
        out.append(Violation(TYPE_MISMATCH, loc, f"call passes {len(types)} args, callee takes {len(params)}"))
        return
    for i, (have, want) in enumerate(zip(types, params)):
        if have != want:
            out.append(Violation(TYPE_MISMATCH, loc, f"call argument {i} is {have}, callee wants {want}"))
    if ins.result_type != ret:
        out.append(
            Violation(
                TYPE_MISMATCH,
                loc,
                f"call result is {format_type(ins.result_type)}, callee returns {format_type(ret)}",
            )
        )


def _verify_phi(
    ctx: _FuncContext, block: str, idx: int, ins: Instruction, preds: List[str], out: List[Violation]
) -> None:
    loc = (ctx.f.name, block, idx)
    if ins.result_type is None:
        out.append(Violation(TYPE_MISMATCH, loc, "phi must produce a value"))
        return
    labels = list(ins.incoming or ())
    if len(labels) != len(ins.operands):
        out.append(Violation(PHI_ARITY, loc, "phi has mismatched value/label lists"))
        return
    if sorted(labels) != sorted(preds):
        out.append(
            Violation(
                PHI_ARITY,
                loc,
                f"phi incoming labels {sorted(labels)} != predecessors {sorted(preds)}",
            )
        )
        return
    for v, pred in zip(ins.operands, labels):
        t, err = ctx.ref_type(v)
        if err is not None:
            out.append(Violation(USE_BEFORE_DEF, loc, err))
            continue
        if t != ins.result_type:
            out.append(
                Violation(TYPE_MISMATCH, loc, f"incoming value from {pred} is {t}, phi is {ins.result_type}")
            )
        if type(v) is InstrRef and not ctx.dominates_use(v, pred, _END):
            out.append(
                Violation(
                    DOMINANCE_VIOLATION,
                    loc,
                    f"incoming value {v.block}:{v.index} does not dominate the {pred} edge",
                )
            )


def _verify_terminator(ctx: _FuncContext, b, out: List[Violation]) -> None:
    f = ctx.f
    term = b.terminator
    loc = (f.name, b.label, -1)
    use_idx = b.n_instrs()

    def check_value(v: ValueRef) -> Optional[TypeDesc]:
        t, err = ctx.ref_type(v)
        if err is not None:
            out.append(Violation(USE_BEFORE_DEF, loc, err))
            return None
        if type(v) is InstrRef and not ctx.dominates_use(v, b.label, use_idx):
            out.append(
                Violation(
                    DOMINANCE_VIOLATION,
                    loc,
                    f"definition {v.block}:{v.index} does not dominate the terminator",
                )
            )
        return t

    def check_target(label: str) -> None:
        if label not in ctx.blocks:
            out.append(Violation(BAD_TERMINATOR, loc, f"branch to unknown block {label}"))

    k = type(term)
    if k is Ret:
        want = f.return_type
        if term.value is None:
            if want is not None:
                out.append(Violation(BAD_TERMINATOR, loc, f"ret must return a {want} value"))
            return
        if want is None:
            out.append(Violation(BAD_TERMINATOR, loc, "void function returns a value"))
            return
        t = check_value(term.value)
        if t is not None and t != want:
            out.append(Violation(BAD_TERMINATOR, loc, f"ret value is {t}, function returns {want}"))
    elif k is Br:
        check_target(term.target)
    elif k is CondBr:
        t = check_value(term.cond)
        if t is not None and not (is_int(t) and t.width == 1):
            out.append(Violation(TYPE_MISMATCH, loc, f"branch condition must be i1, got {t}"))
        check_target(term.then_target)
        check_target(term.else_target)
    elif k is Switch:
        t = check_value(term.scrutinee)
        if t is not None and not is_int(t):
            out.append(Violation(TYPE_MISMATCH, loc, f"switch scrutinee must be an integer, got {t}"))
        check_target(term.default)
        seen_cases = set()
        for bits, target in term.cases:
            check_target(target)
            if isinstance(t, IntType) and not 0 <= bits < (1 << t.width):
                out.append(Violation(BAD_TERMINATOR, loc, f"case value {bits} does not fit {t}"))
            if bits in seen_cases:
                out.append(Violation(BAD_TERMINATOR, loc, f"duplicate switch case {bits}"))
            seen_cases.add(bits)
    else:
        out.append(Violation(BAD_TERMINATOR, loc, f"unknown terminator {term!r}"))
