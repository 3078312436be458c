"""Compilation unit structure: blocks, functions, globals, intrinsic decls.

Modules are plain mutable containers while being built or mutated, and are
treated as immutable value data once handed off (printed, stored in a corpus,
sent to selection). `clone` produces an independent copy cheaply; instruction
objects are copied, operand tuples and types are shared (both are frozen).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from .instructions import (
    Br,
    CondBr,
    Instruction,
    Ret,
    Switch,
    terminator_copy,
    terminator_targets,
)
from .types import ADDR, TypeDesc
from .values import ArgRef, Const, GlobalRef, InstrRef, ValueRef


class DanglingRef(Exception):
    """A ValueRef points at something that no longer exists."""


@dataclass(eq=True, slots=True)
class GlobalVar:
    name: str
    type: TypeDesc
    init: Optional[Const] = None


@dataclass(eq=True, slots=True)
class IntrinsicDecl:
    name: str
    params: Tuple[TypeDesc, ...]
    return_type: Optional[TypeDesc]


@dataclass(eq=True, slots=True)
class BasicBlock:
    label: str
    phis: List[Instruction] = field(default_factory=list)
    body: List[Instruction] = field(default_factory=list)
    terminator: object = field(default_factory=Ret)

    def instr_at(self, index: int) -> Instruction:
        nphis = len(self.phis)
        return self.phis[index] if index < nphis else self.body[index - nphis]

    def n_instrs(self) -> int:
        return len(self.phis) + len(self.body)

    def iter_instrs(self) -> Iterator[Instruction]:
        yield from self.phis
        yield from self.body


@dataclass(eq=True, slots=True)
class FunctionDef:
    name: str
    params: Tuple[TypeDesc, ...]
    return_type: Optional[TypeDesc]
    blocks: List[BasicBlock] = field(default_factory=list)
    # CFG-derived caches; anything that edits terminators or the block list
    # must call invalidate_cfg(). Safe to share across clones (immutable).
    dom_cache: object = field(default=None, compare=False, repr=False)
    preds_cache: object = field(default=None, compare=False, repr=False)

    @property
    def entry(self) -> BasicBlock:
        return self.blocks[0]

    def invalidate_cfg(self) -> None:
        self.dom_cache = None
        self.preds_cache = None

    def block_map(self) -> Dict[str, BasicBlock]:
        return {b.label: b for b in self.blocks}

    def block(self, label: str) -> Optional[BasicBlock]:
        for b in self.blocks:
            if b.label == label:
                return b
        return None

    def predecessors(self) -> Dict[str, List[str]]:
        """Distinct predecessor labels per block, in deterministic order."""
        cached = self.preds_cache
        if cached is not None:
            return cached
        preds: Dict[str, List[str]] = {b.label: [] for b in self.blocks}
        for b in self.blocks:
            seen = set()
            for t in terminator_targets(b.terminator):
                if t in preds and (b.label, t) not in seen:
                    seen.add((b.label, t))
                    preds[t].append(b.label)
        self.preds_cache = preds
        return preds


@dataclass(eq=True, slots=True)
class ModuleUnit:
    globals: List[GlobalVar] = field(default_factory=list)
    intrinsics: List[IntrinsicDecl] = field(default_factory=list)
    functions: List[FunctionDef] = field(default_factory=list)

    def function(self, name: str) -> Optional[FunctionDef]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def intrinsic(self, name: str) -> Optional[IntrinsicDecl]:
        for d in self.intrinsics:
            if d.name == name:
                return d
        return None

    def global_var(self, name: str) -> Optional[GlobalVar]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def n_instrs(self) -> int:
        return sum(b.n_instrs() for f in self.functions for b in f.blocks)

    def clone(self) -> "ModuleUnit":
        return ModuleUnit(
            [GlobalVar(g.name, g.type, g.init) for g in self.globals],
            [IntrinsicDecl(d.name, d.params, d.return_type) for d in self.intrinsics],
            [
                FunctionDef(
                    f.name,
                    f.params,
                    f.return_type,
                    [
                        BasicBlock(
                            b.label,
                            [i.copy() for i in b.phis],
                            [i.copy() for i in b.body],
                            terminator_copy(b.terminator),
                        )
                        for b in f.blocks
                    ],
                    f.dom_cache,  # same CFG shape, caches stay valid
                    f.preds_cache,
                )
                for f in self.functions
            ],
        )


def type_of(m: ModuleUnit, v: ValueRef) -> TypeDesc:
    """Resolve the type of any value reference; O(1) given small name tables.

    Raises DanglingRef when the referent does not exist or carries no value.
    """
    k = type(v)
    if k is Const:
        return v.type
    if k is GlobalRef:
        if m.global_var(v.name) is None:
            raise DanglingRef(f"unknown global @{v.name}")
        return ADDR
    if k is ArgRef:
        f = m.function(v.func)
        if f is None or not 0 <= v.index < len(f.params):
            raise DanglingRef(f"bad argument ref {v}")
        return f.params[v.index]
    if k is InstrRef:
        f = m.function(v.func)
        if f is None:
            raise DanglingRef(f"unknown function @{v.func}")
        b = f.block(v.block)
        if b is None or not 0 <= v.index < b.n_instrs():
            raise DanglingRef(f"bad instruction ref {v}")
        t = b.instr_at(v.index).result_type
        if t is None:
            raise DanglingRef(f"ref to value-less instruction {v}")
        return t
    raise DanglingRef(f"unrecognized ref {v!r}")


def rewrite_function_refs(f: FunctionDef, fn: Callable[[ValueRef], ValueRef]) -> None:
    """Apply `fn` to every operand position in `f`, in place."""
    for b in f.blocks:
        for ins in b.phis:
            ins.operands = tuple(fn(v) for v in ins.operands)
        for ins in b.body:
            ins.operands = tuple(fn(v) for v in ins.operands)
        term = b.terminator
        k = type(term)
        if k is Ret and term.value is not None:
            term.value = fn(term.value)
        elif k is CondBr:
            term.cond = fn(term.cond)
        elif k is Switch:
            term.scrutinee = fn(term.scrutinee)


def iter_function_refs(f: FunctionDef) -> Iterator[ValueRef]:
    for b in f.blocks:
        for ins in b.phis:
            yield from ins.operands
        for ins in b.body:
            yield from ins.operands
        term = b.terminator
        k = type(term)
        if k is Ret:
            if term.value is not None:
                yield term.value
        elif k is CondBr:
            yield term.cond
        elif k is Switch:
            yield term.scrutinee


def _shift_tuple(ops: Tuple[ValueRef, ...], fname: str, label: str, at: int, delta: int):
    """Rebuild an operand tuple only if some ref actually moves."""
    for v in ops:
        if type(v) is InstrRef and v.index >= at and v.block == label and v.func == fname:
            return tuple(
                InstrRef(x.func, x.block, x.index + delta)
                if (type(x) is InstrRef and x.index >= at and x.block == label and x.func == fname)
                else x
                for x in ops
            )
    return None


def _shift_refs(f: FunctionDef, label: str, at: int, delta: int) -> None:
    fname = f.name
    for b in f.blocks:
        for ins in b.phis:
            moved = _shift_tuple(ins.operands, fname, label, at, delta)
            if moved is not None:
                ins.operands = moved
        for ins in b.body:
            moved = _shift_tuple(ins.operands, fname, label, at, delta)
            if moved is not None:
                ins.operands = moved
        term = b.terminator
        k = type(term)
        if k is Ret:
            v = term.value
        elif k is CondBr:
            v = term.cond
        elif k is Switch:
            v = term.scrutinee
        else:
            continue
        if type(v) is InstrRef and v.index >= at and v.block == label and v.func == fname:
            moved_ref = InstrRef(v.func, v.block, v.index + delta)
            if k is Ret:
                term.value = moved_ref
            elif k is CondBr:
                term.cond = moved_ref
            else:
                term.scrutinee = moved_ref


def shift_refs_for_insert(f: FunctionDef, block_label: str, at_index: int) -> None:
    """Renumber InstrRefs after inserting one instruction at a combined index."""
    _shift_refs(f, block_label, at_index, +1)


def insert_body_instr(f: FunctionDef, block: BasicBlock, body_pos: int, ins: Instruction) -> InstrRef:
    """Insert into a block body, keeping all positional refs consistent."""
    combined = len(block.phis) + body_pos
    if body_pos < len(block.body):  # appends shift nothing
        shift_refs_for_insert(f, block.label, combined)
    block.body.insert(body_pos, ins)
    return InstrRef(f.name, block.label, combined)


def insert_phi_instr(f: FunctionDef, block: BasicBlock, phi_pos: int, ins: Instruction) -> InstrRef:
    shift_refs_for_insert(f, block.label, phi_pos)
    block.phis.insert(phi_pos, ins)
    return InstrRef(f.name, block.label, phi_pos)


def remove_body_instr(f: FunctionDef, block: BasicBlock, body_pos: int) -> None:
    """Remove a body instruction; callers must have rewritten its uses first."""
    combined = len(block.phis) + body_pos
    del block.body[body_pos]
    _shift_refs(f, block.label, combined + 1, -1)


def collect_used_refs(f: FunctionDef) -> set:
    """All InstrRefs used anywhere in the function (for dead-value scans)."""
    used = set()
    for v in iter_function_refs(f):
        if type(v) is InstrRef:
            used.add(v)
    return used
