"""Operand sourcing: find or synthesize a value of a required type at a
program point.

Candidates come from globals, function arguments, values defined in strictly
dominating blocks, and earlier values in the same block. When nothing of the
right type is visible the fallback chain kicks in: load through a visible
address, else materialize a new global / constant / stack slot. Constants
occasionally substitute for available values on purpose, so immediate-form
selection patterns stay reachable; undef and poison each appear with small
probability.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional

from ..ir.dominators import DomTree
from ..ir.instructions import Instruction
from ..ir.module import (
    BasicBlock,
    FunctionDef,
    ModuleUnit,
    insert_body_instr,
)
from ..ir.types import (
    ADDR,
    ArrayType,
    FloatType,
    IntType,
    TypeDesc,
    VectorType,
    is_addr,
)
from ..ir.values import (
    ArgRef,
    Const,
    GlobalRef,
    InstrRef,
    POISON,
    UNDEF,
    ValueRef,
    VecConst,
    ZERO,
    float_to_bits,
    wrap_int,
)
from .config import MutatorConfig

UNDEF_PROB = 0.05
POISON_PROB = 0.05
CONST_INSTEAD_PROB = 0.25
LOAD_FALLBACK_PROB = 0.6

_NICE_FLOATS = (0.0, 1.0, -1.0, 0.5, 2.0, 3.1415926535, -0.0)


def random_const(rng: random.Random, ty: TypeDesc) -> Const:
    """A random constant of the given type; undef/poison with small probability."""
    roll = rng.random()
    if roll < UNDEF_PROB:
        return Const(ty, UNDEF)
    if roll < UNDEF_PROB + POISON_PROB:
        return Const(ty, POISON)
    return Const(ty, _payload(rng, ty))


def _payload(rng: random.Random, ty: TypeDesc):
    k = type(ty)
    if k is IntType:
        return _int_bits(rng, ty.width)
    if k is FloatType:
        roll = rng.random()
        if roll < 0.7:
            return float_to_bits(rng.choice(_NICE_FLOATS), ty.width)
        return rng.getrandbits(ty.width)
    if k is VectorType:
        if rng.random() < 0.3:
            return ZERO
        lane = ty.lane
        if is_addr(lane):
            return UNDEF
        return VecConst(tuple(_payload(rng, lane) for _ in range(ty.count)))
    if k is ArrayType:
        return ZERO if rng.random() < 0.6 else UNDEF
    return UNDEF  # addr has no literal form


def _int_bits(rng: random.Random, width: int) -> int:
    roll = rng.random()
    if roll < 0.40:
        value = rng.randint(-8, 8)
    elif roll < 0.60:
        value = rng.randint(-128, 127)
    elif roll < 0.70:
        value = rng.choice((0, 1))
    else:
        value = rng.getrandbits(width)
    return wrap_int(value, width)


def build_pool(
    m: ModuleUnit,
    f: FunctionDef,
    dom: DomTree,
    block: BasicBlock,
    upto_combined: int,
) -> Dict[TypeDesc, List[ValueRef]]:
    """Typed values visible at (block, combined index): globals, args, values
    in strict dominators, earlier values in the block."""
    pool: Dict[TypeDesc, List[ValueRef]] = {}
    fname = f.name
    if m.globals:
        pool[ADDR] = [GlobalRef(g.name) for g in m.globals]
    for i, p in enumerate(f.params):
        pool.setdefault(p, []).append(ArgRef(fname, i))
    doms = dom.dominator_sets().get(block.label, frozenset())
    setdefault = pool.setdefault
    for b in f.blocks:
        label = b.label
        if label == block.label:
            limit = upto_combined
        elif label in doms:
            limit = 1 << 30
        else:
            continue
        i = 0
        for ins in b.phis:
            if i >= limit:
                break
            t = ins.result_type
            if t is not None:
                setdefault(t, []).append(InstrRef(fname, label, i))
            i += 1
        for ins in b.body:
            if i >= limit:
                break
            t = ins.result_type
            if t is not None:
                setdefault(t, []).append(InstrRef(fname, label, i))
            i += 1
    return pool


class OperandSource:
    """Sources operands for one insertion point, materializing fallbacks
    directly before it. `body_pos` tracks where the instruction under
    construction will finally be inserted."""

    def __init__(
        self,
        m: ModuleUnit,
        f: FunctionDef,
        block: BasicBlock,
        body_pos: int,
        cfg: MutatorConfig,
        pool: Dict[TypeDesc, List[ValueRef]],
    ) -> None:
        self.m = m
        self.f = f
        self.block = block
        self.body_pos = body_pos
        self.cfg = cfg
        self.pool = pool
        self.rng = cfg.rng

    def _insert(self, ins: Instruction) -> InstrRef:
        ref = insert_body_instr(self.f, self.block, self.body_pos, ins)
        self.body_pos += 1
        return ref

    def _fresh_global(self, ty: TypeDesc) -> GlobalRef:
        n = len(self.m.globals)
        while self.m.global_var(f"g{n}") is not None:
            n += 1
        from ..ir.module import GlobalVar

        init = Const(ty, ZERO) if isinstance(ty, (VectorType, ArrayType)) else Const(ty, UNDEF)
        self.m.globals.append(GlobalVar(f"g{n}", ty, init))
        return GlobalRef(f"g{n}")

    def visible_addr(self) -> Optional[ValueRef]:
        candidates = self.pool.get(ADDR)
        return self.rng.choice(candidates) if candidates else None

    def get(self, ty: TypeDesc, allow_const: bool = True) -> ValueRef:
        """A value of type `ty` valid at the insertion point; always succeeds."""
        rng = self.rng
        candidates = self.pool.get(ty)
        if candidates:
            if not (allow_const and rng.random() < CONST_INSTEAD_PROB and not is_addr(ty)):
                return rng.choice(candidates)
            return random_const(rng, ty)
        if allow_const and isinstance(ty, (IntType, FloatType)) and rng.random() < 0.5:
            return random_const(rng, ty)
        addr = self.visible_addr()
        if addr is not None and rng.random() < LOAD_FALLBACK_PROB:
            return self._insert(Instruction("load", (addr,), ty))
        if is_addr(ty):
            if rng.random() < 0.5:
                return self._fresh_global(self.cfg.universe.draw_scalar(rng))
            return self._insert(Instruction("alloca", (), ADDR, alloc_type=self.cfg.universe.draw_scalar(rng)))
        roll = rng.random()
        if allow_const and roll < 0.45:
            return random_const(rng, ty)
        if roll < 0.75:
            g = self._fresh_global(ty)
            return self._insert(Instruction("load", (g,), ty))
        slot = self._insert(Instruction("alloca", (), ADDR, alloc_type=ty))
        return self._insert(Instruction("load", (slot,), ty))

    def get_nonconst(self, ty: TypeDesc) -> ValueRef:
        """A non-constant value (for branch conditions and switch scrutinees)."""
        candidates = self.pool.get(ty)
        if candidates:
            return self.rng.choice(candidates)
        addr = self.visible_addr()
        if addr is not None and self.rng.random() < LOAD_FALLBACK_PROB:
            return self._insert(Instruction("load", (addr,), ty))
        slot = self._insert(Instruction("alloca", (), ADDR, alloc_type=ty))
        return self._insert(Instruction("load", (slot,), ty))

    def get_no_new_loads(self, ty: TypeDesc) -> ValueRef:
        """Pool value or constant only; used by placeholder fixup so it never
        manufactures further uninitialized loads."""
        candidates = self.pool.get(ty)
        if candidates and self.rng.random() < 0.8:
            return self.rng.choice(candidates)
        return random_const(self.rng, ty)
