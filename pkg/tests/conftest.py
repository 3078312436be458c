"""Shared builders for hand-constructed modules."""

import pytest

from matchfuzz.ir import (
    BasicBlock,
    Br,
    CondBr,
    Const,
    FunctionDef,
    InstrRef,
    Instruction,
    ModuleUnit,
    Ret,
    Switch,
    int_type,
)
from matchfuzz.ir.types import ADDR

I1 = int_type(1)
I8 = int_type(8)
I16 = int_type(16)
I32 = int_type(32)
I64 = int_type(64)


def listing_module() -> ModuleUnit:
    """The canonical freshly-generated function: alloca, load, ret."""
    entry = BasicBlock("Entry")
    f = FunctionDef("f", (I32,), I64, [entry])
    entry.body.append(Instruction("alloca", (), ADDR, alloc_type=I64))
    entry.body.append(Instruction("load", (InstrRef("f", "Entry", 0),), I64))
    entry.terminator = Ret(InstrRef("f", "Entry", 1))
    return ModuleUnit(functions=[f])


def single_add_module(ty=I32, name="f") -> ModuleUnit:
    """One function computing one add over constants."""
    from matchfuzz.ir import VecConst
    from matchfuzz.ir.types import VectorType

    def const(v):
        if isinstance(ty, VectorType):
            return Const(ty, VecConst(tuple(v for _ in range(ty.count))))
        return Const(ty, v)

    entry = BasicBlock("Entry")
    f = FunctionDef(name, (), None, [entry])
    entry.body.append(Instruction("add", (const(1), const(2)), ty))
    entry.terminator = Ret(None)
    return ModuleUnit(functions=[f])


def cfg_module(edges, entry_label="A", name="f") -> ModuleUnit:
    """Build a function whose CFG matches the given successor map.

    `edges` maps label -> list of successor labels (0, 1, or 2+ successors
    become ret/br/switch). Blocks carry no instructions.
    """
    blocks = {}
    order = [entry_label] + [l for l in edges if l != entry_label]
    for label in order:
        blocks[label] = BasicBlock(label)
    f = FunctionDef(name, (), None, [blocks[l] for l in order])
    for label, succs in edges.items():
        b = blocks[label]
        if not succs:
            b.terminator = Ret(None)
        elif len(succs) == 1:
            b.terminator = Br(succs[0])
        elif len(succs) == 2:
            b.terminator = CondBr(Const(I1, 1), succs[0], succs[1])
        else:
            cases = tuple((i, t) for i, t in enumerate(succs[:-1]))
            b.terminator = Switch(Const(I32, 0), cases, succs[-1])
    return ModuleUnit(functions=[f])


def oracle_dominates(edges, entry, a, b) -> bool:
    """Brute-force dominance: every path from entry to b passes through a.

    Equivalent formulation used here: b is unreachable from entry once a is
    removed from the graph (with a == b trivially true and unreachable blocks
    dominated only by themselves).
    """

    def reachable(avoid=None):
        seen = set()
        stack = [entry]
        while stack:
            n = stack.pop()
            if n in seen or n == avoid:
                continue
            seen.add(n)
            stack.extend(edges.get(n, ()))
        return seen

    if a == b:
        return True
    base = reachable()
    if b not in base or a not in base:
        return False
    return b not in reachable(avoid=a)
