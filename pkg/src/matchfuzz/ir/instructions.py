"""Instructions, terminators, and the opcode vocabulary.

Opcode-specific immediates (compare predicates, shuffle masks, aggregate
indices, pointee types, callee symbols, phi edge labels) live in dedicated
optional fields rather than in the operand list, so the operand list always
contains exactly the value inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

from .types import TypeDesc
from .values import ValueRef

INT_ARITH = ("add", "sub", "mul", "sdiv", "udiv", "srem", "urem")
FP_ARITH = ("fadd", "fsub", "fmul", "fdiv", "frem")
BITWISE = ("shl", "lshr", "ashr", "and", "or", "xor")
VECTOR_OPS = ("extractelement", "insertelement", "shufflevector")
AGG_OPS = ("extractvalue", "insertvalue")
CAST_OPS = (
    "trunc",
    "zext",
    "sext",
    "fptrunc",
    "fptoui",
    "fptosi",
    "uitofp",
    "sitofp",
    "ptrtoint",
    "inttoptr",
    "bitcast",
)
CMP_SELECT = ("icmp", "fcmp", "select")

# Everything the instruction-modeling table covers declaratively.
MODELED_OPCODES = (
    ("fneg",)
    + INT_ARITH
    + FP_ARITH
    + BITWISE
    + VECTOR_OPS
    + AGG_OPS
    + ("getelementptr",)
    + CAST_OPS
    + CMP_SELECT
)

# Structurally special opcodes handled by custom logic.
MANUAL_OPCODES = ("alloca", "load", "store", "call", "phi")

ALL_OPCODES = MODELED_OPCODES + MANUAL_OPCODES
OPCODE_ORDINAL = {op: i for i, op in enumerate(ALL_OPCODES)}

ICMP_PREDS = ("eq", "ne", "ugt", "uge", "ult", "ule", "sgt", "sge", "slt", "sle")
FCMP_PREDS = (
    "oeq",
    "ogt",
    "oge",
    "olt",
    "ole",
    "one",
    "ord",
    "ueq",
    "ugt",
    "uge",
    "ult",
    "ule",
    "une",
    "uno",
)


@dataclass(eq=True, slots=True)
class Instruction:
    opcode: str
    operands: Tuple[ValueRef, ...]
    result_type: Optional[TypeDesc]  # None for value-less instructions
    pred: Optional[str] = None  # icmp/fcmp predicate
    mask: Optional[Tuple[int, ...]] = None  # shufflevector lane indices
    agg_index: Optional[int] = None  # extractvalue/insertvalue position
    alloc_type: Optional[TypeDesc] = None  # alloca'd type
    source_type: Optional[TypeDesc] = None  # getelementptr indexed type
    callee: Optional[str] = None  # call target symbol
    incoming: Optional[Tuple[str, ...]] = None  # phi predecessor labels

    def copy(self) -> "Instruction":
        return Instruction(
            self.opcode,
            self.operands,
            self.result_type,
            self.pred,
            self.mask,
            self.agg_index,
            self.alloc_type,
            self.source_type,
            self.callee,
            self.incoming,
        )


@dataclass(eq=True, slots=True)
class Ret:
    value: Optional[ValueRef] = None


@dataclass(eq=True, slots=True)
class Br:
    target: str


@dataclass(eq=True, slots=True)
class CondBr:
    cond: ValueRef
    then_target: str
    else_target: str


@dataclass(eq=True, slots=True)
class Switch:
    scrutinee: ValueRef
    cases: Tuple[Tuple[int, str], ...]  # (constant bits, target label)
    default: str


Terminator = object  # Ret | Br | CondBr | Switch


def terminator_targets(term) -> Tuple[str, ...]:
    k = type(term)
    if k is Br:
        return (term.target,)
    if k is CondBr:
        return (term.then_target, term.else_target)
    if k is Switch:
        return tuple(t for _, t in term.cases) + (term.default,)
    return ()


def terminator_copy(term):
    k = type(term)
    if k is Ret:
        return Ret(term.value)
    if k is Br:
        return Br(term.target)
    if k is CondBr:
        return CondBr(term.cond, term.then_target, term.else_target)
    return Switch(term.scrutinee, term.cases, term.default)
