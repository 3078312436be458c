"""Typed SSA IR: types, values, instructions, modules, text form, dominance."""

from .dominators import DomTree, compute_dominators
from .instructions import (
    ALL_OPCODES,
    Br,
    CondBr,
    FCMP_PREDS,
    ICMP_PREDS,
    Instruction,
    MODELED_OPCODES,
    OPCODE_ORDINAL,
    Ret,
    Switch,
)
from .module import (
    BasicBlock,
    DanglingRef,
    FunctionDef,
    GlobalVar,
    IntrinsicDecl,
    ModuleUnit,
    type_of,
)
from .parser import IRSyntaxError, parse_module
from .printer import print_module
from .types import (
    ADDR,
    BOOL,
    F32,
    F64,
    TypeDesc,
    VOID,
    array_type,
    float_type,
    int_type,
    vector_type,
)
from .values import (
    ArgRef,
    Const,
    GlobalRef,
    InstrRef,
    POISON,
    UNDEF,
    ValueRef,
    VecConst,
    ZERO,
    float_const,
    int_const,
)

__all__ = [
    "ADDR",
    "ALL_OPCODES",
    "ArgRef",
    "BOOL",
    "BasicBlock",
    "Br",
    "CondBr",
    "Const",
    "DanglingRef",
    "DomTree",
    "F32",
    "F64",
    "FCMP_PREDS",
    "FunctionDef",
    "GlobalRef",
    "GlobalVar",
    "ICMP_PREDS",
    "IRSyntaxError",
    "InstrRef",
    "Instruction",
    "IntrinsicDecl",
    "MODELED_OPCODES",
    "ModuleUnit",
    "OPCODE_ORDINAL",
    "POISON",
    "Ret",
    "Switch",
    "TypeDesc",
    "UNDEF",
    "VOID",
    "ValueRef",
    "VecConst",
    "ZERO",
    "array_type",
    "compute_dominators",
    "float_const",
    "float_type",
    "int_const",
    "int_type",
    "parse_module",
    "print_module",
    "type_of",
    "vector_type",
]
