"""Canonical textual form for modules.

Value names are not stored in the IR; the printer assigns deterministic names
(%a0.. for arguments, %v0.. for instruction results in definition order), so
identical modules always print to identical bytes. Every operand is printed
with its type; the parser also accepts bare `%name`/`@name` operands.
"""

from __future__ import annotations

from typing import Dict, List

from .instructions import Br, CondBr, Instruction, Ret, Switch
from .module import FunctionDef, ModuleUnit, type_of
from .types import FloatType, IntType, TypeDesc, format_type, int_type
from .values import (
    ArgRef,
    Const,
    GlobalRef,
    InstrRef,
    Poison,
    Undef,
    ValueRef,
    VecConst,
    ZeroInit,
    signed_value,
)

_CAST_OPS = frozenset(
    ("trunc", "zext", "sext", "fptrunc", "fptoui", "fptosi", "uitofp", "sitofp", "ptrtoint", "inttoptr", "bitcast")
)


def _scalar_text(ty: TypeDesc, bits: int) -> str:
    if isinstance(ty, IntType):
        return str(signed_value(bits, ty.width))
    if isinstance(ty, FloatType):
        digits = 8 if ty.width == 32 else 16
        return f"0x{bits:0{digits}x}"
    return str(bits)


def _payload_text(ty: TypeDesc, payload) -> str:
    if isinstance(payload, (Undef, Poison, ZeroInit)):
        return str(payload)
    if isinstance(payload, VecConst):
        lane = ty.lane
        parts = [
            f"{lane} {_scalar_text(lane, item) if isinstance(item, int) else item}"
            for item in payload.lanes
        ]
        return "<" + ", ".join(parts) + ">"
    return _scalar_text(ty, payload)


class _Namer:
    """Deterministic value naming for one function."""

    def __init__(self, f: FunctionDef) -> None:
        self.f = f
        self.names: Dict[InstrRef, str] = {}
        n = 0
        for b in f.blocks:
            for i in range(b.n_instrs()):
                if b.instr_at(i).result_type is not None:
                    self.names[InstrRef(f.name, b.label, i)] = f"%v{n}"
                    n += 1

    def operand(self, m: ModuleUnit, v: ValueRef) -> str:
        k = type(v)
        if k is Const:
            return f"{v.type} {_payload_text(v.type, v.payload)}"
        if k is GlobalRef:
            return f"ptr @{v.name}"
        if k is ArgRef:
            ty = self.f.params[v.index] if v.index < len(self.f.params) else "?"
            return f"{ty} %a{v.index}"
        blk = self.f.block(v.block)
        ty = blk.instr_at(v.index).result_type if blk and v.index < blk.n_instrs() else "?"
        return f"{ty} {self.names.get(v, '%?')}"


def _instr_line(m: ModuleUnit, namer: _Namer, ins: Instruction, ref: InstrRef) -> str:
    op = ins.opcode
    ops = [namer.operand(m, v) for v in ins.operands]
    if op == "alloca":
        rhs = f"alloca {ins.alloc_type}"
    elif op == "load":
        rhs = f"load {ins.result_type}, {ops[0]}"
    elif op == "store":
        rhs = f"store {ops[0]}, {ops[1]}"
    elif op == "getelementptr":
        rhs = f"getelementptr {ins.source_type}, {ops[0]}, {ops[1]}"
    elif op in ("icmp", "fcmp"):
        rhs = f"{op} {ins.pred} {ops[0]}, {ops[1]}"
    elif op == "shufflevector":
        mask = ", ".join(str(i) for i in ins.mask)
        rhs = f"shufflevector {ops[0]}, {ops[1]}, mask({mask})"
    elif op == "extractvalue":
        rhs = f"extractvalue {ops[0]}, {ins.agg_index}"
    elif op == "insertvalue":
        rhs = f"insertvalue {ops[0]}, {ops[1]}, {ins.agg_index}"
    elif op == "call":
        rhs = f"call {format_type(ins.result_type)} @{ins.callee}({', '.join(ops)})"
    elif op == "phi":
        pairs = ", ".join(
            f"[ {o}, {label} ]" for o, label in zip(ops, ins.incoming)
        )
        rhs = f"phi {ins.result_type} {pairs}"
    elif op in _CAST_OPS:
        rhs = f"{op} {ops[0]} to {ins.result_type}"
    else:
        rhs = f"{op} " + ", ".join(ops)
    name = namer.names.get(ref) if ins.result_type is not None else None
    return rhs if name is None else f"{name} = {rhs}"


def _term_line(m: ModuleUnit, namer: _Namer, term) -> str:
    k = type(term)
    if k is Ret:
        return "ret" if term.value is None else f"ret {namer.operand(m, term.value)}"
    if k is Br:
        return f"br label {term.target}"
    if k is CondBr:
        return f"br {namer.operand(m, term.cond)}, label {term.then_target}, label {term.else_target}"
    try:
        sty = type_of(m, term.scrutinee)
    except Exception:
        sty = int_type(32)
    cases = " ".join(f"{sty} {_scalar_text(sty, bits)}, label {t}" for bits, t in term.cases)
    return f"switch {namer.operand(m, term.scrutinee)}, label {term.default} [ {cases} ]"


def print_module(m: ModuleUnit) -> str:
    """Render a module to its canonical text; the empty module prints as ''."""
    out: List[str] = []
    for g in m.globals:
        if g.init is None:
            out.append(f"@{g.name} = global {g.type}")
        else:
            out.append(f"@{g.name} = global {g.type} {_payload_text(g.type, g.init.payload)}")
    if m.globals and (m.intrinsics or m.functions):
        out.append("")
    for d in m.intrinsics:
        params = ", ".join(str(t) for t in d.params)
        out.append(f"declare {format_type(d.return_type)} @{d.name}({params})")
    if m.intrinsics and m.functions:
        out.append("")
    for fi, f in enumerate(m.functions):
        namer = _Namer(f)
        params = ", ".join(f"{t} %a{i}" for i, t in enumerate(f.params))
        out.append(f"define {format_type(f.return_type)} @{f.name}({params}) {{")
        for b in f.blocks:
            out.append(f"{b.label}:")
            for i in range(b.n_instrs()):
                ref = InstrRef(f.name, b.label, i)
                out.append(f"  {_instr_line(m, namer, b.instr_at(i), ref)}")
            out.append(f"  {_term_line(m, namer, b.terminator)}")
        out.append("}")
        if fi != len(m.functions) - 1:
            out.append("")
    return "\n".join(out) + ("\n" if out else "")
