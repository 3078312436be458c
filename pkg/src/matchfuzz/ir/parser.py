"""Parser for the reduced LLVM-flavored textual IR.

Whitespace (including newlines) only separates tokens, so whole functions may
sit on a single line. Operand types are optional on named values and required
on constants. Local value names are resolved in a second pass per function,
because phi incomings may reference values defined textually later.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .instructions import (
    AGG_OPS,
    BITWISE,
    CAST_OPS,
    FCMP_PREDS,
    FP_ARITH,
    ICMP_PREDS,
    INT_ARITH,
    Br,
    CondBr,
    Instruction,
    Ret,
    Switch,
)
from .module import BasicBlock, FunctionDef, GlobalVar, IntrinsicDecl, ModuleUnit
from .types import (
    ADDR,
    TypeDesc,
    VOID,
    array_type,
    float_type,
    int_type,
    is_int,
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
    wrap_int,
)


class IRSyntaxError(Exception):
    def __init__(self, line: int, col: int, message: str) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<local>%[A-Za-z0-9_.$]+)
  | (?P<global>@[A-Za-z0-9_.$]+)
  | (?P<hex>0x[0-9a-fA-F]+)
  | (?P<num>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.$]*)
  | (?P<punct>[{}()\[\]<>=,:])
    """,
    re.VERBOSE,
)

_BINOPS = frozenset(INT_ARITH + FP_ARITH + BITWISE)
_CASTS = frozenset(CAST_OPS)
_OPCODE_STARTS = (
    _BINOPS
    | _CASTS
    | frozenset(AGG_OPS)
    | frozenset(
        (
            "fneg",
            "extractelement",
            "insertelement",
            "shufflevector",
            "getelementptr",
            "icmp",
            "fcmp",
            "select",
            "alloca",
            "load",
            "store",
            "call",
            "phi",
        )
    )
)
_TERMINATOR_STARTS = frozenset(("ret", "br", "switch"))


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Tok]:
    toks: List[_Tok] = []
    line = 1
    line_start = 0
    pos = 0
    n = len(text)
    while pos < n:
        mo = _TOKEN_RE.match(text, pos)
        if mo is None:
            raise IRSyntaxError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = mo.lastgroup
        tok_text = mo.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, tok_text, line, mo.start() - line_start + 1))
        newlines = tok_text.count("\n")
        if newlines:
            line += newlines
            line_start = mo.start() + tok_text.rfind("\n") + 1
        pos = mo.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# An operand before name resolution: either a ready ValueRef (constants) or a
# symbol to resolve, with source position for error reporting.
@dataclass
class _Raw:
    ref: Optional[ValueRef]
    symbol: Optional[str]
    line: int
    col: int


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.pos = 0

    # -- token helpers -----------------------------------------------------
    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, tok: _Tok, message: str) -> IRSyntaxError:
        return IRSyntaxError(tok.line, tok.col, message)

    def expect(self, kind: str, text: Optional[str] = None) -> _Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise self.error(t, f"expected {want!r}, found {t.text!r}")
        return t

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[_Tok]:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    # -- types -------------------------------------------------------------
    def at_type(self) -> bool:
        t = self.peek()
        if t.kind == "punct" and t.text in ("<", "["):
            return True
        if t.kind != "ident":
            return False
        s = t.text
        return s in ("ptr", "void", "f32", "f64") or bool(re.fullmatch(r"i\d+", s))

    def parse_type(self) -> TypeDesc:
        t = self.next()
        if t.kind == "punct" and t.text == "<":
            count_tok = self.expect("num")
            self.expect("ident", "x")
            lane = self.parse_type()
            self.expect("punct", ">")
            return self._mk(t, vector_type, lane, int(count_tok.text))
        if t.kind == "punct" and t.text == "[":
            count_tok = self.expect("num")
            self.expect("ident", "x")
            elem = self.parse_type()
            self.expect("punct", "]")
            return self._mk(t, array_type, elem, int(count_tok.text))
        if t.kind == "ident":
            s = t.text
            if s == "ptr":
                return ADDR
            if s == "void":
                return VOID
            if s == "f32":
                return float_type(32)
            if s == "f64":
                return float_type(64)
            mo = re.fullmatch(r"i(\d+)", s)
            if mo:
                return self._mk(t, int_type, int(mo.group(1)))
        raise self.error(t, f"expected a type, found {t.text!r}")

    def _mk(self, tok: _Tok, ctor, *args) -> TypeDesc:
        try:
            return ctor(*args)
        except ValueError as e:
            raise self.error(tok, str(e)) from None

    # -- constants and operands ---------------------------------------------
    def parse_const_payload(self, ty: TypeDesc):
        t = self.peek()
        if t.kind == "ident" and t.text == "undef":
            self.next()
            return UNDEF
        if t.kind == "ident" and t.text == "poison":
            self.next()
            return POISON
        if t.kind == "ident" and t.text == "zeroinitializer":
            self.next()
            return ZERO
        if t.kind == "hex":
            self.next()
            return int(t.text, 16)
        if t.kind == "num":
            self.next()
            if not hasattr(ty, "width"):
                raise self.error(t, f"numeric constant not valid for type {ty}")
            return wrap_int(int(t.text), ty.width)
        if t.kind == "punct" and t.text == "<":
            self.next()
            lanes = []
            while True:
                lane_ty = self.parse_type()
                lane_val = self.parse_const_payload(lane_ty)
                if isinstance(lane_val, (VecConst,)):
                    raise self.error(t, "nested vector constant")
                lanes.append(lane_val)
                if not self.accept("punct", ","):
                    break
            self.expect("punct", ">")
            return VecConst(tuple(lanes))
        raise self.error(t, f"expected a constant, found {t.text!r}")

    def parse_operand(self) -> _Raw:
        t = self.peek()
        if self.at_type():
            ty = self.parse_type()
            v = self.peek()
            if v.kind == "local":
                self.next()
                return _Raw(None, v.text, v.line, v.col)
            if v.kind == "global":
                self.next()
                return _Raw(GlobalRef(v.text[1:]), None, v.line, v.col)
            payload = self.parse_const_payload(ty)
            return _Raw(Const(ty, payload), None, v.line, v.col)
        if t.kind == "local":
            self.next()
            return _Raw(None, t.text, t.line, t.col)
        if t.kind == "global":
            self.next()
            return _Raw(GlobalRef(t.text[1:]), None, t.line, t.col)
        raise self.error(t, f"expected an operand, found {t.text!r}")

    # -- module-level items ---------------------------------------------------
    def parse_module(self) -> ModuleUnit:
        m = ModuleUnit()
        while True:
            t = self.peek()
            if t.kind == "eof":
                break
            if t.kind == "global":
                m.globals.append(self.parse_global())
            elif t.kind == "ident" and t.text == "declare":
                m.intrinsics.append(self.parse_declare())
            elif t.kind == "ident" and t.text == "define":
                m.functions.append(self.parse_define(m))
            else:
                raise self.error(t, f"expected global, declare, or define, found {t.text!r}")
        return m

    def parse_global(self) -> GlobalVar:
        t = self.expect("global")
        self.expect("punct", "=")
        self.expect("ident", "global")
        ty = self.parse_type()
        init = None
        nxt = self.peek()
        if nxt.kind in ("num", "hex") or (
            nxt.kind == "ident" and nxt.text in ("undef", "poison", "zeroinitializer")
        ) or (nxt.kind == "punct" and nxt.text == "<"):
            init = Const(ty, self.parse_const_payload(ty))
        return GlobalVar(t.text[1:], ty, init)

    def parse_declare(self) -> IntrinsicDecl:
        self.expect("ident", "declare")
        ret = self.parse_type()
        name = self.expect("global").text[1:]
        self.expect("punct", "(")
        params: List[TypeDesc] = []
        if not self.accept("punct", ")"):
            while True:
                params.append(self.parse_type())
                if not self.accept("punct", ","):
                    break
            self.expect("punct", ")")
        return IntrinsicDecl(name, tuple(params), None if ret is VOID else ret)

    def parse_define(self, m: ModuleUnit) -> FunctionDef:
        self.expect("ident", "define")
        ret = self.parse_type()
        name_tok = self.expect("global")
        fname = name_tok.text[1:]
        self.expect("punct", "(")
        params: List[TypeDesc] = []
        param_names: Dict[str, int] = {}
        if not self.accept("punct", ")"):
            while True:
                ty = self.parse_type()
                pn = self.accept("local")
                if pn is not None:
                    param_names[pn.text] = len(params)
                params.append(ty)
                if not self.accept("punct", ","):
                    break
            self.expect("punct", ")")
        self.expect("punct", "{")

        f = FunctionDef(fname, tuple(params), None if ret is VOID else ret)
        defs: Dict[str, InstrRef] = {}
        pending: List[Tuple[Instruction, List[_Raw]]] = []
        pending_terms: List[Tuple[object, List[_Raw]]] = []

        first = self.peek()
        if first.kind == "punct" and first.text == "}":
            raise self.error(first, "function body has no blocks")
        while not self.accept("punct", "}"):
            label_tok = self.expect("ident")
            self.expect("punct", ":")
            block = BasicBlock(label_tok.text)
            f.blocks.append(block)
            in_phis = True
            while True:
                t = self.peek()
                if t.kind == "punct" and t.text == "}":
                    raise self.error(t, f"block {block.label} has no terminator")
                if t.kind == "ident" and t.text in _TERMINATOR_STARTS:
                    term, raws = self.parse_terminator()
                    block.terminator = term
                    pending_terms.append((term, raws))
                    break
                ins, raws, result_name = self.parse_instruction()
                if ins.opcode == "phi" and in_phis:
                    idx = len(block.phis)
                    block.phis.append(ins)
                else:
                    in_phis = False
                    idx = len(block.phis) + len(block.body)
                    block.body.append(ins)
                if result_name is not None:
                    if result_name in defs or result_name in param_names:
                        raise self.error(t, f"duplicate value name {result_name}")
                    defs[result_name] = InstrRef(fname, block.label, idx)
                pending.append((ins, raws))

        def resolve(raw: _Raw) -> ValueRef:
            if raw.ref is not None:
                return raw.ref
            sym = raw.symbol
            if sym in param_names:
                return ArgRef(fname, param_names[sym])
            ref = defs.get(sym)
            if ref is None:
                raise IRSyntaxError(raw.line, raw.col, f"undefined value {sym}")
            return ref

        for ins, raws in pending:
            ins.operands = tuple(resolve(r) for r in raws)
        for term, raws in pending_terms:
            if raws:
                k = type(term)
                if k is Ret:
                    term.value = resolve(raws[0])
                elif k is CondBr:
                    term.cond = resolve(raws[0])
                elif k is Switch:
                    term.scrutinee = resolve(raws[0])
        _derive_result_types(m, f)
        return f

    # -- instructions ----------------------------------------------------------
    def parse_instruction(self) -> Tuple[Instruction, List[_Raw], Optional[str]]:
        t = self.peek()
        result_name = None
        if t.kind == "local":
            self.next()
            self.expect("punct", "=")
            result_name = t.text
        op_tok = self.expect("ident")
        op = op_tok.text
        if op not in _OPCODE_STARTS:
            raise self.error(op_tok, f"unknown instruction {op!r}")

        raws: List[_Raw] = []
        ins = Instruction(op, (), None)

        def operand() -> None:
            raws.append(self.parse_operand())

        if op == "alloca":
            ins.alloc_type = self.parse_type()
            ins.result_type = ADDR
        elif op == "load":
            ins.result_type = self.parse_type()
            self.expect("punct", ",")
            operand()
        elif op == "store":
            operand()
            self.expect("punct", ",")
            operand()
        elif op == "getelementptr":
            ins.source_type = self.parse_type()
            self.expect("punct", ",")
            operand()
            self.expect("punct", ",")
            operand()
            ins.result_type = ADDR
        elif op in ("icmp", "fcmp"):
            pred_tok = self.expect("ident")
            valid = ICMP_PREDS if op == "icmp" else FCMP_PREDS
            if pred_tok.text not in valid:
                raise self.error(pred_tok, f"unknown {op} predicate {pred_tok.text!r}")
            ins.pred = pred_tok.text
            operand()
            self.expect("punct", ",")
            operand()
        elif op == "shufflevector":
            operand()
            self.expect("punct", ",")
            operand()
            self.expect("punct", ",")
            self.expect("ident", "mask")
            self.expect("punct", "(")
            mask: List[int] = []
            if not self.accept("punct", ")"):
                while True:
                    mask.append(int(self.expect("num").text))
                    if not self.accept("punct", ","):
                        break
                self.expect("punct", ")")
            ins.mask = tuple(mask)
        elif op == "extractvalue":
            operand()
            self.expect("punct", ",")
            ins.agg_index = int(self.expect("num").text)
        elif op == "insertvalue":
            operand()
            self.expect("punct", ",")
            operand()
            self.expect("punct", ",")
            ins.agg_index = int(self.expect("num").text)
        elif op == "call":
            ret = self.parse_type()
            ins.result_type = None if ret is VOID else ret
            ins.callee = self.expect("global").text[1:]
            self.expect("punct", "(")
            if not self.accept("punct", ")"):
                while True:
                    operand()
                    if not self.accept("punct", ","):
                        break
                self.expect("punct", ")")
        elif op == "phi":
            ins.result_type = self.parse_type()
            labels: List[str] = []
            while True:
                self.expect("punct", "[")
                operand()
                self.expect("punct", ",")
                labels.append(self.expect("ident").text)
                self.expect("punct", "]")
                if not self.accept("punct", ","):
                    break
            ins.incoming = tuple(labels)
        elif op in _CASTS:
            operand()
            self.expect("ident", "to")
            ins.result_type = self.parse_type()
        else:  # fneg, binary ops, vector ops, select: comma-separated operands
            from .optable import OPCODE_ARITY

            arity = OPCODE_ARITY.get(op, 2)
            for k in range(arity):
                if k:
                    self.expect("punct", ",")
                operand()

        return ins, raws, result_name

    def parse_terminator(self) -> Tuple[object, List[_Raw]]:
        t = self.expect("ident")
        if t.text == "ret":
            if self.at_type():
                ty = self.parse_type()
                if ty is VOID:
                    return Ret(None), []
                v = self.peek()
                if v.kind == "local":
                    self.next()
                    return Ret(None), [_Raw(None, v.text, v.line, v.col)]
                if v.kind == "global":
                    self.next()
                    return Ret(None), [_Raw(GlobalRef(v.text[1:]), None, v.line, v.col)]
                if v.kind in ("num", "hex") or (
                    v.kind == "ident" and v.text in ("undef", "poison", "zeroinitializer")
                ) or (v.kind == "punct" and v.text == "<"):
                    payload = self.parse_const_payload(ty)
                    return Ret(None), [_Raw(Const(ty, payload), None, v.line, v.col)]
                raise self.error(v, "ret is missing its operand")
            return Ret(None), []
        if t.text == "br":
            if self.accept("ident", "label"):
                return Br(self.expect("ident").text), []
            cond = self.parse_operand()
            self.expect("punct", ",")
            self.expect("ident", "label")
            then_t = self.expect("ident").text
            self.expect("punct", ",")
            self.expect("ident", "label")
            else_t = self.expect("ident").text
            return CondBr(Const(int_type(1), 0), then_t, else_t), [cond]
        if t.text == "switch":
            scrut = self.parse_operand()
            self.expect("punct", ",")
            self.expect("ident", "label")
            default = self.expect("ident").text
            self.expect("punct", "[")
            cases: List[Tuple[int, str]] = []
            while not self.accept("punct", "]"):
                type_tok = self.peek()
                cty = self.parse_type()
                if not is_int(cty):
                    raise self.error(type_tok, f"switch case type must be an integer, got {cty}")
                val_tok = self.next()
                if val_tok.kind == "num":
                    bits = wrap_int(int(val_tok.text), cty.width)
                elif val_tok.kind == "hex":
                    bits = wrap_int(int(val_tok.text, 16), cty.width)
                else:
                    raise self.error(val_tok, "switch case must be an integer constant")
                self.expect("punct", ",")
                self.expect("ident", "label")
                cases.append((bits, self.expect("ident").text))
            return Switch(Const(int_type(32), 0), tuple(cases), default), [scrut]
        raise self.error(t, f"unknown terminator {t.text!r}")


def _derive_result_types(m: ModuleUnit, f: FunctionDef) -> None:
    """Fill in result types the text leaves implicit (binops, compares, ...).

    Runs to a fixpoint because operand definitions may appear textually after
    their uses (phis, or blocks listed out of dominance order). Cycles leave
    result types unset; the verifier reports such modules as invalid.
    """
    from .optable import EXPLICIT_RESULT_OPCODES, derive_result_type

    def ref_type(v: ValueRef) -> Optional[TypeDesc]:
        k = type(v)
        if k is Const:
            return v.type
        if k is GlobalRef:
            return ADDR
        if k is ArgRef:
            return f.params[v.index] if v.index < len(f.params) else None
        blk = f.block(v.block)
        if blk is None or not 0 <= v.index < blk.n_instrs():
            return None
        return blk.instr_at(v.index).result_type

    todo = [
        ins
        for b in f.blocks
        for ins in b.iter_instrs()
        if ins.result_type is None and ins.opcode not in ("store",) and ins.opcode not in EXPLICIT_RESULT_OPCODES
    ]
    changed = True
    while todo and changed:
        changed = False
        remaining = []
        for ins in todo:
            derived = derive_result_type(ins.opcode, [ref_type(v) for v in ins.operands], ins)
            if derived is not None:
                ins.result_type = derived
                changed = True
            else:
                remaining.append(ins)
        todo = remaining


def parse_module(text: str) -> ModuleUnit:
    """Parse IR text into a ModuleUnit; raises IRSyntaxError with position."""
    return _Parser(text).parse_module()
