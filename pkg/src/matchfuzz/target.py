"""Toy backend targets: feature flags, selection patterns, intrinsics, faults,
and the compiler from patterns to a byte-encoded matcher program.

A pattern matches one IR instruction: a root opcode, per-slot type checks
(slot 0 is the result type, slot k is operand k), optional constness and
signed constant-range checks, and a conjunction of required feature flags.
Patterns for intrinsics bind to a specific callee and are dispatched through
a synthetic matcher opcode `call:@name`, since the matcher's entry vocabulary
has no dedicated intrinsic check.

The compiled program is a flat byte array of fixed-width entries:

    SCOPE            0x01 u32:skip     push fail target = entry end + skip
    CHECK_OPCODE     0x02 u16:op
    CHECK_TYPE       0x03 u8:slot u8:class u32:param
    CHECK_FEATURE    0x04 u16:flag
    CHECK_IS_CONST   0x05 u8:slot
    CHECK_CONST_RANGE 0x06 u8:slot i64:lo i64:hi
    EMIT             0x07 u16:pattern
    FAIL             0x08

Failing a check pops the innermost scope and jumps to its target; FAIL does
the same, and with an empty scope stack selection ends in "missing pattern".
Patterns are grouped by root opcode; groups are scoped so a failed opcode
check skips the whole group, and within a group patterns are tried in
descending priority, each in its own scope.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .ir.instructions import BITWISE, INT_ARITH, FP_ARITH
from .ir.module import IntrinsicDecl
from .ir.types import (
    ADDR,
    ArrayType,
    FloatType,
    IntType,
    TypeDesc,
    VectorType,
    float_type,
    int_type,
    is_addr,
    vector_type,
)
from .ir.values import Const, Poison, Undef, signed_value

OP_SCOPE = 0x01
OP_CHECK_OPCODE = 0x02
OP_CHECK_TYPE = 0x03
OP_CHECK_FEATURE = 0x04
OP_CHECK_IS_CONST = 0x05
OP_CHECK_CONST_RANGE = 0x06
OP_EMIT = 0x07
OP_FAIL = 0x08

ENTRY_NAMES = {
    OP_SCOPE: "SCOPE",
    OP_CHECK_OPCODE: "CHECK_OPCODE",
    OP_CHECK_TYPE: "CHECK_TYPE",
    OP_CHECK_FEATURE: "CHECK_FEATURE",
    OP_CHECK_IS_CONST: "CHECK_IS_CONST",
    OP_CHECK_CONST_RANGE: "CHECK_CONST_RANGE",
    OP_EMIT: "EMIT",
    OP_FAIL: "FAIL",
}

# Type-class ids used by CHECK_TYPE.
TC_ANY = 0
TC_INT_ANY = 1
TC_INT_W = 2
TC_FP_ANY = 3
TC_FP_W = 4
TC_PTR = 5
TC_VEC_ANY = 7
TC_VEC_INT = 8
TC_VEC_FP = 9
TC_VEC_PTR = 10
TC_VEC_EXACT = 11
TC_ARR_ANY = 12
TC_VEC_INT_W = 13
TC_VEC_FP_W = 14


class TargetError(Exception):
    pass


class DuplicatePriority(TargetError):
    pass


class UnknownFeature(TargetError):
    pass


@dataclass(frozen=True)
class TypeClass:
    kind: int
    param: int = 0

    def matches(self, t: Optional[TypeDesc]) -> bool:
        k = self.kind
        if k == TC_ANY:
            return t is not None
        if t is None:
            return False
        tt = type(t)
        if k == TC_INT_ANY:
            return tt is IntType
        if k == TC_INT_W:
            return tt is IntType and t.width == self.param
        if k == TC_FP_ANY:
            return tt is FloatType
        if k == TC_FP_W:
            return tt is FloatType and t.width == self.param
        if k == TC_PTR:
            return is_addr(t)
        if k == TC_VEC_ANY:
            return tt is VectorType
        if k == TC_VEC_INT:
            return tt is VectorType and type(t.lane) is IntType
        if k == TC_VEC_FP:
            return tt is VectorType and type(t.lane) is FloatType
        if k == TC_VEC_PTR:
            return tt is VectorType and is_addr(t.lane)
        if k == TC_VEC_EXACT:
            return tt is VectorType and t == _vec_from_param(self.param)
        if k == TC_ARR_ANY:
            return tt is ArrayType
        if k == TC_VEC_INT_W:
            return tt is VectorType and type(t.lane) is IntType and t.lane.width == self.param
        if k == TC_VEC_FP_W:
            return tt is VectorType and type(t.lane) is FloatType and t.lane.width == self.param
        return False


def _vec_param(count: int, lane: TypeDesc) -> int:
    if type(lane) is IntType:
        kind, width = 0, lane.width
    elif type(lane) is FloatType:
        kind, width = 1, lane.width
    else:
        kind, width = 2, 0
    return (count << 16) | (kind << 8) | width


def _vec_from_param(param: int) -> VectorType:
    count = param >> 16
    kind = (param >> 8) & 0xFF
    width = param & 0xFF
    if kind == 0:
        lane: TypeDesc = int_type(width)
    elif kind == 1:
        lane = float_type(width)
    else:
        lane = ADDR
    return vector_type(lane, count)


_CLASS_TOKENS = {
    "any": TypeClass(TC_ANY),
    "int": TypeClass(TC_INT_ANY),
    "fp": TypeClass(TC_FP_ANY),
    "ptr": TypeClass(TC_PTR),
    "bool": TypeClass(TC_INT_W, 1),
    "vec": TypeClass(TC_VEC_ANY),
    "vint": TypeClass(TC_VEC_INT),
    "vfp": TypeClass(TC_VEC_FP),
    "vptr": TypeClass(TC_VEC_PTR),
    "arr": TypeClass(TC_ARR_ANY),
}


def parse_type_class(token: str) -> TypeClass:
    if token in _CLASS_TOKENS:
        return _CLASS_TOKENS[token]
    mo = re.fullmatch(r"i(\d+)", token)
    if mo:
        return TypeClass(TC_INT_W, int(mo.group(1)))
    mo = re.fullmatch(r"f(32|64)", token)
    if mo:
        return TypeClass(TC_FP_W, int(mo.group(1)))
    mo = re.fullmatch(r"vxi(\d+)", token)
    if mo:
        return TypeClass(TC_VEC_INT_W, int(mo.group(1)))
    mo = re.fullmatch(r"vxf(32|64)", token)
    if mo:
        return TypeClass(TC_VEC_FP_W, int(mo.group(1)))
    mo = re.fullmatch(r"v(\d+)x(i\d+|f32|f64|ptr)", token)
    if mo:
        count = int(mo.group(1))
        lane_tok = mo.group(2)
        if lane_tok == "ptr":
            lane: TypeDesc = ADDR
        elif lane_tok.startswith("i"):
            lane = int_type(int(lane_tok[1:]))
        else:
            lane = float_type(int(lane_tok[1:]))
        return TypeClass(TC_VEC_EXACT, _vec_param(count, lane))
    raise TargetError(f"unknown type class {token!r}")


def format_type_class(tc: TypeClass) -> str:
    for name, known in _CLASS_TOKENS.items():
        if known == tc:
            return name
    if tc.kind == TC_INT_W:
        return "bool" if tc.param == 1 else f"i{tc.param}"
    if tc.kind == TC_FP_W:
        return f"f{tc.param}"
    if tc.kind == TC_VEC_INT_W:
        return f"vxi{tc.param}"
    if tc.kind == TC_VEC_FP_W:
        return f"vxf{tc.param}"
    if tc.kind == TC_VEC_EXACT:
        v = _vec_from_param(tc.param)
        lane = "ptr" if is_addr(v.lane) else str(v.lane)
        return f"v{v.count}x{lane}"
    raise TargetError(f"unknown type class id {tc.kind}")


@dataclass(frozen=True)
class OperandCheck:
    slot: int  # 0 = result, k = operand k
    type_class: Optional[TypeClass] = None
    is_const: bool = False
    const_range: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class PatternDef:
    pattern_id: str
    priority: int
    root: str
    checks: Tuple[OperandCheck, ...] = ()
    features: Tuple[str, ...] = ()
    emits: str = "NOP"
    intrinsic: Optional[str] = None

    def matcher_opcode(self) -> str:
        return f"call:@{self.intrinsic}" if self.intrinsic else self.root


@dataclass(frozen=True)
class FaultSpec:
    """Injected defect: fires when an otherwise-selectable instruction matches."""

    effect: str  # "abort" | "hang"
    opcode: Optional[str] = None
    int_width: Optional[int] = None

    def triggers(self, opcode: str, slot_types: Sequence[Optional[TypeDesc]]) -> bool:
        if self.opcode is not None and opcode != self.opcode:
            return False
        if self.int_width is not None:
            if not any(_contains_int_width(t, self.int_width) for t in slot_types):
                return False
        return True


def _contains_int_width(t: Optional[TypeDesc], width: int) -> bool:
    if t is None:
        return False
    tt = type(t)
    if tt is IntType:
        return t.width == width
    if tt is VectorType:
        return _contains_int_width(t.lane, width)
    if tt is ArrayType:
        return _contains_int_width(t.elem, width)
    return False


@dataclass
class TargetSpec:
    name: str
    features: Tuple[str, ...] = ()
    int_widths: Tuple[int, ...] = (1, 8, 16, 32, 64)
    float_widths: Tuple[int, ...] = (32, 64)
    vectors: bool = False
    intrinsics: Tuple[IntrinsicDecl, ...] = ()
    patterns: Tuple[PatternDef, ...] = ()
    faults: Tuple[FaultSpec, ...] = ()

    def intrinsic(self, name: str) -> Optional[IntrinsicDecl]:
        for d in self.intrinsics:
            if d.name == name:
                return d
        return None

    def validate(self) -> None:
        known = set(self.features)
        intr = {d.name for d in self.intrinsics}
        prios: Dict[Tuple[str, Optional[str]], set] = {}
        for p in self.patterns:
            for flag in p.features:
                if flag not in known:
                    raise UnknownFeature(f"pattern {p.pattern_id}: unknown feature {flag!r}")
            if p.intrinsic is not None and p.intrinsic not in intr:
                raise TargetError(f"pattern {p.pattern_id}: undeclared intrinsic @{p.intrinsic}")
            key = (p.root, p.intrinsic)
            seen = prios.setdefault(key, set())
            if p.priority in seen:
                raise DuplicatePriority(
                    f"patterns rooted at {key[0]} share priority {p.priority}"
                )
            seen.add(p.priority)
            slots = [c.slot for c in p.checks]
            if len(slots) != len(set(slots)):
                raise TargetError(f"pattern {p.pattern_id}: multiple check lists for one slot")


@dataclass(frozen=True)
class LookupRow:
    start: int
    end: int  # exclusive byte range of the pattern's scope body
    pattern_id: str
    kind: str  # "instruction" | "intrinsic"
    root: str  # opcode name, or the intrinsic name for intrinsic rows


@dataclass
class MatcherProgram:
    target_name: str
    data: bytes
    opcode_ids: Dict[str, int]
    feature_names: Tuple[str, ...]
    patterns: Tuple[PatternDef, ...]
    entry_starts: Tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return len(self.data)


@dataclass
class LookupTable:
    target_name: str
    program_size: int
    rows: Tuple[LookupRow, ...]


def _encode_checks(p: PatternDef, feature_ids: Dict[str, int]) -> bytes:
    out = bytearray()
    for flag in p.features:
        out += struct.pack("<BH", OP_CHECK_FEATURE, feature_ids[flag])
    for c in sorted(p.checks, key=lambda c: c.slot):
        if c.type_class is not None:
            out += struct.pack("<BBBI", OP_CHECK_TYPE, c.slot, c.type_class.kind, c.type_class.param)
        if c.is_const or c.const_range is not None:
            out += struct.pack("<BB", OP_CHECK_IS_CONST, c.slot)
        if c.const_range is not None:
            lo, hi = c.const_range
            out += struct.pack("<BBqq", OP_CHECK_CONST_RANGE, c.slot, lo, hi)
    return bytes(out)


def compile_patterns(t: TargetSpec) -> Tuple[MatcherProgram, LookupTable]:
    """Deterministically compile a target's patterns; also builds the decode table."""
    t.validate()
    feature_ids = {name: i for i, name in enumerate(t.features)}

    groups: Dict[str, List[PatternDef]] = {}
    for p in t.patterns:
        groups.setdefault(p.matcher_opcode(), []).append(p)
    for mop in groups:
        groups[mop].sort(key=lambda p: -p.priority)

    opcode_ids = {mop: i for i, mop in enumerate(groups)}
    pattern_ordinal = {id(p): i for i, p in enumerate(t.patterns)}

    # Precompute pattern body encodings to lay out scope offsets.
    bodies = {id(p): _encode_checks(p, feature_ids) for p in t.patterns}

    data = bytearray()
    entry_starts: List[int] = []
    rows: List[LookupRow] = []

    group_items = list(groups.items())
    # First pass: compute group extents to fill scope skips in one go.
    group_sizes = []
    for mop, plist in group_items:
        size = 5 + 3  # group SCOPE + CHECK_OPCODE
        for p in plist:
            size += 5 + len(bodies[id(p)]) + 3  # pattern SCOPE + checks + EMIT
        size += 1  # group FAIL
        group_sizes.append(size)

    pos = 0
    for (mop, plist), gsize in zip(group_items, group_sizes):
        group_end = pos + gsize
        entry_starts.append(len(data))
        data += struct.pack("<BI", OP_SCOPE, group_end - (pos + 5))
        entry_starts.append(len(data))
        data += struct.pack("<BH", OP_CHECK_OPCODE, opcode_ids[mop])
        fail_pos = group_end - 1
        cursor = pos + 5 + 3
        for p in plist:
            body = bodies[id(p)]
            p_size = 5 + len(body) + 3
            p_next = cursor + p_size  # next pattern scope, or the group FAIL
            entry_starts.append(len(data))
            data += struct.pack("<BI", OP_SCOPE, p_next - (cursor + 5))
            body_start = len(data)
            off = 0
            while off < len(body):
                entry_starts.append(body_start + off)
                off += _entry_length(body[off])
            data += body
            emit_at = len(data)
            entry_starts.append(emit_at)
            data += struct.pack("<BH", OP_EMIT, pattern_ordinal[id(p)])
            # The row range is the EMIT entry: those bytes are read exactly
            # when the pattern is selected, which is what decoding wants.
            rows.append(
                LookupRow(
                    emit_at,
                    emit_at + 3,
                    p.pattern_id,
                    "intrinsic" if p.intrinsic else "instruction",
                    p.intrinsic if p.intrinsic else p.root,
                )
            )
            cursor = p_next
        entry_starts.append(len(data))
        data += bytes((OP_FAIL,))
        assert len(data) == group_end, "group layout mismatch"
        pos = group_end
    entry_starts.append(len(data))
    data += bytes((OP_FAIL,))

    prog = MatcherProgram(
        t.name, bytes(data), opcode_ids, tuple(t.features), tuple(t.patterns), tuple(entry_starts)
    )
    lut = LookupTable(t.name, len(data), tuple(rows))
    return prog, lut


def _entry_length(op: int) -> int:
    if op == OP_SCOPE:
        return 5
    if op == OP_CHECK_OPCODE:
        return 3
    if op == OP_CHECK_TYPE:
        return 7
    if op == OP_CHECK_FEATURE:
        return 3
    if op == OP_CHECK_IS_CONST:
        return 2
    if op == OP_CHECK_CONST_RANGE:
        return 18
    if op == OP_EMIT:
        return 3
    if op == OP_FAIL:
        return 1
    raise TargetError(f"unknown matcher entry opcode {op:#x}")


def validate_program(prog: MatcherProgram) -> None:
    """Depth-first decode must visit every byte exactly once, and all scope
    skips must land on entry boundaries."""
    starts = set(prog.entry_starts)
    pos = 0
    visited = 0
    while pos < len(prog.data):
        if pos not in starts:
            raise TargetError(f"entry at {pos} not on a recorded boundary")
        op = prog.data[pos]
        length = _entry_length(op)
        if op == OP_SCOPE:
            (skip,) = struct.unpack_from("<I", prog.data, pos + 1)
            target = pos + 5 + skip
            if target != len(prog.data) and target not in starts:
                raise TargetError(f"scope at {pos} skips to non-boundary {target}")
        visited += length
        pos += length
    if visited != len(prog.data):
        raise TargetError("decode did not cover the program exactly")


# -- constant evaluation helpers used by the interpreter -------------------------


def const_in_range(c: Const, lo: int, hi: int) -> bool:
    """Signed range test; undef/poison and non-integer constants never match."""
    if isinstance(c.payload, (Undef, Poison)):
        return False
    if not isinstance(c.type, IntType) or not isinstance(c.payload, int):
        return False
    return lo <= signed_value(c.payload, c.type.width) <= hi


# -- builtin targets ----------------------------------------------------------------


def _scalar_patterns(int_widths: Sequence[int], named_widths: Sequence[int]) -> List[PatternDef]:
    """Shared scalar pattern set. Width-specific forms cover `named_widths`;
    width-generic fallbacks (priority 1) keep unusual widths selectable.

    Priority bands keep priorities unique per root opcode: 300+ immediate
    specials, 200+ immediate forms, 100+ register forms, 1 generic fallback.
    """
    ps: List[PatternDef] = []

    def res(tc: str) -> OperandCheck:
        return OperandCheck(0, parse_type_class(tc))

    def op(slot: int, tc: str, const: bool = False, rng: Optional[Tuple[int, int]] = None) -> OperandCheck:
        return OperandCheck(slot, parse_type_class(tc), const, rng)

    for wi, w in enumerate(named_widths):
        for o in INT_ARITH + BITWISE:
            ps.append(PatternDef(f"{o}_i{w}_rr", 100 + wi, o, (res(f"i{w}"),), (), f"{o.upper()}{w}rr"))
        for o in ("add", "and", "or", "xor", "shl"):
            ps.append(
                PatternDef(
                    f"{o}_i{w}_ri",
                    200 + wi,
                    o,
                    (res(f"i{w}"), op(2, f"i{w}", const=True, rng=(-128, 127))),
                    (),
                    f"{o.upper()}{w}ri",
                )
            )
        ps.append(
            PatternDef(
                f"add_i{w}_inc",
                300 + wi,
                "add",
                (res(f"i{w}"), op(2, f"i{w}", const=True, rng=(1, 1))),
                (),
                f"INC{w}",
            )
        )
        ps.append(PatternDef(f"icmp_i{w}_rr", 100 + wi, "icmp", (op(1, f"i{w}"),), (), f"CMP{w}rr"))
        ps.append(
            PatternDef(
                f"icmp_i{w}_ri", 200 + wi, "icmp", (op(1, f"i{w}"), op(2, f"i{w}", const=True)), (), f"CMP{w}ri"
            )
        )
        ps.append(PatternDef(f"load_i{w}", 200 + wi, "load", (res(f"i{w}"),), (), f"LD{w}"))
        ps.append(PatternDef(f"store_i{w}", 200 + wi, "store", (op(1, f"i{w}"),), (), f"ST{w}"))
    for o in INT_ARITH + BITWISE:
        ps.append(PatternDef(f"{o}_gen", 1, o, (res("int"),), (), f"GEN_{o.upper()}"))
    ps.append(PatternDef("icmp_gen", 1, "icmp", (op(1, "int"),), (), "GEN_CMP"))

    # Strength-reduction forms keyed to narrow immediate windows. These are
    # deliberately rare events, so the matcher map keeps gaining entries long
    # after the probe-edge map has gone quiet.
    rare_windows = (("sub", (7, 7)), ("and", (-100, -97)), ("mul", (97, 98)), ("xor", (-61, -61)))
    for wi, w in enumerate(named_widths):
        if w < 8:
            continue
        for o, (lo, hi) in rare_windows:
            ps.append(
                PatternDef(
                    f"{o}_i{w}_magic",
                    400 + wi,
                    o,
                    (res(f"i{w}"), op(2, f"i{w}", const=True, rng=(lo, hi))),
                    (),
                    f"{o.upper()}{w}magic",
                )
            )

    for fi, w in enumerate((32, 64)):
        for o in FP_ARITH:
            ps.append(PatternDef(f"{o}_f{w}", 100 + fi, o, (res(f"f{w}"),), (), f"{o.upper()}{w}"))
        ps.append(PatternDef(f"fneg_f{w}", 100 + fi, "fneg", (res(f"f{w}"),), (), f"FNEG{w}"))
        ps.append(PatternDef(f"fcmp_f{w}", 100 + fi, "fcmp", (op(1, f"f{w}"),), (), f"FCMP{w}"))
        ps.append(PatternDef(f"load_f{w}", 150 + fi, "load", (res(f"f{w}"),), (), f"LDF{w}"))

    for wi, w in enumerate((8, 16, 32, 64)):
        ps.append(PatternDef(f"zext_i{w}", 100 + wi, "zext", (res(f"i{w}"),), (), f"ZEXT{w}"))
        ps.append(PatternDef(f"sext_i{w}", 100 + wi, "sext", (res(f"i{w}"),), (), f"SEXT{w}"))
    for wi, w in enumerate((1, 8, 16, 32)):
        ps.append(PatternDef(f"trunc_i{w}", 100 + wi, "trunc", (res(f"i{w}"),), (), f"TRUNC{w}"))
    ps.append(PatternDef("zext_gen", 1, "zext", (res("int"),), (), "GEN_ZEXT"))
    ps.append(PatternDef("sext_gen", 1, "sext", (res("int"),), (), "GEN_SEXT"))
    ps.append(PatternDef("trunc_gen", 1, "trunc", (res("int"),), (), "GEN_TRUNC"))
    ps.append(PatternDef("fptrunc_f32", 100, "fptrunc", (res("f32"),), (), "FPTRUNC32"))
    ps.append(PatternDef("fptoui_int", 100, "fptoui", (res("int"),), (), "FP2UI"))
    ps.append(PatternDef("fptosi_int", 100, "fptosi", (res("int"),), (), "FP2SI"))
    ps.append(PatternDef("uitofp_fp", 100, "uitofp", (res("fp"),), (), "UI2FP"))
    ps.append(PatternDef("sitofp_fp", 100, "sitofp", (res("fp"),), (), "SI2FP"))
    ps.append(PatternDef("ptrtoint_int", 100, "ptrtoint", (res("int"),), (), "P2I"))
    ps.append(PatternDef("inttoptr_ptr", 100, "inttoptr", (res("ptr"),), (), "I2P"))
    ps.append(PatternDef("bitcast_i32_f32", 200, "bitcast", (res("f32"), op(1, "i32")), (), "BC_I2F32"))
    ps.append(PatternDef("bitcast_i64_f64", 201, "bitcast", (res("f64"), op(1, "i64")), (), "BC_I2F64"))
    ps.append(PatternDef("bitcast_gen", 1, "bitcast", (res("any"),), (), "GEN_BC"))

    ps.append(PatternDef("load_ptr", 140, "load", (res("ptr"),), (), "LDP"))
    ps.append(PatternDef("load_gen", 50, "load", (res("any"),), (), "GEN_LD"))
    ps.append(PatternDef("store_gen", 50, "store", (op(1, "any"),), (), "GEN_ST"))
    ps.append(PatternDef("alloca_frame", 100, "alloca", (res("ptr"),), (), "FRAME"))
    ps.append(
        PatternDef("gep_imm", 200, "getelementptr", (op(2, "int", const=True, rng=(0, 15)),), (), "LEAimm")
    )
    ps.append(PatternDef("gep_reg", 100, "getelementptr", (), (), "LEA"))
    ps.append(PatternDef("extractvalue_gen", 100, "extractvalue", (op(1, "arr"),), (), "XV"))
    ps.append(PatternDef("insertvalue_gen", 100, "insertvalue", (op(1, "arr"),), (), "IV"))
    ps.append(PatternDef("select_scalar", 100, "select", (op(1, "bool"),), (), "CMOV"))
    ps.append(PatternDef("call_any", 100, "call", (), (), "CALL"))
    ps.append(PatternDef("phi_any", 100, "phi", (), (), "PHI"))
    return ps


def _vector_patterns() -> List[PatternDef]:
    """SIMD pattern set (priorities 40..79, below the scalar bands)."""

    def res(tc: str) -> OperandCheck:
        return OperandCheck(0, parse_type_class(tc))

    def op(slot: int, tc: str) -> OperandCheck:
        return OperandCheck(slot, parse_type_class(tc))

    simd = ("simd",)
    ps: List[PatternDef] = []
    for li, lw in enumerate((8, 16, 32, 64)):
        for o in INT_ARITH + BITWISE:
            ps.append(PatternDef(f"v{o}_lane{lw}", 50 + li, o, (res(f"vxi{lw}"),), simd, f"V{o.upper()}x{lw}"))
        ps.append(PatternDef(f"vicmp_lane{lw}", 50 + li, "icmp", (op(1, f"vxi{lw}"),), simd, f"VCMPx{lw}"))
    # Odd lane widths (vectors of i1 etc.) fall through to a lane-generic form.
    for o in INT_ARITH + BITWISE:
        ps.append(PatternDef(f"v{o}_gen", 40, o, (res("vint"),), simd, f"V{o.upper()}gen"))
    ps.append(PatternDef("vicmp_gen", 40, "icmp", (op(1, "vint"),), simd, "VCMPgen"))
    ps.append(PatternDef("vadd_4xi32", 70, "add", (res("v4xi32"),), simd, "VADD4x32"))
    ps.append(PatternDef("vadd_16xi8", 71, "add", (res("v16xi8"),), simd, "VADD16x8"))
    ps.append(PatternDef("vmul_2xi64", 70, "mul", (res("v2xi64"),), simd, "VMUL2x64"))
    ps.append(PatternDef("vsub_8xi16", 70, "sub", (res("v8xi16"),), simd, "VSUB8x16"))
    for fi, fw in enumerate((32, 64)):
        for o in FP_ARITH:
            ps.append(PatternDef(f"v{o}_f{fw}", 60 + fi, o, (res(f"vxf{fw}"),), simd, f"V{o.upper()}x{fw}"))
        ps.append(PatternDef(f"vfneg_f{fw}", 60 + fi, "fneg", (res(f"vxf{fw}"),), simd, f"VFNEGx{fw}"))
        ps.append(PatternDef(f"vfcmp_f{fw}", 60 + fi, "fcmp", (op(1, f"vxf{fw}"),), simd, f"VFCMPx{fw}"))
    ps.append(PatternDef("vselect", 50, "select", (op(1, "vxi1"),), simd, "VSEL"))
    for o in ("extractelement", "insertelement", "shufflevector"):
        ps.append(PatternDef(f"{o}_vint", 60, o, (op(1, "vint"),), simd, f"{o[:4].upper()}_VI"))
        ps.append(PatternDef(f"{o}_vfp", 61, o, (op(1, "vfp"),), simd, f"{o[:4].upper()}_VF"))
        ps.append(PatternDef(f"{o}_gen", 40, o, (), simd, f"{o[:4].upper()}_GEN"))
    ps.append(PatternDef("vzext", 50, "zext", (res("vint"),), simd, "VZEXT"))
    ps.append(PatternDef("vsext", 50, "sext", (res("vint"),), simd, "VSEXT"))
    ps.append(PatternDef("vtrunc", 50, "trunc", (res("vint"),), simd, "VTRUNC"))
    ps.append(PatternDef("vfptrunc", 50, "fptrunc", (res("vfp"),), simd, "VFPTRUNC"))
    ps.append(PatternDef("vuitofp", 50, "uitofp", (res("vfp"),), simd, "VUI2FP"))
    ps.append(PatternDef("vsitofp", 50, "sitofp", (res("vfp"),), simd, "VSI2FP"))
    ps.append(PatternDef("vfptoui", 50, "fptoui", (res("vint"),), simd, "VFP2UI"))
    ps.append(PatternDef("vfptosi", 50, "fptosi", (res("vint"),), simd, "VFP2SI"))
    ps.append(PatternDef("vptrtoint", 50, "ptrtoint", (res("vint"),), simd, "VP2I"))
    ps.append(PatternDef("vinttoptr", 50, "inttoptr", (res("vptr"),), simd, "VI2P"))
    ps.append(PatternDef("vbitcast", 50, "bitcast", (res("vec"),), simd, "VBC"))
    ps.append(PatternDef("vload", 160, "load", (res("vec"),), simd, "VLD"))
    ps.append(PatternDef("vstore", 160, "store", (op(1, "vec"),), simd, "VST"))
    return ps


def _vex_intrinsics() -> Tuple[IntrinsicDecl, ...]:
    i32, i64 = int_type(32), int_type(64)
    f32, f64 = float_type(32), float_type(64)
    v4i32 = vector_type(i32, 4)
    return (
        IntrinsicDecl("llvm.smax.i64", (i64, i64), i64),
        IntrinsicDecl("llvm.umin.i32", (i32, i32), i32),
        IntrinsicDecl("llvm.ctpop.i64", (i64,), i64),
        IntrinsicDecl("llvm.fma.f64", (f64, f64, f64), f64),
        IntrinsicDecl("llvm.sqrt.f32", (f32,), f32),
        IntrinsicDecl("llvm.vmax.v4i32", (v4i32, v4i32), v4i32),
    )


def _intrinsic_patterns() -> List[PatternDef]:
    ps = [
        PatternDef("int_smax64", 10, "call", (), (), "SMAX64", intrinsic="llvm.smax.i64"),
        PatternDef("int_umin32", 10, "call", (), (), "UMIN32", intrinsic="llvm.umin.i32"),
        PatternDef("int_ctpop64", 10, "call", (), (), "CTPOP64", intrinsic="llvm.ctpop.i64"),
        PatternDef("int_fma64", 10, "call", (), (), "FMA64", intrinsic="llvm.fma.f64"),
        PatternDef("int_sqrt32", 10, "call", (), (), "SQRT32", intrinsic="llvm.sqrt.f32"),
        PatternDef("int_vmax4x32", 10, "call", (), ("simd",), "VMAX4x32", intrinsic="llvm.vmax.v4i32"),
    ]
    return ps


def builtin_targets() -> List[TargetSpec]:
    """The shipped targets: scalar-only alpha, vector+intrinsic vex, and
    vex-trap, a vex variant with an i20 width whose selection aborts (a
    seeded defect for exercising the finding pipeline)."""
    scalar_widths = (1, 8, 16, 32, 64)
    alpha = TargetSpec(
        name="alpha",
        features=(),
        int_widths=scalar_widths,
        vectors=False,
        patterns=tuple(_scalar_patterns(scalar_widths, scalar_widths)),
    )
    vex = TargetSpec(
        name="vex",
        features=("simd",),
        int_widths=scalar_widths,
        vectors=True,
        intrinsics=_vex_intrinsics(),
        patterns=tuple(
            _scalar_patterns(scalar_widths, scalar_widths) + _vector_patterns() + _intrinsic_patterns()
        ),
    )
    trap_widths = (1, 8, 16, 20, 32, 64)
    vex_trap = TargetSpec(
        name="vex-trap",
        features=("simd",),
        int_widths=trap_widths,
        vectors=True,
        intrinsics=_vex_intrinsics(),
        patterns=tuple(
            _scalar_patterns(trap_widths, scalar_widths) + _vector_patterns() + _intrinsic_patterns()
        ),
        faults=(FaultSpec("abort", int_width=20),),
    )
    for t in (alpha, vex, vex_trap):
        t.validate()
    return [alpha, vex, vex_trap]


def get_target(name: str) -> TargetSpec:
    for t in builtin_targets():
        if t.name == name:
            return t
    raise TargetError(f"unknown target {name!r} (builtins: alpha, vex, vex-trap)")


# -- declarative target file format -------------------------------------------------


def parse_target_file(text: str) -> TargetSpec:
    """Parse the one-directive-per-line target description format."""
    name = "custom"
    features: List[str] = []
    int_widths: List[int] = []
    float_widths: List[int] = [32, 64]
    vectors = False
    intrinsics: List[IntrinsicDecl] = []
    patterns: List[PatternDef] = []
    faults: List[FaultSpec] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        try:
            if head == "target":
                name = toks[1]
            elif head == "feature":
                features.extend(toks[1:])
            elif head == "widths":
                int_widths = [int(x) for x in toks[1:]]
            elif head == "floats":
                float_widths = [int(x) for x in toks[1:]]
            elif head == "vectors":
                vectors = toks[1] == "on"
            elif head == "intrinsic":
                intrinsics.append(_parse_intrinsic_line(line[len("intrinsic") :].strip()))
            elif head == "pattern":
                patterns.append(_parse_pattern_line(toks[1:]))
            elif head == "fault":
                faults.append(_parse_fault_line(toks[1:]))
            else:
                raise TargetError(f"unknown directive {head!r}")
        except (IndexError, ValueError) as e:
            raise TargetError(f"line {lineno}: {e}") from None
        except TargetError as e:
            raise TargetError(f"line {lineno}: {e}") from None

    spec = TargetSpec(
        name=name,
        features=tuple(features),
        int_widths=tuple(int_widths) if int_widths else (1, 8, 16, 32, 64),
        float_widths=tuple(float_widths),
        vectors=vectors,
        intrinsics=tuple(intrinsics),
        patterns=tuple(patterns),
        faults=tuple(faults),
    )
    spec.validate()
    return spec


def _parse_intrinsic_line(rest: str) -> IntrinsicDecl:
    mo = re.fullmatch(r"@([\w.$]+)\s*\(([^)]*)\)\s*->\s*(\S+)", rest)
    if not mo:
        raise TargetError(f"bad intrinsic declaration {rest!r}")
    from .ir.parser import _Parser

    def ty(tok: str) -> TypeDesc:
        return _Parser(tok).parse_type()

    params = tuple(ty(p.strip()) for p in mo.group(2).split(",") if p.strip())
    ret_tok = mo.group(3)
    ret = None if ret_tok == "void" else ty(ret_tok)
    return IntrinsicDecl(mo.group(1), params, ret)


def _parse_pattern_line(toks: List[str]) -> PatternDef:
    if len(toks) < 3:
        raise TargetError("pattern needs: <id> <prio> <opcode> [checks...] [requires f...] emits <mop>")
    pid, prio, root = toks[0], int(toks[1]), toks[2]
    i = 3
    intrinsic = None
    checks: List[OperandCheck] = []
    features: List[str] = []
    emits = None
    while i < len(toks):
        tok = toks[i]
        if tok == "intrinsic":
            intrinsic = toks[i + 1].lstrip("@")
            i += 2
        elif tok == "requires":
            i += 1
            while i < len(toks) and toks[i] != "emits":
                features.append(toks[i])
                i += 1
        elif tok == "emits":
            emits = toks[i + 1]
            i += 2
        else:
            checks.append(_parse_check_token(tok))
            i += 1
    if emits is None:
        raise TargetError("pattern is missing its emits clause")
    return PatternDef(pid, prio, root, tuple(checks), tuple(features), emits, intrinsic)


def _parse_check_token(tok: str) -> OperandCheck:
    mo = re.fullmatch(r"(res|op(\d+))=(.+)", tok)
    if not mo:
        raise TargetError(f"bad check token {tok!r}")
    slot = 0 if mo.group(1) == "res" else int(mo.group(2))
    spec = mo.group(3).split(":")
    tc = None if spec[0] == "const" else parse_type_class(spec[0])
    is_const = "const" in spec
    rng = None
    for part in spec:
        mo2 = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", part)
        if mo2:
            rng = (int(mo2.group(1)), int(mo2.group(2)))
            is_const = True
    return OperandCheck(slot, tc, is_const, rng)


def _parse_fault_line(toks: List[str]) -> FaultSpec:
    if not toks or toks[0] not in ("abort", "hang") or (len(toks) > 1 and toks[1] != "when"):
        raise TargetError("fault needs: <abort|hang> when [opcode <op>] [int-width <w>]")
    effect = toks[0]
    opcode = None
    width = None
    i = 2
    while i < len(toks):
        if toks[i] == "opcode":
            opcode = toks[i + 1]
            i += 2
        elif toks[i] == "int-width":
            width = int(toks[i + 1])
            i += 2
        else:
            raise TargetError(f"unknown fault clause {toks[i]!r}")
    return FaultSpec(effect, opcode, width)


def format_pattern_line(p: PatternDef) -> str:
    parts = [f"pattern {p.pattern_id} {p.priority} {p.root}"]
    if p.intrinsic:
        parts.append(f"intrinsic @{p.intrinsic}")
    for c in p.checks:
        slot = "res" if c.slot == 0 else f"op{c.slot}"
        spec = []
        if c.type_class is not None:
            spec.append(format_type_class(c.type_class))
        if c.const_range is not None:
            spec.append("const")
            spec.append(f"{c.const_range[0]}..{c.const_range[1]}")
        elif c.is_const:
            spec.append("const")
        parts.append(f"{slot}={':'.join(spec)}")
    if p.features:
        parts.append("requires " + " ".join(p.features))
    parts.append(f"emits {p.emits}")
    return " ".join(parts)
