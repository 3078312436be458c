"""Declarative operand/result modeling for the instruction vocabulary.

Each modeled opcode gets a row describing, per operand slot, the admissible
types (possibly relative to earlier operands) plus a result-type rule. The
verifier consumes the rows as yes/no checks; the parser uses the result rules
to derive result types the text does not spell; the mutator runs the same
rules in reverse when planning new instructions.

Constraint vocabulary (by example):
  anyIntOrVecInt        add's both operands, with the second sameAsFirst
  anyFPOrVecFP          fadd-family operands
  anyVector / anyInt    extractelement's vector and index
  matchScalarOfFirst    insertelement's inserted scalar, insertvalue's element
  matchLengthOfFirst    shufflevector's second vector, select's first arm
  VecOfConstI32         the shuffle mask (held as an immediate, not an operand)
  anyAggregateOrArray   extract/insertvalue's aggregate
  anyConstInt           aggregate indices (immediates)
  anySized/pointerOfFirst/anyInt   getelementptr
  lower/higher precision relations  the int cast family
  anyTypeWithSameBitWidth           bitcast
  anyBoolOrVecBool / sameAsSecond   select

The source operand of fptrunc must not be the narrowest float (there must be
something to truncate to), and its destination must be a float shape of
strictly lower precision than the source.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional, Sequence, Tuple

from .instructions import (
    AGG_OPS,
    BITWISE,
    CAST_OPS,
    FCMP_PREDS,
    FP_ARITH,
    ICMP_PREDS,
    INT_ARITH,
    Instruction,
)
from .types import (
    ArrayType,
    FloatType,
    IntType,
    TypeDesc,
    VECTOR_COUNTS,
    VectorType,
    bit_width,
    is_addr,
    is_int,
    is_sized,
    is_vector,
    same_shape,
    scalar_of,
    vector_type,
    with_lanes_of,
    BOOL,
)

MIN_FLOAT_WIDTH = 32

Types = Sequence[Optional[TypeDesc]]


def int_or_vecint(t: TypeDesc) -> bool:
    return type(t) is IntType or (type(t) is VectorType and type(t.lane) is IntType)


def fp_or_vecfp(t: TypeDesc) -> bool:
    return type(t) is FloatType or (type(t) is VectorType and type(t.lane) is FloatType)


def addr_or_vecaddr(t: TypeDesc) -> bool:
    return is_addr(t) or (type(t) is VectorType and is_addr(t.lane))


def bool_or_vecbool(t: TypeDesc) -> bool:
    s = scalar_of(t)
    return type(s) is IntType and s.width == 1


def non_bool_int_or_vecint(t: TypeDesc) -> bool:
    s = scalar_of(t)
    return int_or_vecint(t) and s.width >= 2


def match_length_of(first: TypeDesc, t: TypeDesc) -> bool:
    """Same vector-ness; vectors must agree on lane count."""
    return same_shape(first, t)


def bitcastable(t: TypeDesc) -> bool:
    return bit_width(t) is not None


# -- result-type rules ---------------------------------------------------------


def derive_result_type(opcode: str, op_types: Types, ins: Instruction) -> Optional[TypeDesc]:
    """Result type implied by the operand types; None if underdetermined.

    Only called for opcodes whose textual form omits the result type. Invalid
    operand combinations yield a best-effort answer (or None); the verifier is
    the authority on validity.
    """
    t0 = op_types[0] if op_types else None
    if t0 is None:
        return None
    if opcode in _SAME_AS_FIRST_RESULT:
        return t0
    if opcode == "extractelement":
        return t0.lane if type(t0) is VectorType else None
    if opcode == "shufflevector":
        if type(t0) is VectorType and ins.mask is not None and len(ins.mask) in VECTOR_COUNTS:
            return vector_type(t0.lane, len(ins.mask))
        return None
    if opcode == "extractvalue":
        return t0.elem if type(t0) is ArrayType else None
    if opcode in ("icmp", "fcmp"):
        return with_lanes_of(t0, BOOL)
    if opcode == "select":
        return op_types[1] if len(op_types) > 1 else None
    return None


_SAME_AS_FIRST_RESULT = frozenset(
    ("fneg",) + INT_ARITH + FP_ARITH + BITWISE + ("insertelement", "insertvalue")
)

# Opcodes whose textual form states the result type explicitly.
EXPLICIT_RESULT_OPCODES = frozenset(
    ("alloca", "load", "getelementptr", "call", "phi") + CAST_OPS
)


# -- verification rows -----------------------------------------------------------

# Each check is fn(instruction, operand types) -> error message or None.
CheckFn = Callable[[Instruction, Types], Optional[str]]


def _mk_binop(pred, kind: str) -> CheckFn:
    def check(ins: Instruction, ts: Types) -> Optional[str]:
        t0, t1 = ts
        if not pred(t0):
            return f"first operand must be {kind}, got {t0}"
        if t1 != t0:
            return f"second operand must match the first (sameAsFirst), got {t1} vs {t0}"
        if ins.result_type != t0:
            return f"result type {ins.result_type} must equal operand type {t0}"
        return None

    return check


def _check_fneg(ins: Instruction, ts: Types) -> Optional[str]:
    if not fp_or_vecfp(ts[0]):
        return f"operand must be a float or float vector, got {ts[0]}"
    if ins.result_type != ts[0]:
        return "result type must equal the operand type"
    return None


def _check_extractelement(ins: Instruction, ts: Types) -> Optional[str]:
    t0, t1 = ts
    if not is_vector(t0):
        return f"first operand must be a vector, got {t0}"
    if not is_int(t1):
        return f"index must be an integer, got {t1}"
    if ins.result_type != t0.lane:
        return "result type must be the vector's lane type"
    return None


def _check_insertelement(ins: Instruction, ts: Types) -> Optional[str]:
    t0, t1, t2 = ts
    if not is_vector(t0):
        return f"first operand must be a vector, got {t0}"
    if t1 != t0.lane:
        return f"inserted value must match the lane type {t0.lane}, got {t1}"
    if not is_int(t2):
        return f"index must be an integer, got {t2}"
    if ins.result_type != t0:
        return "result type must equal the vector type"
    return None


def _check_shufflevector(ins: Instruction, ts: Types) -> Optional[str]:
    t0, t1 = ts
    if not is_vector(t0):
        return f"first operand must be a vector, got {t0}"
    if not is_vector(t1) or t1.count != t0.count:
        return f"second operand must be a vector of {t0.count} lanes, got {t1}"
    if ins.mask is None or len(ins.mask) not in VECTOR_COUNTS:
        return f"mask length must be one of {VECTOR_COUNTS}"
    if ins.result_type != vector_type(t0.lane, len(ins.mask)):
        return "result type must be a vector of the first operand's lanes, sized by the mask"
    return None


def _check_extractvalue(ins: Instruction, ts: Types) -> Optional[str]:
    t0 = ts[0]
    if type(t0) is not ArrayType:
        return f"operand must be an array, got {t0}"
    if ins.result_type != t0.elem:
        return "result type must be the array element type"
    return None


def _check_insertvalue(ins: Instruction, ts: Types) -> Optional[str]:
    t0, t1 = ts
    if type(t0) is not ArrayType:
        return f"first operand must be an array, got {t0}"
    if t1 != t0.elem:
        return f"inserted value must match the element type {t0.elem}, got {t1}"
    if ins.result_type != t0:
        return "result type must equal the array type"
    return None


def _check_gep(ins: Instruction, ts: Types) -> Optional[str]:
    if not is_sized(ins.source_type):
        return "indexed type must be sized"
    if not is_addr(ts[0]):
        return f"base must be an address, got {ts[0]}"
    if not is_int(ts[1]):
        return f"index must be an integer, got {ts[1]}"
    if not is_addr(ins.result_type):
        return "result type must be the address type"
    return None


def _int_prec(src_pred, dst_pred, direction: int, src_extra=None) -> CheckFn:
    def check(ins: Instruction, ts: Types) -> Optional[str]:
        t0 = ts[0]
        r = ins.result_type
        if not src_pred(t0):
            return f"source type {t0} not admissible"
        if src_extra is not None:
            msg = src_extra(t0)
            if msg:
                return msg
        if r is None or not dst_pred(r):
            return f"destination type {r} not admissible"
        if not same_shape(t0, r):
            return "source and destination must have the same vector shape"
        sw, dw = scalar_of(t0).width, scalar_of(r).width
        if direction < 0 and not dw < sw:
            return f"destination width {dw} must be lower than source width {sw}"
        if direction > 0 and not dw > sw:
            return f"destination width {dw} must be higher than source width {sw}"
        return None

    return check


def _kind_change(src_pred, dst_pred, src_name: str, dst_name: str) -> CheckFn:
    def check(ins: Instruction, ts: Types) -> Optional[str]:
        t0 = ts[0]
        r = ins.result_type
        if not src_pred(t0):
            return f"source must be {src_name}, got {t0}"
        if r is None or not dst_pred(r):
            return f"destination must be {dst_name}, got {r}"
        if not same_shape(t0, r):
            return "source and destination must have the same vector shape"
        return None

    return check


def _check_bitcast(ins: Instruction, ts: Types) -> Optional[str]:
    t0 = ts[0]
    r = ins.result_type
    if not bitcastable(t0):
        return f"source type {t0} has no bit width"
    if r is None or not bitcastable(r):
        return f"destination type {r} has no bit width"
    if bit_width(t0) != bit_width(r):
        return f"bit widths differ: {bit_width(t0)} vs {bit_width(r)}"
    return None


def _mk_cmp(pred, preds: Tuple[str, ...], kind: str) -> CheckFn:
    valid = frozenset(preds)

    def check(ins: Instruction, ts: Types) -> Optional[str]:
        if ins.pred not in valid:
            return f"unknown predicate {ins.pred!r}"
        t0, t1 = ts
        if not pred(t0):
            return f"operands must be {kind}, got {t0}"
        if t1 != t0:
            return f"second operand must match the first, got {t1} vs {t0}"
        if ins.result_type != with_lanes_of(t0, BOOL):
            return "result must be i1 (or a matching vector of i1)"
        return None

    return check


def _check_select(ins: Instruction, ts: Types) -> Optional[str]:
    t0, t1, t2 = ts
    if not bool_or_vecbool(t0):
        return f"condition must be i1 or a vector of i1, got {t0}"
    if is_vector(t0) and not (is_vector(t1) and t1.count == t0.count):
        return f"arms must be vectors of {t0.count} lanes, got {t1}"
    if not is_vector(t0) and is_vector(t1):
        return "scalar condition requires scalar arms"
    if t2 != t1:
        return f"arms must have the same type (sameAsSecond), got {t2} vs {t1}"
    if ins.result_type != t1:
        return "result type must equal the arm type"
    return None


def _check_alloca(ins: Instruction, ts: Types) -> Optional[str]:
    if not is_sized(ins.alloc_type):
        return "allocated type must be sized"
    if not is_addr(ins.result_type):
        return "alloca result must be the address type"
    return None


def _check_load(ins: Instruction, ts: Types) -> Optional[str]:
    if not is_addr(ts[0]):
        return f"load address must be ptr, got {ts[0]}"
    if not is_sized(ins.result_type):
        return "loaded type must be sized"
    return None


def _check_store(ins: Instruction, ts: Types) -> Optional[str]:
    if not is_sized(ts[0]):
        return "stored value must be sized"
    if not is_addr(ts[1]):
        return f"store address must be ptr, got {ts[1]}"
    if ins.result_type is not None:
        return "store produces no value"
    return None


def _fptrunc_src(t0: TypeDesc) -> Optional[str]:
    if scalar_of(t0).width <= MIN_FLOAT_WIDTH:
        return "source float must be wider than the narrowest float type"
    return None


OPCODE_ARITY: Dict[str, int] = {}
OPCODE_CHECKS: Dict[str, CheckFn] = {}
# Immediate payloads required (and verified) per opcode beyond the operand list.
OPCODE_MASK_RANGE_CHECKED = frozenset(("shufflevector",))


def _register(op: str, arity: int, check: CheckFn) -> None:
    OPCODE_ARITY[op] = arity
    OPCODE_CHECKS[op] = check


for _op in INT_ARITH + BITWISE:
    _register(_op, 2, _mk_binop(int_or_vecint, "an integer or integer vector"))
for _op in FP_ARITH:
    _register(_op, 2, _mk_binop(fp_or_vecfp, "a float or float vector"))
_register("fneg", 1, _check_fneg)
_register("extractelement", 2, _check_extractelement)
_register("insertelement", 3, _check_insertelement)
_register("shufflevector", 2, _check_shufflevector)
_register("extractvalue", 1, _check_extractvalue)
_register("insertvalue", 2, _check_insertvalue)
_register("getelementptr", 2, _check_gep)
_register("trunc", 1, _int_prec(non_bool_int_or_vecint, int_or_vecint, -1))
_register("zext", 1, _int_prec(int_or_vecint, int_or_vecint, +1))
_register("sext", 1, _int_prec(int_or_vecint, int_or_vecint, +1))
_register("fptrunc", 1, _int_prec(fp_or_vecfp, fp_or_vecfp, -1, src_extra=_fptrunc_src))
_register("fptoui", 1, _kind_change(fp_or_vecfp, int_or_vecint, "float-like", "integer-like"))
_register("fptosi", 1, _kind_change(fp_or_vecfp, int_or_vecint, "float-like", "integer-like"))
_register("uitofp", 1, _kind_change(int_or_vecint, fp_or_vecfp, "integer-like", "float-like"))
_register("sitofp", 1, _kind_change(int_or_vecint, fp_or_vecfp, "integer-like", "float-like"))
_register("ptrtoint", 1, _kind_change(addr_or_vecaddr, int_or_vecint, "ptr-like", "integer-like"))
_register("inttoptr", 1, _kind_change(int_or_vecint, addr_or_vecaddr, "integer-like", "ptr-like"))
_register("bitcast", 1, _check_bitcast)
_register("icmp", 2, _mk_cmp(int_or_vecint, ICMP_PREDS, "integers or integer vectors"))
_register("fcmp", 2, _mk_cmp(fp_or_vecfp, FCMP_PREDS, "floats or float vectors"))
_register("select", 3, _check_select)
_register("alloca", 0, _check_alloca)
_register("load", 1, _check_load)
_register("store", 2, _check_store)
# call and phi are checked contextually by the verifier.
