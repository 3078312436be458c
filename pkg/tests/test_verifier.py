"""Verifier unit tests: the examples plus an accept/reject case per modeled
opcode row."""

import pytest

from conftest import I1, I8, I16, I32, I64, listing_module
from matchfuzz.ir import (
    BasicBlock,
    Br,
    CondBr,
    Const,
    FunctionDef,
    GlobalVar,
    InstrRef,
    Instruction,
    IntrinsicDecl,
    ModuleUnit,
    Ret,
    Switch,
    UNDEF,
    VecConst,
    int_type,
    parse_module,
    vector_type,
)
from matchfuzz.ir.types import ADDR, F32, F64, array_type
from matchfuzz.verifier import (
    BAD_INDEX,
    BAD_TERMINATOR,
    DOMINANCE_VIOLATION,
    NAME_CLASH,
    PHI_ARITY,
    TYPE_MISMATCH,
    USE_BEFORE_DEF,
    verify_module,
)

V4I32 = vector_type(I32, 4)
V4I8 = vector_type(I8, 4)
V4F32 = vector_type(F32, 4)
A4I32 = array_type(I32, 4)


def kinds(m):
    return [v.kind for v in verify_module(m)]


def wrap(ins: Instruction, *, ret=None) -> ModuleUnit:
    """One function, one block, one instruction under test."""
    entry = BasicBlock("Entry")
    f = FunctionDef("t", (), ret, [entry])
    entry.body.append(ins)
    entry.terminator = Ret(None if ret is None else Const(ret, 0))
    return ModuleUnit(functions=[f])


def test_generated_module_is_valid():
    assert verify_module(listing_module()) == []


def test_sibling_block_use_is_dominance_violation():
    # C defines a value, its sibling B uses it; neither dominates the other.
    a, b, c = BasicBlock("A"), BasicBlock("B"), BasicBlock("C")
    f = FunctionDef("f", (), None, [a, b, c])
    a.terminator = CondBr(Const(I1, 1), "B", "C")
    c.body.append(Instruction("add", (Const(I32, 1), Const(I32, 2)), I32))
    c.terminator = Ret(None)
    use = Instruction("add", (InstrRef("f", "C", 0), Const(I32, 3)), I32)
    b.body.append(use)
    b.terminator = Ret(None)
    assert DOMINANCE_VIOLATION in kinds(ModuleUnit(functions=[f]))


def test_add_width_mismatch_violates_same_as_first():
    ins = Instruction("add", (Const(I8, 1), Const(I16, 1)), I8)
    assert TYPE_MISMATCH in kinds(wrap(ins))


def test_extractelement_undef_index_is_legal():
    ins = Instruction(
        "extractelement", (Const(V4I32, VecConst((1, 2, 3, 4))), Const(I8, UNDEF)), I32
    )
    assert kinds(wrap(ins)) == []


def test_extractelement_out_of_range_constant_index_is_legal():
    ins = Instruction(
        "extractelement", (Const(V4I32, VecConst((1, 2, 3, 4))), Const(I32, 99)), I32
    )
    assert kinds(wrap(ins)) == []


def test_verify_is_pure():
    m = listing_module()
    m.functions[0].blocks[0].body[0] = Instruction("add", (Const(I8, 1), Const(I16, 1)), I8)
    first = verify_module(m)
    second = verify_module(m)
    assert first == second and first


def test_phi_one_incoming_per_predecessor():
    text = """
    define i32 @f(i1 %c) {
    E:
      br i1 %c, label L, label R
    L:
      br label J
    R:
      br label J
    J:
      %p = phi i32 [ i32 1, L ], [ i32 2, R ]
      ret i32 %p
    }
    """
    m = parse_module(text)
    assert verify_module(m) == []
    # drop one incoming: arity violation
    phi = m.functions[0].block("J").phis[0]
    phi.operands = phi.operands[:1]
    phi.incoming = phi.incoming[:1]
    assert PHI_ARITY in kinds(m)


def test_phi_self_loop_accepted():
    text = """
    define void @f(i1 %c) {
    E:
      br label L
    L:
      %p = phi i32 [ i32 0, E ], [ %p, L ]
      br i1 %c, label L, label X
    X:
      ret
    }
    """
    assert verify_module(parse_module(text)) == []


def test_phi_incoming_must_dominate_edge():
    text = """
    define void @f(i1 %c) {
    E:
      br i1 %c, label L, label J
    L:
      %v = add i32 1, i32 2
      br label J
    J:
      %p = phi i32 [ %v, L ], [ %v, E ]
      ret
    }
    """
    # %v dominates the L edge but not the E edge.
    assert DOMINANCE_VIOLATION in kinds(parse_module(text))


def test_terminator_checks():
    m = listing_module()
    m.functions[0].blocks[0].terminator = Br("Missing")
    assert BAD_TERMINATOR in kinds(m)

    m = listing_module()
    m.functions[0].blocks[0].terminator = Ret(None)  # non-void function
    assert BAD_TERMINATOR in kinds(m)

    m = wrap(Instruction("add", (Const(I32, 1), Const(I32, 1)), I32))
    m.functions[0].blocks[0].terminator = CondBr(Const(I32, 1), "Entry", "Entry")
    assert TYPE_MISMATCH in kinds(m)  # condition must be i1


def test_switch_case_rules():
    e, d = BasicBlock("E"), BasicBlock("D")
    f = FunctionDef("f", (I8,), None, [e, d])
    d.terminator = Ret(None)
    e.terminator = Switch(Const(I8, 0), ((5, "D"), (5, "D")), "D")
    assert BAD_TERMINATOR in kinds(ModuleUnit(functions=[f]))  # duplicate case
    e.terminator = Switch(Const(I8, 0), ((300, "D"),), "D")
    assert BAD_TERMINATOR in kinds(ModuleUnit(functions=[f]))  # 300 does not fit i8
    e.terminator = Switch(Const(F32, 0), ((1, "D"),), "D")
    assert TYPE_MISMATCH in kinds(ModuleUnit(functions=[f]))  # non-integer scrutinee


def test_entry_block_predecessor_flagged():
    m = parse_module("define void @f() { E: br label E }")
    assert BAD_TERMINATOR in kinds(m)


def test_name_clash():
    m = ModuleUnit(globals=[GlobalVar("g", I32), GlobalVar("g", I64)])
    assert NAME_CLASH in kinds(m)


def test_call_signature_checked():
    decl = IntrinsicDecl("llvm.smax.i64", (I64, I64), I64)
    good = wrap(Instruction("call", (Const(I64, 1), Const(I64, 2)), I64, callee="llvm.smax.i64"))
    good.intrinsics.append(decl)
    assert kinds(good) == []
    bad = wrap(Instruction("call", (Const(I32, 1), Const(I64, 2)), I64, callee="llvm.smax.i64"))
    bad.intrinsics.append(decl)
    assert TYPE_MISMATCH in kinds(bad)
    unknown = wrap(Instruction("call", (), None, callee="nope"))
    assert USE_BEFORE_DEF in kinds(unknown)


def test_unreachable_block_permitted():
    text = """
    define void @f() {
    E:
      ret
    Dead:
      %x = add i32 1, i32 2
      ret
    }
    """
    assert verify_module(parse_module(text)) == []


# --- one accepting and one rejecting case per modeled instruction row ---------

C32 = lambda v: Const(I32, v)
C8 = lambda v: Const(I8, v)
CF32 = lambda v: Const(F32, v)
CV = Const(V4I32, VecConst((1, 2, 3, 4)))
CA = Const(A4I32, UNDEF)
CP = Const(ADDR, UNDEF)

ROW_CASES = []


def row(opcode, good, bad):
    ROW_CASES.append(pytest.param(good, True, id=f"{opcode}-accept"))
    ROW_CASES.append(pytest.param(bad, False, id=f"{opcode}-reject"))


for op in ("add", "sub", "mul", "sdiv", "udiv", "srem", "urem", "shl", "lshr", "ashr", "and", "or", "xor"):
    row(
        op,
        Instruction(op, (C32(1), C32(2)), I32),
        Instruction(op, (CF32(0), CF32(0)), F32),  # ints only
    )
for op in ("fadd", "fsub", "fmul", "fdiv", "frem"):
    row(
        op,
        Instruction(op, (CF32(0), CF32(0)), F32),
        Instruction(op, (C32(1), C32(2)), I32),  # floats only
    )
row("fneg", Instruction("fneg", (CF32(0),), F32), Instruction("fneg", (C32(1),), I32))
row(
    "extractelement",
    Instruction("extractelement", (CV, C8(1)), I32),
    Instruction("extractelement", (C32(1), C8(1)), I32),  # not a vector
)
row(
    "insertelement",
    Instruction("insertelement", (CV, C32(9), C8(0)), V4I32),
    Instruction("insertelement", (CV, C8(9), C8(0)), V4I32),  # lane type mismatch
)
row(
    "shufflevector",
    Instruction("shufflevector", (CV, CV), V4I32, mask=(0, 1, 4, 5)),
    Instruction("shufflevector", (CV, Const(vector_type(I32, 8), UNDEF)), V4I32, mask=(0, 1, 2, 3)),
)
row(
    "extractvalue",
    Instruction("extractvalue", (CA,), I32, agg_index=2),
    Instruction("extractvalue", (CV,), I32, agg_index=0),  # vector is not an aggregate
)
row(
    "insertvalue",
    Instruction("insertvalue", (CA, C32(5)), A4I32, agg_index=1),
    Instruction("insertvalue", (CA, C8(5)), A4I32, agg_index=1),  # element type mismatch
)
row(
    "getelementptr",
    Instruction("getelementptr", (CP, C32(1)), ADDR, source_type=A4I32),
    Instruction("getelementptr", (C32(0), C32(1)), ADDR, source_type=A4I32),  # base not addr
)
row(
    "trunc",
    Instruction("trunc", (C32(7),), I8),
    Instruction("trunc", (C8(7),), I32),  # destination must be narrower
)
row("zext", Instruction("zext", (C8(1),), I32), Instruction("zext", (C32(1),), I8))
row("sext", Instruction("sext", (C8(1),), I64), Instruction("sext", (C8(1),), I8))
row(
    "fptrunc",
    Instruction("fptrunc", (Const(F64, 0),), F32),
    Instruction("fptrunc", (CF32(0),), F32),  # narrowest float has nothing below it
)
row("fptoui", Instruction("fptoui", (CF32(0),), I32), Instruction("fptoui", (C32(0),), I32))
row("fptosi", Instruction("fptosi", (CF32(0),), I8), Instruction("fptosi", (CF32(0),), F32))
row("uitofp", Instruction("uitofp", (C32(1),), F64), Instruction("uitofp", (CF32(0),), F64))
row("sitofp", Instruction("sitofp", (C8(1),), F32), Instruction("sitofp", (C8(1),), I32))
row(
    "ptrtoint",
    Instruction("ptrtoint", (CP,), I64),
    Instruction("ptrtoint", (C32(0),), I64),
)
row(
    "inttoptr",
    Instruction("inttoptr", (C32(0),), ADDR),
    Instruction("inttoptr", (CP,), ADDR),
)
row(
    "bitcast",
    Instruction("bitcast", (C32(0),), F32),
    Instruction("bitcast", (C32(0),), F64),  # bit widths differ
)
row(
    "icmp",
    Instruction("icmp", (C32(1), C32(2)), I1, pred="slt"),
    Instruction("icmp", (C32(1), C32(2)), I1, pred="olt"),  # float predicate
)
row(
    "fcmp",
    Instruction("fcmp", (CF32(0), CF32(0)), I1, pred="olt"),
    Instruction("fcmp", (CF32(0), C32(0)), I1, pred="olt"),
)
row(
    "select",
    Instruction("select", (Const(I1, 1), C32(1), C32(2)), I32),
    Instruction("select", (C32(1), C32(1), C32(2)), I32),  # condition must be bool
)
row(
    "alloca",
    Instruction("alloca", (), ADDR, alloc_type=I64),
    Instruction("alloca", (), I64, alloc_type=I64),  # result must be an address
)
row(
    "load",
    Instruction("load", (CP,), I64),
    Instruction("load", (C32(0),), I64),
)
row(
    "store",
    Instruction("store", (C32(1), CP), None),
    Instruction("store", (CP, C32(1)), None),
)


@pytest.mark.parametrize("ins,valid", ROW_CASES)
def test_instruction_row(ins, valid):
    violations = verify_module(wrap(ins))
    if valid:
        assert violations == []
    else:
        assert violations


def test_bad_aggregate_index():
    ins = Instruction("extractvalue", (CA,), I32, agg_index=4)
    assert BAD_INDEX in kinds(wrap(ins))


def test_shuffle_mask_out_of_range():
    ins = Instruction("shufflevector", (CV, CV), V4I32, mask=(0, 1, 2, 8))
    assert BAD_INDEX in kinds(wrap(ins))


def test_phi_after_body_instruction_flagged():
    m = listing_module()
    blk = m.functions[0].blocks[0]
    blk.body.append(Instruction("phi", (Const(I32, 1),), I32, incoming=("Entry",)))
    assert PHI_ARITY in kinds(m)
