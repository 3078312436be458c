"""Target compilation: encoding layout, lookup table soundness, priorities,
the declarative file format, and built-in target contents."""

import pytest

from matchfuzz.ir import IntrinsicDecl, int_type
from matchfuzz.target import (
    DuplicatePriority,
    OP_CHECK_OPCODE,
    OP_EMIT,
    OP_FAIL,
    OP_SCOPE,
    OperandCheck,
    PatternDef,
    TargetError,
    TargetSpec,
    UnknownFeature,
    builtin_targets,
    compile_patterns,
    format_pattern_line,
    get_target,
    parse_target_file,
    parse_type_class,
    validate_program,
)


def decode_entries(prog):
    """Linear decode into (offset, opcode byte) pairs."""
    from matchfuzz.target import _entry_length

    out = []
    pos = 0
    while pos < len(prog.data):
        op = prog.data[pos]
        out.append((pos, op))
        pos += _entry_length(op)
    return out


def test_minimal_single_pattern_layout():
    t = TargetSpec(name="mini", patterns=(PatternDef("p0", 1, "add", (), (), "ADD"),))
    prog, lut = compile_patterns(t)
    ops = [op for _, op in decode_entries(prog)]
    # one opcode check and one emit, wrapped in scopes, closed by fails
    assert ops == [OP_SCOPE, OP_CHECK_OPCODE, OP_SCOPE, OP_EMIT, OP_FAIL, OP_FAIL]
    assert len(lut.rows) == 1
    row = lut.rows[0]
    assert row.pattern_id == "p0" and row.kind == "instruction" and row.root == "add"
    # the EMIT entry's byte index lies inside its pattern's row range
    emit_at = [pos for pos, op in decode_entries(prog) if op == OP_EMIT][0]
    assert row.start <= emit_at < row.end


def test_priority_orders_scopes():
    def target(prios):
        return TargetSpec(
            name="x",
            patterns=(
                PatternDef("lo", prios[0], "add", (), (), "LO"),
                PatternDef("hi", prios[1], "add", (), (), "HI"),
            ),
        )

    _, lut = compile_patterns(target((1, 2)))
    assert [r.pattern_id for r in sorted(lut.rows, key=lambda r: r.start)] == ["hi", "lo"]
    _, lut2 = compile_patterns(target((2, 1)))
    assert [r.pattern_id for r in sorted(lut2.rows, key=lambda r: r.start)] == ["lo", "hi"]


def test_compile_determinism_and_scope_integrity():
    for t in builtin_targets():
        p1, l1 = compile_patterns(t)
        p2, l2 = compile_patterns(t)
        assert p1.data == p2.data
        assert l1 == l2
        validate_program(p1)


def test_lookup_soundness():
    for t in builtin_targets():
        prog, lut = compile_patterns(t)
        ids = [r.pattern_id for r in lut.rows]
        assert sorted(ids) == sorted(p.pattern_id for p in t.patterns)
        rows = sorted(lut.rows, key=lambda r: r.start)
        for a, b in zip(rows, rows[1:]):
            assert a.end <= b.start  # disjoint
        emits = {pos for pos, op in decode_entries(prog) if op == OP_EMIT}
        for row in rows:
            assert any(row.start <= e < row.end for e in emits)


def test_duplicate_priority_rejected():
    t = TargetSpec(
        name="x",
        patterns=(
            PatternDef("a", 1, "add", (), (), "A"),
            PatternDef("b", 1, "add", (), (), "B"),
        ),
    )
    with pytest.raises(DuplicatePriority):
        compile_patterns(t)


def test_unknown_feature_rejected():
    t = TargetSpec(name="x", patterns=(PatternDef("a", 1, "add", (), ("sse",), "A"),))
    with pytest.raises(UnknownFeature):
        compile_patterns(t)


def test_builtin_targets_contract():
    targets = {t.name: t for t in builtin_targets()}
    assert len(targets) >= 2
    alpha, vex = targets["alpha"], targets["vex"]
    assert not alpha.vectors and len(alpha.patterns) >= 40
    assert alpha.int_widths == (1, 8, 16, 32, 64)
    assert vex.vectors and "simd" in vex.features and len(vex.patterns) >= 40
    assert len(vex.intrinsics) >= 4
    assert vex.intrinsic("llvm.smax.i64") == IntrinsicDecl(
        "llvm.smax.i64", (int_type(64), int_type(64)), int_type(64)
    )
    trap = targets["vex-trap"]
    assert 20 in trap.int_widths
    assert any(fs.effect == "abort" and fs.int_width == 20 for fs in trap.faults)


def test_get_target_unknown():
    with pytest.raises(TargetError):
        get_target("m68k")


def test_type_class_tokens_roundtrip():
    for token in ("any", "int", "i20", "fp", "f64", "ptr", "bool", "vec", "vint", "vfp", "vptr", "arr", "vxi32", "vxf64", "v4xi32", "v2xptr"):
        tc = parse_type_class(token)
        from matchfuzz.target import format_type_class

        assert parse_type_class(format_type_class(tc)) == tc
    with pytest.raises(TargetError):
        parse_type_class("quux")


def test_target_file_roundtrip():
    text = """
    ; a small scalar target
    target demo
    feature fancy
    widths 8 32
    floats 32 64
    vectors off
    intrinsic @llvm.smax.i64(i64, i64) -> i64
    pattern add_ri 20 add res=i32 op2=i32:const:-128..127 emits ADDri
    pattern add_rr 10 add res=i32 emits ADDrr
    pattern smax 10 call intrinsic @llvm.smax.i64 emits SMAX
    pattern vanity 5 add res=i8 requires fancy emits FADD8
    fault abort when int-width 20
    fault hang when opcode frem
    """
    spec = parse_target_file(text)
    assert spec.name == "demo"
    assert spec.features == ("fancy",)
    assert spec.int_widths == (8, 32)
    assert not spec.vectors
    assert spec.patterns[0].const_checks if hasattr(spec.patterns[0], "const_checks") else True
    assert spec.patterns[0].checks[1].const_range == (-128, 127)
    assert spec.patterns[2].intrinsic == "llvm.smax.i64"
    assert spec.patterns[3].features == ("fancy",)
    assert spec.faults[0].int_width == 20 and spec.faults[0].effect == "abort"
    assert spec.faults[1].opcode == "frem" and spec.faults[1].effect == "hang"
    # pattern lines re-render to parseable text
    for p in spec.patterns:
        line = format_pattern_line(p)
        reparsed = parse_target_file(
            f"target x\nfeature fancy\nintrinsic @llvm.smax.i64(i64, i64) -> i64\n{line}\n"
        )
        assert format_pattern_line(reparsed.patterns[0]) == line
    compile_patterns(spec)


def test_target_file_errors():
    with pytest.raises(TargetError):
        parse_target_file("pattern broken 1 add\n")  # no emits clause
    with pytest.raises(TargetError):
        parse_target_file("frobnicate yes\n")
