"""Type algebra, value payloads, parse/print round-trips, dominance."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import I1, I8, I32, I64, cfg_module, listing_module, oracle_dominates
from matchfuzz.ir import (
    ModuleUnit,
    compute_dominators,
    int_type,
    parse_module,
    print_module,
    type_of,
    vector_type,
)
from matchfuzz.ir.parser import IRSyntaxError
from matchfuzz.ir.types import (
    ADDR,
    ArrayType,
    F32,
    F64,
    array_type,
    bit_width,
    float_type,
)
from matchfuzz.ir.values import (
    ArgRef,
    Const,
    InstrRef,
    signed_value,
    wrap_int,
)
from matchfuzz.mutate import MutatorConfig, mutate_step


class TestTypes:
    def test_interning(self):
        assert int_type(32) is int_type(32)
        assert vector_type(I8, 4) is vector_type(I8, 4)

    def test_int_width_bounds(self):
        assert int_type(1).width == 1
        assert int_type(128).width == 128
        assert int_type(20).width == 20  # odd widths are legal
        with pytest.raises(ValueError):
            int_type(0)
        with pytest.raises(ValueError):
            int_type(129)

    def test_vector_lane_restrictions(self):
        vector_type(ADDR, 2)
        with pytest.raises(ValueError):
            vector_type(vector_type(I8, 2), 2)
        with pytest.raises(ValueError):
            vector_type(array_type(I8, 2), 4)
        with pytest.raises(ValueError):
            vector_type(I8, 3)

    def test_array_no_nesting(self):
        array_type(vector_type(I8, 4), 16)
        with pytest.raises(ValueError):
            array_type(array_type(I8, 2), 2)
        with pytest.raises(ValueError):
            array_type(I8, 17)

    def test_spellings(self):
        assert str(int_type(20)) == "i20"
        assert str(F32) == "f32"
        assert str(ADDR) == "ptr"
        assert str(vector_type(I32, 4)) == "<4 x i32>"
        assert str(array_type(I8, 3)) == "[3 x i8]"

    def test_bit_width(self):
        assert bit_width(I32) == 32
        assert bit_width(F64) == 64
        assert bit_width(vector_type(int_type(5), 4)) == 20
        assert bit_width(ADDR) is None
        assert bit_width(array_type(I8, 4)) is None


class TestValues:
    def test_wrap_and_sign(self):
        assert wrap_int(-1, 8) == 255
        assert signed_value(255, 8) == -1
        assert signed_value(127, 8) == 127

    def test_type_of_consts_and_args(self):
        m = listing_module()
        assert type_of(m, Const(I32, 42)) == I32
        assert type_of(m, ArgRef("f", 0)) == I32
        assert type_of(m, InstrRef("f", "Entry", 1)) == I64

    def test_type_of_extractelement_lane(self):
        # result of extractelement on <16 x i8> is i8, by construction
        v16 = vector_type(I8, 16)
        text = (
            "define i8 @g(<16 x i8> %v, i32 %i) { E: "
            "%e = extractelement <16 x i8> %v, i32 %i  ret i8 %e }"
        )
        m = parse_module(text)
        assert m.functions[0].blocks[0].body[0].result_type == I8

    def test_type_of_dangling(self):
        from matchfuzz.ir import DanglingRef

        m = listing_module()
        with pytest.raises(DanglingRef):
            type_of(m, InstrRef("f", "Entry", 9))
        with pytest.raises(DanglingRef):
            type_of(m, InstrRef("nope", "Entry", 0))


class TestParsePrint:
    def test_empty_module(self):
        m = parse_module("")
        assert m == ModuleUnit()
        assert print_module(m) == ""

    def test_generated_function_shape(self):
        text = "define i64 @f(i32 %a) { Entry: %m = alloca i64  %L = load i64, %m  ret i64 %L }"
        m = parse_module(text)
        assert len(m.functions) == 1
        f = m.functions[0]
        assert len(f.blocks) == 1
        assert [i.opcode for i in f.blocks[0].body] == ["alloca", "load"]
        out = print_module(m)
        assert out.index("alloca") < out.index("load") < out.index("ret")

    def test_ret_missing_operand_is_positioned_error(self):
        with pytest.raises(IRSyntaxError) as exc:
            parse_module("define i1 @g() { E: ret i1 }")
        assert exc.value.line == 1
        assert exc.value.col > 0

    def test_vector_const_spelling(self):
        m = listing_module()
        from matchfuzz.ir import GlobalVar, VecConst

        v4 = vector_type(I32, 4)
        m.globals.append(GlobalVar("v", v4, Const(v4, VecConst((1, 2, 3, 4)))))
        text = print_module(m)
        assert "<4 x i32>" in text
        assert parse_module(text) == m

    def test_undefined_value_rejected(self):
        with pytest.raises(IRSyntaxError):
            parse_module("define void @f() { E: store i32 %nope, ptr undef  ret }")

    def test_phi_forward_reference(self):
        text = """
        define i32 @f() {
        Entry:
          br label Loop
        Loop:
          %p = phi i32 [ i32 0, Entry ], [ %n, Loop ]
          %n = add i32 %p, i32 1
          br i1 undef, label Loop, label Out
        Out:
          ret i32 %p
        }
        """
        m = parse_module(text)
        assert m.functions[0].blocks[1].phis[0].opcode == "phi"
        assert parse_module(print_module(m)) == m

    def test_intrinsic_decl_and_call(self):
        text = (
            "declare i64 @llvm.smax.i64(i64, i64)\n"
            "define i64 @f(i64 %a) { E: %r = call i64 @llvm.smax.i64(i64 %a, i64 7)  ret i64 %r }"
        )
        m = parse_module(text)
        assert m.intrinsics[0].name == "llvm.smax.i64"
        assert parse_module(print_module(m)) == m

    def test_switch_and_float_roundtrip(self):
        text = """
        @g = global f64 0x3ff0000000000000
        define void @f(i32 %x) {
        E:
          switch i32 %x, label D [ i32 1, label A  i32 2, label D ]
        A:
          br label D
        D:
          ret
        }
        """
        m = parse_module(text)
        assert parse_module(print_module(m)) == m

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), steps=st.integers(0, 25))
    def test_roundtrip_property(self, seed, steps):
        cfg = MutatorConfig(seed=seed, max_functions=2, max_blocks=6, max_instrs=6)
        m = ModuleUnit()
        for _ in range(steps):
            m = mutate_step(m, cfg)
        assert parse_module(print_module(m)) == m

    def test_print_deterministic(self):
        cfg = MutatorConfig(seed=5)
        m = ModuleUnit()
        for _ in range(30):
            m = mutate_step(m, cfg)
        assert print_module(m) == print_module(m.clone())


class TestDominators:
    def test_single_block(self):
        m = cfg_module({"Entry": []}, entry_label="Entry")
        dom = compute_dominators(m.functions[0])
        assert dom.dominates("Entry", "Entry")
        assert dom.idom["Entry"] == "Entry"

    def test_diamond(self):
        m = cfg_module({"A": ["B", "C"], "B": ["D"], "C": ["D"], "D": []})
        dom = compute_dominators(m.functions[0])
        assert dom.idom["D"] == "A"
        assert dom.idom["B"] == "A" and dom.idom["C"] == "A"
        assert dom.dominates("A", "D")
        assert not dom.dominates("B", "D")

    def test_extra_edge_breaks_domination(self):
        # A chain BB1 -> BB2 -> BB3 makes BB2 dominate BB3; adding the edge
        # BB1 -> BB3 removes that domination.
        chain = cfg_module({"BB1": ["BB2"], "BB2": ["BB3"], "BB3": []}, entry_label="BB1")
        dom = compute_dominators(chain.functions[0])
        assert dom.dominates("BB2", "BB3")
        mutated = cfg_module({"BB1": ["BB2", "BB3"], "BB2": ["BB3"], "BB3": []}, entry_label="BB1")
        dom2 = compute_dominators(mutated.functions[0])
        assert not dom2.dominates("BB2", "BB3")

    def test_unreachable_flagged_and_self_dominated(self):
        m = cfg_module({"A": [], "X": ["A"]})
        dom = compute_dominators(m.functions[0])
        assert "X" in dom.unreachable
        assert dom.idom["X"] == "X"
        assert dom.dominates("X", "X")
        assert not dom.dominates("A", "X") and not dom.dominates("X", "A")

    @settings(max_examples=120, deadline=None)
    @given(data=st.data())
    def test_against_path_oracle(self, data):
        n = data.draw(st.integers(1, 8))
        labels = [f"B{i}" for i in range(n)]
        edges = {}
        for label in labels:
            k = data.draw(st.integers(0, min(3, n)))
            succs = data.draw(
                st.lists(st.sampled_from(labels), min_size=k, max_size=k, unique=True)
            )
            edges[label] = succs
        m = cfg_module(edges, entry_label="B0")
        dom = compute_dominators(m.functions[0])
        for a in labels:
            for b in labels:
                assert dom.dominates(a, b) == oracle_dominates(edges, "B0", a, b), (
                    f"dominates({a},{b}) mismatch on {edges}"
                )


def test_type_totality_over_verified_modules():
    # every operand reference in a verified module resolves to a type
    from matchfuzz.ir.module import iter_function_refs
    from matchfuzz.verifier import verify_module

    cfg = MutatorConfig(seed=77, max_functions=2, max_blocks=8, max_instrs=8)
    m = ModuleUnit()
    for _ in range(150):
        m = mutate_step(m, cfg)
    assert verify_module(m) == []
    count = 0
    for f in m.functions:
        for ref in iter_function_refs(f):
            assert type_of(m, ref) is not None
            count += 1
    assert count > 50
