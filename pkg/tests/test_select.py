"""Selection: interpreter semantics, trace soundness, priority respect against
a direct pattern-applicability oracle, faults, and verdicts."""

import pytest

from conftest import I8, I32, I64, listing_module, single_add_module
from matchfuzz.coverage import CoverageState
from matchfuzz.ir import (
    BasicBlock,
    Const,
    FunctionDef,
    InstrRef,
    Instruction,
    ModuleUnit,
    Ret,
    int_type,
    parse_module,
    vector_type,
)
from matchfuzz.ir.types import ADDR
from matchfuzz.mutate import MutatorConfig, TypeUniverse, mutate_step
from matchfuzz.select import (
    HANG_SENTINEL,
    INJECTED_ABORT,
    MISSING_PATTERN,
    MalformedTable,
    Selector,
    select_module,
)
from matchfuzz.target import (
    FaultSpec,
    PatternDef,
    TargetSpec,
    builtin_targets,
    compile_patterns,
    const_in_range,
    get_target,
)


def pattern_applies(p, mop, slot_types, slot_consts, enabled):
    """Direct applicability check over the declarative pattern, bypassing the
    compiled byte program entirely: the test-side half of the dual route."""
    if p.matcher_opcode() != mop:
        return False
    if any(flag not in enabled for flag in p.features):
        return False
    for c in p.checks:
        t = slot_types[c.slot] if c.slot < len(slot_types) else None
        if c.type_class is not None and not c.type_class.matches(t):
            return False
        if c.is_const or c.const_range is not None:
            if c.slot == 0 or c.slot >= len(slot_consts) or slot_consts[c.slot] is None:
                return False
        if c.const_range is not None and not const_in_range(slot_consts[c.slot], *c.const_range):
            return False
    return True


def fresh_cov(prog):
    cov = CoverageState(prog.size)
    cov.begin_run()
    return cov


def run(target_name, m, enabled=None, trace=None):
    t = get_target(target_name)
    prog, lut = compile_patterns(t)
    sel = Selector(prog, t, enabled)
    cov = fresh_cov(prog)
    res = sel.run_module(m, cov, trace=trace, collect_entries=True)
    return res, cov, prog, lut


def test_scalar_add_matches_on_alpha():
    res, _, _, _ = run("alpha", single_add_module(I32))
    assert res.verdict == "ok"
    assert res.entries[0].machine_op == "ADD32rr" or res.entries[0].machine_op.startswith("ADD32")


def test_add_immediate_form_wins():
    # second operand constant in [-128, 127] selects the ri form
    res, _, _, _ = run("alpha", single_add_module(I32))
    assert res.entries[0].pattern_id in ("add_i32_ri", "add_i32_inc")


def test_vector_add_on_alpha_missing_with_vector_root():
    v4 = vector_type(I32, 4)
    m = single_add_module(v4)
    from matchfuzz.ir import VecConst

    res, _, _, _ = run("alpha", m)
    assert res.verdict == "finding"
    assert res.finding.kind == MISSING_PATTERN
    assert res.finding.root_opcode == "add-vector"
    assert res.finding.target == "alpha"


def test_vex_simd_off_vector_add_missing():
    v4 = vector_type(I32, 4)
    res, _, _, _ = run("vex", single_add_module(v4), enabled=frozenset())
    assert res.verdict == "finding"
    assert res.finding.kind == MISSING_PATTERN
    res_on, _, _, _ = run("vex", single_add_module(v4))
    assert res_on.verdict == "ok"


def test_intrinsic_call_selected_on_vex_missing_on_alpha():
    text = (
        "declare i64 @llvm.smax.i64(i64, i64)\n"
        "define i64 @f(i64 %a) { E: %r = call i64 @llvm.smax.i64(i64 %a, i64 7)  ret i64 %r }"
    )
    m = parse_module(text)
    res, _, _, _ = run("vex", m)
    assert res.verdict == "ok"
    assert any(e.machine_op == "SMAX64" for e in res.entries)
    res2, _, _, _ = run("alpha", m)
    assert res2.verdict == "finding"
    assert res2.finding.kind == MISSING_PATTERN
    assert "call:@llvm.smax.i64" in res2.finding.root_opcode


def test_empty_module_ok():
    res, _, _, _ = run("vex", ModuleUnit())
    assert res.verdict == "ok" and res.instructions == 0


def test_unverified_module_rejected():
    m = single_add_module(I32)
    m.functions[0].blocks[0].body[0].operands = (Const(I8, 1), Const(I32, 2))
    res, _, _, _ = run("vex", m)
    assert res.verdict == "verifier-reject"
    assert res.violations


def test_i20_fault_fires_on_vex_trap():
    m = single_add_module(int_type(20))
    res, _, _, _ = run("vex-trap", m)
    assert res.verdict == "finding"
    assert res.finding.kind == INJECTED_ABORT
    assert "i20" in res.finding.type_summary
    # same module on plain vex selects via the width-generic fallback
    res2, _, _, _ = run("vex", m)
    assert res2.verdict == "ok"


def test_hang_fault_reports_sentinel():
    t = TargetSpec(
        name="hangy",
        patterns=(PatternDef("p", 1, "add", (), (), "ADD"),),
        faults=(FaultSpec("hang", opcode="add"),),
    )
    prog, _ = compile_patterns(t)
    sel = Selector(prog, t)
    cov = fresh_cov(prog)
    res = sel.run_module(single_add_module(I32), cov, collect_entries=True)
    assert res.verdict == "finding"
    assert res.finding.kind == HANG_SENTINEL


def test_malformed_table_raises():
    t = get_target("alpha")
    prog, _ = compile_patterns(t)
    prog.data = b"\xff" + prog.data[1:]
    sel = Selector(prog, t)
    cov = fresh_cov(prog)
    with pytest.raises(MalformedTable):
        sel.run_module(single_add_module(I32), cov)


def test_trace_matches_bitmap():
    # Trace soundness: the set of byte indices visited in trace mode equals
    # the set of bits recorded in the matcher map.
    t = get_target("vex")
    prog, _ = compile_patterns(t)
    cfg = MutatorConfig(seed=5, universe=TypeUniverse.from_target(t))
    m = ModuleUnit()
    for _ in range(25):
        m = mutate_step(m, cfg)
    sel = Selector(prog, t)
    cov = fresh_cov(prog)
    trace = []
    res = sel.run_module(m, cov, trace=trace, collect_entries=True)
    traced = set()
    for ev in trace:
        traced.update(range(ev.index, ev.index + ev.length))
    bits = {i for i in range(prog.size) if cov.matcher.get(i)}
    assert traced == bits


def test_cached_and_traced_agree():
    t = get_target("vex")
    prog, _ = compile_patterns(t)
    cfg = MutatorConfig(seed=9, universe=TypeUniverse.from_target(t))
    m = ModuleUnit()
    for _ in range(30):
        m = mutate_step(m, cfg)
    sel = Selector(prog, t)
    cov_a = fresh_cov(prog)
    res_a = sel.run_module(m, cov_a, collect_entries=True)  # cached path
    cov_b = fresh_cov(prog)
    res_b = sel.run_module(m, cov_b, trace=[], collect_entries=True)  # interpreter path
    assert [e.pattern_id for e in res_a.entries] == [e.pattern_id for e in res_b.entries]
    assert cov_a.matcher.bits == cov_b.matcher.bits


def test_priority_respect_against_applicability_oracle():
    # Brute force over PatternDefs: evaluate every pattern directly against
    # the instruction and require the interpreter to pick the highest-priority
    # applicable one.
    t = get_target("vex")
    prog, _ = compile_patterns(t)
    sel = Selector(prog, t)
    from matchfuzz.select import _TypeResolver, matcher_opcode_of

    cfg = MutatorConfig(seed=31, universe=TypeUniverse.from_target(t))
    checked = 0
    for chain in range(8):
        m = ModuleUnit()
        for _ in range(35):
            m = mutate_step(m, cfg)
        resolver = _TypeResolver(m)
        for f in m.functions:
            for b in f.blocks:
                for i in range(b.n_instrs()):
                    ins = b.instr_at(i)
                    kind, ordinal, _, _, slot_types = sel.select_instruction(m, resolver, ins, None)
                    slot_consts = [None] + [v if type(v) is Const else None for v in ins.operands]
                    mop = matcher_opcode_of(m, ins)
                    applicable = [
                        p
                        for p in t.patterns
                        if pattern_applies(p, mop, slot_types, slot_consts, sel.enabled)
                    ]
                    if kind == "emit":
                        expect = max(applicable, key=lambda p: p.priority)
                        assert prog.patterns[ordinal].pattern_id == expect.pattern_id
                    else:
                        assert not applicable
                    checked += 1
    assert checked > 300


def test_public_select_functions():
    from matchfuzz.coverage import CoverageState
    from matchfuzz.select import select_instruction as select_one, select_module

    t = get_target("alpha")
    prog, _ = compile_patterns(t)
    m = single_add_module(I32)
    cov = CoverageState(prog.size)
    cov.begin_run()
    res = select_module(prog, t, m, cov)
    assert res.verdict == "ok" and len(res.entries) == 1
    ins = m.functions[0].blocks[0].body[0]
    entry = select_one(prog, t, m, ins, cov)
    assert entry.pattern_id == res.entries[0].pattern_id
