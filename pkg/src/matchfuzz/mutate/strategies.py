"""Validity-preserving mutation strategies.

Every strategy takes a module and a config, mutates a copy (the public
functions) or the module in place (the `_inplace` variants used by the
fuzzing loop), and guarantees the result still verifies clean. Control flow
is only ever changed by sub-CFG insertion, which splits one block into a
source/sink pair and synthesizes new blocks strictly between them, so the
dominance relation over pre-existing blocks is untouched. All other
strategies insert or rewire straight-line instructions and never touch
terminators.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from ..ir.dominators import cached_dominators
from ..ir.instructions import (
    Br,
    CondBr,
    FCMP_PREDS,
    ICMP_PREDS,
    Instruction,
    Ret,
    Switch,
    terminator_targets,
)
from ..ir.module import (
    BasicBlock,
    FunctionDef,
    GlobalVar,
    IntrinsicDecl,
    ModuleUnit,
    collect_used_refs,
    insert_body_instr,
    insert_phi_instr,
    remove_body_instr,
    rewrite_function_refs,
)
from ..ir.types import (
    ADDR,
    BOOL,
    ArrayType,
    IntType,
    TypeDesc,
    VECTOR_COUNTS,
    VectorType,
    int_type,
    is_addr,
    vector_type,
    with_lanes_of,
)
from ..ir.values import Const, GlobalRef, InstrRef, UNDEF, ValueRef, wrap_int
from .config import (
    LimitExceeded,
    MutationNoOp,
    MutatorConfig,
    NoCallable,
    NoCandidateOpcode,
    NothingDead,
    STRATEGY_NAMES,
    TypeUniverse,
)
from .sourcing import OperandSource, build_pool, random_const

GUIDANCE_BOOST = 4.0


# --------------------------------------------------------------------------
# instruction planning: opcode -> (operand types, result type, extras)
# --------------------------------------------------------------------------


class _Plan:
    __slots__ = ("op_types", "result", "extras")

    def __init__(self, op_types: List[TypeDesc], result: Optional[TypeDesc], **extras) -> None:
        self.op_types = op_types
        self.result = result
        self.extras = extras


def _plan_int_binop(u: TypeUniverse, rng: random.Random) -> _Plan:
    t = u.draw_int_or_vecint(rng)
    return _Plan([t, t], t)


def _plan_fp_binop(u: TypeUniverse, rng: random.Random) -> _Plan:
    t = u.draw_fp_or_vecfp(rng)
    return _Plan([t, t], t)


def _plan_fneg(u, rng) -> _Plan:
    t = u.draw_fp_or_vecfp(rng)
    return _Plan([t], t)


def _plan_extractelement(u, rng) -> _Plan:
    v = u.draw_vector(rng)
    return _Plan([v, u.draw_int(rng)], v.lane)


def _plan_insertelement(u, rng) -> _Plan:
    v = u.draw_vector(rng)
    return _Plan([v, v.lane, u.draw_int(rng)], v)


def _plan_shufflevector(u, rng) -> _Plan:
    v = u.draw_vector(rng)
    out_count = rng.choice(VECTOR_COUNTS)
    mask = tuple(rng.randrange(2 * v.count) for _ in range(out_count))
    return _Plan([v, v], vector_type(v.lane, out_count), mask=mask)


def _plan_extractvalue(u, rng) -> _Plan:
    a = u.draw_array(rng)
    return _Plan([a], a.elem, agg_index=rng.randrange(a.count))


def _plan_insertvalue(u, rng) -> _Plan:
    a = u.draw_array(rng)
    return _Plan([a, a.elem], a, agg_index=rng.randrange(a.count))


def _plan_gep(u, rng) -> _Plan:
    return _Plan([ADDR, u.draw_int(rng)], ADDR, source_type=u.draw_sized(rng))


def _plan_trunc(u, rng) -> Optional[_Plan]:
    wider = [w for w in u.int_widths if u.widths_below(w) and w >= 2]
    if not wider:
        return None
    src_w = rng.choice(wider)
    dst_w = rng.choice(u.widths_below(src_w))
    src: TypeDesc = int_type(src_w)
    if u.vectors and rng.random() < 0.3:
        count = rng.choice(VECTOR_COUNTS)
        return _Plan([vector_type(src, count)], vector_type(int_type(dst_w), count))
    return _Plan([src], int_type(dst_w))


def _plan_ext(u, rng) -> Optional[_Plan]:
    narrower = [w for w in u.int_widths if u.widths_above(w)]
    if not narrower:
        return None
    src_w = rng.choice(narrower)
    dst_w = rng.choice(u.widths_above(src_w))
    if u.vectors and rng.random() < 0.3:
        count = rng.choice(VECTOR_COUNTS)
        return _Plan([vector_type(int_type(src_w), count)], vector_type(int_type(dst_w), count))
    return _Plan([int_type(src_w)], int_type(dst_w))


def _plan_fptrunc(u, rng) -> Optional[_Plan]:
    if len(u.float_widths) < 2:
        return None
    src, dst = u.float_widths[-1], u.float_widths[0]
    from ..ir.types import float_type

    if u.vectors and rng.random() < 0.3:
        count = rng.choice(VECTOR_COUNTS)
        return _Plan([vector_type(float_type(src), count)], vector_type(float_type(dst), count))
    return _Plan([float_type(src)], float_type(dst))


def _plan_fp_to_int(u, rng) -> Optional[_Plan]:
    src = u.draw_fp_or_vecfp(rng)
    if src is None:
        return None
    dst = with_lanes_of(src, u.draw_int(rng))
    return _Plan([src], dst)


def _plan_int_to_fp(u, rng) -> Optional[_Plan]:
    fp = u.draw_fp(rng)
    if fp is None:
        return None
    src = u.draw_int_or_vecint(rng)
    return _Plan([src], with_lanes_of(src, fp))


def _plan_ptrtoint(u, rng) -> _Plan:
    if u.vectors and rng.random() < 0.2:
        count = rng.choice(VECTOR_COUNTS)
        return _Plan([vector_type(ADDR, count)], vector_type(u.draw_int(rng), count))
    return _Plan([ADDR], u.draw_int(rng))


def _plan_inttoptr(u, rng) -> _Plan:
    src = u.draw_int_or_vecint(rng)
    return _Plan([src], with_lanes_of(src, ADDR))


def _plan_bitcast(u, rng) -> Optional[_Plan]:
    pair = u.bitcast_pair(rng)
    if pair is None:
        return None
    src, dst = pair
    return _Plan([src], dst)


def _plan_icmp(u, rng) -> _Plan:
    t = u.draw_int_or_vecint(rng)
    return _Plan([t, t], with_lanes_of(t, BOOL), pred=rng.choice(ICMP_PREDS))


def _plan_fcmp(u, rng) -> Optional[_Plan]:
    t = u.draw_fp_or_vecfp(rng)
    if t is None:
        return None
    return _Plan([t, t], with_lanes_of(t, BOOL), pred=rng.choice(FCMP_PREDS))


def _plan_select(u, rng) -> _Plan:
    if u.vectors and rng.random() < 0.3:
        count = rng.choice(VECTOR_COUNTS)
        cond: TypeDesc = vector_type(BOOL, count)
        arm = vector_type(u.draw_scalar(rng), count)
    else:
        cond = BOOL
        arm = u.draw_scalar(rng)
    return _Plan([cond, arm, arm], arm)


def _plan_alloca(u, rng) -> _Plan:
    return _Plan([], ADDR, alloc_type=u.draw_sized(rng))


def _plan_load(u, rng) -> _Plan:
    return _Plan([ADDR], u.draw_sized(rng))


def _plan_store(u, rng) -> _Plan:
    return _Plan([u.draw_sized(rng), ADDR], None)


_PLANNERS = {
    "fneg": _plan_fneg,
    "extractelement": _plan_extractelement,
    "insertelement": _plan_insertelement,
    "shufflevector": _plan_shufflevector,
    "extractvalue": _plan_extractvalue,
    "insertvalue": _plan_insertvalue,
    "getelementptr": _plan_gep,
    "trunc": _plan_trunc,
    "zext": _plan_ext,
    "sext": _plan_ext,
    "fptrunc": _plan_fptrunc,
    "fptoui": _plan_fp_to_int,
    "fptosi": _plan_fp_to_int,
    "uitofp": _plan_int_to_fp,
    "sitofp": _plan_int_to_fp,
    "ptrtoint": _plan_ptrtoint,
    "inttoptr": _plan_inttoptr,
    "bitcast": _plan_bitcast,
    "icmp": _plan_icmp,
    "fcmp": _plan_fcmp,
    "select": _plan_select,
    "alloca": _plan_alloca,
    "load": _plan_load,
    "store": _plan_store,
}
for _op in ("add", "sub", "mul", "sdiv", "udiv", "srem", "urem", "shl", "lshr", "ashr", "and", "or", "xor"):
    _PLANNERS[_op] = _plan_int_binop
for _op in ("fadd", "fsub", "fmul", "fdiv", "frem"):
    _PLANNERS[_op] = _plan_fp_binop

_FP_OPCODES = frozenset(
    ("fneg", "fadd", "fsub", "fmul", "fdiv", "frem", "fptrunc", "fptoui", "fptosi", "uitofp", "sitofp", "fcmp")
)
_VEC_OPCODES = frozenset(("extractelement", "insertelement", "shufflevector"))


_GENERABLE_CACHE: Dict[tuple, List[str]] = {}


def _generable_opcodes(u: TypeUniverse) -> List[str]:
    key = (u.int_widths, u.float_widths, u.vectors, u.arrays)
    hit = _GENERABLE_CACHE.get(key)
    if hit is not None:
        return hit
    out = []
    for op in _PLANNERS:
        if op in _FP_OPCODES and not u.float_widths:
            continue
        if op in _VEC_OPCODES and not u.vectors:
            continue
        if op in ("extractvalue", "insertvalue") and not u.arrays:
            continue
        if op == "trunc" and len(u.int_widths) < 2:
            continue
        if op in ("zext", "sext") and len(u.int_widths) < 2:
            continue
        if op == "fptrunc" and len(u.float_widths) < 2:
            continue
        out.append(op)
    out.append("phi")
    _GENERABLE_CACHE[key] = out
    return out


# --------------------------------------------------------------------------
# strategies (in-place)
# --------------------------------------------------------------------------


def _fresh_name(taken, base: str) -> str:
    if base not in taken:
        return base
    n = 2
    while f"{base}{n}" in taken:
        n += 1
    return f"{base}{n}"


def _fresh_label(f: FunctionDef, base: str) -> str:
    return _fresh_name({b.label for b in f.blocks}, base)


def generate_function_inplace(m: ModuleUnit, cfg: MutatorConfig) -> None:
    """New function with random signature; non-void returns flow through an
    uninitialized stack slot that later mutations are expected to fill."""
    if len(m.functions) >= cfg.max_functions:
        raise LimitExceeded(f"module already has {len(m.functions)} functions")
    rng = cfg.rng
    u = cfg.universe
    taken = (
        {f.name for f in m.functions}
        | {g.name for g in m.globals}
        | {d.name for d in m.intrinsics}
    )
    name = _fresh_name(taken, f"f{len(m.functions)}")
    params = tuple(u.draw_first_class(rng) for _ in range(rng.randint(0, 6)))
    ret = None if rng.random() < 0.3 else u.draw_first_class(rng)
    entry = BasicBlock("Entry")
    f = FunctionDef(name, params, ret, [entry])
    if ret is None:
        entry.terminator = Ret(None)
    else:
        entry.body.append(Instruction("alloca", (), ADDR, alloc_type=ret))
        slot = InstrRef(name, "Entry", 0)
        entry.body.append(Instruction("load", (slot,), ret))
        entry.terminator = Ret(InstrRef(name, "Entry", 1))
    m.functions.append(f)


def insert_scfg_inplace(m: ModuleUnit, cfg: MutatorConfig) -> None:
    """Split a random block and synthesize a sub-CFG between the halves.

    Every new edge either stays among the new blocks, enters the sink, or
    returns from the function, so dominance among pre-existing blocks is
    preserved by construction. The sink always stays reachable (the new
    blocks form a spine ending at it)."""
    rng = cfg.rng
    funcs = [f for f in m.functions if f.blocks]
    if not funcs:
        raise MutationNoOp("no function to mutate")
    f = rng.choice(funcs)
    room = cfg.max_blocks - len(f.blocks) - 1
    if room < 1:
        raise MutationNoOp("block cap reached")
    b = rng.choice(f.blocks)
    split = rng.randint(0, len(b.body))
    n_new = rng.randint(1, min(8, room))

    sink = BasicBlock(_fresh_label(f, f"{b.label}_sink"), [], b.body[split:], b.terminator)
    del b.body[split:]

    want_ret = n_new >= 2 and rng.random() < 0.3
    spine_count = n_new - 1 if want_ret else n_new
    labels = set(x.label for x in f.blocks) | {sink.label}
    spine: List[BasicBlock] = []
    for i in range(spine_count):
        label = _fresh_name(labels, f"{b.label}_s{i}")
        labels.add(label)
        spine.append(BasicBlock(label))
    ret_block: Optional[BasicBlock] = None
    if want_ret:
        label = _fresh_name(labels, f"{b.label}_ret")
        ret_block = BasicBlock(label)

    # Placeholder spine terminators give a consistent CFG for dominance and
    # pool queries while conditions are being sourced.
    chain = spine + [sink]
    b.terminator = Br(chain[0].label)
    for i, blk in enumerate(spine):
        blk.terminator = Br(chain[i + 1].label)
    if ret_block is not None:
        ret_block.terminator = Ret(None)

    at = f.blocks.index(b) + 1
    new_blocks = spine + ([ret_block] if ret_block else []) + [sink]
    f.blocks[at:at] = new_blocks
    f.invalidate_cfg()

    # Pre-existing successors of the split block now flow in from the sink.
    cut = len(b.phis) + split
    for succ_label in set(terminator_targets(sink.terminator)):
        succ = f.block(succ_label)
        if succ is None:
            continue
        for phi in succ.phis:
            phi.incoming = tuple(sink.label if l == b.label else l for l in phi.incoming)

    def remap(v: ValueRef) -> ValueRef:
        if type(v) is InstrRef and v.func == f.name and v.block == b.label and v.index >= cut:
            return InstrRef(f.name, sink.label, v.index - cut)
        return v

    rewrite_function_refs(f, remap)

    # Values usable by all new terminators: whatever is live at the source end.
    dom = cached_dominators(f)
    pool = build_pool(m, f, dom, b, b.n_instrs())
    src = OperandSource(m, f, b, len(b.body), cfg, pool)

    def condition() -> ValueRef:
        return src.get_nonconst(BOOL)

    def scrutinee() -> Tuple[ValueRef, IntType]:
        ty = int_type(rng.choice(cfg.universe.int_widths))
        return src.get_nonconst(ty), ty

    def switch_cases(ty: IntType, targets: List[str]) -> Tuple[Tuple[int, str], ...]:
        max_cases = min(len(targets), (1 << ty.width) - 1, 3)
        count = rng.randint(1, max_cases) if max_cases >= 1 else 0
        if rng.random() < 0.5:
            start = rng.randint(0, 7)
            values = [wrap_int(start + i, ty.width) for i in range(count)]
        else:
            values = [wrap_int(rng.getrandbits(ty.width), ty.width) for _ in range(count)]
        out, seen = [], set()
        for v, t in zip(values, targets):
            if v not in seen:
                seen.add(v)
                out.append((v, t))
        return tuple(out)

    def side_target(i: int) -> str:
        # Anywhere that keeps new edges inside the sub-CFG: self-loop, a later
        # spine block, the sink, or the dedicated return block.
        options = [sink.label]
        if i >= 0:
            options.append(spine[i].label)  # self-loop
        options.extend(blk.label for blk in spine[i + 1 :])
        if ret_block is not None:
            options.append(ret_block.label)
        return rng.choice(options)

    def make_terminator(i: int, next_label: str):
        kind = rng.random()
        if kind < 0.4:
            return Br(next_label)
        if kind < 0.75:
            return CondBr(condition(), side_target(i), next_label)
        value, ty = scrutinee()
        targets = [side_target(i) for _ in range(3)]
        return Switch(value, switch_cases(ty, targets), next_label)

    b.terminator = make_terminator(-1, chain[0].label)
    for i, blk in enumerate(spine):
        blk.terminator = make_terminator(i, chain[i + 1].label)
    if ret_block is not None:
        if f.return_type is None:
            ret_block.terminator = Ret(None)
        else:
            ret_block.terminator = Ret(src.get(f.return_type))
        # Guarantee the return block is reachable: route one side edge to it.
        donor = rng.choice([b] + spine)
        term = donor.terminator
        if type(term) is Br:
            donor.terminator = CondBr(condition(), ret_block.label, term.target)
        elif type(term) is CondBr:
            donor.terminator = CondBr(term.cond, ret_block.label, term.else_target)
        else:
            cases = term.cases or ((0, ret_block.label),)
            retargeted = ((cases[0][0], ret_block.label),) + cases[1:]
            donor.terminator = Switch(term.scrutinee, retargeted, term.default)
    f.invalidate_cfg()  # final terminators differ from the layout placeholders


def _pick_insertion_point(m: ModuleUnit, cfg: MutatorConfig) -> Tuple[FunctionDef, BasicBlock]:
    spots = [
        (f, b)
        for f in m.functions
        for b in f.blocks
        if b.n_instrs() < cfg.max_instrs
    ]
    if not spots:
        raise LimitExceeded("every block is at its instruction cap")
    return spots[cfg.rng.randrange(len(spots))]


_GUIDE_WEIGHTS_CACHE: Dict[tuple, List[float]] = {}


def _draw_opcode(cfg: MutatorConfig, allow_phi: bool) -> str:
    ops = _generable_opcodes(cfg.universe)
    if not allow_phi:
        ops = [o for o in ops if o != "phi"]
    if not ops:
        raise NoCandidateOpcode("type universe admits no opcodes")
    guide = cfg.guidance
    if guide is None or guide.is_empty():
        return cfg.rng.choice(ops)
    key = (guide.uncovered_opcodes, tuple(ops))
    weights = _GUIDE_WEIGHTS_CACHE.get(key)
    if weights is None:
        if len(_GUIDE_WEIGHTS_CACHE) > 64:
            _GUIDE_WEIGHTS_CACHE.clear()
        by_op = dict(guide.uncovered_opcodes)
        weights = [1.0 + GUIDANCE_BOOST * by_op.get(o, 0) for o in ops]
        _GUIDE_WEIGHTS_CACHE[key] = weights
    return cfg.rng.choices(ops, weights)[0]


def generate_instruction_inplace(m: ModuleUnit, cfg: MutatorConfig) -> None:
    rng = cfg.rng
    f, b = _pick_insertion_point(m, cfg)
    preds = f.predecessors().get(b.label, [])
    opcode = _draw_opcode(cfg, allow_phi=bool(preds))
    if opcode == "phi":
        _generate_phi(m, cfg, f, b, preds)
        return
    plan = _PLANNERS[opcode](cfg.universe, rng)
    if plan is None:
        raise NoCandidateOpcode(f"{opcode} not satisfiable in this type universe")
    pos = rng.randint(0, len(b.body))
    dom = cached_dominators(f)
    pool = build_pool(m, f, dom, b, len(b.phis) + pos)
    src = OperandSource(m, f, b, pos, cfg, pool)
    operands = tuple(src.get(t) for t in plan.op_types)
    ins = Instruction(opcode, operands, plan.result, **plan.extras)
    insert_body_instr(f, b, src.body_pos, ins)


def _generate_phi(m: ModuleUnit, cfg: MutatorConfig, f: FunctionDef, b: BasicBlock, preds: List[str]) -> None:
    rng = cfg.rng
    ty = cfg.universe.draw_first_class(rng)
    phi = Instruction("phi", (), ty, incoming=())
    insert_phi_instr(f, b, rng.randint(0, len(b.phis)), phi)
    dom = cached_dominators(f)
    for pred_label in preds:
        pb = f.block(pred_label)
        pool = build_pool(m, f, dom, pb, pb.n_instrs())
        src = OperandSource(m, f, pb, len(pb.body), cfg, pool)
        value = src.get(ty)
        phi.operands = phi.operands + (value,)
        phi.incoming = phi.incoming + (pred_label,)


def generate_call_inplace(m: ModuleUnit, cfg: MutatorConfig) -> None:
    rng = cfg.rng
    callables: List[Tuple[str, Tuple[TypeDesc, ...], Optional[TypeDesc], float, Optional[IntrinsicDecl]]] = []
    for fn in m.functions:
        callables.append((fn.name, fn.params, fn.return_type, 1.0, None))
    for d in m.intrinsics:
        callables.append((d.name, d.params, d.return_type, 1.0, None))
    declared = {d.name for d in m.intrinsics}
    if cfg.guidance is not None:
        for decl, w in cfg.guidance.uncovered_intrinsics:
            if decl.name not in declared:
                callables.append((decl.name, decl.params, decl.return_type, 1.0 + GUIDANCE_BOOST * w, decl))
    if not callables:
        raise NoCallable("no functions or intrinsics to call")
    f, b = _pick_insertion_point(m, cfg)
    weights = [c[3] for c in callables]
    name, params, ret, _, decl = callables[rng.choices(range(len(callables)), weights)[0]]
    if decl is not None:
        m.intrinsics.append(decl)
    pos = rng.randint(0, len(b.body))
    dom = cached_dominators(f)
    pool = build_pool(m, f, dom, b, len(b.phis) + pos)
    src = OperandSource(m, f, b, pos, cfg, pool)
    args = tuple(src.get(t) for t in params)
    insert_body_instr(f, b, src.body_pos, Instruction("call", args, ret, callee=name))


def _dead_values(f: FunctionDef) -> List[Tuple[BasicBlock, int]]:
    used = collect_used_refs(f)
    dead = []
    for b in f.blocks:
        for i in range(b.n_instrs()):
            ins = b.instr_at(i)
            if ins.result_type is not None and InstrRef(f.name, b.label, i) not in used:
                dead.append((b, i))
    return dead


def sink_value_inplace(m: ModuleUnit, cfg: MutatorConfig) -> None:
    """Give a dead value a use: store it to memory, or swap it into a
    type-compatible operand of a later, dominated instruction."""
    rng = cfg.rng
    candidates = [(f, b, i) for f in m.functions for (b, i) in _dead_values(f)]
    if not candidates:
        raise NothingDead("no unused values")
    f, b, i = candidates[rng.randrange(len(candidates))]
    dead = InstrRef(f.name, b.label, i)
    dead_ty = b.instr_at(i).result_type

    if rng.random() < 0.4:
        if _replace_compatible_operand(m, cfg, f, b, i, dead, dead_ty):
            return
    # Store right after the definition (phis store at the top of the body).
    store_pos = max(0, i - len(b.phis) + 1)
    dom = cached_dominators(f)
    pool = build_pool(m, f, dom, b, i + 1)
    src = OperandSource(m, f, b, store_pos, cfg, pool)
    addr = src.visible_addr()
    if addr is None or rng.random() < 0.6:
        addr = src._fresh_global(dead_ty)
    insert_body_instr(f, b, src.body_pos, Instruction("store", (dead, addr), None))


def _replace_compatible_operand(
    m: ModuleUnit,
    cfg: MutatorConfig,
    f: FunctionDef,
    b: BasicBlock,
    def_index: int,
    dead: InstrRef,
    dead_ty: TypeDesc,
) -> bool:
    result_types = {blk.label: [i.result_type for i in blk.iter_instrs()] for blk in f.blocks}

    def vtype(v: ValueRef) -> Optional[TypeDesc]:
        k = type(v)
        if k is Const:
            return v.type
        if k is InstrRef:
            col = result_types.get(v.block)
            return col[v.index] if col and 0 <= v.index < len(col) else None
        if k is GlobalRef:
            return ADDR
        return f.params[v.index] if v.index < len(f.params) else None

    dom = cached_dominators(f)
    spots: List[Tuple[Instruction, int]] = []
    for blk in f.blocks:
        if blk.label == b.label:
            lo = def_index + 1
        elif dom.dominates(b.label, blk.label):
            lo = 0
        else:
            continue
        for idx in range(max(lo, len(blk.phis)), blk.n_instrs()):
            ins = blk.instr_at(idx)
            for oi, v in enumerate(ins.operands):
                if v != dead and vtype(v) == dead_ty:
                    spots.append((ins, oi))
    if not spots:
        return False
    ins, oi = spots[cfg.rng.randrange(len(spots))]
    ops = list(ins.operands)
    ops[oi] = dead
    ins.operands = tuple(ops)
    return True


def _placeholder_loads(f: FunctionDef) -> List[Tuple[BasicBlock, int]]:
    """Loads through an alloca that no dominating store has initialized."""
    dom = cached_dominators(f)
    blocks = {blk.label: blk for blk in f.blocks}
    stores: Dict[InstrRef, List[Tuple[str, int]]] = {}
    for blk in f.blocks:
        for i in range(blk.n_instrs()):
            ins = blk.instr_at(i)
            if ins.opcode == "store" and type(ins.operands[1]) is InstrRef:
                stores.setdefault(ins.operands[1], []).append((blk.label, i))
    out = []
    for blk in f.blocks:
        for i in range(blk.n_instrs()):
            ins = blk.instr_at(i)
            if ins.opcode != "load" or type(ins.operands[0]) is not InstrRef:
                continue
            target_ref = ins.operands[0]
            tb = blocks.get(target_ref.block)
            if tb is None or target_ref.index >= tb.n_instrs():
                continue
            if tb.instr_at(target_ref.index).opcode != "alloca":
                continue
            covered = False
            for (sb, si) in stores.get(target_ref, ()):
                if (sb == blk.label and si < i) or (sb != blk.label and dom.dominates(sb, blk.label)):
                    covered = True
                    break
            if not covered:
                out.append((blk, i))
    return out


def count_unstored_placeholders(m: ModuleUnit) -> int:
    return sum(len(_placeholder_loads(f)) for f in m.functions)


def fixup_placeholders_inplace(m: ModuleUnit, cfg: MutatorConfig) -> None:
    """Initialize every placeholder load: insert a dominating store, or
    replace the load outright with an existing compatible value."""
    rng = cfg.rng
    for f in m.functions:
        guard = 0
        while True:
            guard += 1
            if guard > 10_000:
                raise RuntimeError("placeholder fixup failed to converge")
            loads = _placeholder_loads(f)
            if not loads:
                break
            blk, i = loads[0]
            ins = blk.instr_at(i)
            body_pos = i - len(blk.phis)
            dom = cached_dominators(f)
            pool = build_pool(m, f, dom, blk, i)
            src = OperandSource(m, f, blk, body_pos, cfg, pool)
            replacement = pool.get(ins.result_type)
            if replacement and rng.random() < 0.3:
                chosen = rng.choice(replacement)
                load_ref = InstrRef(f.name, blk.label, i)
                rewrite_function_refs(f, lambda v: chosen if v == load_ref else v)
                remove_body_instr(f, blk, body_pos)
                continue
            value = src.get_no_new_loads(ins.result_type)
            insert_body_instr(f, blk, src.body_pos, Instruction("store", (value, ins.operands[0]), None))


# --------------------------------------------------------------------------
# public (copying) strategy entry points and the dispatcher
# --------------------------------------------------------------------------

_STRATEGIES = {
    "function": generate_function_inplace,
    "scfg": insert_scfg_inplace,
    "instruction": generate_instruction_inplace,
    "call": generate_call_inplace,
    "sink": sink_value_inplace,
    "fixup": fixup_placeholders_inplace,
}


def _copying(fn):
    def wrapper(m: ModuleUnit, cfg: MutatorConfig) -> ModuleUnit:
        work = m.clone()
        fn(work, cfg)
        return work

    return wrapper


generate_function = _copying(generate_function_inplace)
insert_scfg = _copying(insert_scfg_inplace)
generate_instruction = _copying(generate_instruction_inplace)
generate_call = _copying(generate_call_inplace)
sink_value = _copying(sink_value_inplace)
fixup_placeholders = _copying(fixup_placeholders_inplace)


def mutate_step_inplace(m: ModuleUnit, cfg: MutatorConfig) -> str:
    """One dispatch of the strategy wheel; no-op signals are absorbed.

    A module with no functions always gets one first, so chains started from
    the empty module make progress."""
    if not m.functions:
        try:
            generate_function_inplace(m, cfg)
        except MutationNoOp:
            pass
        return "function"
    names = [n for n in STRATEGY_NAMES if cfg.weights.get(n, 0) > 0]
    weights = [cfg.weights[n] for n in names]
    name = cfg.rng.choices(names, weights)[0]
    try:
        _STRATEGIES[name](m, cfg)
    except MutationNoOp:
        pass
    return name


def mutate_step(m: ModuleUnit, cfg: MutatorConfig) -> ModuleUnit:
    work = m.clone()
    mutate_step_inplace(work, cfg)
    return work
