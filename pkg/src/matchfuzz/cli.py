"""Command-line entry point binding all modules for batch use.

Exit codes: 0 success, 1 findings present (fuzz/select/replay), 2 usage
errors. Every subcommand is deterministic given its flags and seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .campaign import CampaignConfig, run_campaign, replay as replay_input, signature_hash
from .coverage import CoverageState, load_dump, save_dump
from .feedback import build_report, decode_coverage, render_report
from .ir.parser import IRSyntaxError, parse_module
from .ir.printer import print_module
from .mutate.config import MutatorConfig, TypeUniverse
from .mutate.strategies import mutate_step_inplace
from .select import Selector, TraceEvent
from .target import (
    TargetError,
    TargetSpec,
    builtin_targets,
    compile_patterns,
    get_target,
    parse_target_file,
)
from .verifier import verify_module


def _resolve_target(name: str) -> TargetSpec:
    path = Path(name)
    if path.suffix == ".tspec" or (path.exists() and path.is_file()):
        return parse_target_file(path.read_text())
    return get_target(name)


def _parse_features(spec: TargetSpec, pairs: List[str]) -> frozenset:
    enabled = set(spec.features)
    for pair in pairs:
        if "=" not in pair:
            raise TargetError(f"bad --feature {pair!r}, expected name=on|off")
        name, state = pair.split("=", 1)
        if name not in spec.features:
            raise TargetError(f"target {spec.name} has no feature {name!r}")
        if state == "on":
            enabled.add(name)
        elif state == "off":
            enabled.discard(name)
        else:
            raise TargetError(f"feature state must be on|off, got {state!r}")
    return frozenset(enabled)


def _cmd_targets(args) -> int:
    for t in builtin_targets():
        prog, lut = compile_patterns(t)
        flags = ",".join(t.features) if t.features else "-"
        print(
            f"{t.name}: {len(t.patterns)} patterns, table {prog.size} bytes, "
            f"{len(t.intrinsics)} intrinsics, features {flags}"
        )
    return 0


def _cmd_verify(args) -> int:
    try:
        m = parse_module(Path(args.file).read_text())
    except IRSyntaxError as e:
        print(f"syntax error: {e}", file=sys.stderr)
        return 1
    violations = verify_module(m)
    for v in violations:
        print(v)
    return 1 if violations else 0


def _cmd_mutate(args) -> int:
    spec = _resolve_target(args.target)
    m = parse_module(Path(args.file).read_text())
    cfg = MutatorConfig(seed=args.seed, universe=TypeUniverse.from_target(spec))
    for _ in range(args.steps):
        mutate_step_inplace(m, cfg)
    text = print_module(m)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_select(args) -> int:
    spec = _resolve_target(args.target)
    enabled = _parse_features(spec, args.feature)
    m = parse_module(Path(args.file).read_text())
    prog, _ = compile_patterns(spec)
    selector = Selector(prog, spec, enabled)
    cov = CoverageState(prog.size)
    cov.begin_run()
    trace: Optional[List[TraceEvent]] = [] if args.trace else None
    result = selector.run_module(m, cov, trace=trace, collect_entries=True)
    if trace is not None:
        for ev in trace:
            print(f"{ev.index},{ev.kind}")
    for entry in result.entries:
        where = f"{entry.function}:{entry.block}:{entry.index}"
        if entry.pattern_id is not None:
            print(f"{where} {entry.opcode} -> {entry.machine_op} ({entry.pattern_id})")
        else:
            print(f"{where} {entry.opcode} -> no pattern")
    if result.verdict == "verifier-reject":
        print("verdict: verifier-reject")
        for v in result.violations:
            print(f"  {v}")
        return 1
    if result.verdict == "finding":
        print(f"verdict: finding\n{result.finding.render()}", end="")
        return 1
    print(f"verdict: ok ({result.instructions} instructions)")
    if args.cov_out:
        from .coverage import is_interesting

        is_interesting(cov, cov.finish_run())
        save_dump(cov, args.cov_out)
    return 0


def _cmd_cov_report(args) -> int:
    states = [load_dump(p) for p in args.dump]
    cov = states[0]
    if len(states) > 1:
        from .coverage import merge_states

        for other in states[1:]:
            cov = merge_states(cov, other)
    bits = cov.matcher_bits_covered()
    pct = 100.0 * bits / cov.matcher_size if cov.matcher_size else 0.0
    print(f"matcher: {bits} / {cov.matcher_size} entries ({pct:.2f}%)")
    print(f"edges:   {cov.edge_buckets_covered()} buckets")
    return 0


def _cmd_decode(args) -> int:
    spec = _resolve_target(args.target)
    _, lut = compile_patterns(spec)
    cov = load_dump(args.dump)
    decoded = decode_coverage(cov.virgin_matcher, lut)
    report = build_report(decoded, spec, lut)
    sys.stdout.write(render_report(report))
    return 0


def _cmd_fuzz(args) -> int:
    spec = _resolve_target(args.target)
    enabled = _parse_features(spec, args.feature)
    out_dir = args.out or os.environ.get("MATCHFUZZ_OUT")
    cfg = CampaignConfig(
        seed=args.seed,
        execs=args.execs,
        seconds=args.seconds,
        guidance=not args.no_guidance,
        seeds_dir=args.seeds,
        out_dir=out_dir,
        mutator=args.mutator,
        epoch_execs=args.epoch,
        max_functions=args.max_functions,
        max_blocks=args.max_blocks,
        max_instrs=args.max_instrs,
    )
    result = run_campaign(spec, enabled, cfg)
    s = result.stats
    print(
        f"executions {s.executions}  corpus {s.corpus_size}  "
        f"edge buckets {s.edge_buckets}  matcher bits {s.matcher_bits}  "
        f"findings {s.findings}  verifier rejects {s.verifier_rejects}"
    )
    if out_dir:
        print(f"output written to {out_dir}")
    for sig, record in result.findings.items():
        print(f"  finding {signature_hash(sig)}: {sig.kind} at {sig.root_opcode} {sig.type_summary}")
    return 1 if result.findings else 0


def _cmd_replay(args) -> int:
    spec = _resolve_target(args.target)
    enabled = _parse_features(spec, args.feature)
    result = replay_input(Path(args.file).read_text(), spec, enabled)
    if result.verdict == "finding":
        print(f"verdict: finding\n{result.finding.render()}", end="")
        return 1
    if result.verdict == "verifier-reject":
        print("verdict: verifier-reject")
        return 1
    print(f"verdict: ok ({result.instructions} instructions)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="matchfuzz",
        description="Coverage-guided fuzzing workbench for a table-driven instruction selector.",
    )
    p.add_argument("--version", action="version", version=f"matchfuzz {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("targets", help="list built-in targets and their table sizes")

    v = sub.add_parser("verify", help="check a module; exit 0 iff valid")
    v.add_argument("file")

    mu = sub.add_parser("mutate", help="apply mutation steps to a module")
    mu.add_argument("file")
    mu.add_argument("--seed", type=int, default=0)
    mu.add_argument("--steps", type=int, default=1)
    mu.add_argument("--target", default="vex", help="target whose type universe to draw from")
    mu.add_argument("-o", "--output")

    se = sub.add_parser("select", help="run instruction selection over a module")
    se.add_argument("file")
    se.add_argument("--target", default="vex")
    se.add_argument("--feature", action="append", default=[], metavar="NAME=on|off")
    se.add_argument("--trace", action="store_true", help="print idx,kind per matcher entry")
    se.add_argument("--cov-out", help="write a coverage dump")

    cr = sub.add_parser("cov-report", help="print popcounts for coverage dumps")
    cr.add_argument("dump", nargs="+")

    de = sub.add_parser("decode", help="decode a dump into a guidance report")
    de.add_argument("dump")
    de.add_argument("--target", default="vex")

    fz = sub.add_parser("fuzz", help="run a fuzzing campaign")
    fz.add_argument("--target", default="vex")
    fz.add_argument("--feature", action="append", default=[], metavar="NAME=on|off")
    fz.add_argument("--seed", type=int, default=0)
    group = fz.add_mutually_exclusive_group(required=True)
    group.add_argument("--execs", type=int)
    group.add_argument("--seconds", type=float)
    fz.add_argument("--no-guidance", action="store_true", help="strip the mutation feedback loop")
    fz.add_argument("--seeds", help="directory of .ir seed files")
    fz.add_argument("--out", help="output directory (default $MATCHFUZZ_OUT)")
    fz.add_argument("--mutator", choices=("ir", "bytes"), default="ir")
    fz.add_argument("--epoch", type=int, default=10_000, help="guidance epoch in executions")
    fz.add_argument("--max-functions", type=int, default=2)
    fz.add_argument("--max-blocks", type=int, default=8)
    fz.add_argument("--max-instrs", type=int, default=10)

    rp = sub.add_parser("replay", help="re-run a stored reproducer")
    rp.add_argument("file")
    rp.add_argument("--target", default="vex")
    rp.add_argument("--feature", action="append", default=[], metavar="NAME=on|off")

    return p


_COMMANDS = {
    "targets": _cmd_targets,
    "verify": _cmd_verify,
    "mutate": _cmd_mutate,
    "select": _cmd_select,
    "cov-report": _cmd_cov_report,
    "decode": _cmd_decode,
    "fuzz": _cmd_fuzz,
    "replay": _cmd_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (TargetError, IRSyntaxError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
