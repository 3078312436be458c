"""Decoding matcher coverage into mutation guidance.

A pattern counts as covered once any byte of its scope body has been read.
Uncovered instruction patterns aggregate into per-opcode weights (one point
per uncovered pattern rooted at that opcode); uncovered intrinsic patterns
surface as typed declarations the mutator can call. Reports are rebuilt from
scratch each epoch, so anything covered since simply drops out.

Epochs are execution-count based rather than wall-clock, which keeps guided
campaigns deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from .coverage import MatcherBitmap
from .ir.module import IntrinsicDecl
from .target import LookupTable, TargetSpec


class FeedbackError(Exception):
    pass


class SizeMismatch(FeedbackError):
    pass


class ConfigError(FeedbackError):
    pass


@dataclass(frozen=True)
class GuidanceReport:
    """Never-selected opcodes and intrinsics, with mutation weights."""

    uncovered_opcodes: Tuple[Tuple[str, int], ...]
    uncovered_intrinsics: Tuple[Tuple[IntrinsicDecl, int], ...]
    epoch: int = 0

    def opcode_weight(self, opcode: str) -> int:
        for name, w in self.uncovered_opcodes:
            if name == opcode:
                return w
        return 0

    def is_empty(self) -> bool:
        return not self.uncovered_opcodes and not self.uncovered_intrinsics


def decode_coverage(bitmap: MatcherBitmap, lut: LookupTable) -> List[Tuple[str, bool]]:
    """(pattern id, covered) for every lookup row, in table order."""
    if bitmap.size != lut.program_size:
        raise SizeMismatch(
            f"bitmap covers {bitmap.size} entries, table has {lut.program_size}"
        )
    bits = bitmap.bits
    out: List[Tuple[str, bool]] = []
    for row in lut.rows:
        mask = ((1 << (row.end - row.start)) - 1) << row.start
        out.append((row.pattern_id, bool(bits & mask)))
    return out


def build_report(
    decoded: List[Tuple[str, bool]], t: TargetSpec, lut: LookupTable, epoch: int = 0
) -> GuidanceReport:
    """Aggregate uncovered rows into opcode weights and intrinsic decls."""
    covered = dict(decoded)
    opcode_weights: Dict[str, int] = {}
    intrinsic_weights: Dict[str, int] = {}
    for row in lut.rows:
        if covered.get(row.pattern_id, False):
            continue
        if row.kind == "intrinsic":
            intrinsic_weights[row.root] = intrinsic_weights.get(row.root, 0) + 1
        else:
            opcode_weights[row.root] = opcode_weights.get(row.root, 0) + 1
    intrinsics = []
    for name, w in intrinsic_weights.items():
        decl = t.intrinsic(name)
        if decl is not None:
            intrinsics.append((decl, w))
    return GuidanceReport(
        tuple(sorted(opcode_weights.items())),
        tuple(sorted(intrinsics, key=lambda x: x[0].name)),
        epoch,
    )


def epoch_schedule(every_n: int = 10_000) -> Callable[[int], bool]:
    """Predicate over the running execution count; fires every `every_n`."""
    if every_n < 1:
        raise ConfigError(f"epoch interval must be >= 1, got {every_n}")

    def fires(executions: int) -> bool:
        return executions > 0 and executions % every_n == 0

    return fires


# -- report text form (CLI output and on-disk format) ---------------------------


def render_report(report: GuidanceReport) -> str:
    lines = []
    for opcode, w in report.uncovered_opcodes:
        lines.append(f"uncovered {opcode} weight={w}")
    for decl, w in report.uncovered_intrinsics:
        params = ", ".join(str(t) for t in decl.params)
        ret = "void" if decl.return_type is None else str(decl.return_type)
        lines.append(f"uncovered-intrinsic declare {ret} @{decl.name}({params}) weight={w}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_report(text: str) -> GuidanceReport:
    from .ir.parser import _Parser

    opcodes: List[Tuple[str, int]] = []
    intrinsics: List[Tuple[IntrinsicDecl, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        mo = re.fullmatch(r"uncovered (\S+) weight=(\d+)", line)
        if mo:
            opcodes.append((mo.group(1), int(mo.group(2))))
            continue
        mo = re.fullmatch(
            r"uncovered-intrinsic declare (.+?) @([\w.$]+)\((.*)\) weight=(\d+)", line
        )
        if mo:
            ret_tok, name, params_tok, w = mo.groups()
            ret = None if ret_tok == "void" else _Parser(ret_tok).parse_type()
            params = tuple(
                _Parser(p.strip()).parse_type() for p in params_tok.split(",") if p.strip()
            )
            intrinsics.append((IntrinsicDecl(name, params, ret), int(w)))
            continue
        raise FeedbackError(f"line {lineno}: unrecognized report line {line!r}")
    return GuidanceReport(tuple(opcodes), tuple(intrinsics))
