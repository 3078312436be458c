"""The fuzzing loop: pick a parent from the corpus (or start from scratch),
apply 1..5 mutation steps, run selection, keep the input when either coverage
map shows something new, dedup findings by signature, and fire guidance
epochs on an execution-count schedule.

Campaigns are single-threaded and fully deterministic given (seed, execution
budget): one RNG stream drives scheduling and mutation, corpus ids are
sequential, and stats rows land on a fixed cadence. A campaign can also run
a byte-level havoc mutator instead of the structured one, as a baseline; its
corpus stores raw bytes and is exempt from the verifies-clean invariant
(random bytes essentially never parse, which is the point of the baseline).
"""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .coverage import CoverageState, is_interesting, save_dump
from .feedback import GuidanceReport, build_report, decode_coverage, epoch_schedule
from .ir.module import ModuleUnit
from .ir.parser import IRSyntaxError, parse_module
from .ir.printer import print_module
from .mutate.config import MutatorConfig, TypeUniverse
from .mutate.strategies import mutate_step_inplace
from .select import (
    FailureSignature,
    PROBE_PARSE_FAIL,
    SelectionResult,
    Selector,
)
from .target import TargetSpec, compile_patterns, get_target
from .verifier import verify_module


class ConfigError(Exception):
    pass


@dataclass
class CampaignConfig:
    seed: int = 0
    execs: Optional[int] = None
    seconds: Optional[float] = None
    guidance: bool = True
    seeds_dir: Optional[str] = None
    out_dir: Optional[str] = None
    mutator: str = "ir"  # "ir" | "bytes"
    epoch_execs: int = 10_000
    stats_every: Optional[int] = None
    max_functions: int = 2
    max_blocks: int = 8
    max_instrs: int = 10

    def validate(self) -> None:
        if (self.execs is None) == (self.seconds is None):
            raise ConfigError("exactly one of execs/seconds must be set")
        if self.execs is not None and self.execs < 1:
            raise ConfigError("execution budget must be positive")
        if self.seconds is not None and self.seconds <= 0:
            raise ConfigError("time budget must be positive")
        if self.mutator not in ("ir", "bytes"):
            raise ConfigError(f"unknown mutator {self.mutator!r}")
        if self.epoch_execs < 1:
            raise ConfigError("epoch interval must be >= 1")


@dataclass
class CorpusEntry:
    entry_id: int
    text: str  # bytes mutator entries hold latin-1 round-trippable text
    exec_index: int
    parent_id: Optional[int]
    new_edge_buckets: int
    new_matcher_bits: int
    module: Optional[ModuleUnit] = field(default=None, repr=False, compare=False)


@dataclass
class FindingRecord:
    signature: FailureSignature
    reproducer: str
    first_exec: int


@dataclass
class CampaignStats:
    executions: int = 0
    corpus_size: int = 0
    edge_buckets: int = 0
    matcher_bits: int = 0
    findings: int = 0
    verifier_rejects: int = 0
    parse_failures: int = 0
    rows: List[Tuple[int, int, int, int, int]] = field(default_factory=list)
    # (exec, new_edge_buckets, new_matcher_bits) for every interesting run
    novelty_events: List[Tuple[int, int, int]] = field(default_factory=list)

    def snapshot_row(self) -> Tuple[int, int, int, int, int]:
        return (self.executions, self.corpus_size, self.edge_buckets, self.matcher_bits, self.findings)


@dataclass
class CampaignResult:
    stats: CampaignStats
    corpus: List[CorpusEntry]
    findings: Dict[FailureSignature, FindingRecord]
    target: TargetSpec
    coverage: CoverageState


def dedup_finding(sig: FailureSignature, store: Dict[FailureSignature, FindingRecord]) -> bool:
    """True when the signature is new to the store."""
    return sig not in store


def signature_hash(sig: FailureSignature) -> str:
    return hashlib.sha256(sig.render().encode()).hexdigest()[:12]


def _byte_havoc(rng, data: bytes) -> bytes:
    if not data:
        return bytes(rng.randrange(256) for _ in range(rng.randint(1, 64)))
    buf = bytearray(data)
    for _ in range(rng.randint(1, 8)):
        op = rng.randrange(3)
        if op == 0 and buf:
            buf[rng.randrange(len(buf))] = rng.randrange(256)
        elif op == 1 and len(buf) < 8192:
            buf.insert(rng.randrange(len(buf) + 1), rng.randrange(256))
        elif op == 2 and buf:
            del buf[rng.randrange(len(buf))]
    return bytes(buf)


def _load_seeds(m_cfg: CampaignConfig, corpus: List[CorpusEntry], stats: CampaignStats) -> List[str]:
    skipped: List[str] = []
    if m_cfg.seeds_dir is None:
        return skipped
    for path in sorted(Path(m_cfg.seeds_dir).glob("*.ir")):
        text = path.read_text()
        if m_cfg.mutator == "bytes":
            corpus.append(CorpusEntry(len(corpus), text, 0, None, 0, 0))
            continue
        try:
            module = parse_module(text)
        except IRSyntaxError:
            skipped.append(path.name)
            continue
        if verify_module(module):
            skipped.append(path.name)
            continue
        corpus.append(CorpusEntry(len(corpus), print_module(module), 0, None, 0, 0, module))
    stats.corpus_size = len(corpus)
    return skipped


def run_campaign(
    target: Union[TargetSpec, str],
    features: Optional[frozenset] = None,
    cfg: Optional[CampaignConfig] = None,
) -> CampaignResult:
    cfg = cfg or CampaignConfig(execs=1000)
    cfg.validate()
    spec = get_target(target) if isinstance(target, str) else target

    prog, lut = compile_patterns(spec)
    selector = Selector(prog, spec, features)
    cov = CoverageState(prog.size)
    stats = CampaignStats()
    corpus: List[CorpusEntry] = []
    findings: Dict[FailureSignature, FindingRecord] = {}

    mcfg = MutatorConfig(
        seed=cfg.seed,
        max_functions=cfg.max_functions,
        max_blocks=cfg.max_blocks,
        max_instrs=cfg.max_instrs,
        universe=TypeUniverse.from_target(spec),
    )
    rng = mcfg.rng  # one stream owns scheduling and mutation
    _load_seeds(cfg, corpus, stats)

    epoch_fires = epoch_schedule(cfg.epoch_execs)
    if cfg.execs is not None:
        stats_every = cfg.stats_every or max(1, cfg.execs // 50)
    else:
        stats_every = cfg.stats_every or 1000
    deadline = None if cfg.seconds is None else time.monotonic() + cfg.seconds

    e = 0
    while True:
        if cfg.execs is not None and e >= cfg.execs:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        e += 1
        stats.executions = e

        parent: Optional[CorpusEntry] = corpus[rng.randrange(len(corpus))] if corpus else None

        module: Optional[ModuleUnit] = None
        text: Optional[str] = None
        if cfg.mutator == "ir":
            module = parent.module.clone() if parent is not None else ModuleUnit()
            for _ in range(rng.randint(1, 5)):
                mutate_step_inplace(module, mcfg)
        else:
            base = parent.text.encode("latin-1") if parent is not None else b""
            data = _byte_havoc(rng, base)
            text = data.decode("latin-1")
            try:
                module = parse_module(text)
            except (IRSyntaxError, RecursionError):
                module = None

        cov.begin_run()
        if module is None:
            cov.edge.record(PROBE_PARSE_FAIL)
            stats.parse_failures += 1
            result: Optional[SelectionResult] = None
        else:
            result = selector.run_module(module, cov)
            if result.verdict == "verifier-reject":
                stats.verifier_rejects += 1

        delta = cov.finish_run()
        interesting, summary = is_interesting(cov, delta)

        if result is not None and result.verdict == "finding":
            sig = result.finding
            if dedup_finding(sig, findings):
                findings[sig] = FindingRecord(sig, print_module(module), e)
                stats.findings = len(findings)

        if interesting:
            stats.novelty_events.append((e, summary.new_edge_buckets, summary.new_matcher_bits))
            storable = (
                cfg.mutator == "bytes"
                or (result is not None and result.verdict != "verifier-reject")
            )
            if storable:
                if cfg.mutator == "ir":
                    entry_text = print_module(module)
                    entry_module = module
                else:
                    entry_text = text
                    entry_module = None
                corpus.append(
                    CorpusEntry(
                        len(corpus),
                        entry_text,
                        e,
                        parent.entry_id if parent else None,
                        summary.new_edge_buckets,
                        summary.new_matcher_bits,
                        entry_module,
                    )
                )
                stats.corpus_size = len(corpus)

        if cfg.guidance and cfg.mutator == "ir" and epoch_fires(e):
            decoded = decode_coverage(cov.virgin_matcher, lut)
            report = build_report(decoded, spec, lut, epoch=e // cfg.epoch_execs)
            mcfg.guidance = None if report.is_empty() else report

        if e % stats_every == 0:
            stats.edge_buckets = cov.edge_buckets_covered()
            stats.matcher_bits = cov.matcher_bits_covered()
            stats.rows.append(stats.snapshot_row())

    stats.edge_buckets = cov.edge_buckets_covered()
    stats.matcher_bits = cov.matcher_bits_covered()
    if not stats.rows or stats.rows[-1][0] != stats.executions:
        stats.rows.append(stats.snapshot_row())

    result = CampaignResult(stats, corpus, findings, spec, cov)
    if cfg.out_dir is not None:
        write_output_dir(result, cfg.out_dir)
    return result


def write_output_dir(result: CampaignResult, out_dir: str) -> None:
    """corpus/NNNNNN.ir, findings/<hash>.{ir,txt}, stats.csv, coverage.dump"""
    out = Path(out_dir)
    (out / "corpus").mkdir(parents=True, exist_ok=True)
    (out / "findings").mkdir(parents=True, exist_ok=True)
    for entry in result.corpus:
        (out / "corpus" / f"{entry.entry_id:06d}.ir").write_text(entry.text)
    for sig, record in result.findings.items():
        h = signature_hash(sig)
        (out / "findings" / f"{h}.ir").write_text(record.reproducer)
        (out / "findings" / f"{h}.txt").write_text(
            record.signature.render() + f"first_exec: {record.first_exec}\n"
        )
    with open(out / "stats.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["executions", "corpus", "edge_buckets", "matcher_bits", "findings"])
        for row in result.stats.rows:
            w.writerow(row)
    save_dump(result.coverage, str(out / "coverage.dump"))


def replay(
    reproducer: str,
    target: Union[TargetSpec, str],
    features: Optional[frozenset] = None,
) -> SelectionResult:
    """Re-run a stored corpus entry or finding reproducer through selection."""
    spec = get_target(target) if isinstance(target, str) else target
    module = parse_module(reproducer)
    prog, _ = compile_patterns(spec)
    selector = Selector(prog, spec, features)
    cov = CoverageState(prog.size)
    cov.begin_run()
    return selector.run_module(module, cov, collect_entries=True)
