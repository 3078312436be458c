"""Dual coverage feedback: a bucketized 64 KiB probe-edge map and a bit-packed
matcher-table access map.

Edge coverage hashes consecutive probe ids AFL-style: the counter index for a
probe following `prev` is ((prev >> 1) XOR probe) & 0xFFFF, counters saturate
at 255, and per-run counts are classified into the AFL++ bucket boundaries
{1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128-255}.

Matcher coverage packs one boolean per table entry, eight per byte, padded up
to a whole byte. Entry counts here are byte offsets into the compiled matcher
program, matching how the table is consumed.

An input is interesting when EITHER map shows something new: a (edge, bucket)
pair never seen before, or a matcher bit never set before. The campaign-wide
"virgin" maps are only updated for interesting runs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

EDGE_MAP_SIZE = 65536
DUMP_MAGIC = b"MFCV"
DUMP_VERSION = 1

# Bucket upper bounds, index = bucket class 0..7.
_BUCKET_BOUNDS = (1, 2, 3, 7, 15, 31, 127, 255)


def bucket_class(count: int) -> int:
    """AFL++ hit-count bucket for a per-run counter value (count >= 1)."""
    if count <= 3:
        return count - 1
    if count <= 7:
        return 3
    if count <= 15:
        return 4
    if count <= 31:
        return 5
    if count <= 127:
        return 6
    return 7


class CoverageError(Exception):
    pass


class IndexOutOfRange(CoverageError):
    pass


class CorruptDump(CoverageError):
    pass


class EdgeMap:
    """Per-run saturating edge counters, stored sparsely."""

    __slots__ = ("counters", "prev")

    def __init__(self) -> None:
        self.counters: Dict[int, int] = {}
        self.prev = 0

    def record(self, probe: int) -> None:
        idx = ((self.prev >> 1) ^ probe) & 0xFFFF
        c = self.counters.get(idx, 0)
        if c < 255:
            self.counters[idx] = c + 1
        self.prev = probe

    def count_at(self, idx: int) -> int:
        return self.counters.get(idx, 0)

    def as_bytes(self) -> bytes:
        table = bytearray(EDGE_MAP_SIZE)
        for idx, c in self.counters.items():
            table[idx] = c
        return bytes(table)


class MatcherBitmap:
    """One bit per matcher-table entry, packed eight to a byte."""

    __slots__ = ("size", "bits")

    def __init__(self, size: int, bits: int = 0) -> None:
        self.size = size
        self.bits = bits

    @property
    def byte_length(self) -> int:
        return (self.size + 7) // 8

    def set(self, idx: int) -> None:
        if not 0 <= idx < self.size:
            raise IndexOutOfRange(f"entry index {idx} out of range 0..{self.size - 1}")
        self.bits |= 1 << idx

    def set_mask(self, mask: int) -> None:
        self.bits |= mask

    def get(self, idx: int) -> bool:
        return bool((self.bits >> idx) & 1)

    def popcount(self) -> int:
        return self.bits.bit_count()

    def to_bytes(self) -> bytes:
        return self.bits.to_bytes(self.byte_length, "little")

    @classmethod
    def from_bytes(cls, size: int, data: bytes) -> "MatcherBitmap":
        return cls(size, int.from_bytes(data, "little"))


@dataclass
class RunDelta:
    """Coverage produced by one select_module execution."""

    edge_counts: Dict[int, int]
    matcher_bits: int


@dataclass(frozen=True)
class NoveltySummary:
    new_edge_buckets: int
    new_matcher_bits: int

    def __bool__(self) -> bool:
        return self.new_edge_buckets > 0 or self.new_matcher_bits > 0


class CoverageState:
    """One campaign's coverage: per-run scratch maps plus virgin references.

    The virgin edge map stores, per edge index, a byte whose bit k records
    that bucket class k has been observed; the virgin matcher map is a plain
    bitmap. Virgin maps only ever gain coverage.
    """

    def __init__(self, matcher_size: int) -> None:
        self.matcher_size = matcher_size
        self.edge = EdgeMap()
        self.matcher = MatcherBitmap(matcher_size)
        self.virgin_edge_classes = bytearray(EDGE_MAP_SIZE)
        self.virgin_matcher = MatcherBitmap(matcher_size)
        self._edge_buckets = 0  # running popcount of virgin_edge_classes

    # -- per-run lifecycle -------------------------------------------------
    def begin_run(self) -> None:
        self.edge = EdgeMap()
        self.matcher = MatcherBitmap(self.matcher_size)

    def finish_run(self) -> RunDelta:
        return RunDelta(self.edge.counters, self.matcher.bits)

    # -- campaign-level queries ---------------------------------------------
    def edge_buckets_covered(self) -> int:
        return self._edge_buckets

    def matcher_bits_covered(self) -> int:
        return self.virgin_matcher.popcount()


def record_probe_edge(cov: CoverageState, probe: int) -> None:
    if not 0 <= probe < EDGE_MAP_SIZE:
        raise IndexOutOfRange(f"probe id {probe} out of range")
    cov.edge.record(probe)


def record_table_access(cov: CoverageState, idx: int) -> None:
    cov.matcher.set(idx)


def is_interesting(cov: CoverageState, delta: RunDelta) -> Tuple[bool, NoveltySummary]:
    """Dual novelty test; merges the delta into the virgin maps when new."""
    new_buckets = 0
    virgin = cov.virgin_edge_classes
    for idx, count in delta.edge_counts.items():
        if not virgin[idx] & (1 << bucket_class(count)):
            new_buckets += 1
    fresh_bits = delta.matcher_bits & ~cov.virgin_matcher.bits
    new_bits = fresh_bits.bit_count()
    summary = NoveltySummary(new_buckets, new_bits)
    if new_buckets or new_bits:
        for idx, count in delta.edge_counts.items():
            virgin[idx] |= 1 << bucket_class(count)
        cov._edge_buckets += new_buckets
        cov.virgin_matcher.set_mask(delta.matcher_bits)
        return True, summary
    return False, summary


def save_dump(cov: CoverageState, path: str) -> None:
    """MFCV dump: magic, version, matcher size (u32 LE), matcher bytes,
    then the 65 536 edge-class bytes."""
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(bytes((DUMP_VERSION,)))
        fh.write(cov.matcher_size.to_bytes(4, "little"))
        fh.write(cov.virgin_matcher.to_bytes())
        fh.write(bytes(cov.virgin_edge_classes))


def load_dump(path: str) -> CoverageState:
    with open(path, "rb") as fh:
        data = fh.read()
    buf = io.BytesIO(data)
    if buf.read(4) != DUMP_MAGIC:
        raise CorruptDump("bad magic")
    version = buf.read(1)
    if len(version) != 1 or version[0] != DUMP_VERSION:
        raise CorruptDump("unsupported dump version")
    size_bytes = buf.read(4)
    if len(size_bytes) != 4:
        raise CorruptDump("truncated header")
    size = int.from_bytes(size_bytes, "little")
    matcher_len = (size + 7) // 8
    matcher = buf.read(matcher_len)
    if len(matcher) != matcher_len:
        raise CorruptDump("truncated matcher map")
    edges = buf.read(EDGE_MAP_SIZE)
    if len(edges) != EDGE_MAP_SIZE or buf.read(1):
        raise CorruptDump("bad edge map length")
    cov = CoverageState(size)
    cov.virgin_matcher = MatcherBitmap.from_bytes(size, matcher)
    cov.virgin_edge_classes = bytearray(edges)
    cov._edge_buckets = sum(b.bit_count() for b in cov.virgin_edge_classes)
    return cov


def merge_states(a: CoverageState, b: CoverageState) -> CoverageState:
    """Offline union of two campaign states over the same matcher table."""
    if a.matcher_size != b.matcher_size:
        raise CoverageError("cannot merge dumps for different table sizes")
    out = CoverageState(a.matcher_size)
    out.virgin_matcher = MatcherBitmap(a.matcher_size, a.virgin_matcher.bits | b.virgin_matcher.bits)
    out.virgin_edge_classes = bytearray(
        x | y for x, y in zip(a.virgin_edge_classes, b.virgin_edge_classes)
    )
    out._edge_buckets = sum(x.bit_count() for x in out.virgin_edge_classes)
    return out
