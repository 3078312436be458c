"""Mutator configuration: RNG stream, size caps, strategy weights, guidance,
and the type universe mutations draw from.

A config owns one RNG stream seeded once; chained mutations advance it, so a
whole campaign is reproducible from (seed, call sequence). The type universe
is derived from a target's supported widths so generated modules only use
types the backend under test claims to handle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..feedback import GuidanceReport
from ..ir.types import (
    ADDR,
    TypeDesc,
    VECTOR_COUNTS,
    array_type,
    bit_width,
    float_type,
    int_type,
    vector_type,
)

DEFAULT_WEIGHTS: Dict[str, float] = {
    "function": 1.0,
    "scfg": 2.0,
    "instruction": 8.0,
    "call": 2.0,
    "sink": 2.0,
    "fixup": 1.0,
}

STRATEGY_NAMES = tuple(DEFAULT_WEIGHTS)


class MutationNoOp(Exception):
    """A strategy's preconditions do not hold; the module is left unchanged."""


class LimitExceeded(MutationNoOp):
    pass


class NothingDead(MutationNoOp):
    pass


class NoCallable(MutationNoOp):
    pass


class NoCandidateOpcode(MutationNoOp):
    pass


@dataclass
class TypeUniverse:
    """The first-class types the mutator may introduce."""

    int_widths: Tuple[int, ...] = (1, 8, 16, 32, 64)
    float_widths: Tuple[int, ...] = (32, 64)
    vectors: bool = True
    arrays: bool = True

    def __post_init__(self) -> None:
        self.int_widths = tuple(sorted(self.int_widths))
        self.float_widths = tuple(sorted(self.float_widths))
        self._scalars: List[TypeDesc] = [int_type(w) for w in self.int_widths] + [
            float_type(w) for w in self.float_widths
        ]
        self._vec_lanes: List[TypeDesc] = list(self._scalars) + [ADDR]
        by_width: Dict[int, List[TypeDesc]] = {}
        for t in self._scalars:
            by_width.setdefault(bit_width(t), []).append(t)
        if self.vectors:
            for lane in self._scalars:
                for c in VECTOR_COUNTS:
                    v = vector_type(lane, c)
                    by_width.setdefault(bit_width(v), []).append(v)
        self._by_width = by_width
        self._bitcastable = [t for ts in by_width.values() for t in ts]

    @classmethod
    def from_target(cls, target) -> "TypeUniverse":
        return cls(
            int_widths=tuple(target.int_widths),
            float_widths=tuple(target.float_widths),
            vectors=target.vectors,
        )

    # -- draws -----------------------------------------------------------------
    def draw_int(self, rng: random.Random) -> TypeDesc:
        return int_type(rng.choice(self.int_widths))

    def draw_fp(self, rng: random.Random) -> Optional[TypeDesc]:
        if not self.float_widths:
            return None
        return float_type(rng.choice(self.float_widths))

    def draw_vector(self, rng: random.Random, lane: Optional[TypeDesc] = None) -> Optional[TypeDesc]:
        if not self.vectors:
            return None
        if lane is None:
            lane = rng.choice(self._vec_lanes)
        return vector_type(lane, rng.choice(VECTOR_COUNTS))

    def draw_int_or_vecint(self, rng: random.Random) -> TypeDesc:
        t = self.draw_int(rng)
        if self.vectors and rng.random() < 0.3:
            return vector_type(t, rng.choice(VECTOR_COUNTS))
        return t

    def draw_fp_or_vecfp(self, rng: random.Random) -> Optional[TypeDesc]:
        t = self.draw_fp(rng)
        if t is None:
            return None
        if self.vectors and rng.random() < 0.3:
            return vector_type(t, rng.choice(VECTOR_COUNTS))
        return t

    def draw_array(self, rng: random.Random) -> Optional[TypeDesc]:
        if not self.arrays:
            return None
        elem = rng.choice(self._scalars + [ADDR])
        return array_type(elem, rng.randint(1, 8))

    def draw_scalar(self, rng: random.Random) -> TypeDesc:
        return rng.choice(self._scalars)

    def draw_first_class(self, rng: random.Random) -> TypeDesc:
        """Any storable type: scalars common, vectors/arrays/addr rarer."""
        roll = rng.random()
        if roll < 0.62:
            return self.draw_scalar(rng)
        if roll < 0.80 and self.vectors:
            return self.draw_vector(rng)
        if roll < 0.92 and self.arrays:
            return self.draw_array(rng)
        if roll < 0.97:
            return ADDR
        return self.draw_scalar(rng)

    def draw_sized(self, rng: random.Random) -> TypeDesc:
        return self.draw_first_class(rng)

    def bitcast_pair(self, rng: random.Random) -> Optional[Tuple[TypeDesc, TypeDesc]]:
        src = rng.choice(self._bitcastable)
        peers = self._by_width[bit_width(src)]
        return src, rng.choice(peers)

    def widths_below(self, w: int) -> Tuple[int, ...]:
        return tuple(x for x in self.int_widths if x < w)

    def widths_above(self, w: int) -> Tuple[int, ...]:
        return tuple(x for x in self.int_widths if x > w)


DEFAULT_UNIVERSE = TypeUniverse()


@dataclass
class MutatorConfig:
    seed: int = 0
    max_functions: int = 6
    max_blocks: int = 64
    max_instrs: int = 48
    weights: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    guidance: Optional[GuidanceReport] = None
    universe: TypeUniverse = field(default_factory=lambda: DEFAULT_UNIVERSE)
    rng: random.Random = None

    def __post_init__(self) -> None:
        if self.rng is None:
            self.rng = random.Random(self.seed)
        if not any(w > 0 for w in self.weights.values()):
            raise ValueError("at least one strategy weight must be positive")
        for name, w in self.weights.items():
            if w < 0:
                raise ValueError(f"strategy weight {name} must be >= 0")
