"""Type algebra for the miniature SSA IR.

Types are immutable and interned: the factory functions below always return
the same object for the same type, so identity comparison is valid and cheap.
Supported kinds: arbitrary-width integers (1..128 bits, odd widths legal),
f32/f64 floats, one opaque address type, fixed vectors (2/4/8/16 lanes of a
scalar), fixed arrays (1..16 elements of any scalar/vector-free non-void
type), and void.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

MAX_INT_WIDTH = 128
FLOAT_WIDTHS = (32, 64)
VECTOR_COUNTS = (2, 4, 8, 16)
MAX_ARRAY_COUNT = 16


@dataclass(frozen=True, slots=True)
class IntType:
    width: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_INT_WIDTH:
            raise ValueError(f"integer width {self.width} out of range 1..{MAX_INT_WIDTH}")

    def __str__(self) -> str:
        return f"i{self.width}"


@dataclass(frozen=True, slots=True)
class FloatType:
    width: int

    def __post_init__(self) -> None:
        if self.width not in FLOAT_WIDTHS:
            raise ValueError(f"float width must be one of {FLOAT_WIDTHS}, got {self.width}")

    def __str__(self) -> str:
        return f"f{self.width}"


@dataclass(frozen=True, slots=True)
class AddrType:
    def __str__(self) -> str:
        return "ptr"


@dataclass(frozen=True, slots=True)
class VectorType:
    lane: "TypeDesc"
    count: int

    def __post_init__(self) -> None:
        if self.count not in VECTOR_COUNTS:
            raise ValueError(f"vector count must be one of {VECTOR_COUNTS}, got {self.count}")
        if not isinstance(self.lane, (IntType, FloatType, AddrType)):
            raise ValueError(f"vector lane must be int/float/addr, got {self.lane}")

    def __str__(self) -> str:
        return f"<{self.count} x {self.lane}>"


@dataclass(frozen=True, slots=True)
class ArrayType:
    elem: "TypeDesc"
    count: int

    def __post_init__(self) -> None:
        if not 1 <= self.count <= MAX_ARRAY_COUNT:
            raise ValueError(f"array count must be 1..{MAX_ARRAY_COUNT}, got {self.count}")
        if isinstance(self.elem, (ArrayType, VoidType)):
            raise ValueError(f"array element may not be {self.elem}")

    def __str__(self) -> str:
        return f"[{self.count} x {self.elem}]"


@dataclass(frozen=True, slots=True)
class VoidType:
    def __str__(self) -> str:
        return "void"


TypeDesc = Union[IntType, FloatType, AddrType, VectorType, ArrayType, VoidType]

ADDR = AddrType()
VOID = VoidType()


@lru_cache(maxsize=None)
def int_type(width: int) -> IntType:
    return IntType(width)


@lru_cache(maxsize=None)
def float_type(width: int) -> FloatType:
    return FloatType(width)


@lru_cache(maxsize=None)
def vector_type(lane: TypeDesc, count: int) -> VectorType:
    return VectorType(lane, count)


@lru_cache(maxsize=None)
def array_type(elem: TypeDesc, count: int) -> ArrayType:
    return ArrayType(elem, count)


BOOL = int_type(1)
F32 = float_type(32)
F64 = float_type(64)


def is_int(t: TypeDesc) -> bool:
    return type(t) is IntType


def is_float(t: TypeDesc) -> bool:
    return type(t) is FloatType


def is_addr(t: TypeDesc) -> bool:
    return type(t) is AddrType


def is_vector(t: TypeDesc) -> bool:
    return type(t) is VectorType


def is_array(t: TypeDesc) -> bool:
    return type(t) is ArrayType


def is_void(t: Optional[TypeDesc]) -> bool:
    return t is None or type(t) is VoidType


def is_sized(t: Optional[TypeDesc]) -> bool:
    """First-class value type: anything that can be produced, stored, loaded."""
    return t is not None and type(t) is not VoidType


def scalar_of(t: TypeDesc) -> TypeDesc:
    """Lane type for vectors, the type itself otherwise."""
    return t.lane if type(t) is VectorType else t


def lane_count(t: TypeDesc) -> Optional[int]:
    return t.count if type(t) is VectorType else None


def same_shape(a: TypeDesc, b: TypeDesc) -> bool:
    """Both scalar, or both vectors with the same lane count."""
    av = type(a) is VectorType
    bv = type(b) is VectorType
    if av != bv:
        return False
    return not av or a.count == b.count


def with_lanes_of(shape: TypeDesc, scalar: TypeDesc) -> TypeDesc:
    """Rebuild `scalar` into the vector shape of `shape` (or return it as-is)."""
    if type(shape) is VectorType:
        return vector_type(scalar, shape.count)
    return scalar


def bit_width(t: TypeDesc) -> Optional[int]:
    """Total bit width; None for types without one (addr, array, void)."""
    k = type(t)
    if k is IntType or k is FloatType:
        return t.width
    if k is VectorType:
        lane = bit_width(t.lane)
        return None if lane is None else lane * t.count
    return None


def format_type(t: Optional[TypeDesc]) -> str:
    return "void" if t is None else str(t)
