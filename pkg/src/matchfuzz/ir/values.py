"""Value references and constant payloads.

A ValueRef names where a value comes from: an instruction result, a function
argument, a global's address, or an inline constant. Refs are frozen and
hashable; instruction results are addressed positionally as
(function, block label, combined index) where the index counts phis first,
then body instructions.

Integer constants are stored as canonical unsigned bit patterns in
[0, 2^width). Float constants are stored as raw IEEE bit patterns, which
keeps printing and equality exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Tuple, Union

from .types import (
    ArrayType,
    FloatType,
    IntType,
    TypeDesc,
    VectorType,
    is_int,
)


@dataclass(frozen=True, slots=True)
class Undef:
    def __str__(self) -> str:
        return "undef"


@dataclass(frozen=True, slots=True)
class Poison:
    def __str__(self) -> str:
        return "poison"


@dataclass(frozen=True, slots=True)
class ZeroInit:
    def __str__(self) -> str:
        return "zeroinitializer"


UNDEF = Undef()
POISON = Poison()
ZERO = ZeroInit()


@dataclass(frozen=True, slots=True)
class VecConst:
    """Per-lane payloads for a vector constant (bits, undef, or poison)."""

    lanes: Tuple[Union[int, Undef, Poison], ...]


ConstPayload = Union[int, Undef, Poison, ZeroInit, VecConst]


@dataclass(frozen=True, slots=True)
class Const:
    type: TypeDesc
    payload: ConstPayload


@dataclass(frozen=True, slots=True)
class InstrRef:
    func: str
    block: str
    index: int  # phis occupy 0..len(phis)-1, body follows


@dataclass(frozen=True, slots=True)
class ArgRef:
    func: str
    index: int


@dataclass(frozen=True, slots=True)
class GlobalRef:
    """The address of a module global; its value type is always `ptr`."""

    name: str


ValueRef = Union[Const, InstrRef, ArgRef, GlobalRef]


def wrap_int(value: int, width: int) -> int:
    """Canonicalize an integer to its unsigned bit pattern."""
    return value & ((1 << width) - 1)


def signed_value(bits: int, width: int) -> int:
    """Interpret a bit pattern as a signed two's-complement value."""
    sign = 1 << (width - 1)
    return bits - (1 << width) if bits & sign else bits


def float_to_bits(value: float, width: int) -> int:
    fmt = "<f" if width == 32 else "<d"
    size = 4 if width == 32 else 8
    return int.from_bytes(struct.pack(fmt, value), "little") & ((1 << (size * 8)) - 1)


def bits_to_float(bits: int, width: int) -> float:
    fmt = "<f" if width == 32 else "<d"
    size = 4 if width == 32 else 8
    return struct.unpack(fmt, bits.to_bytes(size, "little"))[0]


def int_const(value: int, ty: IntType) -> Const:
    return Const(ty, wrap_int(value, ty.width))


def float_const(value: float, ty: FloatType) -> Const:
    return Const(ty, float_to_bits(value, ty.width))


def const_payload_ok(ty: TypeDesc, payload: ConstPayload) -> bool:
    """Structural validity of a payload against its declared type."""
    if type(payload) is int:
        if isinstance(ty, (IntType, FloatType)):
            return 0 <= payload < (1 << ty.width)
        return False
    if isinstance(payload, (Undef, Poison)):
        return True
    if isinstance(payload, ZeroInit):
        return isinstance(ty, (VectorType, ArrayType))
    if isinstance(payload, VecConst):
        if not isinstance(ty, VectorType) or len(payload.lanes) != ty.count:
            return False
        lane = ty.lane
        for item in payload.lanes:
            if isinstance(item, int):
                if is_int(lane) and item >= (1 << lane.width):
                    return False
                if isinstance(lane, FloatType) and item >= (1 << lane.width):
                    return False
                if not isinstance(lane, (IntType, FloatType)):
                    return False
            # undef/poison lanes are always fine
        return True
    return False
