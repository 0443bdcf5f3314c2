"""Activation encodings priced by the bit-serial back-ends.

Oneffsets are the signed powers of two of the non-adjacent form (the
canonical modified-Booth recoding); a precision-serial unit instead pays one
cycle per bit up to the highest set bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .tensor import PrecisionError

PRECISION_SERIAL = "precisionSerial"
ONEFFSET_SERIAL = "oneffsetSerial"
MODES = (PRECISION_SERIAL, ONEFFSET_SERIAL)


@dataclass(frozen=True)
class GroupCost:
    cycles: int
    mode: str


def oneffsets(v: int) -> list[tuple[int, int]]:
    """NAF terms of unsigned 16-bit ``v`` as (sign, exponent), most significant first.

    >>> oneffsets(0x008F)
    [(1, 7), (1, 4), (-1, 0)]
    """
    if not 0 <= v <= 0xFFFF:
        raise ValueError(f"{v} is not an unsigned 16-bit value")
    terms = []
    e = 0
    while v:
        if v & 1:
            digit = 2 - (v & 3)  # +1 if v = 1 mod 4, -1 if v = 3 mod 4
            terms.append((digit, e))
            v -= digit
        v >>= 1
        e += 1
    terms.reverse()
    return terms


def needed_bits(v: int, cap: int = 16) -> int:
    if v < 0:
        raise ValueError("activations are unsigned")
    if v >= (1 << cap):
        raise PrecisionError(f"value {v} does not fit in {cap} bits")
    return v.bit_length()


def padded_terms(v: int, max_shift: int | None = None) -> int:
    """Serial cycles for one activation when consecutive oneffsets may be at
    most ``max_shift`` exponents apart; wider gaps cost extra cycles."""
    terms = oneffsets(v)
    if max_shift is None or len(terms) < 2:
        return len(terms)
    extra = 0
    for (_, hi), (_, lo) in zip(terms, terms[1:]):
        extra += -(-(hi - lo) // max_shift) - 1
    return len(terms) + extra


@lru_cache(maxsize=None)
def bits_table() -> np.ndarray:
    """needed_bits for every unsigned 16-bit value."""
    v = np.arange(1 << 16, dtype=np.int64)
    out = np.zeros(1 << 16, dtype=np.int64)
    nz = v > 0
    out[nz] = np.floor(np.log2(v[nz])).astype(np.int64) + 1
    return out


@lru_cache(maxsize=None)
def terms_table(max_shift: int | None = None) -> np.ndarray:
    """Oneffset count (optionally shift-padded) for every unsigned 16-bit value."""
    if max_shift is None:
        # NAF weight: popcount of v XOR 3v over the bits above the lowest
        v = np.arange(1 << 16, dtype=np.int64)
        x = (3 * v) ^ v
        count = np.zeros_like(v)
        x >>= 1
        while x.any():
            count += x & 1
            x >>= 1
        return count
    return np.array([padded_terms(v, max_shift) for v in range(1 << 16)], dtype=np.int64)


def cost_table(mode: str, max_shift: int | None = None) -> np.ndarray:
    if mode == PRECISION_SERIAL:
        return bits_table()
    if mode == ONEFFSET_SERIAL:
        return terms_table(max_shift)
    raise ValueError(f"unknown serial mode {mode!r}")


def group_cost(values: Iterable[int], mode: str, cap: int = 16,
               max_shift: int | None = None) -> GroupCost:
    """Cycles for a synchronisation group: its slowest member, but at least 1."""
    vals = [int(v) for v in values]
    if not vals:
        raise ValueError("group must be nonempty")
    for v in vals:
        needed_bits(v, cap)
    table = cost_table(mode, max_shift)
    return GroupCost(max(1, int(max(table[v] for v in vals))), mode)
