"""Low-level numerics: reproducible reductions, 128-bit phase arithmetic, ordered worker maps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable, Sequence, TypeVar

import mpmath
import numpy as np

T = TypeVar("T")
R = TypeVar("R")

TWO64 = 1 << 64
TWO128 = 1 << 128
_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)


def csum(values) -> complex:
    """Correctly rounded sum of complex values; independent of order and chunking."""
    arr = np.asarray(values, dtype=np.complex128).ravel()
    return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))


def cmean(values) -> complex:
    arr = np.asarray(values, dtype=np.complex128).ravel()
    if arr.size == 0:
        raise ValueError("mean of empty sequence")
    s = csum(arr)
    return complex(s.real / arr.size, s.imag / arr.size)


def e(theta):
    """The character e(t) = exp(2 pi i t), vectorised."""
    return np.exp(2j * np.pi * np.asarray(theta, dtype=np.float64))


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` and return results in input order.

    Reductions are always done by the caller on the ordered list, so the
    result does not depend on ``workers``.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# 128-bit fixed-point phases.  A real t mod 1 is stored as the integer
# round(frac(t) * 2^128); products with 64-bit integers are reduced mod 2^128
# using 32-bit limbs so that everything stays inside uint64 numpy arrays.


def to_fixed128(x) -> int:
    """Fractional part of ``x`` as a 128-bit fixed-point integer."""
    if isinstance(x, (int, np.integer)):
        return 0
    if isinstance(x, Fraction):
        return ((x.numerator % x.denominator) * TWO128 + x.denominator // 2) // x.denominator % TWO128
    if isinstance(x, float):
        return to_fixed128(Fraction(x))
    with mpmath.workprec(256):
        v = mpmath.mpf(x)
        frac = v - mpmath.floor(v)
        return int(mpmath.nint(frac * TWO128)) % TWO128


def _mulhi64(a: np.ndarray, b: int) -> tuple[np.ndarray, np.ndarray]:
    """Full 128-bit product of uint64 array ``a`` and scalar ``b`` < 2^64, as (hi, lo)."""
    b0 = np.uint64(b & 0xFFFFFFFF)
    b1 = np.uint64(b >> 32)
    a0 = a & _MASK32
    a1 = a >> _SH32
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> _SH32) + (p01 & _MASK32) + (p10 & _MASK32)
    hi = p11 + (p01 >> _SH32) + (p10 >> _SH32) + (mid >> _SH32)
    lo = (mid << _SH32) | (p00 & _MASK32)
    return hi, lo


def frac_mul(fixed: int, a) -> tuple[np.ndarray, np.ndarray]:
    """Compute frac(t * a) for integers ``a`` (|a| < 2^63) as 128-bit (hi, lo) words.

    ``fixed`` is ``to_fixed128(t)``.
    """
    arr = np.asarray(a)
    if arr.dtype == object:
        arr = np.array([int(v) for v in arr.ravel()], dtype=np.int64).reshape(arr.shape)
    arr = arr.astype(np.int64)
    neg = arr < 0
    au = np.abs(arr).view(np.uint64)
    f_hi = fixed >> 64
    f_lo = fixed & (TWO64 - 1)
    with np.errstate(over="ignore"):
        top = au * np.uint64(f_hi)
        carry_hi, lo = _mulhi64(au, f_lo)
        hi = top + carry_hi
    if neg.any():
        n_hi, n_lo = frac_neg((hi, lo))
        hi = np.where(neg, n_hi, hi)
        lo = np.where(neg, n_lo, lo)
    return hi, lo


def frac_neg(x: tuple[np.ndarray, np.ndarray]):
    with np.errstate(over="ignore"):
        lo = ~x[1] + np.uint64(1)
        hi = ~x[0] + (lo == 0).astype(np.uint64)
    return hi, lo


def frac_add(x: tuple[np.ndarray, np.ndarray], y: tuple[np.ndarray, np.ndarray]):
    with np.errstate(over="ignore"):
        lo = x[1] + y[1]
        carry = (lo < x[1]).astype(np.uint64)
        hi = x[0] + y[0] + carry
    return hi, lo


def frac_scale(x: tuple[np.ndarray, np.ndarray], k: int):
    """Multiply a 128-bit phase by a small integer k (mod 1)."""
    ku = k % TWO64
    with np.errstate(over="ignore"):
        carry_hi, lo = _mulhi64(x[1], ku)
        hi = x[0] * np.uint64(ku) + carry_hi
    return hi, lo


def phase_to_float(x: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    return x[0].astype(np.float64) / 2.0**64 + x[1].astype(np.float64) / 2.0**128


def unit_phase(x: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """e(t) for 128-bit phases; exact quarter turns map to exact 1, i, -1, -i."""
    theta = phase_to_float(x)
    out = np.exp(2j * np.pi * theta)
    quarter = (x[1] == 0) & ((x[0] & np.uint64((1 << 62) - 1)) == 0)
    if quarter.any():
        exact = np.array([1, 1j, -1, -1j], dtype=np.complex128)
        out[quarter] = exact[(x[0][quarter] >> np.uint64(62)).astype(np.int64)]
    return out


def is_close_to_int(values: Iterable[float], window: float) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return np.abs(v - np.round(v)) <= window
