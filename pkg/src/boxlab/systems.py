"""Finite measure-preserving systems with commuting permutations, observables,
and a closed-form 2-step skew product on the torus.

Convention: a map T is stored as an index array ``perm`` with T(x) = perm[x],
and acts on functions by (Tf)(x) = f(Tx), i.e. ``f[perm]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from typing import Sequence

import numpy as np

from ._numeric import TWO128, frac_add, frac_mul, frac_scale, phase_to_float, to_fixed128
from .errors import PrecisionError, ValidationError

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteSystem:
    """Finite point set with a probability vector and commuting measure-preserving bijections."""

    weights: np.ndarray
    maps: tuple[np.ndarray, ...]
    coords: np.ndarray | None = None
    modulus: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        maps = tuple(np.asarray(m, dtype=np.int64) for m in self.maps)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "maps", maps)
        w.setflags(write=False)
        for m in maps:
            m.setflags(write=False)
        _validate_system(w, maps)

    @property
    def point_count(self) -> int:
        return len(self.weights)

    @property
    def ell(self) -> int:
        return len(self.maps)

    def integrate(self, values) -> complex:
        return complex(np.dot(self.weights, np.asarray(values, dtype=np.complex128)))


def _validate_system(w: np.ndarray, maps: tuple[np.ndarray, ...]):
    m = len(w)
    if m < 1:
        raise ValidationError("system needs at least one point")
    if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValidationError("weights must be a probability vector")
    for j, T in enumerate(maps):
        if T.shape != (m,) or not np.array_equal(np.sort(T), np.arange(m)):
            raise ValidationError(f"map T_{j + 1} is not a bijection of the point set")
        if np.any(np.abs(w[T] - w) > WEIGHT_TOL):
            raise ValidationError(f"map T_{j + 1} does not preserve the weights")
    for i in range(len(maps)):
        for j in range(i + 1, len(maps)):
            if not np.array_equal(maps[i][maps[j]], maps[j][maps[i]]):
                raise ValidationError(f"maps T_{i + 1} and T_{j + 1} do not commute")


@dataclass(frozen=True, eq=False)
class Observable:
    values: np.ndarray
    sup_bound: float = float("nan")

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", v)
        sup = float(np.max(np.abs(v))) if v.size else 0.0
        bound = sup if math.isnan(self.sup_bound) else float(self.sup_bound)
        if sup > bound + 1e-12:
            raise ValidationError(f"observable sup {sup} exceeds declared bound {bound}")
        object.__setattr__(self, "sup_bound", bound)


def values_of(f) -> np.ndarray:
    if isinstance(f, Observable):
        return f.values
    return np.asarray(f, dtype=np.complex128)


# --------------------------------------------------------------------------
# constructors


def make_product_rotation(q: int, d: int, shifts: Sequence[Sequence[int]]) -> FiniteSystem:
    """(Z_q)^d with uniform weight and T_j = translation by shifts[j]."""
    if q < 1 or d < 1:
        raise ValidationError("need q >= 1 and d >= 1")
    coords = np.array(list(product(range(q), repeat=d)), dtype=np.int64).reshape(q**d, d)
    radix = q ** np.arange(d - 1, -1, -1, dtype=np.int64)
    maps = []
    for s in shifts:
        s = np.asarray(s, dtype=np.int64)
        if s.shape != (d,):
            raise ValidationError(f"shift {s.tolist()} does not have dimension {d}")
        maps.append(((coords + s) % q) @ radix)
    m = q**d
    return FiniteSystem(np.full(m, 1.0 / m), tuple(maps), coords=coords, modulus=q)


def make_system(weights, maps) -> FiniteSystem:
    return FiniteSystem(np.asarray(weights, dtype=np.float64), tuple(maps))


def character(sys: FiniteSystem, k: Sequence[int]) -> Observable:
    """x -> e(k.x / q) on a product rotation."""
    if sys.coords is None or sys.modulus is None:
        raise ValidationError("characters need a product-rotation system")
    k = np.asarray(k, dtype=np.int64)
    phase = (sys.coords @ k) % sys.modulus
    return Observable(np.exp(2j * np.pi * phase / sys.modulus), 1.0)


def indicator(sys: FiniteSystem, points: Sequence[int]) -> Observable:
    v = np.zeros(sys.point_count, dtype=np.complex128)
    v[np.asarray(list(points), dtype=np.int64)] = 1.0
    return Observable(v, 1.0)


def random_unimodular(sys: FiniteSystem, rng: np.random.Generator) -> Observable:
    return Observable(np.exp(2j * np.pi * rng.random(sys.point_count)), 1.0)


def random_bounded(sys: FiniteSystem, rng: np.random.Generator) -> Observable:
    """1-bounded complex observable, uniform in modulus and phase."""
    r = rng.random(sys.point_count)
    return Observable(r * np.exp(2j * np.pi * rng.random(sys.point_count)), 1.0)


# --------------------------------------------------------------------------
# permutations


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a o b)(x) = a(b(x))."""
    return a[b]


def inverse(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return inv


def perm_power(perm: np.ndarray, k: int) -> np.ndarray:
    if k < 0:
        return perm_power(inverse(perm), -k)
    result = np.arange(len(perm))
    base = perm
    while k:
        if k & 1:
            result = base[result]
        base = base[base]
        k >>= 1
    return result


def word_to_map(sys: FiniteSystem, w: Sequence[int]) -> np.ndarray:
    """T^w = T_1^{w_1} ... T_l^{w_l} as a permutation."""
    w = tuple(int(x) for x in w)
    if len(w) != sys.ell:
        raise ValidationError(f"word {w} has length {len(w)}, system has {sys.ell} maps")
    key = ("word", w)
    if key not in sys._cache:
        perm = np.arange(sys.point_count)
        for T, b in zip(sys.maps, w):
            if b:
                perm = compose(perm_power(T, b), perm)
        perm.setflags(write=False)
        sys._cache[key] = perm
    return sys._cache[key]


def orbit_labels(perm: np.ndarray) -> np.ndarray:
    """Label each point by the index of its cycle; labels are 0..c-1 in order of first appearance."""
    m = len(perm)
    labels = np.full(m, -1, dtype=np.int64)
    nxt = 0
    for start in range(m):
        if labels[start] >= 0:
            continue
        x = start
        while labels[x] < 0:
            labels[x] = nxt
            x = perm[x]
        nxt += 1
    return labels


def cycle_lengths(perm: np.ndarray) -> np.ndarray:
    return np.bincount(orbit_labels(perm))


def perm_order(perm: np.ndarray) -> int:
    return reduce(math.lcm, (int(c) for c in set(cycle_lengths(perm).tolist())), 1)


def map_order(sys: FiniteSystem, w: Sequence[int]) -> int:
    """Least P >= 1 with (T^w)^P = id."""
    return perm_order(word_to_map(sys, w))


def power_table(perm: np.ndarray, P: int | None = None) -> np.ndarray:
    """Rows h = 0..P-1 hold perm^h."""
    if P is None:
        P = perm_order(perm)
    table = np.empty((P, len(perm)), dtype=np.int64)
    table[0] = np.arange(len(perm))
    for h in range(1, P):
        table[h] = perm[table[h - 1]]
    return table


def orbit_average(perm: np.ndarray, values: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Replace values by their (weighted) mean over each cycle of ``perm``."""
    labels = orbit_labels(perm)
    return partition_average(labels, values, weights)


def partition_average(labels: np.ndarray, values: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    values = np.asarray(values, dtype=np.complex128)
    n = int(labels.max()) + 1
    if weights is None:
        weights = np.ones(len(values))
    mass = np.bincount(labels, weights=weights, minlength=n)
    num = np.bincount(labels, weights=weights * values.real, minlength=n) + 1j * np.bincount(
        labels, weights=weights * values.imag, minlength=n
    )
    counts = np.bincount(labels, minlength=n)
    plain = np.bincount(labels, weights=values.real, minlength=n) + 1j * np.bincount(
        labels, weights=values.imag, minlength=n
    )
    safe = mass > 0
    avg = np.where(safe, num / np.where(safe, mass, 1.0), plain / np.maximum(counts, 1))
    return avg[labels]


def conditional_expectation_invariant(sys: FiniteSystem, f, w: Sequence[int]) -> Observable:
    """E(f | I(T^w)): orbit-wise weighted means."""
    v = values_of(f)
    out = orbit_average(word_to_map(sys, w), v, sys.weights)
    return Observable(out, float(np.max(np.abs(v))) if v.size else 0.0)


def refine_labels(*labelings: np.ndarray) -> np.ndarray:
    """Common refinement of several partitions, relabelled 0..c-1."""
    stacked = np.stack(labelings, axis=1)
    _, inv = np.unique(stacked, axis=0, return_inverse=True)
    return inv.ravel().astype(np.int64)


# --------------------------------------------------------------------------
# skew product T(x, y) = (x + a, y + 2x + a) on the 2-torus

SKEW_CERTIFIED_N = 10**13
_SAFE_VECTOR_N = 3 * 10**9


@dataclass(frozen=True)
class SkewProductSystem:
    """Orbit closed form T^n(x, y) = (x + n a, y + 2 n x + n^2 a) mod 1 in 128-bit fixed point."""

    alpha: object
    start: tuple = (0, 0)
    alpha_fx: int = field(init=False, repr=False)
    x_fx: int = field(init=False, repr=False)
    y_fx: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha_fx", to_fixed128(self.alpha))
        object.__setattr__(self, "x_fx", to_fixed128(self.start[0]))
        object.__setattr__(self, "y_fx", to_fixed128(self.start[1]))

    def step(self, point: tuple[float, float]) -> tuple[float, float]:
        """One application of T in floating point; used as an iteration oracle."""
        x, y = point
        a = self.alpha_fx / TWO128
        return ((x + a) % 1.0, (y + 2 * x + a) % 1.0)


def skew_orbit_fixed(sys: SkewProductSystem, n: int) -> tuple[int, int]:
    if abs(n) > SKEW_CERTIFIED_N:
        raise PrecisionError(f"|n| = {abs(n)} beyond certified range {SKEW_CERTIFIED_N}")
    x = (sys.x_fx + n * sys.alpha_fx) % TWO128
    y = (sys.y_fx + 2 * n * sys.x_fx + n * n * sys.alpha_fx) % TWO128
    return x, y


def skew_orbit_point(sys: SkewProductSystem, n: int) -> tuple[float, float]:
    x, y = skew_orbit_fixed(sys, n)
    return x / TWO128, y / TWO128


def skew_orbit_phases(sys: SkewProductSystem, ns) -> tuple[tuple, tuple]:
    """Vectorised orbit points as 128-bit (hi, lo) phase pairs for x and y."""
    ns = np.asarray(ns)
    if ns.dtype == object or ns.size and np.max(np.abs(ns)) > _SAFE_VECTOR_N:
        if ns.size and max(abs(int(v)) for v in ns.ravel()) > SKEW_CERTIFIED_N:
            raise PrecisionError("orbit time beyond certified range")
        pts = [skew_orbit_fixed(sys, int(v)) for v in ns.ravel()]
        mask = (1 << 64) - 1
        xs = np.array([p[0] for p in pts], dtype=object)
        ys = np.array([p[1] for p in pts], dtype=object)
        to = lambda arr: (
            np.array([int(v) >> 64 for v in arr], dtype=np.uint64),
            np.array([int(v) & mask for v in arr], dtype=np.uint64),
        )
        return to(xs), to(ys)
    ns = ns.astype(np.int64)
    zero = (np.zeros(ns.shape, dtype=np.uint64), np.zeros(ns.shape, dtype=np.uint64))
    base_x = (zero[0] + np.uint64(sys.x_fx >> 64), zero[1] + np.uint64(sys.x_fx & ((1 << 64) - 1)))
    base_y = (zero[0] + np.uint64(sys.y_fx >> 64), zero[1] + np.uint64(sys.y_fx & ((1 << 64) - 1)))
    x = frac_add(base_x, frac_mul(sys.alpha_fx, ns))
    y = frac_add(base_y, frac_scale(frac_mul(sys.x_fx, ns), 2))
    y = frac_add(y, frac_mul(sys.alpha_fx, ns * ns))
    return x, y


def skew_orbit_floats(sys: SkewProductSystem, ns) -> tuple[np.ndarray, np.ndarray]:
    x, y = skew_orbit_phases(sys, ns)
    return phase_to_float(x), phase_to_float(y)
