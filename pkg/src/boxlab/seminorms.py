"""Box seminorms, dual functions, cubic measures and magic extensions on finite systems.

Every Cesaro limit over h is an exact average over a full period of the
relevant permutation, so all identities hold exactly up to rounding.
Cube index convention: bit (i - 1) of the integer index of a vertex is eps_i.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from ._numeric import csum, ordered_map
from .errors import BudgetError, NegativityError, ValidationError
from .systems import (
    FiniteSystem,
    Observable,
    compose,
    inverse,
    map_order,
    orbit_labels,
    partition_average,
    perm_order,
    perm_power,
    power_table,
    refine_labels,
    values_of,
    word_to_map,
)

MAX_S = 6
MAX_CUBE_S = 3
DEFAULT_MAX_COST = 2 * 10**8
DEFAULT_MAX_SUPPORT = 2 * 10**6
NEG_TOL = 1e-9


@dataclass(frozen=True)
class SeminormSpec:
    """Ordered list of transformation words R_1, ..., R_s (repetition allowed)."""

    words: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        words = tuple(tuple(int(b) for b in w) for w in self.words)
        if not words:
            raise ValidationError("seminorm spec needs at least one word")
        if len(words) > MAX_S:
            raise ValidationError(f"seminorm spec has s = {len(words)} > {MAX_S}")
        if len({len(w) for w in words}) != 1:
            raise ValidationError("all words must have the same length")
        object.__setattr__(self, "words", words)

    @property
    def s(self) -> int:
        return len(self.words)

    @classmethod
    def host_kra(cls, w: Sequence[int], s: int) -> "SeminormSpec":
        return cls((tuple(w),) * s)


_FACTOR = re.compile(r"^T(\d+)(?:\^(-?\d+))?$")


def parse_word(text: str, ell: int) -> tuple[int, ...]:
    """Parse 'T2*T1^-1' (or 'id') into an exponent vector of length ell."""
    w = [0] * ell
    text = text.strip().replace(" ", "")
    if text in ("id", "1", ""):
        return tuple(w)
    for factor in text.split("*"):
        m = _FACTOR.match(factor)
        if not m:
            raise ValidationError(f"cannot parse word factor {factor!r} in {text!r}")
        j = int(m.group(1))
        if not 1 <= j <= ell:
            raise ValidationError(f"T{j} out of range: system has {ell} maps")
        w[j - 1] += int(m.group(2)) if m.group(2) is not None else 1
    return tuple(w)


def parse_spec(text: str, ell: int) -> SeminormSpec:
    """Comma-separated words; 'W^xk' repeats W k times, e.g. 'T2*T1^-1^x2,T2'."""
    words = []
    for token in text.split(","):
        token = token.strip()
        reps = 1
        m = re.match(r"^(.*)\^x(\d+)$", token)
        if m:
            token, reps = m.group(1), int(m.group(2))
        words.extend([parse_word(token, ell)] * reps)
    return SeminormSpec(tuple(words))


def _as_spec(spec, sys: FiniteSystem) -> SeminormSpec:
    if isinstance(spec, SeminormSpec):
        out = spec
    elif isinstance(spec, str):
        out = parse_spec(spec, sys.ell)
    else:
        out = SeminormSpec(tuple(spec))
    if len(out.words[0]) != sys.ell:
        raise ValidationError(f"words have length {len(out.words[0])}, system has {sys.ell} maps")
    return out


def _periods(sys: FiniteSystem, spec: SeminormSpec) -> list[int]:
    return [map_order(sys, w) for w in spec.words]


def _guard(cost: int, max_cost: int | None, what: str):
    limit = DEFAULT_MAX_COST if max_cost is None else max_cost
    if cost > limit:
        raise BudgetError(f"{what} cost {cost} exceeds budget {limit}")


# --------------------------------------------------------------------------
# derivatives and seminorms


def mult_derivative(sys: FiniteSystem, f, w: Sequence[int], h: int) -> Observable:
    """f * (T^w)^h conj(f), pointwise."""
    v = values_of(f)
    perm = perm_power(word_to_map(sys, w), h)
    out = v * np.conj(v[perm])
    return Observable(out, float(np.max(np.abs(out))) if out.size else 0.0)


def _finish(total: complex, s: int, check_imag: bool = True) -> float:
    if check_imag and abs(total.imag) > NEG_TOL:
        raise NegativityError(f"seminorm power has imaginary part {total.imag:.3e}")
    val = total.real
    if val < -NEG_TOL:
        raise NegativityError(f"seminorm power accumulated to {val:.3e} < 0")
    return max(val, 0.0) ** (1.0 / 2**s)


def _seminorm_power(sys: FiniteSystem, g: np.ndarray, perms: list[np.ndarray], periods: list[int]) -> complex:
    """Unrooted [[g]]^{2^k} for the first k = len(perms) words.

    The innermost level uses E_h R^h conj(g) = E(conj(g) | I(R)) exactly
    (full-period average over each cycle).
    """
    if len(perms) == 1:
        avg = partition_average(orbit_labels(perms[0]), g)
        return csum(sys.weights * np.abs(avg) ** 2)
    R, P = perms[-1], periods[-1]
    parts = []
    cur = np.arange(len(g))
    for _ in range(P):
        parts.append(_seminorm_power(sys, g * np.conj(g[cur]), perms[:-1], periods[:-1]))
        cur = R[cur]
    return csum(parts) / P


def box_seminorm_power(sys: FiniteSystem, f, spec, *, max_cost: int | None = None, workers: int = 1) -> complex:
    """[[f]]^{2^s} before root extraction (complex, for diagnostics)."""
    spec = _as_spec(spec, sys)
    g = values_of(f)
    perms = [word_to_map(sys, w) for w in spec.words]
    periods = [perm_order(p) for p in perms]
    _guard(math.prod(periods) * sys.point_count, max_cost, "box seminorm")
    if spec.s == 1:
        return _seminorm_power(sys, g, perms, periods)
    R, P = perms[-1], periods[-1]
    table = power_table(R, P)
    parts = ordered_map(
        lambda h: _seminorm_power(sys, g * np.conj(g[table[h]]), perms[:-1], periods[:-1]),
        list(range(P)),
        workers,
    )
    return csum(parts) / P


def box_seminorm(sys: FiniteSystem, f, spec, *, max_cost: int | None = None, workers: int = 1) -> float:
    """[[f]]_{R_1..R_s} via the derivative recursion with exact full-period averages."""
    spec = _as_spec(spec, sys)
    total = box_seminorm_power(sys, f, spec, max_cost=max_cost, workers=workers)
    return _finish(total, spec.s)


def host_kra_seminorm(sys: FiniteSystem, f, w: Sequence[int], s: int, **kw) -> float:
    return box_seminorm(sys, f, SeminormSpec.host_kra(w, s), **kw)


# --------------------------------------------------------------------------
# dual functions


def _eps_bits(idx: int, s: int) -> tuple[int, ...]:
    return tuple((idx >> i) & 1 for i in range(s))


def _family(fs, s: int, include_zero: bool) -> list[np.ndarray]:
    """Normalise observables indexed by eps into a list indexed by the integer 0..2^s-1.

    Accepts one observable (used for every eps), a sequence in integer-index
    order (without the zero vertex when ``include_zero`` is False), or a mapping
    keyed by eps bit tuples or integers.
    """
    n = 2**s
    start = 0 if include_zero else 1
    if isinstance(fs, (Observable, np.ndarray)):
        v = values_of(fs)
        return [v] * n
    if isinstance(fs, Mapping):
        out: list = [None] * n
        for k, f in fs.items():
            idx = k if isinstance(k, int) else sum(int(b) << i for i, b in enumerate(k))
            out[idx] = values_of(f)
        missing = [i for i in range(start, n) if out[i] is None]
        if missing:
            raise ValidationError(f"missing observables for eps indices {missing}")
        return out
    seq = [values_of(f) for f in fs]
    if len(seq) != n - start:
        raise ValidationError(f"expected {n - start} observables, got {len(seq)}")
    return ([None] if not include_zero else []) + seq


def _twisted(v: np.ndarray, eps_weight: int) -> np.ndarray:
    return np.conj(v) if eps_weight % 2 else v


def dual_function(sys: FiniteSystem, fs, spec, *, max_cost: int | None = None, workers: int = 1) -> Observable:
    """D = E_h prod_{eps != 0} C^{|eps|} R^{eps.h} f_eps as an exact full-period average.

    The sum over h_s is done in closed form: the eps_s = 1 factors are averaged
    over R_s-orbits.
    """
    spec = _as_spec(spec, sys)
    s = spec.s
    fam = _family(fs, s, include_zero=False)
    perms = [word_to_map(sys, w) for w in spec.words]
    periods = [perm_order(p) for p in perms]
    _guard(math.prod(periods[:-1]) * sys.point_count * 2**s, max_cost, "dual function")
    m = sys.point_count
    labels_s = orbit_labels(perms[-1])
    tables = [power_table(p, P) for p, P in zip(perms[:-1], periods[:-1])]
    hs = list(product(*[range(P) for P in periods[:-1]]))

    def one(h) -> np.ndarray:
        maps = []
        for eps_low in range(2 ** (s - 1)):
            cur = np.arange(m)
            for i in range(s - 1):
                if (eps_low >> i) & 1:
                    cur = tables[i][h[i]][cur]
            maps.append(cur)
        a = np.ones(m, dtype=np.complex128)
        b = np.ones(m, dtype=np.complex128)
        for eps_low in range(2 ** (s - 1)):
            wt = bin(eps_low).count("1")
            if eps_low:
                a = a * _twisted(fam[eps_low][maps[eps_low]], wt)
            top = eps_low | (1 << (s - 1))
            b = b * _twisted(fam[top][maps[eps_low]], wt + 1)
        return a * partition_average(labels_s, b)

    parts = ordered_map(one, hs, workers)
    stacked = np.stack(parts)
    out = np.array([csum(stacked[:, x]) for x in range(m)]) / len(hs)
    return Observable(out, float(np.max(np.abs(out))) if m else 0.0)


def dual_pairing(sys: FiniteSystem, f, spec, **kw) -> complex:
    """int f . D(f) dmu, which equals [[f]]^{2^s}."""
    D = dual_function(sys, f, spec, **kw)
    return csum(sys.weights * values_of(f) * D.values)


def gcs_check(sys: FiniteSystem, fs, spec, *, max_cost: int | None = None) -> tuple[float, float]:
    """Both sides of the Gowers-Cauchy-Schwarz inequality for 2^s observables."""
    spec = _as_spec(spec, sys)
    fam = _family(fs, spec.s, include_zero=True)
    D = dual_function(sys, {i: fam[i] for i in range(1, 2**spec.s)}, spec, max_cost=max_cost)
    lhs = abs(csum(sys.weights * fam[0] * D.values))
    rhs = math.prod(box_seminorm(sys, v, spec, max_cost=max_cost) for v in fam)
    return lhs, rhs


# --------------------------------------------------------------------------
# cubic measures and magic extensions


class _RowIndex:
    """Lookup from 2^s-tuples of base points to support row indices."""

    def __init__(self, support: np.ndarray, m: int):
        self.m = m
        self.width = support.shape[1]
        self.exact = self.width * math.log2(max(m, 2)) < 62
        keys = self._keys(support)
        self.order = np.argsort(keys, kind="stable")
        self.sorted = keys[self.order]

    def _keys(self, rows: np.ndarray):
        if self.exact:
            radix = self.m ** np.arange(self.width, dtype=np.int64)
            return rows.astype(np.int64) @ radix
        return np.array([r.tobytes() for r in rows.astype(np.int64)], dtype=object)

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        keys = self._keys(rows)
        if self.exact:
            pos = np.searchsorted(self.sorted, keys)
            pos = np.minimum(pos, len(self.sorted) - 1)
            if not np.array_equal(self.sorted[pos], keys):
                raise ValidationError("image of cube support leaves the support")
            return self.order[pos]
        table = {k: i for k, i in zip(self.sorted, self.order)}
        try:
            return np.array([table[k] for k in keys], dtype=np.int64)
        except KeyError as exc:
            raise ValidationError("image of cube support leaves the support") from exc


@dataclass(eq=False)
class CubeSystem:
    """Sparse cubic measure on 2^s-tuples with side maps R_i^* and lifted generators T_j^*."""

    base: FiniteSystem
    words: tuple[tuple[int, ...], ...]
    support: np.ndarray
    weights: np.ndarray
    side_maps: tuple[np.ndarray, ...] = ()
    lifted: tuple[np.ndarray, ...] = ()
    _system: FiniteSystem | None = field(default=None, repr=False)

    @property
    def s(self) -> int:
        return len(self.words)

    @property
    def size(self) -> int:
        return len(self.weights)

    def projection(self, eps: int = 0) -> np.ndarray:
        """Push-forward of the cube measure to vertex ``eps``."""
        return np.bincount(self.support[:, eps], weights=self.weights, minlength=self.base.point_count)

    def lift(self, f, eps: int = 0) -> np.ndarray:
        """f composed with the vertex-``eps`` projection."""
        return values_of(f)[self.support[:, eps]]

    def as_system(self) -> FiniteSystem:
        """The extension as a FiniteSystem with maps (R_1^*, .., R_s^*, T_1^*, .., T_l^*)."""
        if self._system is None:
            self._system = FiniteSystem(self.weights / self.weights.sum(), self.side_maps + self.lifted)
        return self._system


def cubic_measure(sys: FiniteSystem, words, *, max_support: int | None = None) -> CubeSystem:
    """Iterated relative products over orbit partitions of the diagonal actions R_i x ... x R_i."""
    spec = _as_spec(words, sys)
    s = spec.s
    if s > MAX_CUBE_S:
        raise ValidationError(f"cubic measure needs s <= {MAX_CUBE_S}, got {s}")
    limit = DEFAULT_MAX_SUPPORT if max_support is None else max_support
    support = np.arange(sys.point_count, dtype=np.int64)[:, None]
    keep = sys.weights > 0
    support, weights = support[keep], sys.weights[keep].copy()
    for w in spec.words:
        R = word_to_map(sys, w)
        idx = _RowIndex(support, sys.point_count)
        diag = idx.lookup(R[support])
        labels = orbit_labels(diag)
        W = np.bincount(labels, weights=weights)
        order = np.argsort(labels, kind="stable")
        counts = np.bincount(labels)
        new_size = int(np.sum(counts.astype(np.int64) ** 2))
        if new_size > limit:
            raise BudgetError(f"cube support would have {new_size} tuples > {limit}")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        rows, wts = [], []
        for o in range(len(counts)):
            members = order[starts[o] : starts[o] + counts[o]]
            a, b = np.meshgrid(members, members, indexing="ij")
            a, b = a.ravel(), b.ravel()
            rows.append(np.concatenate([support[a], support[b]], axis=1))
            wts.append(weights[a] * weights[b] / W[o])
        support = np.concatenate(rows)
        weights = np.concatenate(wts)
    cube = CubeSystem(sys, spec.words, support, weights)
    cube.side_maps = tuple(_side_map(cube, i) for i in range(s))
    return cube


def _side_map(cube: CubeSystem, i: int) -> np.ndarray:
    """R_i^*: apply R_i to the coordinates with eps_i = 0."""
    R = word_to_map(cube.base, cube.words[i])
    img = cube.support.copy()
    cols = [e for e in range(2**cube.s) if not (e >> i) & 1]
    img[:, cols] = R[img[:, cols]]
    return _RowIndex(cube.support, cube.base.point_count).lookup(img)


def cube_duality(cube: CubeSystem, f) -> complex:
    """int prod_eps C^{|eps|} f(x_eps) d mu^{[s]}."""
    v = values_of(f)
    prod_ = np.ones(cube.size, dtype=np.complex128)
    for eps in range(2**cube.s):
        prod_ = prod_ * _twisted(v[cube.support[:, eps]], bin(eps).count("1"))
    return csum(cube.weights * prod_)


def _integer_inverse(B: list[list[int]]) -> list[list[int]] | None:
    """Inverse of a square integer matrix if it is integral, else None (Gauss-Jordan over Q)."""
    n = len(B)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(B)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            return None
        aug[c], aug[piv] = aug[piv], aug[c]
        p = aug[c][c]
        aug[c] = [x / p for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                k = aug[r][c]
                aug[r] = [x - k * y for x, y in zip(aug[r], aug[c])]
    inv = [row[n:] for row in aug]
    if any(x.denominator != 1 for row in inv for x in row):
        return None
    return [[int(x) for x in row] for row in inv]


def magic_extension(sys: FiniteSystem, words, *, max_support: int | None = None) -> CubeSystem:
    """Cubic measure with side maps R_i^* and lifted generators T_j^*.

    Requires R_i = T^{b_i} with b_ij = 0 for j > s and the s x s block
    invertible over the integers, so that T_j = prod_i R_i^{c_ji} for j <= s.
    """
    spec = _as_spec(words, sys)
    s, ell = spec.s, sys.ell
    if s > ell:
        raise ValidationError(f"{s} words cannot generate a subgroup of {ell} generators")
    B = [list(w) for w in spec.words]
    if any(B[i][j] for i in range(s) for j in range(s, ell)):
        raise ValidationError("generation hypothesis fails: words involve generators beyond T_s")
    C = _integer_inverse([row[:s] for row in B])
    if C is None:
        raise ValidationError("generation hypothesis fails: word matrix is not unimodular")
    cube = cubic_measure(sys, spec, max_support=max_support)
    lifted = []
    ident = np.arange(cube.size)
    for j in range(s):
        perm = ident
        for i in range(s):
            if C[j][i]:
                perm = compose(perm_power(cube.side_maps[i], C[j][i]), perm)
        lifted.append(perm)
    idx = _RowIndex(cube.support, sys.point_count)
    for j in range(s, ell):
        lifted.append(idx.lookup(sys.maps[j][cube.support]))
    cube.lifted = tuple(lifted)
    return cube


def joint_invariant_expectation(cube: CubeSystem, f, which: Sequence[int] = (0, 1)) -> np.ndarray:
    """E(f | I(R_a^*) v I(R_b^*) v ...) as an average over the common refinement of orbit partitions."""
    labels = refine_labels(*[orbit_labels(cube.side_maps[i]) for i in which])
    return partition_average(labels, np.asarray(f, dtype=np.complex128), cube.weights)


def magic_property_check(cube: CubeSystem, f, tol: float = 1e-8) -> dict:
    """Compare [[f]]_{R_1^*, .., R_s^*} on the extension with ||E(f | join of invariant algebras)||."""
    ext = cube.as_system()
    v = np.asarray(f, dtype=np.complex128)
    s = cube.s
    words = [tuple(int(k == i) for k in range(ext.ell)) for i in range(s)]
    semi = box_seminorm(ext, v, SeminormSpec(tuple(words)))
    cond = joint_invariant_expectation(cube, v, range(s))
    cond_norm = math.sqrt(max(csum(ext.weights * np.abs(cond) ** 2).real, 0.0))
    return {
        "seminorm": semi,
        "conditional_norm": cond_norm,
        "consistent": (semi <= tol) == (cond_norm <= tol),
    }


# --------------------------------------------------------------------------
# nonergodic eigenfunctions


def eigenfunction_residual(sys: FiniteSystem, chi, w: Sequence[int], *, max_cost: int | None = None) -> float:
    """L^2 distance between chi and E_{h1,h2} T^{h1+h2} conj(chi) . T^{h1} chi . T^{h2} chi."""
    v = values_of(chi)
    mod = np.abs(v)
    bad = (mod > 1e-9) & (np.abs(mod - 1.0) > 1e-9)
    if np.any(bad):
        raise ValidationError("eigenfunction candidate must have modulus 0 or 1 pointwise")
    T = word_to_map(sys, w)
    P = perm_order(T)
    _guard(P * P * sys.point_count, max_cost, "eigenfunction residual")
    vals = v[power_table(T, P)]
    acc = np.zeros((P, sys.point_count), dtype=np.complex128)
    for h1 in range(P):
        shifted = np.conj(np.roll(vals, -h1, axis=0))
        acc[h1] = vals[h1] * np.sum(shifted * vals, axis=0)
    avg = np.sum(acc, axis=0) / (P * P)
    return math.sqrt(max(csum(sys.weights * np.abs(v - avg) ** 2).real, 0.0))


__all__ = [
    "SeminormSpec",
    "CubeSystem",
    "parse_word",
    "parse_spec",
    "mult_derivative",
    "box_seminorm",
    "box_seminorm_power",
    "host_kra_seminorm",
    "dual_function",
    "dual_pairing",
    "gcs_check",
    "cubic_measure",
    "cube_duality",
    "magic_extension",
    "joint_invariant_expectation",
    "magic_property_check",
    "eigenfunction_residual",
    "inverse",
]
