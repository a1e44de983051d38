"""Grid box norms on [-N, N]^l, constructive inverse witnesses, structured functions
and an energy-increment regularity decomposition.

Arrays are indexed by x_i + N along axis i - 1, so ``values[x_1 + N, ..., x_l + N]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._numeric import csum, e, ordered_map
from .errors import BudgetError, NegativityError, ValidationError

DEFAULT_MAX_COST = 5 * 10**8
NEG_TOL = 1e-9
STR_CLIP = 3.0
QUANTUM = 2.0**-40


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex function on [-N, N]^l, zero outside."""

    ell: int
    N: int
    values: np.ndarray
    sup_bound: float = float("nan")

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (2 * self.N + 1,) * self.ell:
            raise ValidationError(f"values shape {v.shape} does not match l={self.ell}, N={self.N}")
        object.__setattr__(self, "values", v)
        sup = float(np.max(np.abs(v))) if v.size else 0.0
        bound = sup if math.isnan(self.sup_bound) else float(self.sup_bound)
        if sup > bound + 1e-12:
            raise ValidationError(f"grid function sup {sup} exceeds declared bound {bound}")
        object.__setattr__(self, "sup_bound", bound)

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    def l2_norm(self) -> float:
        """Normalised L^2 norm sqrt(E_{x in [-N,N]^l} |f|^2)."""
        return math.sqrt(math.fsum((np.abs(self.values) ** 2).ravel().tolist()) / self.values.size)

    @classmethod
    def zeros(cls, ell: int, N: int) -> "GridFunction":
        return cls(ell, N, np.zeros((2 * N + 1,) * ell))

    @classmethod
    def from_function(cls, ell: int, N: int, fn: Callable[..., np.ndarray]) -> "GridFunction":
        axes = np.meshgrid(*[np.arange(-N, N + 1)] * ell, indexing="ij")
        return cls(ell, N, fn(*axes))

    @classmethod
    def random_sign(cls, ell: int, N: int, rng: np.random.Generator) -> "GridFunction":
        return cls(ell, N, rng.choice([-1.0, 1.0], size=(2 * N + 1,) * ell), 1.0)

    @classmethod
    def random_bounded(cls, ell: int, N: int, rng: np.random.Generator) -> "GridFunction":
        shape = (2 * N + 1,) * ell
        return cls(ell, N, rng.random(shape) * np.exp(2j * np.pi * rng.random(shape)), 1.0)

    def to_json(self) -> dict:
        flat = self.values.ravel()
        return {"ell": self.ell, "N": self.N, "values": [[float(z.real), float(z.imag)] for z in flat]}

    @classmethod
    def from_json(cls, data: dict) -> "GridFunction":
        try:
            ell, N = int(data["ell"]), int(data["N"])
            pairs = np.asarray(data["values"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad grid function JSON: {exc}") from exc
        if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) != (2 * N + 1) ** ell:
            raise ValidationError("grid JSON 'values' must be (2N+1)^l [re, im] pairs in row-major order")
        return cls(ell, N, (pairs[:, 0] + 1j * pairs[:, 1]).reshape((2 * N + 1,) * ell))


def shift(values: np.ndarray, m: Sequence[int]) -> np.ndarray:
    """(x -> values[x + m]) on the same window, zero-filled."""
    out = np.zeros_like(values)
    src, dst = [], []
    for mi, n in zip(m, values.shape):
        mi = int(mi)
        if abs(mi) >= n:
            return out
        src.append(slice(max(mi, 0), n + min(mi, 0)))
        dst.append(slice(max(-mi, 0), n - max(mi, 0)))
    out[tuple(dst)] = values[tuple(src)]
    return out


def derivative(values: np.ndarray, m: Sequence[int]) -> np.ndarray:
    """Delta_m g(x) = g(x) conj(g(x + m))."""
    return values * np.conj(shift(values, m))


# --------------------------------------------------------------------------
# direction sets and grid box norms


@dataclass(frozen=True)
class DirectionSet:
    """Finite sets E_1, .., E_s of vectors in Z^l (rows of integer arrays)."""

    entries: tuple[np.ndarray, ...]

    def __post_init__(self):
        ents = tuple(np.atleast_2d(np.asarray(E, dtype=np.int64)) for E in self.entries)
        if not ents:
            raise ValidationError("direction set needs at least one entry")
        for E in ents:
            if E.size == 0:
                raise ValidationError("direction set entries must be nonempty")
        if len({E.shape[1] for E in ents}) != 1:
            raise ValidationError("direction set entries must share a dimension")
        object.__setattr__(self, "entries", ents)

    @property
    def s(self) -> int:
        return len(self.entries)

    @property
    def ell(self) -> int:
        return self.entries[0].shape[1]

    @staticmethod
    def axis(i: int, N: int, ell: int) -> np.ndarray:
        """e_i [-N, N] with i counted from 1."""
        E = np.zeros((2 * N + 1, ell), dtype=np.int64)
        E[:, i - 1] = np.arange(-N, N + 1)
        return E

    @classmethod
    def axes(cls, spec: Sequence[tuple[int, int]], ell: int) -> "DirectionSet":
        return cls(tuple(cls.axis(i, N, ell) for i, N in spec))

    @classmethod
    def inverse_theorem(cls, ell: int, N: int) -> "DirectionSet":
        """e_1[+-N], .., e_l[+-N], e_l[+-N]."""
        return cls.axes([(i, N) for i in range(1, ell + 1)] + [(ell, N)], ell)

    @classmethod
    def parse(cls, text: str, ell: int) -> "DirectionSet":
        """'e1:8,e2:8,e2:8' -> axis segments."""
        spec = []
        for tok in text.split(","):
            tok = tok.strip()
            try:
                axis, n = tok.split(":")
                if not axis.startswith("e"):
                    raise ValueError
                spec.append((int(axis[1:]), int(n)))
            except ValueError as exc:
                raise ValidationError(f"cannot parse direction {tok!r}; expected e<i>:<N>") from exc
        for i, _ in spec:
            if not 1 <= i <= ell:
                raise ValidationError(f"direction e{i} out of range for l = {ell}")
        return cls.axes(spec, ell)


def difference_counts(E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct m = h' - h over pairs in E with their integer multiplicities."""
    diffs = (E[None, :, :] - E[:, None, :]).reshape(-1, E.shape[1])
    ms, counts = np.unique(diffs, axis=0, return_counts=True)
    return ms, counts.astype(np.int64)


def _overlap(m: Sequence[int], shape: tuple) -> tuple[tuple, tuple]:
    """Slices (A, B) with A[x] pairing B[x + m] inside the window."""
    a, b = [], []
    for mi, n in zip(m, shape):
        mi = int(mi)
        a.append(slice(max(-mi, 0), n - max(mi, 0)))
        b.append(slice(max(mi, 0), n + min(mi, 0)))
    return tuple(a), tuple(b)


def _inner_level(g: np.ndarray, ms: np.ndarray, counts: np.ndarray) -> complex:
    """sum_m c(m) sum_x g(x) conj(g(x + m))."""
    sums = np.empty(len(ms), dtype=np.complex128)
    for j, m in enumerate(ms):
        a, b = _overlap(m, g.shape)
        sums[j] = np.sum(g[a] * np.conj(g[b]))
    return csum(counts * sums)


def _two_levels(g: np.ndarray, d1, d2) -> complex:
    """The innermost two levels at once: sum_{m2, m1} c2 c1 sum_x Delta_{m1} Delta_{m2} g."""
    (ms1, c1), (ms2, c2) = d1, d2
    G = np.stack([derivative(g, m) for m in ms2])
    S = np.empty((len(ms2), len(ms1)), dtype=np.complex128)
    axes = tuple(range(1, g.ndim + 1))
    for j, m in enumerate(ms1):
        a, b = _overlap(m, g.shape)
        S[:, j] = np.sum(G[(slice(None),) + a] * np.conj(G[(slice(None),) + b]), axis=axes)
    return csum((c2[:, None] * c1[None, :]) * S)


_TWO_LEVEL_LIMIT = 2 * 10**7


def _grid_power(g: np.ndarray, diffs: list) -> complex:
    if len(diffs) == 1:
        return _inner_level(g, *diffs[0])
    if len(diffs) == 2 and len(diffs[1][0]) * g.size <= _TWO_LEVEL_LIMIT:
        return _two_levels(g, diffs[0], diffs[1])
    ms, counts = diffs[-1]
    parts = [int(c) * _grid_power(derivative(g, m), diffs[:-1]) for m, c in zip(ms, counts)]
    return csum(parts)


def _useful(d, shape) -> tuple[np.ndarray, np.ndarray]:
    """Drop differences that move every point off the window (their terms vanish)."""
    ms, counts = d
    keep = np.all(np.abs(ms) < np.asarray(shape), axis=1)
    return ms[keep], counts[keep]


def grid_box_norm_power(f: GridFunction, dirs: DirectionSet, *, max_cost: int | None = None, workers: int = 1) -> float:
    """Exact ||f||^{2^s} via the weighted-difference form, summed over distinct m."""
    if dirs.ell != f.ell:
        raise ValidationError(f"directions live in Z^{dirs.ell}, function in Z^{f.ell}")
    diffs = [_useful(difference_counts(E), f.values.shape) for E in dirs.entries]
    cost = math.prod(len(ms) for ms, _ in diffs) * f.values.size
    limit = DEFAULT_MAX_COST if max_cost is None else max_cost
    if cost > limit:
        raise BudgetError(f"exact grid norm cost {cost} exceeds budget {limit}; use Monte Carlo mode")
    g = f.values
    if len(diffs) == 1:
        total = _grid_power(g, diffs)
    else:
        ms, counts = diffs[-1]
        parts = ordered_map(
            lambda j: int(counts[j]) * _grid_power(derivative(g, ms[j]), diffs[:-1]),
            list(range(len(ms))),
            workers,
        )
        total = csum(parts)
    denom = math.prod(len(E) ** 2 for E in dirs.entries)
    if abs(total.imag) > NEG_TOL * max(1.0, denom):
        raise NegativityError(f"grid norm power has imaginary part {total.imag / denom:.3e}")
    val = total.real / denom
    if val < -NEG_TOL:
        raise NegativityError(f"grid norm power accumulated to {val:.3e} < 0")
    return max(val, 0.0)


def grid_box_norm(f: GridFunction, dirs: DirectionSet, *, max_cost: int | None = None, workers: int = 1) -> float:
    """||f||_{E_1..E_s} computed exactly."""
    return grid_box_norm_power(f, dirs, max_cost=max_cost, workers=workers) ** (1.0 / 2**dirs.s)


@dataclass(frozen=True)
class NormEstimate:
    value: float
    power: float
    stderr: float
    samples: int


MC_BLOCK = 256


def grid_box_norm_mc(f: GridFunction, dirs: DirectionSet, samples: int, seed: int = 0, workers: int = 1) -> NormEstimate:
    """Monte Carlo estimate of ||f||^{2^s}: sample h_i, h_i' in E_i and average sum_x Delta_m f.

    Samples are drawn in fixed blocks, each from its own spawned seed, so the
    estimate does not depend on ``workers``.
    """
    if samples < 2:
        raise ValidationError("Monte Carlo mode needs at least 2 samples")
    blocks = [(i, min(MC_BLOCK, samples - i * MC_BLOCK)) for i in range(-(-samples // MC_BLOCK))]
    children = np.random.SeedSequence(seed).spawn(len(blocks))

    def run(block) -> list[float]:
        i, n = block
        rng = np.random.default_rng(children[i])
        out = []
        for _ in range(n):
            g = f.values
            for E in dirs.entries:
                h, h2 = E[rng.integers(len(E))], E[rng.integers(len(E))]
                g = derivative(g, h2 - h)
            out.append(float(np.sum(g).real))
        return out

    vals = [v for chunk in ordered_map(run, blocks, workers) for v in chunk]
    mean = math.fsum(vals) / len(vals)
    var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return NormEstimate(max(mean, 0.0) ** (1.0 / 2**dirs.s), mean, math.sqrt(var / len(vals)), len(vals))


# --------------------------------------------------------------------------
# U^2 inverse witness


def _row_sums(rows: np.ndarray, N: int, phi: np.ndarray) -> np.ndarray:
    """S(phi) = sum_x row(x) e(phi x) for x in [-N, N], row-wise."""
    x = np.arange(-N, N + 1)
    return np.sum(rows * e(phi[..., None] * x), axis=-1)


def best_frequencies(rows: np.ndarray, N: int, refine: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Per row, the frequency maximising |sum_x row(x) e(phi x)| and the complex sum there.

    Candidate frequencies k/L on a zero-padded DFT of size L = 4N + 2, optionally
    refined by a bounded scalar search within one bin.
    """
    L = 4 * N + 2
    spec = np.fft.ifft(rows, n=L, axis=-1) * L
    k = np.arange(L)
    spec = spec * e(-k * N / L)
    best = np.argmax(np.abs(spec), axis=-1)
    phi = best / L
    S = np.take_along_axis(spec, best[..., None], axis=-1)[..., 0]
    if refine:
        flat_rows = rows.reshape(-1, rows.shape[-1])
        flat_phi = phi.reshape(-1).copy()
        flat_S = S.reshape(-1).copy()
        x = np.arange(-N, N + 1)
        for r in range(len(flat_rows)):
            if not np.any(flat_rows[r]):
                continue
            row = flat_rows[r]
            obj = lambda t: -abs(np.sum(row * e(t * x)))
            res = minimize_scalar(obj, bounds=(flat_phi[r] - 1 / L, flat_phi[r] + 1 / L), method="bounded",
                                  options={"xatol": 1e-10})
            if -res.fun > abs(flat_S[r]):
                flat_phi[r] = res.x
                flat_S[r] = np.sum(row * e(res.x * x))
        phi, S = flat_phi.reshape(phi.shape), flat_S.reshape(S.shape)
    return np.mod(phi, 1.0), S


@dataclass(frozen=True)
class U2Witness:
    phi: np.ndarray
    psi: np.ndarray
    correlation: float
    delta: float
    constant: float


def u2_inverse_witness(f: GridFunction, axis: int = 0, refine: bool = True) -> U2Witness:
    """Witness (phi, psi) for sum f(x, y) e(phi(y) x + psi(y)) with x along ``axis``.

    Also reports delta = ||f||^4_{e[N], e[N]} / N^2 along that axis and the
    achieved constant correlation / (delta^{3/2} N^2).
    """
    if f.ell != 2:
        raise ValidationError("u2_inverse_witness needs l = 2")
    rows = np.moveaxis(f.values, axis, -1)
    phi, S = best_frequencies(rows, f.N, refine=refine)
    psi = np.mod(-np.angle(S) / (2 * np.pi), 1.0)
    corr = u2_correlation(f, phi, psi, axis)
    dirs = DirectionSet.axes([(axis + 1, f.N)] * 2, 2)
    delta = grid_box_norm_power(f, dirs) / max(f.N, 1) ** 2
    const = corr / (delta**1.5 * max(f.N, 1) ** 2) if delta > 0 else float("inf")
    return U2Witness(phi, psi, corr, delta, const)


def u2_correlation(f: GridFunction, phi: np.ndarray, psi: np.ndarray, axis: int = 0) -> float:
    rows = np.moveaxis(f.values, axis, -1)
    S = _row_sums(rows, f.N, np.asarray(phi)) * e(np.asarray(psi))
    total = csum(S)
    return max(total.real, 0.0)


# --------------------------------------------------------------------------
# box-norm inverse witness


@dataclass(frozen=True)
class BoxWitness:
    """phi on Z^{l-1}, b_1..b_l on Z^{l-1}; tables indexed by the omitted-coordinate grid."""

    phi: np.ndarray
    b: tuple[np.ndarray, ...]
    correlation: float
    m: tuple[int, ...]
    raw_correlation: float


def _hat_expand(table: np.ndarray, j: int, ell: int) -> np.ndarray:
    """View a table on x-hat_j (coordinate j, 0-based, removed) as broadcastable over the grid."""
    return np.expand_dims(table, axis=j)


def box_structured_values(phi: np.ndarray, b: Sequence[np.ndarray], N: int, ell: int) -> np.ndarray:
    """x -> e(phi(x-hat_l) x_l) prod_j b_j(x-hat_j) on [-N, N]^l."""
    xl = np.arange(-N, N + 1).reshape((1,) * (ell - 1) + (-1,))
    out = e(_hat_expand(phi, ell - 1, ell) * xl)
    for j, bj in enumerate(b):
        out = out * _hat_expand(bj, j, ell)
    return out


def box_correlation(f: GridFunction, phi, b) -> complex:
    return csum(f.values * box_structured_values(phi, b, f.N, f.ell))


def box_inverse_witness(
    f: GridFunction,
    *,
    polish_rounds: int = 3,
    max_candidates: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> BoxWitness:
    """Constructive box-norm inverse witness.

    Differentiate along e_1..e_{l-1}, take a U^2 witness along e_l for each
    derivative, shift m -> m' - x-hat, pigeonhole the best m', rotate to a
    nonnegative correlation, then polish phi and the b_j by alternating
    maximisation (which never lowers the correlation).  For l >= 3 the m'
    candidates may be subsampled with ``max_candidates``.
    """
    ell, N = f.ell, f.N
    if ell < 2:
        raise ValidationError("box_inverse_witness needs l >= 2")
    n = 2 * N + 1
    v = f.values
    k = ell - 1
    # (i)-(iii): U^2 witnesses for every derivative Delta_m f, m in [-2N, 2N]^{l-1}
    mrange = np.arange(-2 * N, 2 * N + 1)
    mlist = list(product(mrange.tolist(), repeat=k))

    def deriv_m(m):
        g = v
        for i, mi in enumerate(m):
            step = [0] * ell
            step[i] = mi
            g = derivative(g, step)
        return g

    def witness_m(m):
        phi, S = best_frequencies(deriv_m(m), N, refine=False)
        return phi, np.mod(-np.angle(S) / (2 * np.pi), 1.0)

    wits = ordered_map(witness_m, mlist, workers)
    shape_m = (len(mrange),) * k
    PHI = np.stack([w[0] for w in wits]).reshape(shape_m + (n,) * k)
    PSI = np.stack([w[1] for w in wits]).reshape(shape_m + (n,) * k)

    # (iv)-(vi): shift and pigeonhole over m' in [-N, N]^{l-1}
    cands = list(product(range(-N, N + 1), repeat=k))
    if max_candidates is not None and len(cands) > max_candidates:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(cands), size=max_candidates, replace=False))
        cands = [cands[i] for i in pick]
    xs = np.arange(-N, N + 1)
    xhat = np.meshgrid(*[xs] * k, indexing="ij")

    def build(mp):
        idx_m = tuple(mp[i] - xhat[i] + 2 * N for i in range(k))
        idx_x = tuple(xhat[i] + N for i in range(k))
        phi = PHI[idx_m + idx_x]
        bl = e(PSI[idx_m + idx_x]).astype(np.complex128)
        # b_j collects the cube factors whose lowest replaced coordinate is j
        bs = []
        for j in range(k):
            bj = np.ones((n,) * k, dtype=np.complex128)
            for omega in range(1, 2**k):
                if (omega & -omega).bit_length() - 1 != j:
                    continue
                bj = bj * _cube_factor(v, omega, mp, j, N, ell)
            bs.append(bj)
        bs.append(bl)
        return phi, tuple(bs)

    def score(mp):
        phi, bs = build(mp)
        return box_correlation(f, phi, bs).real

    scores = ordered_map(score, cands, workers)
    best = int(np.argmax(scores)) if cands else 0
    mp = cands[best]
    phi, bs = build(mp)
    raw = box_correlation(f, phi, bs)
    rot = np.exp(-1j * np.angle(raw)) if abs(raw) > 0 else 1.0
    bs = bs[:-1] + (bs[-1] * rot,)
    phi, bs = _polish(f, phi, bs, polish_rounds)
    corr = box_correlation(f, phi, bs)
    return BoxWitness(phi, bs, max(corr.real, 0.0), tuple(int(t) for t in mp), float(raw.real))


def _cube_factor(v: np.ndarray, omega: int, mp, j: int, N: int, ell: int) -> np.ndarray:
    """C^{|omega|} f evaluated with coordinates in omega replaced by m', as a table on x-hat_j."""
    sl = []
    for i in range(ell):
        if i < ell - 1 and (omega >> i) & 1:
            sl.append(mp[i] + N)
        else:
            sl.append(slice(None))
    vals = v[tuple(sl)]
    kept = [i for i in range(ell) if not (i < ell - 1 and (omega >> i) & 1)]
    # vals has axes = kept coordinates; expand to the full x-hat_j grid
    full_axes = [i for i in range(ell) if i != j]
    for pos, i in enumerate(full_axes):
        if i not in kept:
            vals = np.expand_dims(vals, axis=pos)
    vals = np.broadcast_to(vals, (2 * N + 1,) * (ell - 1))
    if bin(omega).count("1") % 2:
        vals = np.conj(vals)
    return np.array(vals, dtype=np.complex128)


def _polish(f: GridFunction, phi: np.ndarray, bs: tuple, rounds: int):
    """Alternating maximisation of Re sum f e(phi x_l) prod b_j; each step is monotone."""
    ell, N = f.ell, f.N
    current = box_correlation(f, phi, bs).real
    for _ in range(rounds):
        # phi and b_l together: per x-hat_l line, best frequency with unit phase
        others = np.ones_like(f.values)
        for j in range(ell - 1):
            others = others * _hat_expand(bs[j], j, ell)
        rows = f.values * others
        new_phi, S = best_frequencies(rows, N, refine=True)
        old_S = _row_sums(rows, N, phi) * bs[-1]
        take = np.abs(S) > old_S.real
        phi2 = np.where(take, new_phi, phi)
        bl = np.where(take, np.exp(-1j * np.angle(S)), bs[-1])
        bs = bs[:-1] + (bl,)
        phi = phi2
        # each b_j (j < l) in turn: unit modulus aligned with its partial sum
        for j in range(ell - 1):
            rest = f.values * e(_hat_expand(phi, ell - 1, ell) * np.arange(-N, N + 1).reshape((1,) * (ell - 1) + (-1,)))
            for i in range(ell):
                if i != j:
                    rest = rest * _hat_expand(bs[i], i, ell)
            partial = np.sum(rest, axis=j)
            new_bj = np.where(np.abs(partial) > 0, np.exp(-1j * np.angle(partial)), bs[j])
            bs = bs[:j] + (new_bj,) + bs[j + 1 :]
        new = box_correlation(f, phi, bs).real
        if new <= current + 1e-12:
            current = max(new, current)
            break
        current = new
    return phi, bs


# --------------------------------------------------------------------------
# structured functions


@dataclass(frozen=True, eq=False)
class Atom:
    c: complex
    phi: np.ndarray
    b: tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class StructuredFunction:
    """sum_i c_i e(phi_i(x-hat_l) x_l) prod_j b_ij(x-hat_j), optionally clipped pointwise."""

    ell: int
    N: int
    atoms: tuple[Atom, ...] = ()
    clip: float | None = None

    def __post_init__(self):
        for a in self.atoms:
            for bj in a.b:
                if np.max(np.abs(bj)) > 1 + 1e-9:
                    raise ValidationError("atom b-table is not 1-bounded")

    @property
    def M(self) -> int:
        """Least M with M atoms (zero-padded) and every |c_i| <= M."""
        cmax = max((abs(a.c) for a in self.atoms), default=0.0)
        return max(len(self.atoms), int(math.ceil(cmax - 1e-12)))

    def values(self) -> np.ndarray:
        out = np.zeros((2 * self.N + 1,) * self.ell, dtype=np.complex128)
        for a in self.atoms:
            out = out + a.c * box_structured_values(a.phi, a.b, self.N, self.ell)
        if self.clip is not None:
            out = clip_modulus(out, self.clip)
        return out


def clip_modulus(v: np.ndarray, radius: float) -> np.ndarray:
    mod = np.abs(v)
    scale = np.where(mod > radius, radius / np.where(mod > 0, mod, 1.0), 1.0)
    return v * scale


def correlate_structured(f: GridFunction, psi: StructuredFunction) -> complex:
    """E_{x in [-N,N]^l} f(x) conj(psi(x))."""
    if psi.ell != f.ell or psi.N != f.N:
        raise ValidationError("structured function lives on a different grid")
    return csum(f.values * np.conj(psi.values())) / f.values.size


# --------------------------------------------------------------------------
# regularity decomposition


def default_growth(M: float) -> float:
    return 1024.0 * (M + 1) ** 3


@dataclass(frozen=True, eq=False)
class RegularityOutput:
    f_str: StructuredFunction
    str_values: GridFunction
    f_sml: GridFunction
    f_unif: GridFunction
    M: int
    sml_l2: float
    unif_power: float
    unif_threshold: float
    rounds: int
    energies: tuple[float, ...] = field(default_factory=tuple)


class RegularityCapError(BudgetError):
    def __init__(self, message: str, partial: RegularityOutput):
        super().__init__(message)
        self.partial = partial


def _quantize(v: np.ndarray) -> np.ndarray:
    return (np.round(v.real / QUANTUM) + 1j * np.round(v.imag / QUANTUM)) * QUANTUM


def refit_atom(r: np.ndarray, phi: np.ndarray, bs: tuple, iters: int = 8) -> tuple[np.ndarray, ...]:
    """Refit the b-tables of one atom to r by alternating least squares, phi held fixed.

    The demodulated residual r e(-phi x_l) is approximated by prod_j b_j(x-hat_j);
    tables are rescaled to sup 1 (the scale goes into the projection coefficient).
    """
    ell = r.ndim
    N = (r.shape[0] - 1) // 2
    xl = np.arange(-N, N + 1).reshape((1,) * (ell - 1) + (-1,))
    R = r * e(-_hat_expand(phi, ell - 1, ell) * xl)
    bs = [np.array(b, dtype=np.complex128) for b in bs]
    for _ in range(iters):
        for j in range(ell):
            others = np.ones_like(R)
            for i in range(ell):
                if i != j:
                    others = others * _hat_expand(bs[i], i, ell)
            num = np.sum(R * np.conj(others), axis=j)
            den = np.sum(np.abs(others) ** 2, axis=j)
            bs[j] = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    out = []
    for b in bs:
        top = float(np.max(np.abs(b)))
        out.append(b / top if top > 0 else b)
    return tuple(out)


def regularity_decompose(
    f: GridFunction,
    eps: float,
    growth: Callable[[float], float] = default_growth,
    *,
    max_rounds: int = 64,
    workers: int = 1,
) -> RegularityOutput:
    """f = f_str + f_sml + f_unif by energy increment.

    Each round tests the residual r = f - f_str: if r is (1/F(M), N)-uniform it
    becomes f_unif; else if its normalised L^2 norm is at most eps it becomes
    f_sml; otherwise a box inverse witness of r, with its b-tables refitted to r
    by alternating least squares, is appended as a new atom and
    f_str is the least-squares projection of f onto the atom span, clipped to
    modulus 3 and rounded to multiples of 2^-40 (so all parts are 4-bounded and
    the reconstruction is exact for dyadic inputs).
    """
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    if np.max(np.abs(f.values)) > 1 + 1e-12:
        raise ValidationError("regularity decomposition needs a 1-bounded f")
    ell, N = f.ell, f.N
    dirs = DirectionSet.inverse_theorem(ell, N)
    atoms: list[tuple[np.ndarray, tuple]] = []
    columns: list[np.ndarray] = []
    coeffs = np.zeros(0, dtype=np.complex128)
    str_vals = np.zeros_like(f.values)
    energies: list[float] = []
    target = f.values.ravel()

    def package(sml, unif, power, threshold, rounds):
        struct = StructuredFunction(
            ell, N, tuple(Atom(complex(c), p, b) for c, (p, b) in zip(coeffs, atoms)), clip=STR_CLIP
        )
        return RegularityOutput(
            struct,
            GridFunction(ell, N, str_vals),
            GridFunction(ell, N, sml),
            GridFunction(ell, N, unif),
            struct.M,
            GridFunction(ell, N, sml).l2_norm(),
            power,
            threshold,
            rounds,
            tuple(energies),
        )

    zero = np.zeros_like(f.values)
    for rounds in range(max_rounds + 1):
        r = f.values - str_vals
        M = len(atoms)
        threshold = N**ell / growth(M)
        power = grid_box_norm_power(GridFunction(ell, N, r), dirs, workers=workers)
        if power <= threshold:
            return package(zero, r, power, threshold, rounds)
        if GridFunction(ell, N, r).l2_norm() <= eps:
            return package(r, zero, 0.0, threshold, rounds)
        if rounds == max_rounds:
            break
        scale = max(1.0, float(np.max(np.abs(r))))
        wit = box_inverse_witness(GridFunction(ell, N, r / scale), workers=workers)
        bs = refit_atom(r, wit.phi, wit.b)
        atoms.append((wit.phi, bs))
        columns.append(box_structured_values(wit.phi, bs, N, ell).ravel())
        A = np.stack(columns, axis=1)
        coeffs, *_ = np.linalg.lstsq(A, target, rcond=None)
        proj = (A @ coeffs).reshape(f.values.shape)
        str_vals = _quantize(clip_modulus(proj, STR_CLIP))
        energies.append(math.fsum((np.abs(str_vals) ** 2).ravel().tolist()) / str_vals.size)
    r = f.values - str_vals
    partial = package(zero, r, power, threshold, max_rounds)
    raise RegularityCapError(f"regularity loop did not terminate within {max_rounds} rounds", partial)
