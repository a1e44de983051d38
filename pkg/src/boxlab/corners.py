"""Triple-intersection densities, corner counts in Z_q^2 and popular-difference scans."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._numeric import ordered_map
from .errors import BoxLabError, ValidationError
from .sequences import SequenceSpec, sequence_residues, sequence_values
from .systems import FiniteSystem, perm_order, perm_power


def as_mask(sys_or_size, A) -> np.ndarray:
    """Boolean membership mask from a mask or an iterable of point indices."""
    m = sys_or_size.point_count if isinstance(sys_or_size, FiniteSystem) else int(sys_or_size)
    arr = np.asarray(A)
    if arr.dtype == bool:
        if arr.shape != (m,):
            raise ValidationError(f"mask has shape {arr.shape}, expected ({m},)")
        return arr
    mask = np.zeros(m, dtype=bool)
    idx = np.asarray(list(A), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= m):
        raise ValidationError("set contains points outside the system")
    mask[idx] = True
    return mask


def measure(sys: FiniteSystem, A) -> float:
    mask = as_mask(sys, A)
    return math.fsum(sys.weights[mask].tolist())


def pair_period(sys: FiniteSystem) -> int:
    if sys.ell < 2:
        raise ValidationError("triple densities need two transformations")
    return math.lcm(perm_order(sys.maps[0]), perm_order(sys.maps[1]))


def triple_density(sys: FiniteSystem, A, a_value: int) -> float:
    """mu(A & T_1^{-a} A & T_2^{-a} A), with a reduced mod the joint period of T_1, T_2."""
    mask = as_mask(sys, A)
    a = int(a_value) % pair_period(sys)
    both = mask & mask[perm_power(sys.maps[0], a)] & mask[perm_power(sys.maps[1], a)]
    return math.fsum(sys.weights[both].tolist())


# --------------------------------------------------------------------------
# corners in Z_q^2


@dataclass(frozen=True, eq=False)
class PlaneSet:
    q: int
    membership: np.ndarray

    def __post_init__(self):
        if self.q < 1:
            raise ValidationError("q must be >= 1")
        mem = np.asarray(self.membership, dtype=bool)
        if mem.shape != (self.q, self.q):
            raise ValidationError(f"membership has shape {mem.shape}, expected ({self.q}, {self.q})")
        object.__setattr__(self, "membership", mem)

    @property
    def size(self) -> int:
        return int(self.membership.sum())

    def density(self) -> float:
        return self.size / self.q**2

    @classmethod
    def random(cls, q: int, density: float, rng: np.random.Generator) -> "PlaneSet":
        return cls(q, rng.random((q, q)) < density)

    @classmethod
    def from_json(cls, data: dict) -> "PlaneSet":
        try:
            q = int(data["q"])
            rows = [[c == "1" for c in r] for r in data["rows"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad plane-set JSON: {exc}") from exc
        if len(rows) != q or any(len(r) != q for r in rows):
            raise ValidationError("plane-set 'rows' must be q bitstrings of length q")
        return cls(q, np.array(rows, dtype=bool))

    def to_json(self) -> dict:
        return {"q": self.q, "rows": ["".join("1" if b else "0" for b in r) for r in self.membership]}


def _offsets(L: PlaneSet, v1, v2, shift: int) -> tuple[tuple[int, int], tuple[int, int]]:
    q = L.q
    u = (int(v1[0]) * shift % q, int(v1[1]) * shift % q)
    w = (int(v2[0]) * shift % q, int(v2[1]) * shift % q)
    return u, w


def corner_count(L: PlaneSet, v1: Sequence[int], v2: Sequence[int], shift: int, method: str = "roll") -> int:
    """#{m in Z_q^2 : m, m + v1 shift, m + v2 shift all in L}.

    ``method`` is "direct" (double loop), "roll" (vectorised) or "fft"
    (cyclic cross-correlation, rounded to integers).
    """
    u, w = _offsets(L, v1, v2, int(shift))
    if method == "direct":
        return _count_direct(L, u, w)
    if method == "roll":
        M = L.membership
        return int(np.count_nonzero(M & np.roll(M, (-u[0], -u[1]), (0, 1)) & np.roll(M, (-w[0], -w[1]), (0, 1))))
    if method == "fft":
        return int(corner_table_fft(L, u)[w])
    raise ValidationError(f"unknown corner-count method {method!r}")


def _count_direct(L: PlaneSet, u, w) -> int:
    q, M = L.q, L.membership
    count = 0
    for i in range(q):
        for j in range(q):
            if M[i, j] and M[(i + u[0]) % q, (j + u[1]) % q] and M[(i + w[0]) % q, (j + w[1]) % q]:
                count += 1
    return count


def corner_table_fft(L: PlaneSet, u: tuple[int, int]) -> np.ndarray:
    """Counts for every second offset w at once: sum_m H_u(m) L(m + w), H_u = L . L(. + u)."""
    M = L.membership.astype(np.float64)
    H = M * np.roll(M, (-u[0], -u[1]), (0, 1))
    corr = np.fft.ifft2(np.conj(np.fft.fft2(H)) * np.fft.fft2(M)).real
    return np.rint(corr).astype(np.int64)


# --------------------------------------------------------------------------
# popular-difference scans


@dataclass(frozen=True)
class ScanRecord:
    n: int
    raw: str
    shift: int
    density: float
    above: bool


@dataclass(frozen=True)
class CornerScanReport:
    records: tuple[ScanRecord, ...]
    base_density: float
    threshold: float
    good_set: tuple[int, ...]
    max_gap: int
    lower_density_of_good_set: float
    period: int
    eps: float

    def csv_rows(self) -> list[list]:
        return [[r.n, r.shift, repr(r.density), int(r.above)] for r in self.records]

    def summary(self) -> dict:
        return {
            "N": len(self.records),
            "period": self.period,
            "eps": self.eps,
            "base_density": self.base_density,
            "threshold": self.threshold,
            "good_count": len(self.good_set),
            "max_gap": self.max_gap,
            "lower_density": self.lower_density_of_good_set,
        }


def max_gap(good: Sequence[int], N: int) -> int:
    """Largest gap between consecutive elements of {0} + good + {N + 1}."""
    pts = [0] + sorted(good) + [N + 1]
    return max(b - a for a, b in zip(pts, pts[1:]))


def lower_density(good: Sequence[int], N: int) -> float:
    """min over N' in [ceil(N/2), N] of |good & [1, N']| / N'."""
    flags = np.zeros(N + 1, dtype=np.int64)
    flags[np.asarray([g for g in good if 1 <= g <= N], dtype=np.int64)] = 1
    cum = np.cumsum(flags)
    lo = max(1, -(-N // 2))
    Ns = np.arange(lo, N + 1)
    return float(np.min(cum[Ns] / Ns)) if len(Ns) else 0.0


def _density_table(target, period: int, residues: np.ndarray, workers: int) -> dict[int, float]:
    distinct = sorted(set(int(r) for r in residues))
    if isinstance(target[0], PlaneSet):
        L, v1, v2 = target
        fn = lambda a: corner_count(L, v1, v2, a) / L.q**2
    else:
        sys, A = target
        fn = lambda a: triple_density(sys, A, a)
    vals = ordered_map(fn, distinct, workers)
    return dict(zip(distinct, vals))


def _period_and_base(target) -> tuple[int, float]:
    if isinstance(target[0], PlaneSet):
        return target[0].q, target[0].density()
    sys, A = target
    return pair_period(sys), measure(sys, A)


def scan_densities(target, s: SequenceSpec, N: int, workers: int = 1) -> tuple[np.ndarray, np.ndarray, int, float]:
    """(residues, densities) of a(n) for n = 1..N, plus the period and base density."""
    if N < 1:
        raise ValidationError("N must be positive")
    period, base = _period_and_base(target)
    residues = sequence_residues(s, period, N)
    table = _density_table(target, period, residues, workers)
    dens = np.array([table[int(r)] for r in residues])
    return residues, dens, period, base


def popular_scan(target, s: SequenceSpec, N: int, eps: float, *, workers: int = 1, log_raw: bool = True) -> CornerScanReport:
    """Densities d_n for shift a(n), n = 1..N, against the threshold base^4 - eps.

    ``target`` is (FiniteSystem, A) for triple densities or (PlaneSet, v1, v2)
    for corner densities.
    """
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    residues, dens, period, base = scan_densities(target, s, N, workers)
    threshold = base**4 - eps
    raw = sequence_values(s, N) if log_raw else [None] * N
    records = tuple(
        ScanRecord(n, str(raw[n - 1]) if log_raw else "", int(residues[n - 1]), float(dens[n - 1]),
                   bool(dens[n - 1] >= threshold))
        for n in range(1, N + 1)
    )
    good = tuple(r.n for r in records if r.above)
    return CornerScanReport(records, base, threshold, good, max_gap(good, N), lower_density(good, N), period, eps)


def khintchine_report(sys: FiniteSystem, A, s: SequenceSpec, N: int, eps_grid: Sequence[float], workers: int = 1) -> list[tuple[float, float]]:
    """For each eps (ascending), the fraction of n <= N with d_n >= mu(A)^4 - eps."""
    _, dens, _, base = scan_densities((sys, A), s, N, workers)
    rows = []
    for eps in sorted(float(x) for x in eps_grid):
        frac = float(np.count_nonzero(dens >= base**4 - eps)) / N
        rows.append((eps, frac))
    fracs = [f for _, f in rows]
    if any(b < a for a, b in zip(fracs, fracs[1:])):
        raise BoxLabError("khintchine fractions are not monotone in eps")
    return rows


def load_plane_set(path: str) -> PlaneSet:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read plane set {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"plane set {path!r} is not valid JSON: {exc}") from exc
    return PlaneSet.from_json(data)
