"""Desk-scale checks of limiting identities along sparse sequences, optimal linear
seminorm control, and Weyl-sum diagnostics.

Averages E_{n<=N} int f0 . T_1^{a(n)} f1 . T_2^{a(n)} f2 depend on a(n) only
through its residue mod the joint period P of T_1, T_2, so they are computed as
residue histograms against the table I(r) = int f0 . T_1^r f1 . T_2^r f2.
Histogram sums are accumulated exactly with Fractions and rounded once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._numeric import csum, frac_add, frac_mul, frac_scale, to_fixed128, unit_phase
from .errors import PrecisionError, ValidationError
from .seminorms import SeminormSpec, box_seminorm
from .sequences import (
    FactorialScheme,
    Identity,
    Polynomial,
    PolynomialZ,
    SequenceSpec,
    find_nk,
    sequence_residues,
    sequence_values,
)
from .systems import FiniteSystem, SkewProductSystem, perm_order, perm_power, skew_orbit_phases, values_of


@dataclass(frozen=True)
class IdentityRecord:
    N: int
    avg_along_a: complex
    avg_along_id: complex
    abs_diff: float
    start: int = 1


@dataclass(frozen=True)
class IdentityReport:
    records: tuple[IdentityRecord, ...]
    extrapolation_trend: str
    final_diff: float

    def csv_rows(self) -> list[list]:
        return [[r.start, r.N, repr(r.abs_diff)] for r in self.records]

    def summary(self) -> dict:
        return {
            "trend": self.extrapolation_trend,
            "final_diff": self.final_diff,
            "diffs": [r.abs_diff for r in self.records],
            "Ns": [r.N for r in self.records],
        }


def trend(diffs: Sequence[float]) -> str:
    """Compare the last difference with the first one."""
    if len(diffs) < 2 or diffs[-1] == diffs[0]:
        return "flat"
    return "decreasing" if diffs[-1] < diffs[0] else "increasing"


def _report(records: list[IdentityRecord]) -> IdentityReport:
    records = sorted(records, key=lambda r: (r.N, r.start))
    diffs = [r.abs_diff for r in records]
    return IdentityReport(tuple(records), trend(diffs), diffs[-1] if diffs else 0.0)


def _windows(Ns) -> list[tuple[int, int]]:
    """Ladder entries N (meaning [1, N]) or (M, N) pairs (meaning [M, N))."""
    out = []
    for w in Ns:
        if isinstance(w, (tuple, list)):
            M, N = int(w[0]), int(w[1])
            if not 1 <= M < N:
                raise ValidationError(f"window {w} must satisfy 1 <= M < N")
            out.append((M, N - 1))
        else:
            N = int(w)
            if N < 1:
                raise ValidationError("N must be positive")
            out.append((1, N))
    return out


# --------------------------------------------------------------------------
# correlation tables and histogram averages


def joint_period(sys: FiniteSystem) -> int:
    if sys.ell != 2:
        raise ValidationError("identity checks need exactly two transformations")
    return math.lcm(perm_order(sys.maps[0]), perm_order(sys.maps[1]))


def correlation_table(sys: FiniteSystem, f0, f1, f2) -> np.ndarray:
    """I(r) = int f0 . T_1^r f1 . T_2^r f2 dmu for r in [0, P)."""
    P = joint_period(sys)
    v0, v1, v2 = values_of(f0), values_of(f1), values_of(f2)
    T1, T2 = sys.maps
    p1 = np.arange(sys.point_count)
    p2 = np.arange(sys.point_count)
    out = np.empty(P, dtype=np.complex128)
    for r in range(P):
        out[r] = csum(sys.weights * v0 * v1[p1] * v2[p2])
        p1, p2 = T1[p1], T2[p2]
    return out


def _exact_mean(counts: np.ndarray, table: np.ndarray) -> complex:
    """sum_r counts[r] table[r] / sum(counts), accumulated exactly, rounded once."""
    total = int(counts.sum())
    re = sum((int(c) * Fraction(float(t.real)) for c, t in zip(counts, table) if c), Fraction(0))
    im = sum((int(c) * Fraction(float(t.imag)) for c, t in zip(counts, table) if c), Fraction(0))
    return complex(float(re / total), float(im / total))


def histogram_averages(residues: np.ndarray, table: np.ndarray, windows: list[tuple[int, int]]) -> list[complex]:
    """Average of table[a(n)] over n in each window [M, N] (1-based, inclusive)."""
    P = len(table)
    out = []
    for M, N in windows:
        counts = np.bincount(residues[M - 1 : N], minlength=P)
        out.append(_exact_mean(counts, table))
    return out


def direct_averages(sys: FiniteSystem, f0, f1, f2, shifts: Sequence[int]) -> complex:
    """E over the given shifts of int f0 . T_1^a f1 . T_2^a f2, one shift at a time (test oracle)."""
    v0, v1, v2 = values_of(f0), values_of(f1), values_of(f2)
    vals = []
    for a in shifts:
        vals.append(csum(sys.weights * v0 * v1[perm_power(sys.maps[0], int(a))] * v2[perm_power(sys.maps[1], int(a))]))
    return csum(vals) / len(vals)


def compare_averages(sys: FiniteSystem, f0, f1, f2, s: SequenceSpec, Ns) -> IdentityReport:
    """Averages along a(n) versus along n for each N (or window) of the ladder."""
    table = correlation_table(sys, f0, f1, f2)
    P = len(table)
    wins = _windows(Ns)
    top = max(N for _, N in wins)
    res_a = sequence_residues(s, P, top)
    res_id = sequence_residues(Identity(), P, top)
    avg_a = histogram_averages(res_a, table, wins)
    avg_id = histogram_averages(res_id, table, wins)
    records = [
        IdentityRecord(N if M == 1 else N + 1, a, b, abs(a - b), M)
        for (M, N), a, b in zip(wins, avg_a, avg_id)
    ]
    return _report(records)


@dataclass(frozen=True)
class FactorialRow:
    k: int
    n_k: int
    avg_scheme: complex
    avg_linear: complex
    diff: float


def compare_factorial(sys: FiniteSystem, f0, f1, f2, p: PolynomialZ, ks: Sequence[int], N: int) -> list[FactorialRow]:
    """For each k, averages along p(k! n + n_k) and along k! n over n <= N."""
    table = correlation_table(sys, f0, f1, f2)
    P = len(table)
    rows = []
    for k in ks:
        nk = find_nk(p, k)
        scheme = FactorialScheme(p, k, nk)
        linear = Polynomial(PolynomialZ((0, math.factorial(k))))
        a = histogram_averages(sequence_residues(scheme, P, N), table, [(1, N)])[0]
        b = histogram_averages(sequence_residues(linear, P, N), table, [(1, N)])[0]
        rows.append(FactorialRow(int(k), nk, a, b, abs(a - b)))
    return rows


# --------------------------------------------------------------------------
# linear averages


T1_WORD, T2_WORD, T21_WORD = (1, 0), (0, 1), (-1, 1)


def linear_control_check(sys: FiniteSystem, f0, f1, f2) -> tuple[float, float]:
    """|E_n int f0 T_1^n f1 T_2^n f2| over a full period against the minimal controlling seminorm."""
    table = correlation_table(sys, f0, f1, f2)
    lhs = abs(csum(table) / len(table))
    rhs = min(
        box_seminorm(sys, f0, SeminormSpec((T1_WORD, T2_WORD))),
        box_seminorm(sys, f1, SeminormSpec((T1_WORD, T21_WORD))),
        box_seminorm(sys, f2, SeminormSpec((T21_WORD, T2_WORD))),
    )
    return lhs, rhs


# --------------------------------------------------------------------------
# Weyl sums


@dataclass(frozen=True)
class WeylReport:
    beta: str
    Ns: tuple[int, ...]
    magnitudes: tuple[float, ...]
    classification: str
    limit_estimate: float | None = None

    def summary(self) -> dict:
        return {
            "beta": self.beta,
            "Ns": list(self.Ns),
            "magnitudes": list(self.magnitudes),
            "classification": self.classification,
            "limit_estimate": self.limit_estimate,
        }


def classify(magnitudes: Sequence[float], zero_tol: float = 0.02, stable_tol: float = 0.1) -> tuple[str, float | None]:
    """tends_to_zero / tends_to_positive / inconclusive from the tail of a magnitude ladder."""
    last = magnitudes[-1]
    if last <= zero_tol and last <= magnitudes[0] + 1e-15:
        return "tends_to_zero", 0.0
    if len(magnitudes) >= 2 and last > zero_tol:
        prev = magnitudes[-2]
        if abs(last - prev) <= stable_tol * last:
            return "tends_to_positive", last
    return "inconclusive", None


def _int64_values(s: SequenceSpec, N: int) -> np.ndarray:
    vals = sequence_values(s, N)
    if vals.dtype == object:
        raise PrecisionError("sequence values exceed the certified 2^63 range")
    return vals.astype(np.int64)


def weyl_terms(s: SequenceSpec, beta, N: int) -> np.ndarray:
    """e(beta a(n)) for n = 1..N, with beta a(n) mod 1 reduced in 128-bit fixed point."""
    vals = _int64_values(s, N)
    return unit_phase(frac_mul(to_fixed128(beta), vals))


def weyl_sum(s: SequenceSpec, beta, Ns: Sequence[int], zero_tol: float = 0.02) -> WeylReport:
    Ns = sorted(int(n) for n in Ns)
    terms = weyl_terms(s, beta, Ns[-1])
    mags = tuple(min(abs(csum(terms[:N])) / N, 1.0) for N in Ns)
    label, lim = classify(mags, zero_tol)
    return WeylReport(str(beta), tuple(Ns), mags, label, lim)


# --------------------------------------------------------------------------
# skew-product orbits


def trig_poly_at(skew: SkewProductSystem, F: Sequence[tuple[tuple[int, int], complex]], ns: np.ndarray) -> np.ndarray:
    """F(T^n x0) for F = sum c e(k1 x + k2 y), phases combined in fixed point."""
    x, y = skew_orbit_phases(skew, ns)
    out = np.zeros(len(ns), dtype=np.complex128)
    for (k1, k2), c in F:
        ph = frac_add(frac_scale(x, int(k1)), frac_scale(y, int(k2)))
        out = out + complex(c) * unit_phase(ph)
    return out


def nil_orbit_average(skew: SkewProductSystem, F, s: SequenceSpec, Ns: Sequence[int]) -> IdentityReport:
    """E_{n<=N} F(T^{a(n)} x0) against E_{n<=N} F(T^n x0)."""
    Ns = sorted(int(n) for n in Ns)
    top = Ns[-1]
    along_a = trig_poly_at(skew, F, _int64_values(s, top))
    along_n = trig_poly_at(skew, F, np.arange(1, top + 1, dtype=np.int64))
    records = []
    for N in Ns:
        a, b = csum(along_a[:N]) / N, csum(along_n[:N]) / N
        records.append(IdentityRecord(N, a, b, abs(a - b)))
    return _report(records)


def parse_trig_poly(text: str) -> list[tuple[tuple[int, int], complex]]:
    """'1*e(1,0) + 1*e(0,1)' or shorthand 'e(x)+e(y)'."""
    text = text.replace(" ", "")
    if not text:
        raise ValidationError("empty trigonometric polynomial")
    terms = []
    for tok in text.split("+"):
        coeff = 1.0 + 0j
        if "*" in tok:
            c, tok = tok.split("*", 1)
            try:
                coeff = complex(c)
            except ValueError as exc:
                raise ValidationError(f"bad coefficient {c!r}") from exc
        if tok == "1":
            terms.append(((0, 0), coeff))
            continue
        if not (tok.startswith("e(") and tok.endswith(")")):
            raise ValidationError(f"bad trig term {tok!r}; expected e(k1,k2), e(x) or e(y)")
        inner = tok[2:-1]
        if inner == "x":
            k = (1, 0)
        elif inner == "y":
            k = (0, 1)
        else:
            try:
                k1, k2 = (int(v) for v in inner.split(","))
            except ValueError as exc:
                raise ValidationError(f"bad frequency pair {inner!r}") from exc
            k = (k1, k2)
        terms.append((k, coeff))
    return terms
