"""Sparse iterate sequences: integer polynomials, Hardy-type expressions, and the
factorial-rescaled scheme n -> p(k! n + n_k).

Everything that feeds a shift into a finite system goes through exact integer
arithmetic; floating point is used only where a floor can be certified.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Sequence, Union

import mpmath
import numpy as np

from .errors import BudgetError, NoSolution, PrecisionError, ValidationError

BRUTE_FORCE_LIMIT = 10**7
DEFAULT_PRIME_BOUND = 100
DEFAULT_LIFT_BOUND = 6
_INT64_SAFE = 1 << 62


# --------------------------------------------------------------------------
# integer polynomials


@dataclass(frozen=True)
class PolynomialZ:
    """Integer polynomial, coefficients constant term first."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        coeffs = [int(c) for c in self.coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            coeffs = [0]
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def from_roots(cls, *roots: int) -> "PolynomialZ":
        p = cls((1,))
        for r in roots:
            p = p * cls((-r, 1))
        return p

    @property
    def degree(self) -> int:
        return -1 if self.is_zero else len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return self.coefficients == (0,)

    def __call__(self, n: int) -> int:
        return poly_eval(self, n)

    def __mul__(self, other: "PolynomialZ") -> "PolynomialZ":
        out = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return PolynomialZ(tuple(out))

    def derivative(self) -> "PolynomialZ":
        return PolynomialZ(tuple(i * c for i, c in enumerate(self.coefficients))[1:] or (0,))

    def eval_mod(self, n: int, modulus: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc * n + c) % modulus
        return acc

    def residue_table(self, modulus: int) -> np.ndarray:
        """p(r) mod modulus for r in [0, modulus)."""
        if modulus <= _INT64_SAFE >> 31:
            r = np.arange(modulus, dtype=np.int64)
            acc = np.zeros(modulus, dtype=np.int64)
            for c in reversed(self.coefficients):
                acc = (acc * r + c % modulus) % modulus
            return acc
        return np.array([self.eval_mod(r, modulus) for r in range(modulus)], dtype=object)

    def __str__(self) -> str:
        return " ".join(str(c) for c in self.coefficients)


def poly_eval(p: PolynomialZ, n: int) -> int:
    """Exact Horner evaluation with Python integers."""
    acc = 0
    for c in reversed(p.coefficients):
        acc = acc * n + c
    return acc


# --------------------------------------------------------------------------
# Hardy-type expressions a(t) = sum c * t^e * (log t)^k


@dataclass(frozen=True)
class HardyTerm:
    coefficient: Fraction
    exponent: Fraction
    log_power: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))
        object.__setattr__(self, "exponent", Fraction(self.exponent))
        if self.exponent < 0:
            raise ValidationError("Hardy exponents must be nonnegative")
        if self.log_power < 0:
            raise ValidationError("log powers must be nonnegative")

    @property
    def is_polynomial_term(self) -> bool:
        return self.log_power == 0 and self.exponent.denominator == 1

    @property
    def is_integral_term(self) -> bool:
        return self.is_polynomial_term and self.coefficient.denominator == 1


@dataclass(frozen=True)
class HardyExpr:
    terms: tuple[HardyTerm, ...]
    check_monotone: bool = field(default=True, compare=False)

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("Hardy expression needs at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.check_monotone and not _eventually_monotone(self):
            raise ValidationError("Hardy expression is not eventually monotone on [1, 1e4]")

    def value_float(self, n) -> np.ndarray:
        t = np.asarray(n, dtype=np.float64)
        out = np.zeros_like(t)
        for term in self.terms:
            v = float(term.coefficient) * t ** float(term.exponent)
            if term.log_power:
                v = v * np.log(t) ** term.log_power
            out = out + v
        return out

    def magnitude_float(self, n) -> np.ndarray:
        t = np.asarray(n, dtype=np.float64)
        out = np.zeros_like(t)
        for term in self.terms:
            v = abs(float(term.coefficient)) * t ** float(term.exponent)
            if term.log_power:
                v = v * np.abs(np.log(t)) ** term.log_power
            out = out + v
        return out

    def __str__(self) -> str:
        parts = []
        for term in self.terms:
            s = f"{float(term.coefficient)!r}*t^{float(term.exponent)!r}"
            if term.log_power:
                s += f"*log^{term.log_power}"
            parts.append(s)
        return " + ".join(parts)


def _eventually_monotone(h: HardyExpr) -> bool:
    n = np.arange(1, 10_001, dtype=np.float64)
    v = h.value_float(n)
    d = np.diff(v)
    tail = d[len(d) // 2 :]
    scale = np.maximum(np.abs(v[len(d) // 2 + 1 :]), 1.0) * 1e-12
    return bool(np.all(tail >= -scale) or np.all(tail <= scale))


def iroot(x: int, q: int) -> int:
    """floor(x ** (1/q)) for x >= 0, exact."""
    if x < 0:
        raise ValueError("iroot of negative number")
    if q == 1 or x < 2:
        return x
    if q == 2:
        return math.isqrt(x)
    r = int(round(x ** (1.0 / q))) if x < 1 << 1000 else 1 << (x.bit_length() // q)
    # Newton from above, then settle
    r = max(r, 1)
    while r**q > x:
        r = ((q - 1) * r + x // r ** (q - 1)) // q
    while (r + 1) ** q <= x:
        r += 1
    return r


def _split_exact(h: HardyExpr):
    """Split into (integral polynomial part, single rational-power term) if possible."""
    integral = [t for t in h.terms if t.is_integral_term]
    rest = [t for t in h.terms if not t.is_integral_term]
    if len(rest) > 1:
        return None
    if rest:
        t = rest[0]
        if t.log_power or t.exponent.denominator > 4:
            return None
    return integral, (rest[0] if rest else None)


def _floor_rational_power(c: Fraction, e: Fraction, n: int) -> int:
    """floor(c * n^(p/q)) exactly."""
    if c == 0:
        return 0
    p, q = e.numerator, e.denominator
    a, b = abs(c.numerator), c.denominator
    x_num = a**q * n**p
    x_den = b**q
    if c > 0:
        return iroot(x_num // x_den, q)
    # floor(-y) = -ceil(y)
    r = iroot(x_num // x_den, q)
    exact = r**q * x_den == x_num
    return -r if exact else -(r + 1)


def hardy_eval(h: HardyExpr, n: int) -> int:
    """floor(a(n)) with a certified floor."""
    if n < 1:
        raise ValidationError("hardy_eval needs n >= 1")
    split = _split_exact(h)
    if split is not None:
        integral, special = split
        acc = sum(int(t.coefficient) * n ** int(t.exponent) for t in integral)
        if special is not None:
            acc += _floor_rational_power(special.coefficient, special.exponent, n)
        return acc
    return _hardy_eval_mp(h, n)


def _hardy_eval_mp(h: HardyExpr, n: int, dps: int = 50) -> int:
    if n == 1:
        # log 1 = 0 exactly; the remaining terms are c * 1^e = c
        total = sum((t.coefficient for t in h.terms if t.log_power == 0), Fraction(0))
        return math.floor(total)
    with mpmath.workdps(dps):
        t = mpmath.mpf(n)
        lg = mpmath.log(t)
        val = mpmath.mpf(0)
        mag = mpmath.mpf(0)
        for term in h.terms:
            c = mpmath.mpf(term.coefficient.numerator) / term.coefficient.denominator
            x = mpmath.mpf(term.exponent.numerator) / term.exponent.denominator
            v = c * mpmath.power(t, x) * lg**term.log_power
            val += v
            mag += abs(v)
        err = mag * mpmath.mpf(10) ** (-(dps - 10))
        lo = int(mpmath.floor(val - err))
        hi = int(mpmath.floor(val + err))
    if lo != hi:
        raise PrecisionError(f"cannot certify floor of a({n})")
    return lo


def hardy_values(h: HardyExpr, N: int) -> np.ndarray:
    """floor(a(n)) for n = 1..N; int64 array when values fit, else object array."""
    n = np.arange(1, N + 1, dtype=np.int64)
    split = _split_exact(h)
    if split is not None:
        integral, special = split
        out = _vector_exact(integral, special, n)
        if out is not None:
            return out
        return np.array([hardy_eval(h, int(k)) for k in n], dtype=object)
    v = h.value_float(n)
    mag = h.magnitude_float(n)
    if not np.all(np.isfinite(v)) or np.max(np.abs(v)) >= 2.0**62:
        return np.array([hardy_eval(h, int(k)) for k in n], dtype=object)
    window = 1e-12 * np.maximum(mag, 1.0)
    fl = np.floor(v)
    uncertain = (v - fl <= window) | (fl + 1 - v <= window)
    out = fl.astype(np.int64)
    for idx in np.flatnonzero(uncertain):
        out[idx] = _hardy_eval_mp(h, int(n[idx]))
    return out


def _vector_exact(integral, special, n: np.ndarray):
    N = int(n[-1]) if len(n) else 0
    bound = sum(abs(int(t.coefficient)) * N ** int(t.exponent) for t in integral)
    if special is not None:
        c, e = special.coefficient, special.exponent
        q = e.denominator
        a, b = abs(c.numerator), c.denominator
        radicand_max = a**q * N**e.numerator // b**q
        bound += iroot(radicand_max, q) + 2
        if a**q * N**e.numerator >= _INT64_SAFE:
            return None
    if bound >= _INT64_SAFE:
        return None
    acc = np.zeros(len(n), dtype=np.int64)
    for t in integral:
        acc += int(t.coefficient) * n ** int(t.exponent)
    if special is not None:
        acc += _vector_floor_rational_power(special.coefficient, special.exponent, n)
    return acc


def _vector_floor_rational_power(c: Fraction, e: Fraction, n: np.ndarray) -> np.ndarray:
    if c == 0:
        return np.zeros(len(n), dtype=np.int64)
    p, q = e.numerator, e.denominator
    a, b = abs(c.numerator), c.denominator
    num = a**q * n**p
    x = num // b**q
    r = np.floor(x.astype(np.float64) ** (1.0 / q)).astype(np.int64)
    for _ in range(3):
        r = np.where(r**q > x, r - 1, r)
        r = np.where((r + 1) ** q <= x, r + 1, r)
    if c > 0:
        return r
    exact = r**q * b**q == num
    return np.where(exact, -r, -(r + 1))


# --------------------------------------------------------------------------
# sequence specs


@dataclass(frozen=True)
class Identity:
    def __str__(self) -> str:
        return "id"


@dataclass(frozen=True)
class Polynomial:
    p: PolynomialZ

    def __str__(self) -> str:
        return f"poly: {self.p}"


@dataclass(frozen=True)
class Hardy:
    h: HardyExpr

    def __str__(self) -> str:
        return f"hardy: {self.h}"


@dataclass(frozen=True)
class FactorialScheme:
    base: PolynomialZ
    k: int
    n_k: int

    def __post_init__(self):
        if self.k < 1 or self.n_k < 0:
            raise ValidationError("FactorialScheme needs k >= 1 and n_k >= 0")
        if poly_eval(self.base, self.n_k) % math.factorial(self.k) != 0:
            raise ValidationError(f"{self.k}! does not divide base({self.n_k})")

    @property
    def step(self) -> int:
        return math.factorial(self.k)

    def __str__(self) -> str:
        return f"factorial: base={self.base} k={self.k} n_k={self.n_k}"


SequenceSpec = Union[Identity, Polynomial, Hardy, FactorialScheme]


def sequence_eval(s: SequenceSpec, n: int) -> int:
    if n < 1:
        raise ValidationError("sequence index must be >= 1")
    if isinstance(s, Identity):
        return n
    if isinstance(s, Polynomial):
        return poly_eval(s.p, n)
    if isinstance(s, Hardy):
        return hardy_eval(s.h, n)
    if isinstance(s, FactorialScheme):
        return poly_eval(s.base, s.step * n + s.n_k)
    raise TypeError(f"unknown sequence spec {s!r}")


def sequence_residues(s: SequenceSpec, q: int, N: int, start: int = 1) -> np.ndarray:
    """a(n) mod q for n = start..start+N-1, exact, as an int64 array."""
    if q < 1:
        raise ValidationError("modulus must be positive")
    n = np.arange(start, start + N, dtype=np.int64)
    if isinstance(s, Identity):
        return n % q
    if isinstance(s, Polynomial):
        return s.p.residue_table(q)[n % q].astype(np.int64)
    if isinstance(s, FactorialScheme):
        arg = ((s.step % q) * (n % q) + s.n_k) % q
        return s.base.residue_table(q)[arg].astype(np.int64)
    if isinstance(s, Hardy):
        if start == 1:
            vals = hardy_values(s.h, N)
        else:
            vals = hardy_values(s.h, start + N - 1)[start - 1 :]
        if vals.dtype == object:
            return np.array([int(v) % q for v in vals], dtype=np.int64)
        return vals % q
    raise TypeError(f"unknown sequence spec {s!r}")


def sequence_values(s: SequenceSpec, N: int) -> np.ndarray:
    """Raw integers a(1..N); int64 when safe, object array otherwise."""
    if isinstance(s, Hardy):
        return hardy_values(s.h, N)
    vals = [sequence_eval(s, n) for n in range(1, N + 1)]
    if all(abs(v) < _INT64_SAFE for v in vals):
        return np.array(vals, dtype=np.int64)
    return np.array(vals, dtype=object)


def residue_distribution(s: SequenceSpec, q: int, N: int) -> np.ndarray:
    """Counts of a(n) mod q over n = 1..N; sums to N."""
    if N < 1:
        raise ValidationError("N must be positive")
    return np.bincount(sequence_residues(s, q, N), minlength=q).astype(np.int64)


# --------------------------------------------------------------------------
# intersectivity


@dataclass(frozen=True)
class NotIntersective:
    witness_modulus: int


@dataclass(frozen=True)
class NoObstructionUpTo:
    prime_bound: int
    lift_bound: int


IntersectivityVerdict = Union[NotIntersective, NoObstructionUpTo]


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return [int(i) for i in np.flatnonzero(sieve)]


def roots_mod_prime_power(p: PolynomialZ, ell: int, e: int) -> list[int]:
    """All roots of p modulo ell^e, by Hensel lifting from roots mod ell."""
    roots = [r for r in range(ell) if p.eval_mod(r, ell) == 0]
    dp = p.derivative()
    mod = ell
    for _ in range(1, e):
        nxt = mod * ell
        lifted = []
        for r in roots:
            if dp.eval_mod(r, ell) != 0:
                # nonsingular: unique lift
                inv = pow(dp.eval_mod(r, ell), -1, ell)
                t = (-(poly_eval(p, r) // mod) * inv) % ell
                lifted.append(r + t * mod)
            else:
                for t in range(ell):
                    cand = r + t * mod
                    if p.eval_mod(cand, nxt) == 0:
                        lifted.append(cand)
        roots = sorted(set(lifted))
        mod = nxt
        if not roots:
            break
    return roots


def _least_obstruction(p: PolynomialZ, ell: int, lift_bound: int):
    """Least ell^j (j <= lift_bound) with no root of p, or None."""
    roots = [r for r in range(ell) if p.eval_mod(r, ell) == 0]
    if not roots:
        return ell
    dp = p.derivative()
    if any(dp.eval_mod(r, ell) != 0 for r in roots):
        return None  # a nonsingular root lifts to every power
    mod = ell
    for _ in range(1, lift_bound):
        nxt = mod * ell
        lifted = set()
        for r in roots:
            if dp.eval_mod(r, ell) != 0:
                return None
            for t in range(ell):
                cand = r + t * mod
                if p.eval_mod(cand, nxt) == 0:
                    lifted.add(cand)
        if not lifted:
            return nxt
        roots = sorted(lifted)
        mod = nxt
    return None


def _has_integer_root(p: PolynomialZ) -> bool:
    c = p.coefficients
    if c[0] == 0:
        return True
    a0 = abs(c[0])
    if a0 > 10**12:
        return False
    divisors = set()
    for d in range(1, math.isqrt(a0) + 1):
        if a0 % d == 0:
            divisors.update((d, a0 // d))
    return any(poly_eval(p, s * d) == 0 for d in divisors for s in (1, -1))


def is_intersective_bounded(
    p: PolynomialZ, prime_bound: int = DEFAULT_PRIME_BOUND, lift_bound: int = DEFAULT_LIFT_BOUND
) -> IntersectivityVerdict:
    """Bounded search for a modulus with no root of p.

    Only prime powers ell^j with ell <= prime_bound and j <= lift_bound are
    examined, so a ``NoObstructionUpTo`` verdict is evidence, not proof.
    """
    if p.is_zero:
        raise ValidationError("zero polynomial")
    if prime_bound < 2 or lift_bound < 1:
        raise ValidationError("need prime_bound >= 2 and lift_bound >= 1")
    if _has_integer_root(p):
        return NoObstructionUpTo(prime_bound, lift_bound)
    found = [w for ell in primes_up_to(prime_bound) if (w := _least_obstruction(p, ell, lift_bound))]
    if found:
        return NotIntersective(min(found))
    return NoObstructionUpTo(prime_bound, lift_bound)


def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _crt_pair(r1: int, m1: int, r2: int, m2: int) -> int:
    return (r1 + m1 * ((r2 - r1) * pow(m1, -1, m2) % m2)) % (m1 * m2)


def find_nk(p: PolynomialZ, k: int, method: str = "auto", combo_limit: int = 2_000_000) -> int:
    """Least n in [0, k!) with k! | p(n)."""
    if p.is_zero:
        raise ValidationError("zero polynomial")
    if k < 1:
        raise ValidationError("k must be positive")
    M = math.factorial(k)
    if method == "auto":
        method = "brute" if M <= BRUTE_FORCE_LIMIT else "crt"
    if method == "brute":
        table = p.residue_table(M)
        hits = np.flatnonzero(table == 0)
        if hits.size == 0:
            raise NoSolution(f"no n with {k}! | p(n)")
        return int(hits[0])
    if method != "crt":
        raise ValidationError(f"unknown method {method!r}")
    residues = []
    for ell, e in sorted(_factor(M).items()):
        rts = roots_mod_prime_power(p, ell, e)
        if not rts:
            raise NoSolution(f"no root of p modulo {ell}^{e}, so none modulo {k}!")
        residues.append((rts, ell**e))
    combos = math.prod(len(r) for r, _ in residues)
    if combos > combo_limit:
        raise BudgetError(f"{combos} CRT combinations exceed limit {combo_limit}")
    best = None
    for choice in iproduct(*[r for r, _ in residues]):
        x, m = 0, 1
        for r, (_, mod) in zip(choice, residues):
            x = _crt_pair(x, m, r, mod)
            m *= mod
        if best is None or x < best:
            best = x
    return int(best)


def factorial_scheme(base: PolynomialZ, k: int) -> FactorialScheme:
    return FactorialScheme(base, k, find_nk(base, k))


# --------------------------------------------------------------------------
# condition that a stays logarithmically away from real multiples of Z[t]


@dataclass(frozen=True)
class Satisfied:
    reason: str = ""


@dataclass(frozen=True)
class Violated:
    c: float
    p: PolynomialZ


@dataclass(frozen=True)
class Unknown:
    reason: str = ""


RATIONAL_HEIGHT = 10**4
RATIONAL_TOL = 1e-12
IRRATIONAL_GAP = 1e-9


def _rationality(r: float):
    """Return a Fraction if r is a low-height rational, False if clearly not, None if unsure."""
    f = Fraction(r).limit_denominator(RATIONAL_HEIGHT)
    gap = abs(r - float(f))
    if gap <= RATIONAL_TOL * max(1.0, abs(r)):
        return f
    if gap > IRRATIONAL_GAP * max(1.0, abs(r)):
        return False
    return None


def classify_log_away(h: HardyExpr):
    """Conservative classifier for |a(t) - c p(t)| / log t -> infinity over all c, p in Z[t].

    Coefficients are read as real numbers known to double precision: a ratio
    of coefficients counts as rational only if it matches a fraction with
    denominator <= 1e4 to 1e-12, and as irrational only if it is more than
    1e-9 away from every such fraction.
    """
    merged: dict[tuple[Fraction, int], Fraction] = {}
    for t in h.terms:
        key = (t.exponent, t.log_power)
        merged[key] = merged.get(key, Fraction(0)) + t.coefficient
    live = {k: v for k, v in merged.items() if v != 0}
    for (e, k), c in live.items():
        if e.denominator != 1 and e > 0:
            return Satisfied(f"non-integer exponent {e}")
        if k >= 1 and e > 0:
            return Satisfied(f"t^{e} log^{k} t term cannot be cancelled by a polynomial")
        if e == 0 and k >= 2:
            return Satisfied(f"(log t)^{k} beats log t")
    # left with P(t) + c_log log t, P real polynomial
    poly = {int(e): float(c) for (e, k), c in live.items() if k == 0 and e > 0}
    if not poly:
        return Violated(0.0, PolynomialZ((0,)))
    top = max(poly)
    ratios = {}
    for deg, c in poly.items():
        verdict = _rationality(c / poly[top])
        if verdict is False:
            return Satisfied(f"coefficients of t^{deg} and t^{top} are not rationally related")
        if verdict is None:
            return Unknown("coefficient ratio too close to a rational to decide")
        ratios[deg] = verdict
    L = math.lcm(*(f.denominator for f in ratios.values()))
    coeffs = [0] * (top + 1)
    for deg, f in ratios.items():
        coeffs[deg] = int(f * L)
    g = math.gcd(*coeffs)
    coeffs = [x // g for x in coeffs]
    c = poly[top] / coeffs[top]
    return Violated(c, PolynomialZ(tuple(coeffs)))


# --------------------------------------------------------------------------
# text mini-language


def parse_polynomial(text: str) -> PolynomialZ:
    try:
        return PolynomialZ(tuple(int(tok) for tok in text.split()))
    except ValueError as exc:
        raise ValidationError(f"malformed polynomial {text!r}") from exc


_LOG_FACTOR = re.compile(r"^log\s*(?:\(\s*t\s*\)|t)?(?:\^(?P<k>\d+))?$")


def _parse_hardy_term(chunk: str) -> HardyTerm:
    factors = [f.strip() for f in chunk.split("*")]
    head = factors[0].replace(" ", "")
    if head == "t" or head.startswith("t^") or head.startswith("log"):
        factors = ["1"] + factors
    try:
        coef = Fraction(factors[0])
    except ValueError as exc:
        raise ValidationError(f"malformed Hardy coefficient in {chunk!r}") from exc
    exponent, log_power = Fraction(0), 0
    for f in factors[1:]:
        f = f.replace(" ", "")
        if f == "t":
            exponent += 1
        elif f.startswith("t^"):
            try:
                exponent += Fraction(f[2:])
            except ValueError as exc:
                raise ValidationError(f"malformed exponent in {chunk!r}") from exc
        elif (m := _LOG_FACTOR.match(f)):
            log_power += int(m.group("k") or 1)
        else:
            raise ValidationError(f"unrecognised factor {f!r} in Hardy term {chunk!r}")
    return HardyTerm(coef, exponent, log_power)


def parse_hardy(text: str) -> HardyExpr:
    """Parse ``c*t^e*log^k + ...``; terms are separated by `` + ``."""
    chunks = re.split(r"\s+\+\s+", text.strip())
    return HardyExpr(tuple(_parse_hardy_term(c) for c in chunks))


def parse_sequence(text: str) -> SequenceSpec:
    """Parse ``id``, ``poly: c0 c1 ...``, ``hardy: c*t^e + ...``, ``factorial: base=<poly> k=<int>``."""
    text = text.strip()
    if text == "id":
        return Identity()
    kind, _, body = text.partition(":")
    kind = kind.strip()
    if kind == "poly":
        return Polynomial(parse_polynomial(body))
    if kind == "hardy":
        return Hardy(parse_hardy(body))
    if kind == "factorial":
        m = re.match(r"^\s*base\s*=\s*(?P<base>[-0-9 ]+?)\s+k\s*=\s*(?P<k>\d+)\s*$", body)
        if not m:
            raise ValidationError(f"malformed factorial spec {text!r}")
        return factorial_scheme(parse_polynomial(m.group("base")), int(m.group("k")))
    raise ValidationError(f"unknown sequence kind {kind!r}")


__all__ = [
    "PolynomialZ",
    "HardyTerm",
    "HardyExpr",
    "Identity",
    "Polynomial",
    "Hardy",
    "FactorialScheme",
    "SequenceSpec",
    "NotIntersective",
    "NoObstructionUpTo",
    "Satisfied",
    "Violated",
    "Unknown",
    "poly_eval",
    "hardy_eval",
    "hardy_values",
    "sequence_eval",
    "sequence_values",
    "sequence_residues",
    "residue_distribution",
    "is_intersective_bounded",
    "roots_mod_prime_power",
    "find_nk",
    "factorial_scheme",
    "classify_log_away",
    "parse_sequence",
    "parse_polynomial",
    "parse_hardy",
    "iroot",
]
