import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxlab.errors import NoSolution, ValidationError
from boxlab.sequences import (
    FactorialScheme,
    Hardy,
    HardyExpr,
    HardyTerm,
    Identity,
    NoObstructionUpTo,
    NotIntersective,
    Polynomial,
    PolynomialZ,
    Satisfied,
    Unknown,
    Violated,
    classify_log_away,
    factorial_scheme,
    find_nk,
    hardy_eval,
    hardy_values,
    is_intersective_bounded,
    parse_hardy,
    parse_polynomial,
    parse_sequence,
    poly_eval,
    residue_distribution,
    roots_mod_prime_power,
    sequence_eval,
    sequence_residues,
    sequence_values,
)

from oracles import floor_n_three_halves

T2M1 = PolynomialZ((-1, 0, 1))
SEXTIC = PolynomialZ((1, 0, 1)) * PolynomialZ((-2, 0, 1)) * PolynomialZ((2, 0, 1))
T32 = HardyExpr((HardyTerm(1, Fraction(3, 2)),))


def test_poly_eval_examples():
    assert poly_eval(T2M1, 1) == 0
    assert poly_eval(SEXTIC, 1) == -6
    assert poly_eval(PolynomialZ((0, 0, 1)), -3) == 9


def test_poly_eval_big_integers_exact():
    p = PolynomialZ((3, 0, 0, 7))
    n = 10**30
    assert poly_eval(p, n) == 7 * n**3 + 3


def test_hardy_eval_examples():
    assert hardy_eval(T32, 4) == 8
    assert hardy_eval(T32, 2) == 2
    assert hardy_eval(HardyExpr((HardyTerm(1, 1, 1),)), 1) == 0


def test_hardy_values_match_isqrt_oracle():
    vals = hardy_values(T32, 100_000)
    n = np.arange(1, 100_001)
    expected = [floor_n_three_halves(int(k)) for k in n[::97]]
    assert vals[::97].tolist() == expected
    # full check against the integer oracle on the whole range
    assert all(vals[k - 1] == math.isqrt(k**3) for k in range(1, 100_001, 7))


def test_hardy_mixed_terms_use_certified_floor():
    h = parse_hardy("1.4142135623730951*t^2 + 1*t^1")
    c = Fraction(1.4142135623730951)
    for n in (1, 2, 10, 1000, 54321):
        assert hardy_eval(h, n) == math.floor(c * n * n + n)


def test_hardy_t_log_t():
    h = parse_hardy("t*log t")
    for n in (2, 3, 10, 1000):
        assert hardy_eval(h, n) == math.floor(n * math.log(n))


def test_sequence_eval_examples():
    assert sequence_eval(Identity(), 7) == 7
    assert sequence_eval(FactorialScheme(T2M1, 3, 1), 1) == 48
    assert sequence_eval(Polynomial(PolynomialZ((0, 0, 1))), 5) == 25


def test_factorial_scheme_rejects_bad_nk():
    with pytest.raises(ValidationError):
        FactorialScheme(T2M1, 3, 2)


def test_intersective_examples():
    v = is_intersective_bounded(PolynomialZ((1, 0, 1)))
    assert isinstance(v, NotIntersective)
    # n^2 + 1 is never 0 mod 3 already; the least obstructing modulus is 3
    assert v.witness_modulus == 3
    assert all((n * n + 1) % 4 for n in range(4))
    assert isinstance(is_intersective_bounded(T2M1), NoObstructionUpTo)


def test_sextic_has_no_root_mod_8():
    # the product (t^2+1)(t^2-2)(t^2+2) misses 0 mod 8, so the bounded search reports it
    assert all(poly_eval(SEXTIC, n) % 8 for n in range(8))
    v = is_intersective_bounded(SEXTIC)
    assert isinstance(v, NotIntersective) and v.witness_modulus == 8


def test_find_nk_examples():
    assert find_nk(PolynomialZ((0, 0, 1)), 3) == 0
    assert find_nk(T2M1, 3) == 1
    # least n in [0, 2) with 2 | p(n): p(0) = -4 is already even
    assert poly_eval(SEXTIC, 0) == -4
    assert find_nk(SEXTIC, 2) == 0


def test_find_nk_no_solution():
    with pytest.raises(NoSolution):
        find_nk(PolynomialZ((1, 0, 1)), 3)


@pytest.mark.parametrize("k", range(1, 8))
def test_find_nk_matches_brute_force(k):
    M = math.factorial(k)
    for p in (T2M1, PolynomialZ((0, 0, 1)), PolynomialZ((-2, 3, 1)), PolynomialZ((0, 1, 1))):
        brute = next((n for n in range(M) if poly_eval(p, n) % M == 0), None)
        if brute is None:
            with pytest.raises(NoSolution):
                find_nk(p, k)
        else:
            assert find_nk(p, k) == brute
            assert find_nk(p, k, method="crt") == brute


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=4), st.integers(1, 6))
def test_find_nk_property(coeffs, k):
    p = PolynomialZ(tuple(coeffs))
    if p.is_zero:
        return
    M = math.factorial(k)
    try:
        n = find_nk(p, k)
    except NoSolution:
        assert all(poly_eval(p, r) % M for r in range(M))
        return
    assert 0 <= n < M and poly_eval(p, n) % M == 0
    scheme = factorial_scheme(p, k)
    assert poly_eval(scheme.base, scheme.n_k) % M == 0


@given(st.lists(st.integers(-30, 30), min_size=2, max_size=4))
def test_not_intersective_verdicts_are_certified(coeffs):
    p = PolynomialZ(tuple(coeffs))
    if p.is_zero:
        return
    v = is_intersective_bounded(p, prime_bound=30, lift_bound=4)
    if isinstance(v, NotIntersective):
        r = v.witness_modulus
        assert all(poly_eval(p, n) % r for n in range(r))


def test_roots_mod_prime_power_against_enumeration():
    for p in (T2M1, PolynomialZ((0, 0, 1)), PolynomialZ((-7, 0, 1)), PolynomialZ((4, 4, 1))):
        for ell, e in ((2, 4), (3, 3), (5, 2), (7, 2)):
            mod = ell**e
            brute = [r for r in range(mod) if poly_eval(p, r) % mod == 0]
            assert roots_mod_prime_power(p, ell, e) == brute


def test_classify_examples():
    assert isinstance(classify_log_away(T32), Satisfied)
    v = classify_log_away(parse_hardy("1.4142135623730951*t^2"))
    assert isinstance(v, Violated)
    assert v.p == PolynomialZ((0, 0, 1)) and abs(v.c - math.sqrt(2)) < 1e-15
    assert isinstance(classify_log_away(parse_hardy("1.4142135623730951*t^2 + 1*t^1")), Satisfied)
    assert isinstance(classify_log_away(parse_hardy("t*log t")), Satisfied)
    assert isinstance(classify_log_away(parse_hardy("3*t^2 + 1*t")), Violated)


def test_classify_unknown_for_near_rational_ratio():
    v = classify_log_away(parse_hardy(f"{1 + 1e-11!r}*t^2 + 1*t"))
    assert isinstance(v, Unknown)


def test_residue_distribution_examples():
    assert residue_distribution(Identity(), 5, 100).tolist() == [20] * 5
    freq = residue_distribution(Polynomial(PolynomialZ((0, 0, 1))), 3, 30_000) / 30_000
    assert np.allclose(freq, [1 / 3, 2 / 3, 0], atol=1e-4)
    h = residue_distribution(Hardy(T32), 2, 10**6) / 10**6
    assert np.all(np.abs(h - 0.5) <= 0.01)


@given(st.integers(1, 40), st.integers(1, 500))
def test_residue_distribution_sums_to_N(q, N):
    for s in (Identity(), Hardy(T32), Polynomial(T2M1), FactorialScheme(T2M1, 3, 1)):
        counts = residue_distribution(s, q, N)
        assert counts.sum() == N


@given(st.integers(1, 50), st.integers(1, 200), st.integers(1, 50))
def test_residues_match_values(q, N, start):
    for s in (Hardy(T32), Polynomial(PolynomialZ((-3, 2, 5))), FactorialScheme(T2M1, 3, 1)):
        res = sequence_residues(s, q, N, start=start)
        exact = [sequence_eval(s, n) % q for n in range(start, start + N)]
        assert res.tolist() == exact


def test_sequence_values_switch_to_objects():
    s = Polynomial(PolynomialZ((0, 0, 0, 0, 0, 1)))
    vals = sequence_values(s, 10_000)
    assert vals.dtype == object and vals[-1] == 10_000**5


def test_parsers():
    assert parse_polynomial("-1 0 1") == T2M1
    assert isinstance(parse_sequence("id"), Identity)
    assert parse_sequence("poly: 0 0 1").p == PolynomialZ((0, 0, 1))
    assert parse_sequence("hardy: 1*t^1.5").h.terms == T32.terms
    assert parse_sequence("hardy: t^3/2").h.terms == T32.terms
    f = parse_sequence("factorial: base=-1 0 1 k=4")
    assert f.n_k == find_nk(T2M1, 4)
    for bad in ("poly: a b", "wavelet: 1", "factorial: base=1 0 1", "hardy: t^-1"):
        with pytest.raises(ValidationError):
            parse_sequence(bad)
