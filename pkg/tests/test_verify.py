import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxlab.errors import PrecisionError, ValidationError
from boxlab.seminorms import SeminormSpec, box_seminorm
from boxlab.sequences import Hardy, Identity, Polynomial, PolynomialZ, parse_hardy, sequence_residues
from boxlab.systems import SkewProductSystem, character, make_product_rotation, random_unimodular
from boxlab.verify import (
    classify,
    compare_averages,
    compare_factorial,
    correlation_table,
    direct_averages,
    histogram_averages,
    linear_control_check,
    nil_orbit_average,
    parse_trig_poly,
    trend,
    weyl_sum,
)

from oracles import char_value, floor_n_three_halves, triple_average, weyl_magnitude_half

T32 = Hardy(parse_hardy("t^3/2"))


def z(q, *shifts):
    return make_product_rotation(q, 1, [(s,) for s in shifts])


def test_trend():
    assert trend([0.3, 0.1]) == "decreasing"
    assert trend([0.1, 0.3]) == "increasing"
    assert trend([0.0, 0.0]) == "flat"
    assert trend([0.5]) == "flat"


def test_correlation_table_against_iteration():
    sys = z(12, 1, 5)
    rng = np.random.default_rng(0)
    fs = [random_unimodular(sys, rng).values for _ in range(3)]
    table = correlation_table(sys, *fs)
    assert len(table) == 12
    for r in (0, 1, 7, 11):
        assert abs(table[r] - triple_average(sys.weights, sys.maps, *fs, [r])) < 1e-14


def test_histogram_averages_against_direct_loop():
    sys = z(10, 1, 3)
    rng = np.random.default_rng(1)
    fs = [random_unimodular(sys, rng) for _ in range(3)]
    table = correlation_table(sys, *fs)
    res = sequence_residues(T32, 10, 500)
    avg = histogram_averages(res, table, [(1, 500), (100, 300)])
    shifts = [floor_n_three_halves(n) for n in range(1, 501)]
    assert abs(avg[0] - direct_averages(sys, *fs, shifts)) < 1e-13
    assert abs(avg[1] - direct_averages(sys, *fs, shifts[99:300])) < 1e-13


def test_identity_sequence_gives_zero_diff():
    sys = make_product_rotation(7, 2, [(1, 0), (0, 1)])
    fs = [character(sys, k) for k in ((1, 2), (3, 0), (0, 5))]
    rep = compare_averages(sys, *fs, Identity(), [10, 100, 1000])
    assert all(r.abs_diff == 0.0 for r in rep.records)


def test_constant_observables_give_zero_diff():
    sys = z(9, 1, 2)
    c = np.full(9, 0.3 + 0.1j)
    rep = compare_averages(sys, c, c, c, T32, [100, 1000])
    assert all(r.abs_diff == 0.0 for r in rep.records)


@given(st.integers(0, 10**6))
def test_identity_zero_property(seed):
    rng = np.random.default_rng(seed)
    q = int(rng.integers(2, 20))
    sys = z(q, int(rng.integers(0, q)), int(rng.integers(0, q)))
    fs = [random_unimodular(sys, rng) for _ in range(3)]
    rep = compare_averages(sys, *fs, Identity(), [int(rng.integers(1, 300))])
    assert rep.final_diff == 0.0


def test_windows_follow_interval_family():
    sys = z(6, 1, 2)
    fs = [character(sys, (k,)) for k in (1, 2, 3)]
    rep = compare_averages(sys, *fs, Identity(), [(5, 50), (10, 40)])
    assert [r.start for r in rep.records] == [10, 5]
    with pytest.raises(ValidationError):
        compare_averages(sys, *fs, Identity(), [(5, 5)])


def test_hardy_identity_on_z31_squared():
    sys = make_product_rotation(31, 2, [(1, 0), (0, 1)])
    fs = [character(sys, k) for k in ((-1, -1), (1, 0), (0, 1))]
    rep = compare_averages(sys, *fs, T32, [10**4, 10**5])
    # oracle: both averages are sums of e(2 a / 31) over the residue histogram
    for r in rep.records:
        hist = np.bincount(sequence_residues(T32, 31, r.N), minlength=31)
        along_a = sum(int(hist[k]) * char_value((2,), (k,), 31) for k in range(31)) / r.N
        assert abs(r.avg_along_a - along_a) < 1e-12
        along_n = sum(char_value((2,), (n % 31,), 31) for n in range(1, r.N + 1)) / r.N
        assert abs(r.avg_along_id - along_n) < 1e-12
    assert rep.extrapolation_trend == "decreasing"


def test_factorial_exact_when_period_divides():
    sys = z(12, 1, 5)
    rng = np.random.default_rng(2)
    fs = [random_unimodular(sys, rng) for _ in range(3)]
    rows = compare_factorial(sys, *fs, PolynomialZ((-1, 0, 1)), range(1, 7), 500)
    integral = np.sum(sys.weights * fs[0].values * fs[1].values * fs[2].values)
    for row in rows:
        if math.factorial(row.k) % 12 == 0:
            assert row.diff == 0.0
            assert abs(row.avg_scheme - integral) < 1e-14


def test_factorial_degenerate_scheme_is_reported():
    sys = z(12, 1, 5)
    fs = [character(sys, (k,)) for k in (1, 2, 3)]
    rows = compare_factorial(sys, *fs, PolynomialZ((0, 0, 1)), [1], 100)
    assert rows[0].n_k == 0 and rows[0].diff >= 0


def test_linear_control_examples():
    sys = z(10, 1, 3)
    one = np.ones(10)
    lhs, rhs = linear_control_check(sys, one, one, one)
    assert abs(lhs - 1) < 1e-12 and abs(rhs - 1) < 1e-12
    # f2 = e(x/10) kills every correlation I(r), so the linear average vanishes
    f2 = character(sys, (1,))
    lhs, rhs = linear_control_check(sys, one, one, f2)
    assert lhs <= 1e-9
    # on a finite system an s = 2 seminorm of a nonzero function is never 0: the h_1 = 0
    # term alone contributes ||E(|f|^2 | I(R_2))||^2 / P_1
    assert box_seminorm(sys, f2, SeminormSpec(((-1, 1), (0, 1)))) ** 4 >= 1 / 5 - 1e-12


@given(st.integers(0, 10**6), st.sampled_from([(10, 1, 3), (15, 2, 5), (10, 2, 5), (15, 1, 1)]))
def test_linear_control_inequality(seed, sysdef):
    sys = z(*sysdef)
    rng = np.random.default_rng(seed)
    lhs, rhs = linear_control_check(sys, *[random_unimodular(sys, rng) for _ in range(3)])
    assert lhs <= rhs + 1e-9


def test_weyl_examples():
    rep = weyl_sum(Identity(), Fraction(1, 2), [999, 1000])
    assert rep.magnitudes[0] <= 1 / 999 and rep.magnitudes[1] <= 1 / 1000
    assert rep.classification == "tends_to_zero"
    sq = weyl_sum(Polynomial(PolynomialZ((0, 0, 1))), Fraction(1, 3), [3 * 10**4, 3 * 10**5])
    assert sq.classification == "tends_to_positive"
    assert abs(sq.magnitudes[-1] - math.sqrt(3) / 3) < 1e-9
    zero = weyl_sum(T32, 0, [10, 1000])
    assert zero.magnitudes == (1.0, 1.0)


def test_weyl_half_matches_parity_oracle():
    Ns = [10**3, 10**4, 10**5]
    rep = weyl_sum(T32, Fraction(1, 2), Ns)
    for N, mag in zip(Ns, rep.magnitudes):
        vals = [floor_n_three_halves(n) for n in range(1, N + 1)]
        assert abs(mag - weyl_magnitude_half(vals)) < 1e-12


@given(st.integers(-10**6, 10**6), st.integers(1, 10**6), st.integers(1, 400))
def test_weyl_magnitudes_in_unit_interval(num, den, N):
    rep = weyl_sum(Polynomial(PolynomialZ((1, -3, 2))), Fraction(num, den), [N])
    assert 0 <= rep.magnitudes[0] <= 1


def test_weyl_irrational_beta_against_mpmath():
    import mpmath

    beta = mpmath.sqrt(2)
    rep = weyl_sum(Polynomial(PolynomialZ((0, 0, 1))), beta, [2000])
    with mpmath.workdps(40):
        s = mpmath.fsum(mpmath.expjpi(2 * beta * n * n) for n in range(1, 2001)) / 2000
    assert abs(rep.magnitudes[0] - float(abs(s))) < 1e-12


def test_weyl_precision_guard():
    with pytest.raises(PrecisionError):
        weyl_sum(Polynomial(PolynomialZ((0, 0, 0, 0, 0, 0, 0, 1))), Fraction(1, 3), [1000])


def test_classify():
    assert classify([0.1, 0.01])[0] == "tends_to_zero"
    assert classify([0.5, 0.55, 0.56]) == ("tends_to_positive", 0.56)
    assert classify([0.5, 0.2, 0.1])[0] == "inconclusive"


def test_nil_examples():
    sk = SkewProductSystem(math.sqrt(2) - 1, (0.1, 0.2))
    one = parse_trig_poly("1")
    assert nil_orbit_average(sk, one, T32, [100, 1000]).final_diff == 0.0
    F = parse_trig_poly("e(x)+e(y)")
    assert nil_orbit_average(sk, F, Identity(), [100, 1000]).final_diff == 0.0


def test_nil_against_float_oracle():
    import mpmath

    alpha = Fraction(3, 7) + Fraction(1, 10**6)
    sk = SkewProductSystem(alpha)
    F = parse_trig_poly("e(x)+0.5*e(1,2)")
    rep = nil_orbit_average(sk, F, T32, [500])
    acc_a = acc_n = 0
    for n in range(1, 501):
        for t, acc in ((floor_n_three_halves(n), "a"), (n, "n")):
            x = (t * alpha) % 1
            y = (t * t * alpha) % 1
            v = mpmath.expjpi(2 * x) + 0.5 * mpmath.expjpi(2 * (x + 2 * y))
            if acc == "a":
                acc_a += v
            else:
                acc_n += v
    assert abs(rep.records[0].abs_diff - float(abs(acc_a - acc_n) / 500)) < 1e-12


def test_parse_trig_poly():
    assert parse_trig_poly("e(x)+e(y)") == [((1, 0), 1), ((0, 1), 1)]
    assert parse_trig_poly("2*e(1,-3)") == [((1, -3), 2)]
    for bad in ("", "f(x)", "e(1)", "x*e(x)"):
        with pytest.raises(ValidationError):
            parse_trig_poly(bad)
