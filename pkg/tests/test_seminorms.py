import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxlab.errors import BudgetError, ValidationError
from boxlab.seminorms import (
    SeminormSpec,
    box_seminorm,
    box_seminorm_power,
    cube_duality,
    cubic_measure,
    dual_function,
    dual_pairing,
    eigenfunction_residual,
    gcs_check,
    host_kra_seminorm,
    joint_invariant_expectation,
    magic_extension,
    magic_property_check,
    mult_derivative,
    parse_spec,
    parse_word,
)
from boxlab.systems import (
    character,
    conditional_expectation_invariant,
    make_product_rotation,
    make_system,
    random_bounded,
    random_unimodular,
)

from oracles import seminorm_power


def z(q, *shifts):
    return make_product_rotation(q, 1, [(s,) for s in shifts])


def rand_f(sys, seed):
    return random_bounded(sys, np.random.default_rng(seed))


def test_parse_word_and_spec():
    assert parse_word("T2*T1^-1", 2) == (-1, 1)
    assert parse_word("id", 3) == (0, 0, 0)
    assert parse_spec("T2*T1^-1,T2,T2", 2).words == ((-1, 1), (0, 1), (0, 1))
    assert parse_spec("T1^x3", 1).words == ((1,),) * 3
    for bad in ("T3", "S1", "T1^^2"):
        with pytest.raises(ValidationError):
            parse_word(bad, 2)
    with pytest.raises(ValidationError):
        SeminormSpec(((1,),) * 7)


def test_mult_derivative_examples():
    q = 9
    sys = z(q, 1)
    f = character(sys, (1,))
    assert np.allclose(mult_derivative(sys, f, (1,), 0).values, 1.0)
    for h in (1, 4):
        assert np.allclose(mult_derivative(sys, f, (1,), h).values, np.exp(-2j * np.pi * h / q))
    assert np.allclose(mult_derivative(sys, np.ones(q), (1,), 3).values, 1.0)


def test_seminorm_examples():
    q = 11
    sys = z(q, 1)
    for s in (1, 2, 3):
        assert abs(box_seminorm(sys, np.ones(q), SeminormSpec(((1,),) * s)) - 1) < 1e-12
    chi = character(sys, (1,))
    assert box_seminorm(sys, chi, SeminormSpec(((1,),))) < 1e-7
    assert abs(box_seminorm(sys, chi, SeminormSpec(((1,), (1,)))) - 1) < 1e-12


@pytest.mark.parametrize("q,shifts,words", [
    (12, (1, 5), ((1, 0),)),
    (12, (1, 5), ((1, 0), (0, 1))),
    (12, (2, 3), ((1, 0), (0, 1), (1, 1))),
    (10, (2, 5), ((1, -1), (0, 1))),
    (8, (2, 4), ((1, 0), (1, 0), (0, 1))),
])
def test_seminorm_matches_nested_oracle(q, shifts, words):
    sys = z(q, *shifts)
    for seed in range(3):
        f = rand_f(sys, seed)
        expected = seminorm_power(sys.weights, sys.maps, f.values, words)
        got = box_seminorm_power(sys, f, SeminormSpec(words))
        assert abs(got - expected) < 1e-12


def test_seminorm_nonuniform_weights_against_oracle():
    ext = make_system([0.3, 0.05, 0.3, 0.025, 0.3, 0.025], [np.array([2, 1, 4, 5, 0, 3])])
    f = rand_f(ext, 4).values
    words = ((1,),)
    assert abs(box_seminorm_power(ext, f, SeminormSpec(words)) - seminorm_power(ext.weights, ext.maps, f, words)) < 1e-12


def test_host_kra_is_repeated_word():
    sys = z(10, 3)
    f = rand_f(sys, 1)
    assert host_kra_seminorm(sys, f, (1,), 3) == box_seminorm(sys, f, SeminormSpec(((1,),) * 3))


specs = st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=3)
pair_systems = st.sampled_from([(12, 1, 5), (10, 2, 5), (8, 1, 2), (15, 3, 5), (6, 1, 1), (24, 4, 6)])


@given(pair_systems, specs, st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_permutation_invariance(sysdef, words, seed, rnd):
    sys = z(*sysdef)
    f = rand_f(sys, seed)
    a = box_seminorm(sys, f, SeminormSpec(tuple(words)))
    shuffled = list(words)
    rnd.shuffle(shuffled)
    assert abs(a - box_seminorm(sys, f, SeminormSpec(tuple(shuffled)))) <= 1e-9


@given(pair_systems, specs, st.integers(0, 10**6))
def test_monotonicity(sysdef, words, seed):
    sys = z(*sysdef)
    f = rand_f(sys, seed)
    vals = [box_seminorm(sys, f, SeminormSpec(tuple(words[: i + 1]))) for i in range(len(words))]
    assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))


@given(pair_systems, st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=2, max_size=3),
       st.lists(st.sampled_from([-3, -2, -1, 1, 2, 3]), min_size=3, max_size=3), st.integers(0, 10**6))
def test_scaling_inequalities(sysdef, words, rs, seed):
    sys = z(*sysdef)
    f = rand_f(sys, seed)
    s = len(words)
    scaled = tuple(tuple(r * b for b in w) for w, r in zip(words, rs))
    base = box_seminorm(sys, f, SeminormSpec(tuple(words)))
    up = box_seminorm(sys, f, SeminormSpec(scaled))
    assert base <= up + 1e-9
    factor = abs(math.prod(rs[:s])) ** (1 / 2**s)
    assert up <= factor * base + 1e-9


@given(pair_systems, st.integers(1, 3), st.integers(0, 10**6))
def test_gcs(sysdef, s, seed):
    sys = z(*sysdef)
    rng = np.random.default_rng(seed)
    fs = [random_unimodular(sys, rng) for _ in range(2**s)]
    words = [(1, 0), (0, 1), (1, 1)][:s]
    lhs, rhs = gcs_check(sys, fs, SeminormSpec(tuple(words)))
    assert lhs <= rhs + 1e-9


def test_gcs_examples():
    sys = z(10, 1, 3)
    spec = SeminormSpec(((1, 0), (0, 1)))
    one = np.ones(10)
    lhs, rhs = gcs_check(sys, [one] * 4, spec)
    assert abs(lhs - 1) < 1e-12 and abs(rhs - 1) < 1e-12
    lhs, rhs = gcs_check(sys, [one, one, np.zeros(10), one], spec)
    assert lhs == 0 and rhs == 0


def test_dual_examples():
    q = 13
    sys = z(q, 1)
    D = dual_function(sys, {i: np.ones(q) for i in range(1, 4)}, SeminormSpec(((1,), (1,))))
    assert np.allclose(D.values, 1.0)
    f = rand_f(sys, 2)
    D1 = dual_function(sys, f, SeminormSpec(((1,),)))
    assert np.allclose(D1.values, np.conj(f.values.mean()), atol=1e-15)


@given(pair_systems, specs, st.integers(0, 10**6))
def test_dual_identity(sysdef, words, seed):
    sys = z(*sysdef)
    f = rand_f(sys, seed)
    spec = SeminormSpec(tuple(words))
    pairing = dual_pairing(sys, f, spec)
    assert abs(pairing.imag) <= 1e-9
    assert abs(pairing - box_seminorm_power(sys, f, spec)) <= 1e-9


def test_dual_family_forms_agree():
    sys = z(12, 1, 5)
    spec = SeminormSpec(((1, 0), (0, 1)))
    rng = np.random.default_rng(5)
    fs = [random_unimodular(sys, rng) for _ in range(3)]
    by_list = dual_function(sys, fs, spec).values
    by_int = dual_function(sys, {i + 1: f for i, f in enumerate(fs)}, spec).values
    by_bits = dual_function(sys, {(1, 0): fs[0], (0, 1): fs[1], (1, 1): fs[2]}, spec).values
    assert np.array_equal(by_list, by_int) and np.array_equal(by_list, by_bits)
    with pytest.raises(ValidationError):
        dual_function(sys, fs[:2], spec)


@pytest.mark.parametrize("workers", [1, 3])
def test_worker_count_is_bit_identical(workers):
    sys = z(24, 1, 6)
    f = rand_f(sys, 9)
    spec = SeminormSpec(((1, 0), (0, 1), (1, 1)))
    ref = box_seminorm_power(sys, f, spec, workers=1)
    assert box_seminorm_power(sys, f, spec, workers=workers) == ref
    assert np.array_equal(dual_function(sys, f, spec, workers=workers).values, dual_function(sys, f, spec).values)


def test_budget_guard():
    sys = z(63, 1)
    with pytest.raises(BudgetError):
        box_seminorm(sys, np.ones(63), SeminormSpec(((1,),) * 5), max_cost=10**5)


def test_factor_property_s1():
    for q, shift in ((12, 3), (10, 2), (9, 1), (8, 4)):
        sys = z(q, shift)
        rng = np.random.default_rng(q)
        for trial in range(10):
            f = rng.normal(size=q) + 1j * rng.normal(size=q)
            if trial % 2:
                f = f - conditional_expectation_invariant(sys, f, (1,)).values
            semi = box_seminorm(sys, f, SeminormSpec(((1,),)))
            cond = np.sqrt(np.sum(sys.weights * np.abs(conditional_expectation_invariant(sys, f, (1,)).values) ** 2))
            assert (semi <= 1e-10) == (cond <= 1e-10)
            # s = 1 seminorm is exactly the L^2 norm of the conditional expectation
            assert abs(semi - cond) < 1e-10


def test_cubic_measure_examples():
    q = 5
    sys = z(q, 1)
    cube = cubic_measure(sys, SeminormSpec(((1,),)))
    dense = np.zeros((q, q))
    for (a, b), w in zip(cube.support, cube.weights):
        dense[a, b] += w
    assert np.allclose(dense, 1 / q**2)
    ident = cubic_measure(sys, SeminormSpec(((0,),)))
    assert all(a == b for a, b in ident.support)
    assert np.allclose(ident.weights, 1 / q)


@pytest.mark.parametrize("q,shifts,words", [
    (8, (1,), ((1,), (1,))),
    (8, (2,), ((1,), (1,))),
    (12, (2, 3), ((1, 0), (0, 1))),
    (6, (1, 2), ((1, 0), (0, 1), (1, 1))),
])
def test_cube_duality_and_marginals(q, shifts, words):
    sys = z(q, *shifts)
    cube = cubic_measure(sys, SeminormSpec(words))
    for eps in range(2 ** len(words)):
        assert np.allclose(cube.projection(eps), sys.weights, atol=1e-15)
    for seed in range(3):
        f = rand_f(sys, seed)
        assert abs(cube_duality(cube, f) - box_seminorm_power(sys, f, SeminormSpec(words))) < 1e-12


def test_magic_extension_structure():
    sys = make_product_rotation(4, 2, [(1, 0), (0, 1)])
    cube = magic_extension(sys, SeminormSpec(((1, 0), (0, 1))))
    ext = cube.as_system()  # validates commutation and weight preservation
    assert ext.ell == 4
    # lifted generators project onto the base maps at vertex 0
    for j in range(2):
        assert np.array_equal(cube.support[cube.lifted[j], 0], sys.maps[j][cube.support[:, 0]])
    # side maps move only the eps_i = 0 coordinates
    for i in range(2):
        img = cube.support[cube.side_maps[i]]
        for eps in range(4):
            if (eps >> i) & 1:
                assert np.array_equal(img[:, eps], cube.support[:, eps])


def test_magic_extension_rejects_bad_words():
    sys = make_product_rotation(4, 2, [(1, 0), (0, 1)])
    with pytest.raises(ValidationError, match="unimodular"):
        magic_extension(sys, SeminormSpec(((2, 0), (0, 1))))
    three = make_product_rotation(3, 3, [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    with pytest.raises(ValidationError, match="beyond"):
        magic_extension(three, SeminormSpec(((1, 0, 1), (0, 1, 0))))


def test_magic_property_on_z4_squared():
    sys = make_product_rotation(4, 2, [(1, 0), (0, 1)])
    cube = magic_extension(sys, SeminormSpec(((1, 0), (0, 1))))
    rng = np.random.default_rng(0)
    zeros_seen = 0
    for t in range(20):
        g = rng.normal(size=cube.size) + 1j * rng.normal(size=cube.size)
        if t % 2:
            g = g - joint_invariant_expectation(cube, g, range(2))
        res = magic_property_check(cube, g)
        assert res["consistent"]
        zeros_seen += res["seminorm"] <= 1e-8
    assert zeros_seen == 10


def test_magic_projection_is_idempotent():
    sys = make_product_rotation(4, 2, [(1, 0), (0, 1)])
    cube = magic_extension(sys, SeminormSpec(((1, 0), (0, 1))))
    g = np.random.default_rng(3).normal(size=cube.size)
    once = joint_invariant_expectation(cube, g)
    assert np.allclose(joint_invariant_expectation(cube, once), once, atol=1e-12)


def test_eigenfunction_examples():
    for q in (5, 8, 13):
        sys = z(q, 1)
        for k in range(q):
            assert eigenfunction_residual(sys, character(sys, (k,)), (1,)) <= 1e-9
        assert eigenfunction_residual(sys, np.ones(q), (1,)) <= 1e-12
    sys = z(16, 1)
    rng = np.random.default_rng(0)
    vals = [eigenfunction_residual(sys, random_unimodular(sys, rng), (1,)) for _ in range(20)]
    assert min(vals) > 0.1


def test_eigenfunction_nonergodic_and_modulus_check():
    # translation by 2 on Z_8: chi = e(x/4) on evens, 0 on odds is a nonergodic eigenfunction
    sys = z(8, 2)
    chi = np.array([np.exp(2j * np.pi * x / 8) if x % 2 == 0 else 0 for x in range(8)])
    assert eigenfunction_residual(sys, chi, (1,)) <= 1e-12
    with pytest.raises(ValidationError):
        eigenfunction_residual(sys, np.full(8, 0.5), (1,))
