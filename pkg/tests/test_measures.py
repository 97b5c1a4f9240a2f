from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffrand.errors import MeasureError
from ffrand.field import enumerate_additive_subgroups, make_field
from ffrand.measures import (GAMMA, Measure, alpha_density_by_subgroups, bernoulli, cdf_thresholds,
                             fourier, point_mass, random_dense_measure, sample_indices, spec_set,
                             spec_sumset_check, swap_fourier_identity, swap_measure, uniform,
                             verify_swap_properties)
from ffrand.rng import make_generator

F2, F3, F4, F8, F9 = (make_field(2), make_field(3), make_field(2, 2), make_field(2, 3), make_field(3, 2))
ALL = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2)]


def test_construction_examples():
    assert uniform(F2).weights == (Fr(1, 2), Fr(1, 2))
    assert bernoulli(F2, 0.3).weights == (0.7, 0.3)
    assert bernoulli(F2, "3/10").weights == (Fr(7, 10), Fr(3, 10))
    with pytest.raises(MeasureError):
        Measure(F2, [0.5, 0.4])
    with pytest.raises(MeasureError):
        Measure(F2, [Fr(3, 2), Fr(-1, 2)])
    with pytest.raises(MeasureError):
        Measure(F3, [1, 0])


def test_alpha_examples():
    assert uniform(F3).alpha == Fr(2, 3)
    assert uniform(F4).alpha == Fr(1, 2)
    for a in (Fr(1, 10), Fr(1, 2), Fr(7, 8)):
        assert bernoulli(F2, a).alpha == min(a, 1 - a)
    assert point_mass(F9, 4).alpha == 0 and point_mass(F9).is_degenerate


@pytest.mark.parametrize("p,f", ALL + [(2, 4), (5, 2)])
def test_alpha_matches_subgroup_enumeration(p, f):
    F = make_field(p, f)
    rng = make_generator(q := F.q)
    for _ in range(10):
        mu = random_dense_measure(F, rng, floor=0.0, mode="rational")
        assert mu.alpha == alpha_density_by_subgroups(mu)
        assert mu.alpha == alpha_density_by_subgroups(mu, maximal_only=True)


def test_fourier_examples():
    a = Fr(3, 10)
    mu = bernoulli(F2, a)
    assert fourier(mu, 0) == pytest.approx(1)
    assert fourier(mu, 1) == pytest.approx(float(1 - 2 * a))
    assert mu.real_fourier[1] == 1 - 2 * a
    u = uniform(make_field(7))
    assert np.allclose(u.fourier[1:], 0, atol=1e-15)


@pytest.mark.parametrize("p,f", [(2, 1), (3, 1), (2, 5), (3, 3), (7, 2), (2, 9)])
def test_inversion_and_parseval(p, f):
    F = make_field(p, f)
    mu = random_dense_measure(F, make_generator(7), floor=0.0)
    chi = np.exp(2j * np.pi * F.char_matrix / p)
    back = (mu.fourier[:, None] * chi.conj()).sum(axis=0) / F.q
    assert np.allclose(back, mu.probs, atol=1e-12)
    assert abs(np.sum(np.abs(mu.fourier) ** 2) - F.q * np.sum(mu.probs ** 2)) < 1e-12 * F.q
    assert np.all(np.abs(mu.fourier) <= 1 + 1e-12)


@pytest.mark.parametrize("p,f", [(2, 2), (2, 3), (3, 2), (5, 1), (2, 4), (7, 1)])
def test_subgroup_average_of_fourier_square(p, f):
    F = make_field(p, f)
    rng = make_generator(11)
    subs = [H for H in enumerate_additive_subgroups(F, include_whole=True) if H.size > 1]
    for _ in range(5):
        mu = random_dense_measure(F, rng, floor=0.0, mode="rational")
        a2 = mu.abs2
        for H in subs:
            e = np.array(H.elements)
            for w in range(1, F.q):
                vals = [a2[t] for t in F.mul(w, e)]
                avg = sum(vals) / len(vals)
                if mu.exact_abs:
                    assert avg <= 1 - mu.alpha
                else:
                    assert float(avg) <= float(1 - mu.alpha) + 1e-12


def test_spec_set_examples():
    assert spec_set(uniform(F9), 0.5).members == frozenset({0})
    assert spec_set(bernoulli(F2, Fr(1, 10)), Fr(3, 10)).members == frozenset({0, 1})
    # tie at exactly 1 - eps is included
    assert 1 in spec_set(bernoulli(F2, Fr(1, 10)), Fr(1, 5)).members
    assert 1 not in spec_set(bernoulli(F2, Fr(1, 10)), Fr(19, 100)).members
    assert spec_set(point_mass(F4, 0), 0).members == frozenset(range(4))
    with pytest.raises(ValueError):
        spec_set(uniform(F2), 1)


def test_spec_set_negation_closed():
    rng = make_generator(3)
    for F in (F9, make_field(7), make_field(5, 1)):
        mu = random_dense_measure(F, rng, floor=0.0)
        for eps in (0.05, 0.2, 0.5):
            S = spec_set(mu, eps).members
            assert 0 in S and set(F.neg(np.array(sorted(S))).tolist()) == S


def test_spec_sumset_examples():
    assert spec_sumset_check(uniform(F4), [Fr(1, 10), Fr(1, 5)]).passed
    chk = spec_sumset_check(bernoulli(F2, Fr(1, 20)), [Fr(1, 10), Fr(1, 10)])
    assert chk.passed
    mu = random_dense_measure(F9, make_generator(5), floor=0.0)
    assert spec_sumset_check(mu, [0.3]).passed


@pytest.mark.parametrize("p,f", ALL)
def test_spec_sumset_random(p, f):
    F = make_field(p, f)
    rng = make_generator(100 + F.q)
    for _ in range(10):
        mu = random_dense_measure(F, rng, mode="rational" if p <= 3 else "float")
        for k in (1, 2, 3):
            eps = [Fr(int(x), 100) for x in rng.integers(0, 40, size=k)]
            assert spec_sumset_check(mu, eps).passed


def test_swap_measure_examples():
    nu = swap_measure(bernoulli(F2, Fr(1, 2)))
    # gamma * P(xi - xi' = 1) = (1/8)(1/2)
    assert nu.weights == (Fr(15, 16), Fr(1, 16))
    assert nu.real_fourier[1] == Fr(7, 8)
    assert swap_measure(point_mass(F9, 0)).weights == point_mass(F9, 0).weights
    nu = swap_measure(bernoulli(F2, 0.3))
    assert nu.fourier[1].real == pytest.approx(0.895, abs=1e-15)
    assert GAMMA == Fr(1, 8)


@pytest.mark.parametrize("p,f", ALL)
def test_swap_fourier_closed_form(p, f):
    F = make_field(p, f)
    rng = make_generator(F.q)
    for mode in ("rational", "float"):
        for _ in range(10):
            mu = random_dense_measure(F, rng, floor=0.0, mode=mode)
            nu = swap_measure(mu)
            assert swap_fourier_identity(mu, nu).passed
            assert nu.real_fourier[0] == 1 or nu.real_fourier[0] == pytest.approx(1.0)


def test_swap_properties_examples():
    rep = verify_swap_properties(uniform(F4), [1, 2, 3])
    assert rep.passed
    mu = bernoulli(F2, 0.3)
    rep = verify_swap_properties(mu, [1])
    assert rep.passed
    assert 0.4 <= 0.895 ** 4  # |1 - 2a| <= nu^(1)^4 ~ 0.6416
    rep = verify_swap_properties(bernoulli(F2, Fr(3, 10)), [1, 1, 1])
    assert all(c.passed for c in rep.checks.values())
    assert set(rep.checks) == {"nu_hat_nonnegative", "fourier_domination", "nu_density", "level_sumset"}


@pytest.mark.parametrize("p,f", ALL)
def test_swap_properties_random(p, f):
    F = make_field(p, f)
    rng = make_generator(1000 + F.q)
    for mode in ("rational", "float"):
        for _ in range(8):
            mu = random_dense_measure(F, rng, mode=mode)
            w = rng.integers(0, F.q, size=int(rng.integers(1, 8))).tolist()
            rep = verify_swap_properties(mu, w)
            assert rep.passed, rep.to_json()


def test_cdf_sampling():
    mu = Measure(F4, [Fr(1, 2), 0, Fr(1, 4), Fr(1, 4)])
    thr = cdf_thresholds(mu)
    assert thr.tolist() == [1 << 63, 1 << 63, 3 << 62]
    words = np.array([0, (1 << 63) - 1, 1 << 63, (3 << 62) - 1, 3 << 62, (1 << 64) - 1], dtype=np.uint64)
    assert sample_indices(mu, words).tolist() == [0, 0, 2, 2, 3, 3]
    pm = point_mass(F3, 0)
    assert sample_indices(pm, np.array([(1 << 64) - 1], dtype=np.uint64)).tolist() == [0]


def test_json_roundtrip():
    mu = Measure(F9, {0: "1/2", 4: "1/3", 8: "1/6"})
    assert Measure.from_json(mu.to_json()) == mu
    m2 = random_dense_measure(F9, make_generator(1))
    assert Measure.from_json(m2.to_json()) == m2


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=4, max_size=4).filter(lambda v: sum(v) > 0))
def test_fourier_bounded_and_alpha_range(ws):
    mu = Measure(F4, [Fr(w, sum(ws)) for w in ws])
    assert mu.abs2[0] == 1
    assert all(0 <= a <= 1 for a in mu.abs2)
    assert 0 <= mu.alpha <= Fr(1, 2)
