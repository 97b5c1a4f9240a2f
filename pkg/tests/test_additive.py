import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffrand.additive import (cosine_batch, cosine_check, iterated_kneser_check, iterated_sumset,
                             kneser_check, kneser_exhaustive, subgroup_from_elements, sumset, sym,
                             sym_elements)
from ffrand.errors import BudgetExceededError
from ffrand.field import make_field

F5, F8, F9 = make_field(5), make_field(2, 3), make_field(3, 2)


def test_sumset_basics():
    assert sumset(F5, {0, 1}, {0, 1}) == frozenset({0, 1, 2})
    assert sumset(F5, set(), {1}) == frozenset()
    assert iterated_sumset(F5, [{1}, {1}, {1}]) == frozenset({3})


def test_sym_examples():
    assert sym(F5, {0, 1}).size == 1
    assert sym(F9, range(9)).size == 9
    H = sym(F8, {0, 1})  # {0, 1} is the subgroup generated by 1
    assert H.elements == (0, 1)
    assert sym_elements(F8, set()) == frozenset(range(8))
    with pytest.raises(ValueError):
        subgroup_from_elements(F8, {0, 1, 2})


def test_kneser_examples():
    chk = kneser_check(F9, range(9), range(9))
    assert chk.passed and chk.details["lhs"] == chk.details["rhs"] == 18
    chk = kneser_check(F5, {0, 1}, {0, 1})
    assert chk.passed and chk.details["sumset_size"] == 3 and chk.details["sym_size"] == 1
    assert chk.details["lhs"] == 4 == chk.details["rhs"]
    with pytest.raises(ValueError):
        kneser_check(F5, set(), {1})


def test_kneser_exhaustive_f8_and_smaller():
    chk = kneser_exhaustive(F8)
    assert chk.passed and chk.details["pairs"] == 65536
    assert kneser_exhaustive(make_field(7)).passed
    with pytest.raises(BudgetExceededError):
        kneser_exhaustive(make_field(2, 4))


def test_kneser_exhaustive_agrees_with_pairwise_f4():
    F4 = make_field(2, 2)
    for a in range(1, 16):
        for b in range(1, 16):
            A = [i for i in range(4) if a >> i & 1]
            B = [i for i in range(4) if b >> i & 1]
            assert kneser_check(F4, A, B).passed


def test_iterated_kneser_random():
    rng = np.random.default_rng(0)
    for _ in range(500):
        sets = [np.flatnonzero(rng.random(9) < 0.4).tolist() or [0] for _ in range(int(rng.integers(1, 5)))]
        assert iterated_kneser_check(F9, sets).passed


def test_cosine_examples():
    assert cosine_check([0.7]).passed
    chk = cosine_check([math.pi / 2, math.pi / 2])
    assert chk.passed and chk.details["lhs"] == pytest.approx(-1) and chk.details["rhs"] == pytest.approx(-3)
    assert not cosine_check([0.0, 0.0], tol=-1e-9).passed  # equality case fails a negative tolerance


def test_cosine_batch():
    rng = np.random.default_rng(1)
    for k in range(1, 7):
        assert cosine_batch(rng.uniform(-np.pi, np.pi, size=(5000, k))).passed


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=6))
def test_cosine_property(betas):
    assert cosine_check(betas).passed


@settings(max_examples=100, deadline=None)
@given(st.sets(st.integers(0, 8), min_size=1), st.sets(st.integers(0, 8), min_size=1))
def test_kneser_property_f9(A, B):
    assert kneser_check(F9, A, B).passed
    H = sym(F9, sumset(F9, A, B))
    S = sumset(F9, A, B)
    assert sumset(F9, S, H.elements) == S  # A + B is a union of H-cosets
