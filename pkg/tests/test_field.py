import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffrand.errors import BudgetExceededError, FieldMismatchError
from ffrand.field import (FieldSpec, char_value, enumerate_additive_subgroups, field_of_order,
                          gaussian_binomial, is_irreducible, make_field, trace)

SMALL = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4), (5, 2), (2, 8)]


def test_moduli_are_smallest_irreducible():
    assert make_field(2, 1).modulus == (0, 1)
    assert make_field(2, 2).modulus == (1, 1, 1)
    assert make_field(2, 3).modulus == (1, 1, 0, 1)  # x^3 + x + 1
    assert make_field(3, 2).modulus == (1, 0, 1)  # x^2 + 1
    assert make_field(3, 1).q == 3


def test_bad_fields_rejected():
    with pytest.raises(ValueError):
        make_field(4, 1)
    with pytest.raises(ValueError):
        make_field(2, 17)
    with pytest.raises(ValueError):
        FieldSpec(2, 2, (1, 0, 1))  # x^2 + 1 = (x + 1)^2 over F_2


def test_f4_products():
    F = make_field(2, 2)
    w = F.element((0, 1))
    assert w * w == w + F.one
    assert (w * w * w) == F.one


def test_f3_inverse():
    F = make_field(3)
    two = F.element(2)
    assert two.inverse() == two
    with pytest.raises(ZeroDivisionError):
        F.zero.inverse()


def test_mixed_fields():
    with pytest.raises(FieldMismatchError):
        make_field(2).one + make_field(3).one


def test_f4_traces():
    F = make_field(2, 2)
    assert trace(F.one) == 0
    assert trace(F.element((0, 1))) == 1
    assert trace(F.zero) == 0


@pytest.mark.parametrize("p,f", SMALL)
def test_tables_match_polynomial_arithmetic(p, f):
    F = make_field(p, f)
    rng = np.random.default_rng(q := F.q)
    a = rng.integers(0, q, 200)
    b = rng.integers(0, q, 200)
    for x, y, s, m in zip(a, b, F.add(a, b), F.mul(a, b)):
        X, Y = F.element(int(x)), F.element(int(y))
        assert int(X + Y) == s
        assert int(X * Y) == m


@pytest.mark.parametrize("p,f", SMALL)
def test_trace_linear_and_onto(p, f):
    F = make_field(p, f)
    tr = F.trace_table
    idx = np.arange(F.q)
    for a in range(0, F.q, max(1, F.q // 16)):
        assert np.all((tr[F.add(a, idx)]) == (tr[a] + tr) % p)
    assert set(tr.tolist()) == set(range(p))
    # direct Frobenius sum on a few elements
    for a in range(min(F.q, 20)):
        A = F.element(a)
        s = F.zero
        for k in range(f):
            s = s + A ** (p ** k)
        assert s.in_prime_field() and int(s) == tr[a]


@pytest.mark.parametrize("p,f", [x for x in SMALL if x[0] ** x[1] <= 256])
def test_frobenius_fixes_prime_field(p, f):
    F = make_field(p, f)
    fixed = [a for a in range(F.q) if F.element(a) ** p == F.element(a)]
    assert fixed == list(range(p))


@pytest.mark.parametrize("p,f", SMALL)
def test_character_orthogonality_exact(p, f):
    F = make_field(p, f)
    C = F.char_matrix
    for t in range(F.q):
        counts = np.bincount(C[t], minlength=p)
        if t == 0:
            assert counts[0] == F.q
        else:
            assert np.all(counts == F.q // p)  # equal counts: sum of roots is zero


def test_char_value_examples():
    F2 = make_field(2)
    assert char_value(F2.one, F2.one) == 1
    F = make_field(3, 2)
    for x in F.elements():
        assert char_value(F.zero, x) == 0
    t = F.element(5)
    for x, y in itertools.product(range(9), repeat=2):
        lhs = char_value(t, F.element(x) + F.element(y))
        assert lhs == (char_value(t, F.element(x)) + char_value(t, F.element(y))) % 3


def test_subgroup_counts():
    F2, F3, F4 = make_field(2), make_field(3), make_field(2, 2)
    assert [H.elements for H in enumerate_additive_subgroups(F2)] == [(0,)]
    assert [H.elements for H in enumerate_additive_subgroups(F3)] == [(0,)]
    maxi = enumerate_additive_subgroups(F4, maximal_only=True)
    assert sorted(H.elements for H in maxi) == [(0, 1), (0, 2), (0, 3)]
    for p, f in [(2, 3), (3, 2), (2, 4), (5, 2)]:
        F = make_field(p, f)
        assert len(enumerate_additive_subgroups(F, maximal_only=True)) == (F.q - 1) // (p - 1)
        total = sum(gaussian_binomial(f, k, p) for k in range(f))
        assert len(enumerate_additive_subgroups(F)) == total


def test_subgroups_closed():
    F = make_field(2, 4)
    for H in enumerate_additive_subgroups(F):
        e = np.array(H.elements)
        assert set(F.add(e[:, None], e[None, :]).ravel().tolist()) == set(H.elements)
        assert len(H.elements) == H.size


def test_subgroup_budget():
    with pytest.raises(BudgetExceededError):
        enumerate_additive_subgroups(make_field(2, 10), budget=10)


def test_coset_monotonicity():
    F = make_field(2, 3)
    subs = enumerate_additive_subgroups(F, include_whole=True)
    for T, T2 in itertools.product(subs, repeat=2):
        if set(T.elements) <= set(T2.elements):
            cos2 = [set(c) for c in T2.cosets()]
            for c in T.cosets():
                assert any(set(c) <= c2 for c2 in cos2)


def test_irreducibility_scan():
    assert is_irreducible((1, 1, 1), 2)
    assert not is_irreducible((1, 0, 1), 2)
    assert is_irreducible((2, 2, 1), 3)  # x^2 + 2x + 2 has no root mod 3
    assert field_of_order(9) == make_field(3, 2)


def test_json_roundtrip():
    F = make_field(3, 2)
    assert FieldSpec.from_json(F.to_json()) == F


def test_big_field_ops():
    F = make_field(2, 16)
    a = np.arange(1, 2000)
    assert np.all(F.mul(a, F.inv(a)) == 1)


elems = st.integers(0, 8)


@settings(max_examples=200, deadline=None)
@given(elems, elems, elems)
def test_field_axioms_f9(a, b, c):
    F = make_field(3, 2)
    A, B, C = F.element(a), F.element(b), F.element(c)
    assert (A + B) + C == A + (B + C)
    assert (A * B) * C == A * (B * C)
    assert A * (B + C) == A * B + A * C
    assert A * B == B * A and A + B == B + A
    assert A + (-A) == F.zero
    if a:
        assert A * A.inverse() == F.one


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255), st.integers(-5, 20))
def test_powers_f256(a, b, e):
    F = make_field(2, 8)
    A, B = F.element(a), F.element(b)
    if a or e >= 0:
        assert (A * B) ** max(e, 0) == A ** max(e, 0) * B ** max(e, 0)
    if a:
        assert A ** e * A ** (-e) == F.one
