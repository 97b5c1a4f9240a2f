import itertools
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffrand.errors import BudgetExceededError, DegenerateError, FieldMismatchError
from ffrand.field import gaussian_binomial, make_field
from ffrand.linalg import (MatrixFq, Subspace, VectorFq, annihilator, batch_det, batch_rank, contains,
                           determinant, enumerate_subspaces, from_annihilator, full_space,
                           independence_bound_check, membership_deviation, membership_probability,
                           odlyzko_check, random_subspace, rank, sample_matrix, sample_vector, span,
                           support)
from ffrand.measures import bernoulli, point_mass, random_dense_measure, uniform
from ffrand.rng import TrialStream, make_generator

F2, F3, F4, F5 = make_field(2), make_field(3), make_field(2, 2), make_field(5)


def cofactor_det(F, M):
    n = len(M)
    if n == 1:
        return int(M[0][0])
    acc = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = int(F.mul(M[0][j], cofactor_det(F, minor)))
        acc = int(F.add(acc, term)) if j % 2 == 0 else int(F.sub(acc, term))
    return acc


def test_basic_rank_det():
    for F in (F2, F3, F4):
        I = MatrixFq.identity(F, 4)
        assert rank(I) == 4 and int(determinant(I)) == 1
        Z = MatrixFq(F, np.zeros((3, 3), dtype=int))
        assert rank(Z) == 0 and int(determinant(Z)) == 0
    A = MatrixFq(F3, [[1, 2], [2, 1]])
    assert int(determinant(A)) == 0 and rank(A) == 1
    with pytest.raises(ValueError):
        determinant(MatrixFq(F3, [[1, 2, 0], [2, 1, 1]]))


def test_row_swap_sign():
    P = MatrixFq(F3, [[0, 1], [1, 0]])
    assert int(determinant(P)) == 2  # -1 in F_3
    assert int(determinant(MatrixFq(F2, [[0, 1], [1, 0]]))) == 1


def test_exhaustive_f2_3x3_against_cofactor():
    mats = np.array(list(itertools.product([0, 1], repeat=9))).reshape(-1, 3, 3)
    assert len(mats) == 512
    dets = batch_det(F2, mats)
    ranks = batch_rank(F2, mats)
    for M, d, r in zip(mats, dets, ranks):
        m = M.tolist()
        assert d == cofactor_det(F2, m) == int(determinant(MatrixFq(F2, m)))
        assert r == rank(MatrixFq(F2, m))
        assert (r == 3) == (d != 0)
    assert int((ranks == 3).sum()) == 168  # |GL_3(F_2)|


@pytest.mark.parametrize("F", [F3, F4, F5, make_field(3, 2)])
def test_random_against_cofactor(F):
    rng = np.random.default_rng(F.q)
    for n in (1, 2, 3, 4):
        mats = rng.integers(0, F.q, size=(40, n, n))
        dets, ranks = batch_det(F, mats), batch_rank(F, mats)
        for M, d, r in zip(mats, dets, ranks):
            assert d == cofactor_det(F, M.tolist()) == int(determinant(MatrixFq(F, M)))
            assert (r == n) == (d != 0) and r == rank(MatrixFq(F, M))


@pytest.mark.parametrize("F", [F2, F3, F4, make_field(2, 3)])
def test_det_multiplicative(F):
    rng = np.random.default_rng(5)
    for _ in range(30):
        A = MatrixFq(F, rng.integers(0, F.q, size=(4, 4)))
        B = MatrixFq(F, rng.integers(0, F.q, size=(4, 4)))
        assert determinant(A @ B) == determinant(A) * determinant(B)


def test_rectangular_batch_rank():
    rng = np.random.default_rng(2)
    for F in (F2, F3, F4):
        mats = rng.integers(0, F.q, size=(200, 3, 6))
        mats[:50, 2] = mats[:50, 0]
        assert batch_rank(F, mats).tolist() == [rank(MatrixFq(F, m)) for m in mats]
    wide = rng.integers(0, 2, size=(100, 5, 130))  # several packed words per row
    assert batch_rank(F2, wide).tolist() == [rank(MatrixFq(F2, m)) for m in wide]


def test_subspace_examples():
    V = span(F2, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert V.dim == 3 and V.annihilator.shape == (0, 3)
    H = from_annihilator(F2, 3, [[1, 1, 1]])
    assert H.annihilator.tolist() == [[1, 1, 1]] and H.dim == 2
    assert contains(H, [1, 1, 0]) and not contains(H, [1, 0, 0])
    assert support([0, 3, 0, 1]) == frozenset({1, 3})  # 0-based indices
    assert support(VectorFq(F5, (0, 3, 0, 1))) == frozenset({1, 3})
    with pytest.raises(ValueError):
        contains(H, [1, 1])
    with pytest.raises(ValueError):
        Subspace(F2, 2, [[1, 0]], [[1, 0]])


@pytest.mark.parametrize("F", [F2, F3, F4])
def test_double_annihilator(F):
    rng = make_generator(F.q)
    for _ in range(300):
        n = int(rng.integers(1, 9))
        V = random_subspace(F, n, int(rng.integers(0, n + 1)), rng)
        assert annihilator(annihilator(V)) == V
        assert from_annihilator(F, n, V.annihilator) == V
        assert Subspace.from_json(V.to_json()) == V
        assert V.dim + V.codim == n


def test_enumerate_subspaces_counts():
    for F, n in [(F2, 4), (F3, 3), (F4, 2)]:
        subs = enumerate_subspaces(F, n)
        assert len(subs) == sum(gaussian_binomial(n, k, F.q) for k in range(n + 1))
        assert len(set(subs)) == len(subs)


def test_membership_examples():
    mu = bernoulli(F2, Fr(3, 10))
    assert membership_probability(full_space(F2, 3), mu) == 1
    V = span(F2, [[1, 1]])
    a = Fr(3, 10)
    assert membership_probability(V, mu) == a * a + (1 - a) ** 2
    assert membership_probability(V, mu, "fourier") == a * a + (1 - a) ** 2
    for F in (F3, F4):
        W = from_annihilator(F, 3, [[1, 2, 0], [0, 1, 1]])
        assert membership_probability(W, uniform(F)) == Fr(1, F.q ** 2)
    with pytest.raises(BudgetExceededError):
        membership_probability(full_space(F2, 30), mu)
    with pytest.raises(FieldMismatchError):
        membership_probability(V, uniform(F3))


@pytest.mark.parametrize("F", [F2, F3, F4])
def test_membership_direct_vs_fourier(F):
    rng = make_generator(20 + F.q)
    for _ in range(60):
        n = int(rng.integers(1, 6))
        V = random_subspace(F, n, int(rng.integers(0, n + 1)), rng)
        mu = random_dense_measure(F, rng, floor=0.0, mode="rational")
        P = membership_probability(V, mu)
        assert P == membership_probability(V, mu, "fourier")
        assert membership_deviation(V, mu) == P - Fr(1, F.q ** V.codim)
        mf = mu.to_float()
        assert abs(membership_probability(V, mf) - membership_probability(V, mf, "fourier")) < 1e-10


def test_odlyzko_examples():
    mu = uniform(F2)
    for V in enumerate_subspaces(F2, 3):
        chk = odlyzko_check(V, mu)
        assert chk.passed and chk.details["P"] == chk.details["bound"]
    chk = odlyzko_check(from_annihilator(F2, 2, [[1, 0]]), bernoulli(F2, Fr(3, 10)))
    assert chk.passed and chk.details["P"] == Fr(7, 10) == chk.details["bound"]


def test_odlyzko_exhaustive_f2_4():
    rng = make_generator(9)
    subs = enumerate_subspaces(F2, 4)
    for _ in range(20):
        mu = random_dense_measure(F2, rng, mode="rational")
        assert all(odlyzko_check(V, mu).passed for V in subs)


def test_independence_examples():
    U = uniform(F2)
    chk = independence_bound_check(U, span(F2, [[1, 0]]), 2)
    assert chk.passed and chk.details["lhs"] == 0
    H = from_annihilator(F2, 3, [[1, 1, 1]])
    chk = independence_bound_check(U, H, 2)
    assert chk.passed and chk.details["lhs"] == Fr(1, 7) and chk.details["rhs"] == Fr(1, 4)
    mu = bernoulli(F3, Fr(1, 3))
    V = from_annihilator(F3, 2, [[1, 1]])
    chk = independence_bound_check(mu, V, 1)
    P = membership_probability(V, mu)
    p0 = mu(0) ** 2
    assert chk.details["lhs"] == (P - p0) / (1 - p0)
    with pytest.raises(DegenerateError):
        independence_bound_check(point_mass(F2, 0), H, 1)


def test_independence_random_exact_and_mc():
    rng = make_generator(4)
    for F in (F2, F3):
        for _ in range(6):
            mu = random_dense_measure(F, rng, mode="rational")
            V = random_subspace(F, 3, int(rng.integers(1, 3)), rng)
            for r in (1, 2):
                assert independence_bound_check(mu, V, r).passed
    chk = independence_bound_check(uniform(F2), from_annihilator(F2, 3, [[1, 1, 1]]), 2, mode="mc",
                                   trials=20000, seed=3)
    assert chk.passed and abs(chk.details["estimate"] - 1 / 7) < 4 * chk.details["se"]


def test_sampling_contract():
    pm = point_mass(F4, 3)
    M = sample_matrix(pm, 5, TrialStream(1, 0, 25))
    assert np.all(M.entries == 3)
    A = sample_matrix(uniform(F3), 4, TrialStream(42, 7, 16))
    B = sample_matrix(uniform(F3), 4, TrialStream(42, 7, 16))
    assert A == B
    # Independent recomputation: raw Philox words from the documented key and
    # counter, mapped through exact integer thresholds ceil(j * 2^64 / 3).
    key = np.random.SeedSequence(42, spawn_key=(0, 0)).generate_state(2, dtype=np.uint64)
    raw = np.random.Philox(key=key, counter=7 * 4).random_raw(16)
    thr = [-((-j << 64) // 3) for j in (1, 2)]
    expect = [sum(int(w) >= t for t in thr) for w in raw]
    assert A.entries.ravel().tolist() == expect
    v = sample_vector(uniform(F2), 6, TrialStream(1, 2, 6))
    assert len(v) == 6


def test_uniform_sampling_frequencies():
    from ffrand.measures import sample_indices
    from ffrand.rng import trial_words
    x = sample_indices(uniform(F5), trial_words(3, 0, 100_000, 1)).ravel()
    counts = np.bincount(x, minlength=5)
    sigma = np.sqrt(100_000 * 0.2 * 0.8)
    assert np.all(np.abs(counts - 20_000) < 3 * sigma)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(0, 3), min_size=4, max_size=4), min_size=1, max_size=5))
def test_span_contains_generators(vecs):
    V = span(F4, vecs)
    assert all(contains(V, v) for v in vecs)
    assert V.dim == rank(MatrixFq(F4, vecs))
