"""Sumsets, symmetry groups, Kneser bounds and the cosine inequality."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceededError
from .field import AdditiveSubgroup, FieldElement, FieldSpec
from .report import Check

COSINE_TOL = 1e-12


def _as_set(A: Iterable) -> frozenset[int]:
    return frozenset(int(a) for a in A)


def sumset(spec: FieldSpec, A: Iterable, B: Iterable) -> frozenset[int]:
    A, B = _as_set(A), _as_set(B)
    if not A or not B:
        return frozenset()
    a = np.fromiter(A, dtype=np.int64)
    b = np.fromiter(B, dtype=np.int64)
    return frozenset(np.unique(spec.add(a[:, None], b[None, :])).tolist())


def iterated_sumset(spec: FieldSpec, sets: Sequence[Iterable]) -> frozenset[int]:
    total = frozenset({0})
    for A in sets:
        total = sumset(spec, total, A)
    return total


def subgroup_from_elements(spec: FieldSpec, elements: Iterable) -> AdditiveSubgroup:
    """Wrap a set of elements known to form a subgroup; raises if it does not."""
    elems = _as_set(elements)
    basis: list[FieldElement] = []
    span = {0}
    for x in sorted(elems):
        if x not in span:
            basis.append(spec.element(x))
            span = set(sumset(spec, span, [int(spec.mul(k, x)) for k in range(spec.p)]))
    if span != elems:
        raise ValueError("element set is not an additive subgroup")
    return AdditiveSubgroup(spec, tuple(basis))


def sym_elements(spec: FieldSpec, A: Iterable) -> frozenset[int]:
    """{h : h + A = A}.  The empty set is fixed by every h."""
    A = _as_set(A)
    if not A:
        return frozenset(range(spec.q))
    a = np.fromiter(A, dtype=np.int64)
    members = []
    for h in range(spec.q):
        if frozenset(spec.add(a, h).tolist()) == A:
            members.append(h)
    return frozenset(members)


def sym(spec: FieldSpec, A: Iterable) -> AdditiveSubgroup:
    return subgroup_from_elements(spec, sym_elements(spec, A))


def kneser_check(spec: FieldSpec, A: Iterable, B: Iterable) -> Check:
    """|A+B| + |Sym(A+B)| >= |A| + |B| for one nonempty pair."""
    A, B = _as_set(A), _as_set(B)
    if not A or not B:
        raise ValueError("Kneser's inequality needs nonempty sets")
    S = sumset(spec, A, B)
    H = sym(spec, S)
    lhs, rhs = len(S) + H.size, len(A) + len(B)
    return Check("kneser", lhs >= rhs, None if lhs >= rhs else (sorted(A), sorted(B)),
                 {"sumset_size": len(S), "sym_size": H.size, "lhs": lhs, "rhs": rhs})


def iterated_kneser_check(spec: FieldSpec, sets: Sequence[Iterable]) -> Check:
    """|A_1+...+A_k| + (k-1)|Sym(A_1+...+A_k)| >= sum |A_l|."""
    sets = [_as_set(A) for A in sets]
    if not sets or any(not A for A in sets):
        raise ValueError("iterated Kneser needs a nonempty list of nonempty sets")
    k = len(sets)
    S = iterated_sumset(spec, sets)
    H = sym(spec, S)
    lhs = len(S) + (k - 1) * H.size
    rhs = sum(len(A) for A in sets)
    return Check("iterated_kneser", lhs >= rhs, None if lhs >= rhs else [sorted(A) for A in sets],
                 {"sumset_size": len(S), "sym_size": H.size, "lhs": lhs, "rhs": rhs, "k": k})


def _translate_masks(spec: FieldSpec) -> np.ndarray:
    q = spec.q
    masks = np.arange(1 << q, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(q)) & 1
    out = np.empty((q, 1 << q), dtype=np.int64)
    elems = np.arange(q, dtype=np.int64)
    for h in range(q):
        out[h] = bits @ (np.int64(1) << spec.add(elems, h).astype(np.int64))
    return out


def kneser_exhaustive(spec: FieldSpec, max_order: int = 8) -> Check:
    """Kneser over every ordered pair of subsets of F_q (empty sets included).

    Sets are bitmasks; Sym of the empty set is the whole group, so pairs with
    an empty member hold trivially and are counted.
    """
    q = spec.q
    if q > max_order:
        raise BudgetExceededError("exhaustive Kneser order", q, max_order)
    n = 1 << q
    trans = _translate_masks(spec)
    popcount = np.array([bin(m).count("1") for m in range(n)], dtype=np.int64)
    masks = np.arange(n, dtype=np.int64)
    S = np.zeros((n, n), dtype=np.int64)  # S[A, B] = mask of A + B
    for b in range(q):
        has_b = ((masks >> b) & 1).astype(bool)
        S |= np.where(has_b[None, :], trans[b][:, None], 0)
    sym_size = np.zeros((n, n), dtype=np.int64)
    for h in range(q):
        sym_size += trans[h][S] == S
    lhs = popcount[S] + sym_size
    rhs = popcount[:, None] + popcount[None, :]
    bad = np.argwhere(lhs < rhs)
    witness = None
    if len(bad):
        a, b = bad[0]
        witness = ([i for i in range(q) if a >> i & 1], [i for i in range(q) if b >> i & 1])
    return Check("kneser_exhaustive", len(bad) == 0, witness,
                 {"q": q, "pairs": n * n, "failures": int(len(bad))})


def cosine_check(betas: Sequence[float], tol: float = COSINE_TOL) -> Check:
    """cos(b_1+...+b_k) >= k * sum cos(b_l) - k^2 + 1."""
    b = np.asarray(betas, dtype=float)
    k = len(b)
    lhs = float(np.cos(b.sum()))
    rhs = float(k * np.cos(b).sum() - k * k + 1)
    ok = lhs >= rhs - tol
    return Check("cosine", ok, None if ok else list(b), {"k": k, "lhs": lhs, "rhs": rhs})


def cosine_batch(betas: np.ndarray, tol: float = COSINE_TOL) -> Check:
    """Vectorised cosine inequality over the rows of a (trials, k) array."""
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    k = betas.shape[1]
    lhs = np.cos(betas.sum(axis=1))
    rhs = k * np.cos(betas).sum(axis=1) - k * k + 1
    bad = np.flatnonzero(lhs < rhs - tol)
    return Check("cosine_batch", len(bad) == 0, betas[bad[0]].tolist() if len(bad) else None,
                 {"k": k, "tuples": int(len(betas)), "min_margin": float((lhs - rhs).min())})
