"""Vectors, matrices and subspaces over F_q.

Entries are element indices (see :mod:`ffrand.field`).  Single matrices go
through a plain elimination; the ``batch_*`` functions eliminate many
matrices at once for Monte Carlo, with a bit-packed path for q = 2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, DegenerateError, FieldMismatchError
from .field import FieldElement, FieldSpec, gaussian_binomial, iter_rref
from .measures import Measure, sample_indices
from .report import Check
from .rng import TrialStream, trial_words

ENUMERATION_BUDGET = 10**7
_CHUNK = 1 << 16


def _as_indices(spec: FieldSpec, entries) -> tuple[int, ...]:
    out = []
    for e in entries:
        if isinstance(e, FieldElement) and e.spec != spec:
            raise FieldMismatchError("entry from a different field")
        v = int(e)
        if not 0 <= v < spec.q:
            raise ValueError(f"entry {v} is not an element index of {spec!r}")
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class VectorFq:
    spec: FieldSpec
    entries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_indices(self.spec, self.entries))
        if not self.entries:
            raise ValueError("vectors need at least one coordinate")

    def __len__(self):
        return len(self.entries)

    def elements(self) -> list[FieldElement]:
        return [self.spec.element(e) for e in self.entries]

    def to_json(self) -> dict:
        return {"field": self.spec.to_json(), "entries": list(self.entries)}


class MatrixFq:
    """Immutable rows x cols matrix of element indices."""

    def __init__(self, spec: FieldSpec, entries):
        arr = np.array([[int(e) for e in row] for row in entries], dtype=np.int64) \
            if not isinstance(entries, np.ndarray) else entries.astype(np.int64, copy=True)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError("matrix needs positive dimensions")
        if arr.min() < 0 or arr.max() >= spec.q:
            raise ValueError("entries out of range")
        arr.setflags(write=False)
        self.spec = spec
        self.entries = arr

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other):
        return isinstance(other, MatrixFq) and self.spec == other.spec and np.array_equal(self.entries, other.entries)

    def __matmul__(self, other: MatrixFq) -> MatrixFq:
        if self.spec != other.spec:
            raise FieldMismatchError("matrices over different fields")
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        s = self.spec
        prod = s.mul(self.entries[:, :, None], other.entries[None, :, :])
        out = prod[:, 0, :]
        for k in range(1, self.cols):
            out = s.add(out, prod[:, k, :])
        return MatrixFq(s, out)

    def to_json(self) -> dict:
        return {"field": self.spec.to_json(), "entries": self.entries.tolist()}

    @classmethod
    def identity(cls, spec: FieldSpec, n: int) -> MatrixFq:
        return cls(spec, np.eye(n, dtype=np.int64))


# -- elimination -------------------------------------------------------------

def _rref(spec: FieldSpec, M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    A = np.array(M, dtype=np.int64, copy=True)
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if not len(nz):
            continue
        piv = r + nz[0]
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = spec.mul(A[r], spec.inv(A[r, c]))
        for j in range(rows):
            if j != r and A[j, c]:
                A[j] = spec.sub(A[j], spec.mul(A[j, c], A[r]))
        pivots.append(c)
        r += 1
    return A[:r], pivots


def rank(A: MatrixFq) -> int:
    return len(_rref(A.spec, A.entries)[1])


def determinant(A: MatrixFq) -> FieldElement:
    """Product of pivots, times the field image of -1 per row swap."""
    if A.rows != A.cols:
        raise ValueError("determinant of a non-square matrix")
    s = A.spec
    M = np.array(A.entries, copy=True)
    n = A.rows
    det = 1
    for c in range(n):
        nz = np.flatnonzero(M[c:, c])
        if not len(nz):
            return s.zero
        piv = c + nz[0]
        if piv != c:
            M[[c, piv]] = M[[piv, c]]
            det = int(s.neg(det))
        det = int(s.mul(det, M[c, c]))
        inv = s.inv(M[c, c])
        for j in range(c + 1, n):
            if M[j, c]:
                M[j] = s.sub(M[j], s.mul(s.mul(M[j, c], inv), M[c]))
    return s.element(det)


# -- subspaces ---------------------------------------------------------------

def _nullspace(spec: FieldSpec, R: np.ndarray, pivots: Sequence[int], n: int) -> np.ndarray:
    """Basis of {y : R y = 0} for R in reduced echelon form."""
    free = [j for j in range(n) if j not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for i, j in enumerate(free):
        basis[i, j] = 1
        for r, c in enumerate(pivots):
            basis[i, c] = spec.neg(R[r, j])
    return basis


class Subspace:
    """V inside F_q^n, stored as reduced echelon bases of V and of V^perp."""

    def __init__(self, spec: FieldSpec, n: int, basis: np.ndarray, annihilator: np.ndarray):
        basis = np.asarray(basis, dtype=np.int64).reshape(-1, n)
        annihilator = np.asarray(annihilator, dtype=np.int64).reshape(-1, n)
        if basis.shape[0] + annihilator.shape[0] != n:
            raise ValueError("dim V + dim V^perp must equal n")
        if basis.size and annihilator.size:
            gram = _dot_matrix(spec, basis, annihilator)
            if np.any(gram):
                raise ValueError("basis and annihilator are not orthogonal")
        basis.setflags(write=False)
        annihilator.setflags(write=False)
        self.spec = spec
        self.n = n
        self.basis = basis
        self.annihilator = annihilator

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def codim(self) -> int:
        return self.n - self.dim

    def __eq__(self, other):
        return (isinstance(other, Subspace) and self.spec == other.spec and self.n == other.n
                and np.array_equal(self.basis, other.basis))

    def __hash__(self):
        return hash((self.spec, self.n, self.basis.tobytes()))

    def __repr__(self):
        return f"Subspace({self.spec!r}^{self.n}, dim={self.dim})"

    def __contains__(self, x) -> bool:
        return contains(self, x)

    def size(self) -> int:
        return self.spec.q ** self.dim

    def elements(self, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
        return np.concatenate(list(iter_span(self.spec, self.basis, self.n, budget)), axis=0)

    def annihilator_elements(self, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
        return np.concatenate(list(iter_span(self.spec, self.annihilator, self.n, budget)), axis=0)

    def to_json(self) -> dict:
        return {"field": self.spec.to_json(), "n": self.n, "annihilator": self.annihilator.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> Subspace:
        spec = FieldSpec.from_json(data["field"])
        return from_annihilator(spec, int(data["n"]), data["annihilator"])


def _dot_matrix(spec: FieldSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Bilinear dot products sum_l X[i,l] Y[j,l]."""
    prod = spec.mul(X[:, None, :], Y[None, :, :])
    out = prod[..., 0]
    for l in range(1, prod.shape[-1]):
        out = spec.add(out, prod[..., l])
    return out


def _reduce_rows(spec: FieldSpec, rows, n: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, n)
    if rows.shape[0] == 0:
        return rows
    return _rref(spec, rows)[0]


def span(spec: FieldSpec, vectors, n: int | None = None) -> Subspace:
    vecs = [v.entries if isinstance(v, VectorFq) else _as_indices(spec, v) for v in vectors]
    if n is None:
        if not vecs:
            raise ValueError("ambient dimension needed for an empty span")
        n = len(vecs[0])
    if any(len(v) != n for v in vecs):
        raise ValueError("dimension mismatch")
    if not vecs:
        return Subspace(spec, n, np.zeros((0, n), np.int64), np.eye(n, dtype=np.int64))
    R, piv = _rref(spec, np.array(vecs, dtype=np.int64))
    ann = _reduce_rows(spec, _nullspace(spec, R, piv, n), n)
    return Subspace(spec, n, R, ann)


def from_annihilator(spec: FieldSpec, n: int, rows) -> Subspace:
    """The subspace {x : z . x = 0 for every given row z}."""
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, n)
    if rows.shape[0] == 0:
        return Subspace(spec, n, np.eye(n, dtype=np.int64), rows)
    R, piv = _rref(spec, rows)
    basis = _reduce_rows(spec, _nullspace(spec, R, piv, n), n)
    return Subspace(spec, n, basis, R)


def annihilator(V: Subspace) -> Subspace:
    return Subspace(V.spec, V.n, V.annihilator, V.basis)


def full_space(spec: FieldSpec, n: int) -> Subspace:
    return Subspace(spec, n, np.eye(n, dtype=np.int64), np.zeros((0, n), np.int64))


def contains(V: Subspace, x) -> bool:
    x = np.asarray(x.entries if isinstance(x, VectorFq) else _as_indices(V.spec, x), dtype=np.int64)
    if len(x) != V.n:
        raise ValueError("dimension mismatch")
    if V.codim == 0:
        return True
    return not np.any(_dot_matrix(V.spec, V.annihilator, x[None, :]))


def contains_batch(V: Subspace, X: np.ndarray) -> np.ndarray:
    """Membership of every row of X."""
    if V.codim == 0:
        return np.ones(len(X), dtype=bool)
    return ~np.any(_dot_matrix(V.spec, np.asarray(X), V.annihilator), axis=1)


def support(w) -> frozenset[int]:
    """0-based coordinates where w is nonzero."""
    entries = w.entries if isinstance(w, VectorFq) else [int(e) for e in w]
    return frozenset(i for i, e in enumerate(entries) if e)


def iter_span(spec: FieldSpec, basis: np.ndarray, n: int, budget: int = ENUMERATION_BUDGET) -> Iterator[np.ndarray]:
    """All linear combinations of the basis rows, in chunks of at most 2^16 vectors."""
    d = basis.shape[0]
    total = spec.q ** d
    if total > budget:
        raise BudgetExceededError("subspace enumeration", total, budget)
    if d == 0:
        yield np.zeros((1, n), dtype=np.int64)
        return
    q = spec.q
    place = q ** np.arange(d, dtype=np.int64)
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(total, lo + _CHUNK), dtype=np.int64)
        coef = (idx[:, None] // place) % q
        acc = spec.mul(coef[:, 0:1], basis[0][None, :])
        for i in range(1, d):
            acc = spec.add(acc, spec.mul(coef[:, i:i + 1], basis[i][None, :]))
        yield acc


def enumerate_subspaces(spec: FieldSpec, n: int, dims: Iterable[int] | None = None,
                        budget: int = 10**5) -> list[Subspace]:
    """Every subspace of F_q^n (optionally only the given dimensions)."""
    dims = list(range(n + 1)) if dims is None else list(dims)
    count = sum(gaussian_binomial(n, k, spec.q) for k in dims)
    if count > budget:
        raise BudgetExceededError("subspace list", count, budget)
    out = []
    for k in dims:
        for rows in iter_rref(spec.q, n, k):
            if k == 0:
                out.append(Subspace(spec, n, np.zeros((0, n), np.int64), np.eye(n, dtype=np.int64)))
                continue
            R = np.array(rows, dtype=np.int64)
            piv = [int(np.flatnonzero(r)[0]) for r in R]
            ann = _reduce_rows(spec, _nullspace(spec, R, piv, n), n)
            out.append(Subspace(spec, n, R, ann))
    return out


def random_subspace(spec: FieldSpec, n: int, dim: int, rng: np.random.Generator) -> Subspace:
    """Span of random vectors, redrawn until the dimension is exactly dim."""
    if dim == 0:
        return span(spec, [], n)
    while True:
        V = span(spec, rng.integers(0, spec.q, size=(dim, n)).tolist(), n)
        if V.dim == dim:
            return V


# -- probabilities of membership ---------------------------------------------

def _exact_product_sum(values_iter, D: int, n: int) -> Fraction:
    total = sum(values_iter)
    return Fraction(int(total), D ** n)


def _cyclic_product(spec: FieldSpec, mu: Measure, Z: np.ndarray) -> np.ndarray:
    """Row-wise exponent profile of Tr(z . X): the product of the mu^(z_l) as group-ring elements."""
    p = spec.p
    prof = np.array(mu.profile, dtype=object)
    acc = prof[Z[:, 0]]
    for l in range(1, Z.shape[1]):
        nxt = prof[Z[:, l]]
        new = np.empty_like(acc)
        for j in range(p):
            new[:, j] = sum(acc[:, k] * nxt[:, (j - k) % p] for k in range(p))
        acc = new
    return acc


def _fourier_sum(V: Subspace, mu: Measure, include_zero: bool, budget: int):
    """q^-k sum over z in V^perp (optionally without 0) of prod_l mu^(z_l)."""
    spec = V.spec
    k = V.codim
    if spec.q ** k > budget:
        raise BudgetExceededError("annihilator enumeration", spec.q ** k, budget)
    if mu.exact:
        p = spec.p
        tot = np.zeros(p, dtype=object)
        tot[:] = 0
        for Z in iter_span(spec, V.annihilator, V.n, budget):
            if not include_zero:
                Z = Z[np.any(Z != 0, axis=1)]
                if not len(Z):
                    continue
            tot = tot + _cyclic_product(spec, mu, Z).sum(axis=0)
        # A rational value sum c_j zeta^j has c_1 = ... = c_{p-1}; value is c_0 - c_1.
        if p > 1 and any(tot[j] != tot[1] for j in range(1, p)):
            raise AssertionError("Fourier membership sum is not rational")
        val = int(tot[0]) - (int(tot[1]) if p > 1 else 0)
        return Fraction(val, spec.q ** k * mu.denominator ** V.n)
    acc = 0j
    for Z in iter_span(spec, V.annihilator, V.n, budget):
        if not include_zero:
            Z = Z[np.any(Z != 0, axis=1)]
        acc += mu.fourier[Z].prod(axis=1).sum()
    return float(acc.real) / spec.q ** k


def membership_probability(V: Subspace, mu: Measure, method: str = "direct",
                           budget: int = ENUMERATION_BUDGET):
    """P(X in V) for X with iid mu entries; exact Fraction for rational mu.

    ``direct`` sums prod mu(x_l) over the q^dim elements of V; ``fourier``
    uses q^-k sum_{z in V^perp} prod_l mu^(z_l).
    """
    if V.spec != mu.spec:
        raise FieldMismatchError("subspace and measure over different fields")
    if method == "fourier":
        return _fourier_sum(V, mu, True, budget)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    if mu.exact:
        num = np.array(mu.numerators, dtype=object)
        return _exact_product_sum((num[X].prod(axis=1).sum() for X in iter_span(V.spec, V.basis, V.n, budget)),
                                  mu.denominator, V.n)
    return float(sum(mu.probs[X].prod(axis=1).sum() for X in iter_span(V.spec, V.basis, V.n, budget)))


def membership_deviation(V: Subspace, mu: Measure, budget: int = ENUMERATION_BUDGET):
    """P(X in V) - q^-codim, summed on the Fourier side so nothing cancels."""
    return _fourier_sum(V, mu, False, budget)


def odlyzko_check(V: Subspace, mu: Measure, tol: float = 1e-12) -> Check:
    """P(X in V) <= (1 - alpha)^codim V."""
    P = membership_probability(V, mu)
    bound = (1 - mu.alpha) ** V.codim
    ok = P <= bound + (0 if mu.exact else tol)
    return Check("odlyzko", ok, None if ok else {"subspace": V.to_json(), "P": P},
                 {"P": P, "bound": bound, "codim": V.codim, "alpha": mu.alpha})


def independence_bound_check(mu: Measure, V: Subspace, r: int, mode: str = "exact",
                             trials: int = 100_000, seed: int = 0, budget: int = 10**6) -> Check:
    """P(Z_1..Z_r in V | Z_1..Z_r independent) <= P(Z in V)^r.

    Exact mode weighs every r-tuple of vectors; Monte Carlo mode accepts an
    estimate up to three standard errors above the bound.
    """
    spec, n = V.spec, V.n
    rhs = membership_probability(V, mu) ** r
    if mode == "exact":
        total = spec.q ** (n * r)
        if total > budget:
            raise BudgetExceededError("independence enumeration", total, budget)
        idx = np.arange(total, dtype=np.int64)
        digits = (idx[:, None] // spec.q ** np.arange(n * r, dtype=np.int64)) % spec.q
        tuples = digits.reshape(total, r, n)
        indep = batch_rank(spec, tuples) == r
        inside = np.all(np.stack([contains_batch(V, tuples[:, j]) for j in range(r)], axis=1), axis=1)
        if mu.exact:
            num = np.array(mu.numerators, dtype=object)
            wts = num[digits].prod(axis=1)
            p_indep = Fraction(int(wts[indep].sum()), mu.denominator ** (n * r))
            p_both = Fraction(int(wts[indep & inside].sum()), mu.denominator ** (n * r))
        else:
            wts = mu.probs[digits].prod(axis=1)
            p_indep, p_both = float(wts[indep].sum()), float(wts[indep & inside].sum())
        if p_indep == 0:
            raise DegenerateError("linear independence has probability zero")
        lhs = p_both / p_indep
        ok = lhs <= rhs + (0 if mu.exact else 1e-12)
        return Check("independence_bound", ok, None if ok else lhs,
                     {"mode": "exact", "lhs": lhs, "rhs": rhs, "r": r})
    words = trial_words(seed, 0, trials, r * n, purpose=7)
    tuples = sample_indices(mu, words).reshape(trials, r, n)
    indep = batch_rank(spec, tuples) == r
    inside = np.all(np.stack([contains_batch(V, tuples[:, j]) for j in range(r)], axis=1), axis=1)
    n_indep = int(indep.sum())
    if n_indep == 0:
        raise DegenerateError("no linearly independent tuple sampled")
    est = (indep & inside).sum() / n_indep
    se = float(np.sqrt(max(est * (1 - est), 1e-300) / n_indep))
    ok = est <= float(rhs) + 3 * se
    return Check("independence_bound", ok, None if ok else est,
                 {"mode": "mc", "estimate": float(est), "se": se, "rhs": float(rhs), "r": r,
                  "trials": trials, "seed": seed})


# -- sampling ----------------------------------------------------------------

def sample_matrix(mu: Measure, n: int, stream: TrialStream) -> MatrixFq:
    """n x n matrix with iid mu entries read row-major from the stream."""
    return MatrixFq(mu.spec, sample_indices(mu, stream.take(n * n)).reshape(n, n))


def sample_vector(mu: Measure, n: int, stream: TrialStream) -> VectorFq:
    return VectorFq(mu.spec, tuple(sample_indices(mu, stream.take(n)).tolist()))


# -- batched elimination -----------------------------------------------------

def pack_gf2(bits: np.ndarray) -> np.ndarray:
    """(..., c) array of 0/1 entries -> (..., ceil(c/64)) uint64 words, column j at bit j."""
    bits = np.asarray(bits)
    c = bits.shape[-1]
    words = -(-c // 64)
    packed = np.packbits(bits.astype(np.uint8), axis=-1, bitorder="little")
    pad = words * 8 - packed.shape[-1]
    if pad:
        packed = np.concatenate([packed, np.zeros(packed.shape[:-1] + (pad,), np.uint8)], axis=-1)
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def batch_rank_gf2(packed: np.ndarray, ncols: int) -> np.ndarray:
    """Ranks of bit-packed F_2 matrices of shape (B, rows, words).

    For each column the first row holding that bit is XORed into every row
    holding it, itself included, so the pivot row drops out; rows left behind
    have a zero in that column and the rank is the number of pivots found.
    """
    A = np.array(packed, dtype=np.uint64, copy=True)
    B = A.shape[0]
    ar = np.arange(B)
    rk = np.zeros(B, dtype=np.int64)
    one = np.uint64(1)
    single = A.shape[2] == 1
    if single:
        A = A[:, :, 0]
    for c in range(ncols):
        w, b = divmod(c, 64)
        col = A if single else A[:, :, w]
        bit = (col >> np.uint64(b)) & one
        has = bit.any(axis=1)
        piv = bit.argmax(axis=1)
        prow = A[ar, piv]
        if single:
            A ^= prow[:, None] * bit
        else:
            A ^= prow[:, None, :] * bit[:, :, None]
        rk += has
    return rk


def batch_rank(spec: FieldSpec, mats: np.ndarray) -> np.ndarray:
    """Ranks of a stack (B, rows, cols) of matrices of element indices."""
    mats = np.asarray(mats, dtype=np.int64)
    if spec.q == 2:
        return batch_rank_gf2(pack_gf2(mats), mats.shape[2])
    A = mats.copy()
    B, rows, cols = A.shape
    ar = np.arange(B)
    ptr = np.zeros(B, dtype=np.int64)
    row_ids = np.arange(rows)
    for c in range(cols):
        cand = (A[:, :, c] != 0) & (row_ids[None, :] >= ptr[:, None])
        has = cand.any(axis=1)
        piv = cand.argmax(axis=1)
        tgt = np.minimum(ptr, rows - 1)
        # move pivot row to position ptr
        r_p, r_t = A[ar, piv].copy(), A[ar, tgt].copy()
        A[ar, tgt] = np.where(has[:, None], r_p, r_t)
        A[ar, piv] = np.where(has[:, None], r_t, A[ar, piv])
        prow = A[ar, tgt]
        inv = spec.inv(np.where(has, prow[:, c], 1))
        below = (row_ids[None, :] > ptr[:, None]) & has[:, None]
        fac = np.where(below, spec.mul(A[:, :, c], inv[:, None]), 0)
        A = spec.sub(A, spec.mul(fac[:, :, None], prow[:, None, :]))
        ptr += has
    return ptr


def batch_det(spec: FieldSpec, mats: np.ndarray) -> np.ndarray:
    """Determinants (as element indices) of a stack (B, n, n)."""
    A = np.array(mats, dtype=np.int64, copy=True)
    B, n, _ = A.shape
    ar = np.arange(B)
    det = np.ones(B, dtype=np.int64)
    alive = np.ones(B, dtype=bool)
    minus_one = int(spec.neg(1))
    for c in range(n):
        nz = A[:, c:, c] != 0
        has = nz.any(axis=1)
        alive &= has
        piv = nz.argmax(axis=1) + c
        swap = has & (piv != c)
        r_p, r_c = A[ar, piv].copy(), A[ar, c].copy()
        A[ar, c] = np.where(swap[:, None], r_p, r_c)
        A[ar, piv] = np.where(swap[:, None], r_c, A[ar, piv])
        det = np.where(swap, spec.mul(det, minus_one), det)
        pivot = np.where(alive, A[:, c, c], 1)
        det = spec.mul(det, pivot)
        if c + 1 < n:
            inv = spec.inv(pivot)
            fac = spec.mul(A[:, c + 1:, c], inv[:, None])
            A[:, c + 1:, :] = spec.sub(A[:, c + 1:, :], spec.mul(fac[:, :, None], A[:, c, None, :]))
    return np.where(alive, det, 0)
