"""Littlewood-Offord machinery: walk distributions, level sets, classification.

Two different functions of t on F_q appear here and are kept apart by name:

* ``f_add(t) = sum_l psi(w_l t)`` with ``psi = 1 - |mu^|^2`` (anti-concentration side);
* ``f_mult(t) = prod_l |mu^(w_l t)|`` compared with ``g(t) = prod_l nu^(w_l t)``
  for the swap measure nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .additive import iterated_sumset
from .errors import DegenerateError, FieldMismatchError
from .field import AdditiveSubgroup, FieldElement, FieldSpec
from .linalg import (ENUMERATION_BUDGET, Subspace, iter_span, membership_deviation,
                     membership_probability)
from .measures import FLOAT_TOL, Measure, as_fraction, swap_measure
from .report import Check

DEFAULT_DELTA = Fraction(1, 100)
DEFAULT_D_SMALL = Fraction(1, 100)
DEFAULT_D_LARGE = 10


@dataclass(frozen=True)
class WeightVector:
    spec: FieldSpec
    entries: tuple[int, ...]

    def __post_init__(self):
        vals = []
        for e in self.entries:
            if isinstance(e, FieldElement) and e.spec != self.spec:
                raise FieldMismatchError("weight from a different field")
            v = int(e)
            if not 0 <= v < self.spec.q:
                raise ValueError(f"weight {v} out of range")
            vals.append(v)
        if not vals:
            raise ValueError("empty weight vector")
        object.__setattr__(self, "entries", tuple(vals))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def m(self) -> int:
        return sum(1 for e in self.entries if e)

    def to_json(self) -> dict:
        return {"field": self.spec.to_json(), "entries": list(self.entries)}


def as_weight_vector(spec: FieldSpec, w) -> WeightVector:
    if isinstance(w, WeightVector):
        if w.spec != spec:
            raise FieldMismatchError("weight vector over a different field")
        return w
    if hasattr(w, "entries"):
        w = w.entries
    return WeightVector(spec, tuple(int(x) for x in w))


@dataclass(frozen=True)
class WalkDistribution:
    """Law of w . X on F_q; probs[r] = P(w . X = r)."""

    spec: FieldSpec
    probs: tuple
    mode: str

    def __getitem__(self, r):
        return self.probs[int(r)]

    def to_json(self) -> dict:
        return {"field": self.spec.to_json(), "mode": self.mode, "probs": list(self.probs)}


def _pushforward(mu: Measure, c: int, vec: np.ndarray) -> np.ndarray:
    """Law of c * xi as a vector (mass array in the same dtype as vec)."""
    out = np.zeros_like(vec)
    idx = mu.spec.mul(c, np.arange(mu.spec.q))
    out[idx] = vec  # x -> c x is a bijection for c != 0
    return out


def _convolve(spec: FieldSpec, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(P)
    add = spec.add_table if spec.has_tables else None
    nz = np.flatnonzero(P != 0)
    for a in nz:
        row = add[a] if add is not None else spec.add(a, np.arange(spec.q))
        out[row] += P[a] * Q
    return out


def _base_vector(mu: Measure) -> np.ndarray:
    if mu.exact:
        v = np.empty(mu.spec.q, dtype=object)
        v[:] = [int(x) for x in mu.numerators]
        return v
    return np.array(mu.probs, dtype=float)


def dot_distribution(w, mu: Measure) -> WalkDistribution:
    """Exact law of sum_l w_l xi_l by successive convolution of pushforwards."""
    spec = mu.spec
    w = as_weight_vector(spec, w)
    base = _base_vector(mu)
    acc = np.zeros_like(base)
    acc[0] = 1
    scale = 1
    for c in w.entries:
        if c == 0:
            continue
        acc = _convolve(spec, acc, _pushforward(mu, c, base))
        scale *= mu.denominator if mu.exact else 1
    if mu.exact:
        probs = tuple(Fraction(int(x), scale) for x in acc)
    else:
        probs = tuple(float(x) for x in acc)
    return WalkDistribution(spec, probs, mu.mode)


def dot_distribution_bruteforce(w, mu: Measure, budget: int = ENUMERATION_BUDGET) -> WalkDistribution:
    """Same law by enumerating all q^n outcomes with their weights."""
    spec = mu.spec
    w = as_weight_vector(spec, w)
    n = w.n
    total = spec.q ** n
    if total > budget:
        from .errors import BudgetExceededError
        raise BudgetExceededError("outcome enumeration", total, budget)
    W = np.array(w.entries, dtype=np.int64)
    exact = mu.exact
    if exact:
        use_obj = mu.denominator ** n >= (1 << 62)
        num = np.array(mu.numerators, dtype=object if use_obj else np.int64)
        acc = [0] * spec.q
    else:
        num = mu.probs
        acc = np.zeros(spec.q)
    for X in iter_span(spec, np.eye(n, dtype=np.int64), n, budget):
        dots = spec.mul(X[:, 0], W[0])
        for l in range(1, n):
            dots = spec.add(dots, spec.mul(X[:, l], W[l]))
        wts = num[X].prod(axis=1)
        for r in range(spec.q):
            acc[r] += wts[dots == r].sum()
    if exact:
        D = mu.denominator ** n
        return WalkDistribution(spec, tuple(Fraction(int(a), D) for a in acc), mu.mode)
    return WalkDistribution(spec, tuple(float(a) for a in acc), mu.mode)


def lo_bound_report(w, mu: Measure, r=0) -> dict:
    """Deviation |P(w.X = r) - 1/q| and its normalisation by sqrt(alpha m)."""
    spec = mu.spec
    w = as_weight_vector(spec, w)
    if w.m < 1:
        raise DegenerateError("weight vector has no nonzero entry")
    if mu.is_degenerate:
        raise DegenerateError("measure has alpha = 0")
    P = dot_distribution(w, mu)[r]
    dev = abs(P - Fraction(1, spec.q)) if mu.exact else abs(P - 1.0 / spec.q)
    return {"r": int(r), "m": w.m, "alpha": mu.alpha, "probability": P, "deviation": dev,
            "bound_factor": float(dev) * math.sqrt(float(mu.alpha) * w.m), "mode": mu.mode}


def fourier_triangle_bound(w, mu: Measure) -> float:
    """q^-1 sum_{t != 0} prod_l |mu^(w_l t)|, which dominates every deviation."""
    f = level_tables(w, mu)["f_mult"]
    return float(sum(f[1:])) / mu.spec.q


# -- tables of psi, f_add, f_mult, g ----------------------------------------

def psi_table(mu: Measure) -> tuple:
    """psi(t) = 1 - |mu^(t)|^2, exact for rational measures over p <= 3."""
    return tuple(1 - a for a in mu.abs2)


def _products(counts: np.ndarray, table: Sequence, exact: bool) -> list:
    out = []
    for row in counts:
        acc = Fraction(1) if exact else 1.0
        for v in np.flatnonzero(row):
            acc *= table[v] ** int(row[v])
        out.append(acc)
    return out


def level_tables(w, mu: Measure, nu: Measure | None = None) -> dict:
    """Tables over t of f_add, f_mult, f_mult^2 and g (w.r.t. nu, default the swap measure)."""
    spec = mu.spec
    w = as_weight_vector(spec, w)
    nu = swap_measure(mu) if nu is None else nu
    q = spec.q
    W = spec.mul(np.array(w.entries, dtype=np.int64)[:, None], np.arange(q)[None, :])
    counts = np.zeros((q, q), dtype=np.int64)  # counts[t, v] = #{l : w_l t = v}
    for row in W:
        counts[np.arange(q), row] += 1
    exact = mu.exact_abs
    psi = psi_table(mu)
    f_add = [sum((psi[v] * int(c[v]) for v in np.flatnonzero(c)), Fraction(0) if exact else 0.0)
             for c in counts]
    f_sq = _products(counts, mu.abs2, exact)
    g = _products(counts, nu.real_fourier, exact and nu.exact_abs)
    return {"f_add": f_add, "f_mult_sq": f_sq, "f_mult": [math.sqrt(float(x)) for x in f_sq],
            "g": g, "exact": exact}


@dataclass
class LevelSetReport:
    u: object
    F_u: frozenset
    G_u: frozenset
    f_table: list
    g_table: list
    exact: bool = False

    def to_json(self) -> dict:
        return {"u": self.u, "F_u": sorted(self.F_u), "G_u": sorted(self.G_u),
                "f_table": self.f_table, "g_table": self.g_table, "exact": self.exact}


def level_sets(w, mu: Measure, u, nu: Measure | None = None) -> LevelSetReport:
    """F(u) = {f_mult >= u} and G(u) = {g >= u}."""
    t = level_tables(w, mu, nu)
    u = as_fraction(u) if t["exact"] else float(u)
    F = frozenset(i for i, x in enumerate(t["f_mult_sq"]) if u <= 0 or x >= u * u)
    G = frozenset(i for i, x in enumerate(t["g"]) if x >= u)
    return LevelSetReport(u, F, G, t["f_mult"], t["g"], t["exact"])


def level_set_T(w, mu: Measure, v, tol: float = 0.0) -> frozenset[int]:
    """T(v) = {t : f_add(t) <= v}."""
    t = level_tables(w, mu)
    if t["exact"]:
        v = as_fraction(v)
        return frozenset(i for i, x in enumerate(t["f_add"]) if x <= v)
    return frozenset(i for i, x in enumerate(t["f_add"]) if x <= float(v) + tol)


def t_sumset_check(w, mu: Measure, v, k: int, tol: float = 1e-9) -> Check:
    """k-fold sumset of T(v) lies inside T(k^2 v)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    inner = level_set_T(w, mu, v)
    outer = level_set_T(w, mu, as_fraction(v) * k * k if mu.exact_abs else float(v) * k * k, tol)
    S = iterated_sumset(mu.spec, [inner] * k)
    bad = sorted(S - outer)
    return Check("t_sumset", not bad, bad[0] if bad else None,
                 {"v": v, "k": k, "T_v": sorted(inner), "sumset_size": len(S), "T_k2v_size": len(outer)})


def subgroup_average_check(w, mu: Measure, H: AdditiveSubgroup, tol: float = FLOAT_TOL) -> Check:
    """|H|^-1 sum_{t in H} f_add(t) >= alpha m, with the maximising t as witness."""
    if H.size <= 1:
        raise DegenerateError("subgroup average needs a non-trivial subgroup")
    w = as_weight_vector(mu.spec, w)
    f = level_tables(w, mu)["f_add"]
    vals = [f[t] for t in H.elements]
    avg = sum(vals) / len(vals)
    bound = mu.alpha * w.m
    exact = mu.exact_abs
    ok = avg >= bound if exact else float(avg) >= float(bound) - tol
    best = H.elements[int(np.argmax([float(x) for x in vals]))]
    return Check("subgroup_average", ok, best,
                 {"average": avg, "bound": bound, "max_t": best, "max_value": f[best], "m": w.m})


# -- subspaces: classification and codimension -------------------------------

@dataclass
class SubspaceClass:
    label: str
    evidence: dict
    constants: dict = field(default_factory=dict)

    LABELS = ("sparse", "unsaturated", "semi_saturated", "saturated")

    def to_json(self) -> dict:
        return {"label": self.label, "evidence": self.evidence, "constants": self.constants}


def classify_from_evidence(min_support: int | None, n: int, deviation: float, k: int, q: int,
                           alpha: float, delta, d, D) -> str:
    """The four-way label from the recorded quantities alone."""
    if min_support is not None and min_support <= float(delta) * n:
        return "sparse"
    small = math.exp(-float(d) * float(alpha) * n)
    big = float(D) * float(q) ** (-k)
    if max(small, big) < deviation:
        return "unsaturated"
    if small < deviation <= big:
        return "semi_saturated"
    return "saturated"


def min_annihilator_support(V: Subspace, budget: int = ENUMERATION_BUDGET) -> int | None:
    """Smallest support of a nonzero vector orthogonal to V (None if V is everything)."""
    if V.codim == 0:
        return None
    best = V.n
    for Z in iter_span(V.spec, V.annihilator, V.n, budget):
        wt = np.count_nonzero(Z, axis=1)
        wt = wt[wt > 0]
        if len(wt):
            best = min(best, int(wt.min()))
    return best


def classify_subspace(V: Subspace, mu: Measure, delta=DEFAULT_DELTA, d=DEFAULT_D_SMALL,
                      D=DEFAULT_D_LARGE, budget: int = ENUMERATION_BUDGET) -> SubspaceClass:
    """Sparse / unsaturated / semi-saturated / saturated, with the numbers that decided it."""
    n, k, q = V.n, V.codim, V.spec.q
    ms = min_annihilator_support(V, budget)
    dev = abs(membership_deviation(V, mu, budget)) if k else 0
    alpha = mu.alpha
    label = classify_from_evidence(ms, n, float(dev), k, q, alpha, delta, d, D)
    evidence = {
        "min_support": ms, "sparse_threshold": float(delta) * n, "deviation": dev,
        "exp_threshold": math.exp(-float(d) * float(alpha) * n), "D_threshold": float(D) * float(q) ** (-k),
        "codim": k, "n": n, "q": q, "alpha": alpha,
    }
    return SubspaceClass(label, evidence, {"delta": delta, "d": d, "D": D})


@dataclass
class CombinatorialCodimension:
    value: object  # Fraction j/n, or math.inf
    j: int | None
    n: int
    probability: object
    alpha: object
    degenerate: str | None = None

    def to_json(self) -> dict:
        return {"value": self.value, "j": self.j, "n": self.n, "probability": self.probability,
                "alpha": self.alpha, "degenerate": self.degenerate}


def _sandwich_holds(j: int, n: int, P: Fraction, base: Fraction) -> tuple[bool, bool]:
    """(base^(j/n) <= P, P < base^((j-1)/n)), compared as n-th powers."""
    Pn = P ** n
    return base ** j <= Pn, Pn < base ** (j - 1)


def codimension_from_probability(P, alpha, n: int) -> CombinatorialCodimension:
    """The multiple j/n with (1-alpha)^(j/n) <= P < (1-alpha)^((j-1)/n)."""
    Pf, af = as_fraction(P), as_fraction(alpha)
    if not 0 < af < 1:
        raise DegenerateError(f"alpha = {af} is outside (0, 1)")
    if Pf == 0:
        return CombinatorialCodimension(math.inf, None, n, P, alpha, "zero_probability")
    if Pf > 1:
        raise ValueError("probability above 1")
    if Pf == 1:
        return CombinatorialCodimension(Fraction(0), 0, n, P, alpha, "full_probability")
    base = 1 - af
    j = max(1, math.ceil(n * math.log(float(Pf)) / math.log(float(base)) - 1e-9))
    # The float guess may be off by one at a boundary; settle it exactly.
    for _ in range(64):
        lower, upper = _sandwich_holds(j, n, Pf, base)
        if lower and upper:
            break
        j = j + 1 if not lower else j - 1
    else:
        raise AssertionError("combinatorial codimension search did not converge")
    return CombinatorialCodimension(Fraction(j, n), j, n, P, alpha)


def combinatorial_codimension(V: Subspace, mu: Measure, n: int | None = None) -> CombinatorialCodimension:
    n = V.n if n is None else n
    return codimension_from_probability(membership_probability(V, mu), mu.alpha, n)


def swap_comparison(V: Subspace, mu: Measure) -> dict:
    """Deviations of P(. in V) from 1/q under mu and under its swap measure."""
    if V.codim != 1:
        raise ValueError("swap comparison needs a hyperplane")
    nu = swap_measure(mu)
    lhs = abs(membership_deviation(V, mu))
    rhs = abs(membership_deviation(V, nu))
    ratio, degenerate = None, None
    if rhs == 0:
        degenerate = "both_zero" if lhs == 0 else "ratio_undefined"
    else:
        ratio = lhs / rhs
    # The annihilator is the line through zeta; f and g over t cover it.
    zeta = [int(x) for x in V.annihilator[0]]
    t = level_tables(zeta, mu, nu)
    exact = t["exact"]
    bad = [i for i in range(V.spec.q) if t["f_mult_sq"][i] > t["g"][i] ** 8 * (1 if exact else 1 + 1e-10)]
    dom = Check("f_le_g4", not bad, bad[0] if bad else None, {})
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio, "degenerate": degenerate, "domination": dom,
            "mode": mu.mode}
