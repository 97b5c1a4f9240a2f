"""Probability measures on F_q and their Fourier-side quantities.

A measure is either *rational* (integer numerators over a common
denominator, every derived quantity exact where the field allows it) or
*float*.  Fourier data is stored through the exponent profile
``profile[t, k] = mu{x : Tr(t x) = k}``: the transform is
``sum_k profile[t, k] * e(k/p)``, so identities between transforms can be
checked coefficient-wise without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .additive import iterated_sumset
from .errors import MeasureError
from .field import FieldElement, FieldSpec, enumerate_additive_subgroups
from .report import Check

# Swap-measure mixing weight; the 8th-root AM-GM step relies on exactly 1/8.
GAMMA = Fraction(1, 8)
FLOAT_TOL = 1e-12
DEFAULT_ALPHA_FLOOR = 0.05


def as_fraction(x) -> Fraction:
    """Exact value of a user-supplied number; floats are read as their decimal repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    return Fraction(str(x))


def _is_exact_number(x) -> bool:
    return isinstance(x, (int, np.integer, Fraction, str)) and not isinstance(x, bool)


class Measure:
    """A probability distribution on F_q, indexed by element index."""

    def __init__(self, spec: FieldSpec, weights, mode: str | None = None):
        self.spec = spec
        q = spec.q
        if isinstance(weights, Mapping):
            dense = [0] * q
            for key, w in weights.items():
                dense[int(key)] = w
            weights = dense
        weights = list(weights)
        if len(weights) != q:
            raise MeasureError(f"expected {q} weights, got {len(weights)}")
        if mode is None:
            mode = "rational" if all(_is_exact_number(w) for w in weights) else "float"
        if mode == "rational":
            fr = [as_fraction(w) for w in weights]
            if any(w < 0 for w in fr):
                raise MeasureError("negative weight")
            if sum(fr) != 1:
                raise MeasureError(f"weights sum to {sum(fr)}, not 1")
            self.denominator = math.lcm(*(w.denominator for w in fr))
            self.numerators = tuple(int(w * self.denominator) for w in fr)
            self.weights = tuple(fr)
            probs = np.array([float(w) for w in fr])
        elif mode == "float":
            probs = np.array([float(w) for w in weights], dtype=float)
            if np.any(probs < 0):
                raise MeasureError("negative weight")
            total = float(math.fsum(probs))
            if abs(total - 1.0) > 1e-12:
                raise MeasureError(f"weights sum to {total!r}, not 1")
            probs = probs / total
            self.numerators = None
            self.denominator = None
            self.weights = tuple(float(w) for w in probs)
        else:
            raise ValueError(f"unknown arithmetic mode {mode!r}")
        probs.setflags(write=False)
        self.mode = mode
        self.probs = probs

    @property
    def exact(self) -> bool:
        return self.mode == "rational"

    def __repr__(self):
        return f"Measure({self.spec!r}, {list(self.weights)!r})"

    def __eq__(self, other):
        return (isinstance(other, Measure) and self.spec == other.spec
                and self.mode == other.mode and self.weights == other.weights)

    def __hash__(self):
        return hash((self.spec, self.mode, self.weights))

    def __call__(self, x) -> Fraction | float:
        return self.weights[int(x)]

    def to_float(self) -> Measure:
        return self if not self.exact else Measure(self.spec, [float(w) for w in self.weights], "float")

    def to_json(self) -> dict:
        return {"field": self.spec.to_json(), "mode": self.mode,
                "weights": [str(w) if self.exact else w for w in self.weights]}

    @classmethod
    def from_json(cls, data: dict) -> Measure:
        spec = FieldSpec.from_json(data["field"])
        return cls(spec, data["weights"], data.get("mode"))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w)

    # -- Fourier side -------------------------------------------------------

    @cached_property
    def profile(self) -> np.ndarray:
        """profile[t, k] = mu{x : Tr(t x) = k}; integer numerators in rational mode."""
        C = self.spec.char_matrix
        p = self.spec.p
        if self.exact:
            dtype = np.int64 if self.denominator < (1 << 62) else object
            num = np.array(self.numerators, dtype=dtype)
            out = np.stack([(C == k).astype(dtype) @ num for k in range(p)], axis=1)
        else:
            out = np.stack([(C == k).astype(float) @ self.probs for k in range(p)], axis=1)
        out.setflags(write=False)
        return out

    @cached_property
    def _roots(self) -> np.ndarray:
        p = self.spec.p
        r = np.exp(2j * np.pi * np.arange(p) / p)
        if p == 2:
            r = np.array([1.0, -1.0], dtype=complex)
        return r

    @cached_property
    def fourier(self) -> np.ndarray:
        scale = self.denominator if self.exact else 1
        prof = self.profile.astype(float) / scale
        out = prof @ self._roots
        out.setflags(write=False)
        return out

    @property
    def exact_abs(self) -> bool:
        """|mu^(t)|^2 is rational (and computed exactly) when p <= 3."""
        return self.exact and self.spec.p <= 3

    def _real_part_exact(self, vec, scale) -> Fraction:
        # cos(2 pi k / p) is 1, -1 for p = 2 and 1, -1/2, -1/2 for p = 3.
        if self.spec.p == 2:
            return Fraction(int(vec[0]) - int(vec[1]), scale)
        return Fraction(2 * int(vec[0]) - int(vec[1]) - int(vec[2]), 2 * scale)

    @cached_property
    def abs2(self) -> tuple:
        """|mu^(t)|^2 for every t: Fractions when exact_abs, floats otherwise."""
        if not self.exact_abs:
            return tuple(float(v) for v in np.abs(self.fourier) ** 2)
        p, D = self.spec.p, self.denominator
        out = []
        for t in range(self.spec.q):
            a = [int(v) for v in self.profile[t]]
            auto = [sum(a[k] * a[(k - j) % p] for k in range(p)) for j in range(p)]
            out.append(self._real_part_exact(auto, D * D))
        return tuple(out)

    @cached_property
    def real_fourier(self) -> tuple:
        """Re mu^(t); exact for rational measures with p <= 3."""
        if not self.exact_abs:
            return tuple(float(v) for v in self.fourier.real)
        return tuple(self._real_part_exact(self.profile[t], self.denominator) for t in range(self.spec.q))

    def exact_profile(self, t) -> tuple[Fraction, ...]:
        if not self.exact:
            raise MeasureError("exact profile needs a rational measure")
        return tuple(Fraction(int(v), self.denominator) for v in self.profile[int(t)])

    @cached_property
    def alpha(self):
        """alpha-density: 1 - largest mass of a coset of an index-p subgroup.

        Index-p subgroups are the kernels of the functionals x -> Tr(t x),
        t != 0, and their cosets are the level sets, i.e. profile entries.
        """
        worst = self.profile[1:].max()
        if self.exact:
            return 1 - Fraction(int(worst), self.denominator)
        return max(0.0, 1.0 - float(worst))

    @property
    def is_degenerate(self) -> bool:
        return self.alpha <= 0


def cdf_thresholds(mu: Measure) -> np.ndarray:
    """Integer thresholds T_j = ceil(2^64 * mu{0..j}) for j < q-1.

    A raw 64-bit word W maps to the element #{j : T_j <= W}, i.e. inverse-CDF
    sampling over index order with u = W / 2^64.
    """
    cached = getattr(mu, "_thresholds", None)
    if cached is not None:
        return cached
    top = (1 << 64) - 1
    acc, out = Fraction(0), []
    for w in mu.weights[:-1]:
        acc += as_fraction(w) if mu.exact else Fraction(w)
        out.append(min(top, -((-acc.numerator << 64) // acc.denominator)))
    arr = np.array(out, dtype=np.uint64)
    mu._thresholds = arr
    return arr


def sample_indices(mu: Measure, words: np.ndarray) -> np.ndarray:
    """Element indices drawn by inverse CDF from raw 64-bit words."""
    thr = cdf_thresholds(mu)
    if len(thr) == 1:
        out = (words >= thr[0]).astype(np.int64)
    else:
        out = np.searchsorted(thr, words, side="right").astype(np.int64)
    # A threshold of exactly 2^64 is clipped to 2^64 - 1; keep the all-ones
    # word from landing on a null tail.
    last = mu.support[-1]
    if last < mu.spec.q - 1:
        np.minimum(out, last, out=out)
    return out


def make_measure(spec: FieldSpec, weights, mode: str | None = None) -> Measure:
    return Measure(spec, weights, mode)


def uniform(spec: FieldSpec, mode: str = "rational") -> Measure:
    w = [Fraction(1, spec.q)] * spec.q
    return Measure(spec, w if mode == "rational" else [1.0 / spec.q] * spec.q, mode)


def bernoulli(spec: FieldSpec, a) -> Measure:
    """Mass a at 1 and 1 - a at 0; rational unless a is a float."""
    if _is_exact_number(a):
        a = as_fraction(a)
        w = [Fraction(0)] * spec.q
        w[0], w[1] = 1 - a, a
        return Measure(spec, w, "rational")
    w = [0.0] * spec.q
    w[0], w[1] = 1.0 - a, float(a)
    return Measure(spec, w, "float")


def point_mass(spec: FieldSpec, c=0) -> Measure:
    w = [0] * spec.q
    w[int(c)] = 1
    return Measure(spec, w, "rational")


def random_dense_measure(
    spec: FieldSpec,
    rng: np.random.Generator,
    floor: float = DEFAULT_ALPHA_FLOOR,
    mode: str = "float",
    max_weight: int = 12,
    max_tries: int = 10_000,
) -> Measure:
    """Random measure with alpha >= floor (rejection sampling).

    Float mode draws Dirichlet weights with a random concentration, rational
    mode draws integer weights in [0, max_weight]; either may zero out part
    of the support so that near-degenerate shapes are exercised.
    """
    q = spec.q
    for _ in range(max_tries):
        keep = np.ones(q, dtype=bool)
        if rng.random() < 0.3 and q > 2:
            keep = rng.random(q) < rng.uniform(0.3, 0.9)
        if mode == "float":
            w = rng.dirichlet(np.full(q, rng.uniform(0.3, 3.0))) * keep
            if w.sum() <= 0:
                continue
            mu = Measure(spec, w / w.sum(), "float")
        else:
            w = rng.integers(0, max_weight + 1, size=q) * keep
            if w.sum() == 0:
                continue
            mu = Measure(spec, [Fraction(int(x), int(w.sum())) for x in w], "rational")
        if mu.alpha >= floor:
            return mu
    raise MeasureError(f"no measure with alpha >= {floor} found in {max_tries} tries")


def alpha_density_by_subgroups(mu: Measure, maximal_only: bool = False):
    """alpha from explicit enumeration of subgroups and their cosets."""
    worst = max(
        sum((mu(x) for x in coset), start=type(mu.weights[0])(0))
        for H in enumerate_additive_subgroups(mu.spec, maximal_only=maximal_only)
        for coset in H.cosets()
    )
    return 1 - worst


def fourier(mu: Measure, t) -> complex:
    return complex(mu.fourier[int(t)])


# -- additive spectrum ---------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    epsilon: object
    members: frozenset[int]

    def __contains__(self, t):
        return int(t) in self.members

    def to_json(self) -> dict:
        return {"epsilon": str(self.epsilon), "members": sorted(self.members)}


def _spectrum_at_level(mu: Measure, level, tol: float = FLOAT_TOL) -> frozenset[int]:
    """{t : |mu^(t)| >= level}; every t when level <= 0."""
    q = mu.spec.q
    if mu.exact_abs:
        level = as_fraction(level)
        if level <= 0:
            return frozenset(range(q))
        return frozenset(t for t in range(q) if mu.abs2[t] >= level * level)
    level = float(level)
    if level <= 0:
        return frozenset(range(q))
    mags = np.abs(mu.fourier)
    return frozenset(np.flatnonzero(mags >= level - tol).tolist())


def spec_set(mu: Measure, eps, tol: float = FLOAT_TOL) -> SpectrumReport:
    """Spec_{1-eps} mu, ties included.  Exact for rational measures over p <= 3."""
    if not 0 <= float(eps) < 1:
        raise ValueError("eps must lie in [0, 1)")
    level = 1 - as_fraction(eps) if mu.exact_abs else 1.0 - float(eps)
    return SpectrumReport(eps, _spectrum_at_level(mu, level, tol))


def spec_sumset_check(mu: Measure, eps_list: Sequence, tol: float = FLOAT_TOL) -> Check:
    """Spec_{1-e_1} + ... + Spec_{1-e_k} inside Spec_{1-k(e_1+...+e_k)}."""
    if not eps_list:
        raise ValueError("need at least one epsilon")
    if any(float(e) >= 1 for e in eps_list):
        raise ValueError("each epsilon must be < 1")
    k = len(eps_list)
    exact = mu.exact_abs
    eps = [as_fraction(e) for e in eps_list] if exact else [float(e) for e in eps_list]
    parts = [_spectrum_at_level(mu, 1 - e, tol) for e in eps]
    total = k * sum(eps)
    target = _spectrum_at_level(mu, 1 - total, tol)
    S = iterated_sumset(mu.spec, parts)
    missing = sorted(S - target)
    return Check("spec_sumset", not missing, missing[0] if missing else None,
                 {"k": k, "budget": total, "sumset_size": len(S), "target_size": len(target),
                  "vacuous": total >= 1})


# -- swap measure ------------------------------------------------------------------

def _autocorrelation(mu: Measure) -> np.ndarray:
    """c[t] = P(xi - xi' = t), as numerators over D^2 in rational mode."""
    q = mu.spec.q
    idx = np.arange(q, dtype=np.int64)
    shifted = mu.spec.sub(idx[:, None], idx[None, :])  # [a, t] -> a - t
    if mu.exact:
        num = np.array(mu.numerators, dtype=object)
        return num @ num[shifted]
    return mu.probs @ mu.probs[shifted]


def swap_measure(mu: Measure) -> Measure:
    """nu = GAMMA * (mu * mu^-) off zero, remaining mass at zero."""
    q = mu.spec.q
    auto = _autocorrelation(mu)
    if mu.exact:
        D2 = mu.denominator ** 2
        w = [GAMMA * Fraction(int(auto[t]), D2) for t in range(q)]
        w[0] = 1 - sum(w[1:])
        return Measure(mu.spec, w, "rational")
    g = float(GAMMA)
    w = [g * float(auto[t]) for t in range(q)]
    w[0] = 1.0 - math.fsum(w[1:])
    return Measure(mu.spec, w, "float")


def swap_fourier_identity(mu: Measure, nu: Measure | None = None) -> Check:
    """nu^(t) = 1 - GAMMA + GAMMA |mu^(t)|^2 for every t.

    Rational measures compare exponent profiles exactly: nu pushed forward by
    x -> Tr(t x) equals (1-GAMMA) delta_0 + GAMMA * autocorrelation of mu's.
    """
    nu = swap_measure(mu) if nu is None else nu
    p, q = mu.spec.p, mu.spec.q
    if mu.exact:
        for t in range(q):
            a = mu.exact_profile(t)
            auto = [sum(a[k] * a[(k - j) % p] for k in range(p)) for j in range(p)]
            closed = [GAMMA * c for c in auto]
            closed[0] += 1 - GAMMA
            if list(nu.exact_profile(t)) != closed:
                return Check("swap_fourier_identity", False, t, {"mode": "rational"})
        return Check("swap_fourier_identity", True, None, {"mode": "rational"})
    closed = 1 - float(GAMMA) + float(GAMMA) * np.abs(mu.fourier) ** 2
    err = np.abs(nu.fourier - closed)
    bad = np.flatnonzero(err > FLOAT_TOL)
    return Check("swap_fourier_identity", len(bad) == 0, int(bad[0]) if len(bad) else None,
                 {"mode": "float", "max_error": float(err.max())})


@dataclass
class SwapPropertyReport:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def __bool__(self):
        return self.passed

    def to_json(self):
        return {"passed": self.passed, "checks": {k: v.to_json() for k, v in self.checks.items()}}


def default_u_grid(points: int = 32) -> list[Fraction]:
    return [Fraction(j, points) for j in range(1, points + 1)]


def verify_swap_properties(mu: Measure, w, u_grid: Iterable | None = None) -> SwapPropertyReport:
    """The four properties of nu = swap_measure(mu) relative to mu and w.

    (1) F(u) + F(u) inside G(u) on the u grid, (2) |mu^| <= nu^4 pointwise and
    f <= g^4, (3) nu^ >= 0, (4) alpha(nu) >= alpha(mu) / 8.  Rational
    measures over p <= 3 are checked exactly through squared moduli.
    """
    from .lo import level_tables  # lo builds on this module

    nu = swap_measure(mu)
    q = mu.spec.q
    grid = list(default_u_grid() if u_grid is None else u_grid)
    exact = mu.exact_abs
    rtol = 0 if exact else 1e-10
    atol = 0 if exact else FLOAT_TOL
    tables = level_tables(w, mu, nu)
    f2, g = tables["f_mult_sq"], tables["g"]
    nu_hat = nu.real_fourier
    checks = {}

    neg = [t for t in range(q) if nu_hat[t] < -atol]
    checks["nu_hat_nonnegative"] = Check("nu_hat_nonnegative", not neg, neg[0] if neg else None,
                                         {"min": min(nu_hat)})

    # |mu^| <= nu^4  <=>  |mu^|^2 <= nu^8 once nu^ >= 0.
    point_bad = [t for t in range(q) if mu.abs2[t] > nu_hat[t] ** 8 * (1 + rtol) + atol]
    prod_bad = [t for t in range(q) if f2[t] > g[t] ** 8 * (1 + rtol)]
    bad = point_bad or prod_bad
    checks["fourier_domination"] = Check("fourier_domination", not bad, bad[0] if bad else None,
                                         {"pointwise_failures": len(point_bad), "product_failures": len(prod_bad)})

    a_mu, a_nu = mu.alpha, nu.alpha
    bound = a_mu * GAMMA if exact or mu.exact else a_mu * float(GAMMA)
    dense_ok = a_nu >= bound - atol
    checks["nu_density"] = Check("nu_density", dense_ok, None if dense_ok else a_nu,
                                 {"alpha_mu": a_mu, "alpha_nu": a_nu, "bound": bound})

    sum_bad = None
    idx = np.arange(q, dtype=np.int64)
    add = mu.spec.add(idx[:, None], idx[None, :])
    for u in grid:
        u = as_fraction(u) if exact else float(u)
        F = [t for t in range(q) if f2[t] >= u * u * (1 - rtol)]
        G = {t for t in range(q) if g[t] >= u * (1 - rtol)}
        for s in np.unique(add[np.ix_(F, F)]).tolist() if F else []:
            if s not in G:
                sum_bad = {"u": u, "element": s}
                break
        if sum_bad:
            break
    checks["level_sumset"] = Check("level_sumset", sum_bad is None, sum_bad, {"grid_points": len(grid)})
    return SwapPropertyReport(checks)
