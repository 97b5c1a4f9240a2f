"""The property battery behind ``verify-all``: one function per suite."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .additive import cosine_batch, iterated_kneser_check, kneser_exhaustive
from .experiments import ExperimentConfig, exact_det_distribution, exact_singularity, finite_product
from .field import enumerate_additive_subgroups, make_field
from .linalg import (enumerate_subspaces, independence_bound_check, membership_probability,
                     odlyzko_check, random_subspace)
from .lo import dot_distribution, dot_distribution_bruteforce, subgroup_average_check, t_sumset_check
from .measures import (random_dense_measure, spec_sumset_check, swap_fourier_identity, uniform,
                       verify_swap_properties)
from .report import Check, jsonable
from .rng import make_generator

FIELDS = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2)]


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: int = 0
    witness: object = None
    warnings: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, chk: Check) -> None:
        self.cases += 1
        if not chk.passed:
            self.failures += 1
            if self.witness is None:
                self.witness = chk.to_json()

    def to_json(self) -> dict:
        return jsonable({"name": self.name, "passed": self.passed, "cases": self.cases,
                         "failures": self.failures, "witness": self.witness,
                         "warnings": self.warnings, "seconds": round(self.seconds, 3)})


def _measures(spec, rng, count, floor, mode="float", res: SuiteResult | None = None):
    out = []
    for _ in range(count):
        mu = random_dense_measure(spec, rng, floor=floor, mode=mode, max_weight=6)
        if res is not None and mu.is_degenerate and "degenerate measure admitted" not in res.warnings:
            res.warnings.append("degenerate measure admitted")
        out.append(mu)
    return out


def suite_odlyzko(rng, floor, res):
    for p, f, n in [(2, 1, 4), (3, 1, 3)]:
        spec = make_field(p, f)
        subs = enumerate_subspaces(spec, n)
        for mu in _measures(spec, rng, 20, floor, "rational", res):
            for V in subs:
                res.record(odlyzko_check(V, mu))


def suite_independence(rng, floor, res):
    for q in (2, 3):
        spec = make_field(q)
        for mu in _measures(spec, rng, 5, floor, "rational", res):
            for dim in (1, 2):
                V = random_subspace(spec, 3, dim, rng)
                for r in (1, 2):
                    try:
                        res.record(independence_bound_check(mu, V, r))
                    except Exception as exc:  # conditioning event of probability zero
                        res.warnings.append(str(exc))


def suite_lo_bruteforce(rng, floor, res):
    for q in (2, 3, 4):
        spec = make_field(2, 2) if q == 4 else make_field(q)
        for n in range(1, 7):
            for mu in _measures(spec, rng, 5, floor, "rational", res):
                w = rng.integers(0, q, size=n).tolist()
                a, b = dot_distribution(w, mu), dot_distribution_bruteforce(w, mu)
                res.record(Check("lo_bruteforce", a.probs == b.probs, None if a.probs == b.probs else w))


def suite_t_sumset(rng, floor, res):
    spec = make_field(2, 3)
    for mu in _measures(spec, rng, 20, floor, "float", res):
        w = rng.integers(0, 8, size=int(rng.integers(1, 7))).tolist()
        m = sum(1 for x in w if x)
        for v in np.linspace(0, max(m, 1), 9):
            for k in (2, 3):
                res.record(t_sumset_check(w, mu, float(v), k))
        if m:
            for H in enumerate_additive_subgroups(spec, maximal_only=True):
                res.record(subgroup_average_check(w, mu, H))


def suite_kneser(rng, floor, res):
    res.record(kneser_exhaustive(make_field(2, 3)))
    spec = make_field(3, 2)
    for _ in range(2000):
        sets = [np.flatnonzero(rng.random(9) < rng.uniform(0.1, 0.7)).tolist() or [int(rng.integers(9))]
                for _ in range(3)]
        res.record(iterated_kneser_check(spec, sets))


def suite_cosine(rng, floor, res):
    for k in range(1, 7):
        res.record(cosine_batch(rng.uniform(-np.pi, np.pi, size=(20_000, k))))


def suite_spec_sumset(rng, floor, res):
    for p, f in FIELDS:
        spec = make_field(p, f)
        for mu in _measures(spec, rng, 5, floor, "rational" if p <= 3 else "float", res):
            for k in (1, 2, 3):
                eps = [Fraction(int(x), 100) for x in rng.integers(0, 30, size=k)]
                res.record(spec_sumset_check(mu, eps))


def suite_swap(rng, floor, res):
    for p, f in FIELDS:
        spec = make_field(p, f)
        for mu in _measures(spec, rng, 10, floor, "float", res):
            res.record(swap_fourier_identity(mu))
            for _ in range(3):
                w = rng.integers(0, spec.q, size=int(rng.integers(1, 9))).tolist()
                rep = verify_swap_properties(mu, w)
                for chk in rep.checks.values():
                    res.record(chk)


def suite_fourier_membership(rng, floor, res):
    for q in (2, 3, 4):
        spec = make_field(2, 2) if q == 4 else make_field(q)
        for _ in range(30):
            n = int(rng.integers(1, 5))
            V = random_subspace(spec, n, int(rng.integers(0, n + 1)), rng)
            mu = random_dense_measure(spec, rng, floor=floor, mode="rational", max_weight=6)
            a, b = membership_probability(V, mu), membership_probability(V, mu, "fourier")
            res.record(Check("fourier_membership", a == b, None if a == b else V.to_json(), {"direct": a, "fourier": b}))


def suite_gl_density(rng, floor, res):
    for q in (2, 3):
        for n in (1, 2, 3):
            rep = exact_singularity(ExperimentConfig(p=q, n=n, mode="exact"))
            P = rep.results["nonsingular"]
            res.record(Check("gl_density", P == finite_product(q, n), None, {"q": q, "n": n, "P": P}))
    for q in (2, 3, 5):
        rep = exact_det_distribution(ExperimentConfig(p=q, n=2, mode="exact"))
        vals = set(rep.results["distribution"][str(t)] for t in range(1, q))
        res.record(Check("det_symmetry", len(vals) == 1, None, {"q": q}))


SUITES = {
    "odlyzko": suite_odlyzko,
    "independence": suite_independence,
    "lo-bruteforce": suite_lo_bruteforce,
    "t-sumset": suite_t_sumset,
    "kneser": suite_kneser,
    "cosine": suite_cosine,
    "spec-sumset": suite_spec_sumset,
    "swap": suite_swap,
    "fourier-membership": suite_fourier_membership,
    "gl-density": suite_gl_density,
}


def verify_all(seed: int = 0, alpha_floor: float = 0.05, suites=None) -> list[SuiteResult]:
    names = list(SUITES) if not suites else list(suites)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    out = []
    for i, name in enumerate(names):
        rng = make_generator([seed, i])
        res = SuiteResult(name)
        t0 = time.perf_counter()
        SUITES[name](rng, alpha_floor, res)
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out


def scorecard(results: list[SuiteResult]) -> str:
    lines = [f"{'suite':<20} {'status':<6} {'cases':>7} {'fail':>5} {'sec':>8}"]
    for r in results:
        lines.append(f"{r.name:<20} {'PASS' if r.passed else 'FAIL':<6} {r.cases:>7} {r.failures:>5} {r.seconds:>8.2f}")
        for w in r.warnings[:3]:
            lines.append(f"  warning: {w}")
    lines.append(f"overall: {'PASS' if all(r.passed for r in results) else 'FAIL'}")
    return "\n".join(lines)
