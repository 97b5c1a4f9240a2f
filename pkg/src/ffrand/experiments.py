"""Limit constants, exact enumeration, and Monte Carlo singularity experiments.

Monte Carlo runs split trials into fixed-size chunks whose random words come
from :mod:`ffrand.rng`, so tallies are integer sums that do not depend on how
chunks are scheduled over worker processes.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import BudgetExceededError, MeasureError
from .field import FieldSpec, make_field
from .linalg import batch_det, batch_rank, batch_rank_gf2, pack_gf2
from .measures import Measure, bernoulli, point_mass, sample_indices, uniform
from .report import TOOL_VERSION, dumps, jsonable
from .rng import trial_words, trial_words_at

PURPOSE_SINGULARITY = 1
PURPOSE_DETERMINANT = 2
PURPOSE_EXPOSURE = 3000  # plus k, one family of streams per column index

EXACT_BUDGET = 10**8
DEFAULT_CHUNK = 8192
RESAMPLE_CAP = 10**4


# -- limit constants ---------------------------------------------------------

class LimitValue(NamedTuple):
    value: float
    K: int
    tail_bound: float


def limit_product(q: int, tol: float = 1e-15) -> LimitValue:
    """prod_{k>=1} (1 - q^-k), truncated once sum_{k>K} q^-k = q^-K / (q-1) < tol."""
    if q < 2 or tol <= 0:
        raise ValueError("need q >= 2 and tol > 0")
    val, K, x = 1.0, 0, 1.0
    while True:
        K += 1
        x /= q
        val *= 1.0 - x
        tail = x / (q - 1)
        if tail < tol:
            return LimitValue(val, K, tail)


def det_limit(q: int, tol: float = 1e-15) -> LimitValue:
    """q^-1 prod_{k>=2} (1 - q^-k), which equals limit_product(q) / (q - 1)."""
    base = limit_product(q, tol)
    val, x = 1.0 / q, 1.0 / q
    for _ in range(2, base.K + 1):
        x /= q
        val *= 1.0 - x
    ratio = base.value / (q - 1)
    if abs(val - ratio) > 1e-14:
        raise AssertionError("determinant limit disagrees with the singularity limit")
    return LimitValue(val, base.K, base.tail_bound)


def finite_product(q: int, n: int) -> Fraction:
    """prod_{k=1}^n (1 - q^-k) as an exact fraction."""
    out = Fraction(1)
    for k in range(1, n + 1):
        out *= 1 - Fraction(1, q ** k)
    return out


def gl_order(q: int, n: int) -> int:
    return math.prod(q ** n - q ** k for k in range(n))


def gl_density(q: int, n: int) -> Fraction:
    """|GL_n(F_q)| / q^(n^2)."""
    return Fraction(gl_order(q, n), q ** (n * n))


# -- configuration and reports ----------------------------------------------

def parse_measure(spec: FieldSpec, text) -> Measure:
    """uniform | bernoulli:A | point:C | weights:w0,w1,... | path to a JSON measure.

    Numbers are read as exact fractions ("0.4" is 2/5), so inline measures
    are rational.
    """
    if isinstance(text, Measure):
        return text
    if isinstance(text, dict):
        return Measure.from_json(text) if "field" in text else Measure(spec, text["weights"], text.get("mode"))
    text = str(text).strip()
    kind, _, arg = text.partition(":")
    try:
        if kind == "uniform":
            return uniform(spec)
        if kind == "bernoulli":
            return bernoulli(spec, Fraction(arg))
        if kind == "point":
            return point_mass(spec, int(arg or 0))
        if kind == "weights":
            return Measure(spec, [Fraction(x) for x in arg.split(",")], "rational")
    except (ValueError, ZeroDivisionError) as exc:
        raise MeasureError(f"bad measure {text!r}: {exc}") from exc
    path = Path(text)
    if path.exists():
        data = json.loads(path.read_text())
        mu = Measure.from_json(data) if "field" in data else Measure(spec, data["weights"], data.get("mode"))
        if mu.spec != spec:
            raise MeasureError("measure file is over a different field")
        return mu
    raise MeasureError(f"unknown measure {text!r}")


def measure_label(mu) -> object:
    return mu if isinstance(mu, str) else jsonable(mu)


@dataclass
class ExperimentConfig:
    p: int = 2
    f: int = 1
    measure: object = "uniform"
    n: int = 4
    trials: int = 10_000
    master_seed: int = 0
    mode: str = "mc"
    delta: object = Fraction(1, 100)
    d: object = Fraction(1, 100)
    D: object = 10
    output: str | None = None
    workers: int = 1
    chunk: int = DEFAULT_CHUNK
    budget: int = EXACT_BUDGET

    def __post_init__(self):
        if self.mode == "mc" and self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def spec(self) -> FieldSpec:
        return make_field(self.p, self.f)

    def measure_obj(self) -> Measure:
        return parse_measure(self.spec, self.measure)

    def echo(self) -> dict:
        """Config fields that determine results (workers and output do not)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("workers", "output")}
        d["measure"] = measure_label(self.measure)
        return jsonable(d)


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    mode: str
    results: dict
    seed: int | None = None
    trials: int | None = None
    limits: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)
    passed: bool | None = None
    envelope: dict = field(default_factory=dict)

    def body(self) -> dict:
        return jsonable({"kind": self.kind, "tool_version": TOOL_VERSION, "config": self.config,
                         "mode": self.mode, "seed": self.seed, "trials": self.trials,
                         "results": self.results, "limits": self.limits, "policy": self.policy,
                         "passed": self.passed})

    def body_json(self) -> str:
        return dumps(self.body(), indent=2)

    def to_json(self) -> dict:
        return {"body": self.body(), "envelope": jsonable(self.envelope)}

    def write(self, path) -> None:
        Path(path).write_text(dumps(self.to_json(), indent=2) + "\n")


def _envelope(t0: float, workers: int | None = None) -> dict:
    env = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "wall_time_s": round(time.perf_counter() - t0, 6)}
    if workers is not None:
        env["workers"] = workers
    return env


def mc_allowance(n: int) -> float:
    """Stand-in e^(-n/10) for the unquantified finite-n error term."""
    return math.exp(-n / 10)


def _policy(n: int) -> dict:
    return {"rule": "|estimate - reference| <= 3*SE + allowance", "allowance": mc_allowance(n),
            "allowance_formula": "exp(-n/10)"}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FFRAND_WORKERS", "1")))
    except ValueError:
        return 1


# -- Monte Carlo kernels -----------------------------------------------------

def _sample_matrices(mu: Measure, n: int, seed: int, start: int, count: int, purpose: int) -> np.ndarray:
    words = trial_words(seed, start, count, n * n, purpose)
    return sample_indices(mu, words).reshape(count, n, n)


def _chunk_rank_counts(args) -> int:
    mu, n, seed, start, count = args
    mats = _sample_matrices(mu, n, seed, start, count, PURPOSE_SINGULARITY)
    if mu.spec.q == 2:
        rk = batch_rank_gf2(pack_gf2(mats), n)
    else:
        rk = batch_rank(mu.spec, mats)
    return int(np.count_nonzero(rk == n))


def _chunk_det_counts(args) -> list[int]:
    mu, n, seed, start, count = args
    mats = _sample_matrices(mu, n, seed, start, count, PURPOSE_DETERMINANT)
    if mu.spec.q == 2:
        det = (batch_rank_gf2(pack_gf2(mats), n) == n).astype(np.int64)
    else:
        det = batch_det(mu.spec, mats)
    return np.bincount(det, minlength=mu.spec.q).tolist()


def _run_chunks(kernel, mu: Measure, cfg: ExperimentConfig, workers: int):
    jobs = [(mu, cfg.n, cfg.master_seed, s, min(cfg.chunk, cfg.trials - s))
            for s in range(0, cfg.trials, cfg.chunk)]
    if workers <= 1 or len(jobs) == 1:
        return [kernel(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(kernel, jobs))


def _se(p: float, trials: int) -> float | None:
    return None if trials < 2 else math.sqrt(p * (1 - p) / trials)


def mc_singularity(cfg: ExperimentConfig, workers: int | None = None, reference: str = "auto") -> ExperimentReport:
    """Estimate P(A non-singular) for an n x n matrix with iid mu entries.

    ``reference`` picks the comparison target for the pass flag: ``finite``
    (the GL density, exact for uniform mu), ``limit``, or ``auto`` (finite
    for uniform mu, limit otherwise).
    """
    t0 = time.perf_counter()
    workers = default_workers() if workers is None else workers
    mu = cfg.measure_obj()
    q, n = mu.spec.q, cfg.n
    hits = sum(_run_chunks(_chunk_rank_counts, mu, cfg, workers))
    est = hits / cfg.trials
    se = _se(est, cfg.trials)
    lim = limit_product(q)
    fin = float(finite_product(q, n))
    is_uniform = mu == uniform(mu.spec)
    if reference == "auto":
        reference = "finite" if is_uniform else "limit"
    ref = fin if reference == "finite" else lim.value
    allowance = 0.0 if reference == "finite" else mc_allowance(n)
    passed = None if se is None else abs(est - ref) <= 3 * se + allowance
    results = {"nonsingular": hits, "estimate": est, "se": se, "degenerate": bool(mu.is_degenerate),
               "alpha": mu.alpha, "finite_product": fin, "deviation_from_limit": est - lim.value,
               "deviation_from_finite": est - fin, "reference": reference, "reference_value": ref,
               "allowance": allowance}
    if se is None:
        results["se_undefined"] = True
    return ExperimentReport("mc-sing", cfg.echo(), mu.mode, results, cfg.master_seed, cfg.trials,
                            {"limit_product": lim._asdict()}, _policy(n), passed, _envelope(t0, workers))


def mc_det_distribution(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Tally det A over F_q; nonzero values are compared with the determinant limit.

    For uniform mu the finite-n value finite_product(q, n) / (q - 1) is exact
    and is used as the reference instead.
    """
    t0 = time.perf_counter()
    workers = default_workers() if workers is None else workers
    mu = cfg.measure_obj()
    q, n, T = mu.spec.q, cfg.n, cfg.trials
    counts = np.sum(_run_chunks(_chunk_det_counts, mu, cfg, workers), axis=0).astype(np.int64).tolist()
    lim = det_limit(q)
    is_uniform = mu == uniform(mu.spec)
    exact_ref = float(finite_product(q, n)) / (q - 1)
    ref = exact_ref if is_uniform else lim.value
    allowance = 0.0 if is_uniform else mc_allowance(n)
    values = {}
    max_dev, max_z, ok = 0.0, 0.0, True
    for t in range(q):
        est = counts[t] / T
        se = _se(est, T)
        row = {"count": counts[t], "estimate": est, "se": se}
        if t:
            dev = est - ref
            row["deviation"] = dev
            max_dev = max(max_dev, abs(dev))
            if se:
                max_z = max(max_z, abs(dev) / se)
            if se is None:
                ok = None
            elif ok is not None:
                ok = ok and abs(dev) <= 3 * se + allowance
        values[str(t)] = row
    nonzero = counts[1:]
    tot = sum(nonzero)
    chi2 = None
    if tot and q > 2:
        expct = tot / (q - 1)
        chi2 = sum((c - expct) ** 2 / expct for c in nonzero)
    results = {"values": values, "total": sum(counts), "max_deviation": max_dev, "max_z": max_z,
               "chi2_nonzero_uniformity": chi2, "chi2_dof": q - 2, "reference_value": ref,
               "reference": "finite" if is_uniform else "limit", "allowance": allowance,
               "degenerate": bool(mu.is_degenerate)}
    if T < 2:
        results["se_undefined"] = True
    return ExperimentReport("det-dist", cfg.echo(), mu.mode, results, cfg.master_seed, T,
                            {"det_limit": lim._asdict(), "limit_product": limit_product(q)._asdict()},
                            _policy(n), ok, _envelope(t0, workers))


# -- exact enumeration ------------------------------------------------------

def _det_weights(mu: Measure, n: int, budget: int, chunk: int = 1 << 15) -> list:
    """Total weight of each determinant value over all q^(n^2) matrices."""
    spec = mu.spec
    q, N = spec.q, n * n
    total = q ** N
    if total > budget:
        raise BudgetExceededError("exact matrix enumeration", total, budget)
    exact = mu.exact
    if exact:
        big = mu.denominator ** N >= (1 << 62)
        num = np.array(mu.numerators, dtype=object if big else np.int64)
        acc = [0] * q
    else:
        num = np.asarray(mu.probs)
        acc = [0.0] * q
    # Row-major element-index order: entry j of matrix m is digit j of m in base q.
    place = q ** np.arange(N - 1, -1, -1, dtype=np.int64)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        ent = (idx[:, None] // place) % q
        w = num[ent].prod(axis=1)
        det = batch_det(spec, ent.reshape(-1, n, n))
        for t in range(q):
            acc[t] += w[det == t].sum()
    if exact:
        D = mu.denominator ** N
        return [Fraction(int(a), D) for a in acc]
    return [float(a) for a in acc]


def exact_det_distribution(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    mu = cfg.measure_obj()
    dist = _det_weights(mu, cfg.n, cfg.budget)
    total = sum(dist)
    results = {"distribution": {str(t): dist[t] for t in range(mu.spec.q)},
               "nonsingular": total - dist[0], "total": total,
               "finite_product": finite_product(mu.spec.q, cfg.n)}
    ok = total == 1 if mu.exact else abs(total - 1) <= 1e-12
    return ExperimentReport("exact-det", cfg.echo(), mu.mode, results, None, None,
                            {"det_limit": det_limit(mu.spec.q)._asdict()}, {}, ok, _envelope(t0))


def exact_singularity(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    mu = cfg.measure_obj()
    dist = _det_weights(mu, cfg.n, cfg.budget)
    q = mu.spec.q
    P = sum(dist) - dist[0]
    fin = finite_product(q, cfg.n)
    results = {"nonsingular": P, "singular": dist[0], "finite_product": fin,
               "matches_gl_density": P == fin, "gl_order": gl_order(q, cfg.n), "matrices": q ** (cfg.n ** 2)}
    return ExperimentReport("exact-sing", cfg.echo(), mu.mode, results, None, None,
                            {"limit_product": limit_product(q)._asdict()}, {}, None, _envelope(t0))


# -- column exposure -------------------------------------------------------

def column_exposure_profile(mu: Measure, n: int, trials: int, seed: int,
                            cap: int = RESAMPLE_CAP, ks=None) -> ExperimentReport:
    """Per-k estimates of P(X_k in W_k | codim W_k = k), W_k = span(X_{k+1}, ..., X_n).

    Conditioning is by rejection: a trial redraws its whole suffix (stream
    attempt a = 0, 1, 2, ...) until the n - k suffix columns are independent,
    giving up after ``cap`` attempts.  Columns are stored as matrix rows.
    """
    t0 = time.perf_counter()
    spec = mu.spec
    q = spec.q
    ks = list(range(1, n + 1)) if ks is None else list(ks)
    rows = []
    prod = 1.0
    for k in ks:
        s = n - k
        wpt = (s + 1) * n
        purpose = PURPOSE_EXPOSURE + k
        pending = np.arange(trials)
        hits = 0
        accepted = 0
        resamples = 0
        for attempt in range(cap):
            if not len(pending):
                break
            words = trial_words(seed, 0, trials, wpt, purpose, attempt) if attempt == 0 \
                else trial_words_at(seed, pending, wpt, purpose, attempt)
            vec = sample_indices(mu, words).reshape(len(pending), s + 1, n)
            if s:
                good = batch_rank(spec, vec[:, :s]) == s
            else:
                good = np.ones(len(pending), dtype=bool)
            ok_vec = vec[good]
            if len(ok_vec):
                if s:
                    inside = batch_rank(spec, ok_vec) == s
                else:
                    inside = ~np.any(ok_vec[:, 0] != 0, axis=1)
                hits += int(inside.sum())
                accepted += len(ok_vec)
            resamples += int((~good).sum())
            pending = pending[~good]
        est = hits / accepted if accepted else None
        se = _se(est, accepted) if accepted else None
        ref = Fraction(1, q ** k)
        closed = mu.weights[0] ** n if k == n else None
        row = {"k": k, "accepted": accepted, "inside": hits, "estimate": est, "se": se,
               "q_minus_k": ref, "resamples": resamples, "cap_exhausted": int(len(pending))}
        if closed is not None:
            row["closed_form_mu0_n"] = closed
        if est is not None:
            row["z"] = None if not se else (est - float(ref)) / se
            prod *= 1 - est
        rows.append(row)
    results = {"rows": rows, "product_of_complements": prod if len(ks) == n else None,
               "finite_product": float(finite_product(q, n)), "cap": cap}
    cfg = {"field": spec.to_json(), "measure": jsonable(mu), "n": n, "trials": trials, "ks": ks}
    return ExperimentReport("exposure", cfg, mu.mode, results, seed, trials, {}, {}, None, _envelope(t0))
