import itertools
from fractions import Fraction as Fr

import mpmath
import numpy as np
import pytest

from ffrand.errors import BudgetExceededError, MeasureError
from ffrand.experiments import (ExperimentConfig, column_exposure_profile, det_limit, exact_det_distribution,
                                exact_singularity, finite_product, gl_density, gl_order, limit_product,
                                mc_det_distribution, mc_singularity, parse_measure)
from ffrand.field import make_field
from ffrand.measures import bernoulli, uniform


def hp_product(q, K=200):
    mpmath.mp.dps = 50
    return mpmath.nprod(lambda k: 1 - mpmath.mpf(q) ** (-k), [1, K])


def test_limit_values():
    lp2, lp3 = limit_product(2), limit_product(3)
    assert abs(lp2.value - float(hp_product(2))) < 1e-15
    assert abs(lp3.value - float(hp_product(3))) < 1e-15
    assert lp2.value == pytest.approx(0.288788095086602, abs=1e-12)
    assert lp3.value == pytest.approx(0.560126077927948, abs=1e-12)
    assert lp2.tail_bound < 1e-15 and 45 <= lp2.K <= 55
    assert limit_product(10 ** 6).value == pytest.approx(1 - 1e-6, abs=1e-11)


def test_det_limit_identity():
    assert det_limit(2).value == pytest.approx(limit_product(2).value, abs=1e-16)
    assert det_limit(3).value == pytest.approx(0.280063038963974, abs=1e-13)
    for q in (2, 3, 4, 5, 7, 9):
        assert abs((q - 1) * det_limit(q).value - limit_product(q).value) < 1e-15


def test_finite_product_examples():
    assert finite_product(2, 2) == Fr(6, 16) == gl_density(2, 2)
    assert finite_product(3, 2) == Fr(48, 81)
    assert finite_product(2, 1) == Fr(1, 2)
    for q in (2, 3, 4, 5):
        for n in range(1, 7):
            assert finite_product(q, n) == gl_density(q, n)


def test_gl2_f2_enumeration():
    count = sum(1 for m in itertools.product(range(2), repeat=4) if (m[0] * m[3] - m[1] * m[2]) % 2)
    assert count == gl_order(2, 2) == 6


def test_exact_singularity_matches_gl_density():
    for q in (2, 3):
        for n in (1, 2, 3):
            rep = exact_singularity(ExperimentConfig(p=q, n=n, mode="exact"))
            assert rep.results["nonsingular"] == finite_product(q, n)
    rep = exact_singularity(ExperimentConfig(p=2, n=2, mode="exact"))
    assert rep.results["nonsingular"] == Fr(3, 8)


def test_exact_det_distribution_examples():
    d = exact_det_distribution(ExperimentConfig(p=2, n=2, mode="exact")).results["distribution"]
    assert d["1"] == Fr(3, 8) and d["0"] == Fr(5, 8)
    d = exact_det_distribution(ExperimentConfig(p=3, n=2, mode="exact")).results["distribution"]
    assert d["1"] == d["2"] == Fr(24, 81)
    d = exact_det_distribution(ExperimentConfig(p=3, measure="point:1", n=2, mode="exact")).results["distribution"]
    assert d["0"] == 1
    for q in (4, 5):
        F = make_field(2, 2) if q == 4 else make_field(q)
        rep = exact_det_distribution(ExperimentConfig(p=F.p, f=F.f, n=2, mode="exact"))
        vals = {rep.results["distribution"][str(t)] for t in range(1, q)}
        assert len(vals) == 1 and rep.results["total"] == 1
    rep = exact_det_distribution(ExperimentConfig(p=2, n=3, mode="exact"))
    assert rep.results["distribution"]["1"] == Fr(168, 512)


def test_exact_nonuniform_against_bruteforce():
    rep = exact_det_distribution(ExperimentConfig(p=3, measure="weights:1/2,1/3,1/6", n=2, mode="exact"))
    w = [Fr(1, 2), Fr(1, 3), Fr(1, 6)]
    acc = [Fr(0)] * 3
    for a, b, c, d in itertools.product(range(3), repeat=4):
        acc[(a * d - b * c) % 3] += w[a] * w[b] * w[c] * w[d]
    assert [rep.results["distribution"][str(t)] for t in range(3)] == acc


def test_exact_budget():
    with pytest.raises(BudgetExceededError):
        exact_singularity(ExperimentConfig(p=3, n=4, mode="exact", budget=10 ** 6))


def test_parse_measure():
    F = make_field(2)
    assert parse_measure(F, "bernoulli:0.4") == bernoulli(F, Fr(2, 5))
    assert parse_measure(F, "uniform") == uniform(F)
    with pytest.raises(MeasureError):
        parse_measure(F, "wobbly")
    with pytest.raises(MeasureError):
        parse_measure(F, "weights:1/2,1/3")


def test_mc_singularity_small_and_deterministic():
    cfg = ExperimentConfig(p=2, n=6, trials=20_000, master_seed=3, chunk=3000)
    a = mc_singularity(cfg, workers=1)
    b = mc_singularity(cfg, workers=2)
    assert a.body_json() == b.body_json()
    r = a.results
    assert r["se"] == pytest.approx(np.sqrt(r["estimate"] * (1 - r["estimate"]) / 20_000))
    assert a.passed
    cfg2 = ExperimentConfig(p=2, n=6, trials=20_000, master_seed=3, chunk=7000)
    assert mc_singularity(cfg2).results == a.results  # chunking is invisible


def test_mc_singularity_degenerate_and_single_trial():
    rep = mc_singularity(ExperimentConfig(p=3, measure="point:2", n=3, trials=100, master_seed=1))
    assert rep.results["estimate"] == 0 and rep.results["degenerate"]
    rep = mc_singularity(ExperimentConfig(p=2, n=3, trials=1, master_seed=1))
    assert rep.results["se"] is None and rep.passed is None


def test_mc_det_distribution_small():
    cfg = ExperimentConfig(p=3, n=4, trials=30_000, master_seed=8)
    rep = mc_det_distribution(cfg)
    assert rep.results["total"] == 30_000
    assert sum(v["count"] for v in rep.results["values"].values()) == 30_000
    assert rep.passed
    assert mc_det_distribution(cfg, workers=2).body_json() == rep.body_json()
    one = mc_det_distribution(ExperimentConfig(p=3, n=4, trials=1, master_seed=8))
    assert one.results["se_undefined"] and one.passed is None


def test_exposure_profile():
    F = make_field(2)
    rep = column_exposure_profile(uniform(F), 6, 20_000, seed=2)
    rows = rep.results["rows"]
    assert [r["k"] for r in rows] == list(range(1, 7))
    for r in rows:
        assert abs(r["estimate"] - float(r["q_minus_k"])) <= 4 * r["se"]
        assert r["cap_exhausted"] == 0
    assert rows[-1]["closed_form_mu0_n"] == Fr(1, 64)
    mu = bernoulli(F, Fr(1, 5))
    rep = column_exposure_profile(mu, 4, 40_000, seed=5, ks=[4])
    r = rep.results["rows"][0]
    assert abs(r["estimate"] - float(Fr(4, 5) ** 4)) <= 4 * r["se"]
    full = column_exposure_profile(uniform(F), 6, 40_000, seed=6).results
    sing = mc_singularity(ExperimentConfig(p=2, n=6, trials=40_000, master_seed=6)).results
    assert abs(full["product_of_complements"] - sing["estimate"]) < 0.02
