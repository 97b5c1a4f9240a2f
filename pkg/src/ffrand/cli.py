"""Command-line entry point: ``ffrand <subcommand> [flags]``.

Every subcommand can read a flat JSON config (``--config``) whose keys are
flag names; flags given on the command line win.  Exit status is 0 on
success, 1 when a checked property fails, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction

from .additive import iterated_kneser_check, kneser_check, kneser_exhaustive
from .errors import BudgetExceededError, FfrandError
from .experiments import (ExperimentConfig, ExperimentReport, column_exposure_profile, default_workers,
                          det_limit, exact_det_distribution, exact_singularity, limit_product,
                          mc_det_distribution, mc_singularity, parse_measure)
from .field import enumerate_additive_subgroups, field_of_order, make_field
from .linalg import from_annihilator
from .lo import (classify_subspace, combinatorial_codimension, dot_distribution,
                 dot_distribution_bruteforce, lo_bound_report)
from .measures import (alpha_density_by_subgroups, default_u_grid, spec_set, spec_sumset_check,
                       swap_fourier_identity, swap_measure, verify_swap_properties)
from .report import TOOL_VERSION, dumps, jsonable
from .rng import fresh_seed
from .verify import scorecard, verify_all

DEFAULTS = {
    "p": 2, "f": 1, "q": None, "measure": "uniform", "n": 4, "trials": 10_000, "seed": None,
    "workers": None, "format": "json", "output": None, "w": "1,1,1,1", "r": 0, "annihilator": None,
    "delta": "1/100", "d": "1/100", "D": "10", "u_points": 32, "exhaustive": False, "A": None, "B": None,
    "sets": None, "eps": "0.1", "tol": 1e-15, "reference": "auto", "exact": False, "brute": False,
    "cap": 10_000, "ks": None, "suite": None, "alpha_floor": 0.05, "chunk": 8192,
}

STOCHASTIC = {"mc-sing", "det-dist", "exposure", "verify-all"}


class UsageError(Exception):
    pass


def _ints(text) -> list[int]:
    if isinstance(text, list):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(" ", "").split(",") if x != ""]


def _fracs(text) -> list[Fraction]:
    if isinstance(text, list):
        return [Fraction(str(x)) for x in text]
    return [Fraction(x) for x in str(text).replace(" ", "").split(",") if x != ""]


def _rows(text) -> list[list[int]]:
    if isinstance(text, list):
        return [_ints(r) for r in text]
    return [_ints(r) for r in str(text).split(";") if r.strip()]


def _spec(o):
    return field_of_order(int(o.q)) if o.q else make_field(int(o.p), int(o.f))


def _report(kind, o, results, mode="rational", passed=None, t0=None, seed=None, limits=None):
    cfg = {k: v for k, v in vars(o).items() if k not in ("cmd", "config", "output", "format", "workers")}
    env = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    if t0 is not None:
        env["wall_time_s"] = round(time.perf_counter() - t0, 6)
    return ExperimentReport(kind, jsonable(cfg), mode, results, seed, None, limits or {}, {}, passed, env)


def _opt(o, key):
    v = getattr(o, key, None)
    return DEFAULTS[key] if v is None else v


def _exp_config(o, mode="mc") -> ExperimentConfig:
    s = _spec(o)
    return ExperimentConfig(p=s.p, f=s.f, measure=o.measure, n=int(o.n), trials=int(_opt(o, "trials")),
                            master_seed=int(_opt(o, "seed") or 0), mode=mode,
                            delta=Fraction(str(_opt(o, "delta"))), d=Fraction(str(_opt(o, "d"))),
                            D=Fraction(str(_opt(o, "D"))), chunk=int(_opt(o, "chunk")))


# -- subcommands ------------------------------------------------------------

def cmd_field_info(o):
    t0 = time.perf_counter()
    s = _spec(o)
    results = {"field": s.to_json(), "q": s.q, "primitive": s.primitive,
               "trace_table": s.trace_table.tolist() if s.q <= 64 else None,
               "maximal_subgroups": (s.q - 1) // (s.p - 1)}
    if s.q <= 64:
        results["proper_subgroups"] = len(enumerate_additive_subgroups(s))
    return _report("field-info", o, results, t0=t0)


def cmd_measure_check(o):
    t0 = time.perf_counter()
    s = _spec(o)
    mu = parse_measure(s, o.measure)
    ident = swap_fourier_identity(mu)
    results = {"measure": mu, "alpha": mu.alpha, "abs2": list(mu.abs2),
               "fourier": [complex(z) for z in mu.fourier], "swap_measure": swap_measure(mu),
               "swap_fourier_identity": ident}
    ok = bool(ident)
    if s.q <= 64:
        a2 = alpha_density_by_subgroups(mu)
        results["alpha_by_subgroups"] = a2
        ok = ok and (a2 == mu.alpha if mu.exact else abs(float(a2) - float(mu.alpha)) <= 1e-12)
    return _report("measure-check", o, results, mu.mode, ok, t0)


def cmd_lo_dist(o):
    t0 = time.perf_counter()
    mu = parse_measure(_spec(o), o.measure)
    w = _ints(o.w)
    dist = dot_distribution(w, mu)
    results = {"w": w, "probs": list(dist.probs)}
    ok = None
    if o.brute:
        brute = dot_distribution_bruteforce(w, mu)
        ok = brute.probs == dist.probs if mu.exact else max(abs(a - b) for a, b in zip(brute.probs, dist.probs)) <= 1e-12
        results["bruteforce_agrees"] = ok
    return _report("lo-dist", o, results, mu.mode, ok, t0)


def cmd_lo_bound(o):
    t0 = time.perf_counter()
    mu = parse_measure(_spec(o), o.measure)
    return _report("lo-bound", o, lo_bound_report(_ints(o.w), mu, int(o.r)), mu.mode, None, t0)


def cmd_classify(o):
    t0 = time.perf_counter()
    s = _spec(o)
    mu = parse_measure(s, o.measure)
    n = int(o.n)
    ann = _rows(o.annihilator) if o.annihilator else [[1] * n]
    V = from_annihilator(s, n, ann)
    cls = classify_subspace(V, mu, Fraction(o.delta), Fraction(o.d), Fraction(o.D))
    results = {"subspace": V, "class": cls}
    try:
        results["combinatorial_codimension"] = combinatorial_codimension(V, mu)
    except FfrandError as exc:
        results["combinatorial_codimension"] = {"degenerate": str(exc)}
    return _report("classify", o, results, mu.mode, None, t0)


def cmd_swap_check(o):
    t0 = time.perf_counter()
    mu = parse_measure(_spec(o), o.measure)
    rep = verify_swap_properties(mu, _ints(o.w), default_u_grid(int(o.u_points)))
    return _report("swap-check", o, {"checks": rep.checks, "swap_measure": swap_measure(mu)},
                   mu.mode, rep.passed, t0)


def cmd_kneser(o):
    t0 = time.perf_counter()
    s = _spec(o)
    if o.exhaustive:
        chk = kneser_exhaustive(s, max_order=max(8, s.q))
    elif o.sets:
        chk = iterated_kneser_check(s, _rows(o.sets))
    else:
        if o.A is None or o.B is None:
            raise UsageError("kneser needs --exhaustive, --sets, or both --A and --B")
        chk = kneser_check(s, _ints(o.A), _ints(o.B))
    return _report("kneser", o, {"check": chk}, passed=chk.passed, t0=t0)


def cmd_spec_check(o):
    t0 = time.perf_counter()
    mu = parse_measure(_spec(o), o.measure)
    eps = _fracs(o.eps)
    chk = spec_sumset_check(mu, eps)
    sets = {str(e): spec_set(mu, e) for e in eps}
    return _report("spec-check", o, {"check": chk, "spec_sets": sets}, mu.mode, chk.passed, t0)


def cmd_limits(o):
    t0 = time.perf_counter()
    q = int(o.q or _spec(o).q)
    tol = float(o.tol)
    lp, dl = limit_product(q, tol), det_limit(q, tol)
    results = {"q": q, "limit_product": lp.value, "K": lp.K, "tail_bound": lp.tail_bound,
               "det_limit": dl.value, "identity_residual": abs((q - 1) * dl.value - lp.value)}
    return _report("limits", o, results, "float", None, t0)


def cmd_mc_sing(o):
    return mc_singularity(_exp_config(o), workers=o.workers, reference=o.reference)


def cmd_exact_sing(o):
    return exact_singularity(_exp_config(o, "exact"))


def cmd_det_dist(o):
    if o.exact:
        return exact_det_distribution(_exp_config(o, "exact"))
    return mc_det_distribution(_exp_config(o), workers=o.workers)


def cmd_exposure(o):
    mu = parse_measure(_spec(o), o.measure)
    ks = _ints(o.ks) if o.ks else None
    rep = column_exposure_profile(mu, int(o.n), int(o.trials), int(o.seed), int(o.cap), ks)
    rep.config["seed"] = int(o.seed)
    return rep


def cmd_verify_all(o):
    t0 = time.perf_counter()
    suites = None
    if o.suite:
        suites = [x for s in (o.suite if isinstance(o.suite, list) else [o.suite]) for x in str(s).split(",")]
    res = verify_all(int(o.seed), float(o.alpha_floor), suites)
    ok = all(r.passed for r in res)
    rep = _report("verify-all", o, {"suites": res}, "mixed", ok, t0, int(o.seed))
    rep.scorecard = scorecard(res)
    return rep


COMMANDS = {
    "field-info": (cmd_field_info, ["p", "f", "q"]),
    "measure-check": (cmd_measure_check, ["p", "f", "q", "measure"]),
    "lo-dist": (cmd_lo_dist, ["p", "f", "q", "measure", "w", "brute"]),
    "lo-bound": (cmd_lo_bound, ["p", "f", "q", "measure", "w", "r"]),
    "classify": (cmd_classify, ["p", "f", "q", "measure", "n", "annihilator", "delta", "d", "D"]),
    "swap-check": (cmd_swap_check, ["p", "f", "q", "measure", "w", "u_points"]),
    "kneser": (cmd_kneser, ["p", "f", "q", "exhaustive", "A", "B", "sets"]),
    "spec-check": (cmd_spec_check, ["p", "f", "q", "measure", "eps"]),
    "limits": (cmd_limits, ["p", "f", "q", "tol"]),
    "mc-sing": (cmd_mc_sing, ["p", "f", "q", "measure", "n", "trials", "seed", "workers", "reference", "chunk"]),
    "exact-sing": (cmd_exact_sing, ["p", "f", "q", "measure", "n"]),
    "det-dist": (cmd_det_dist, ["p", "f", "q", "measure", "n", "trials", "seed", "workers", "exact", "chunk"]),
    "exposure": (cmd_exposure, ["p", "f", "q", "measure", "n", "trials", "seed", "cap", "ks"]),
    "verify-all": (cmd_verify_all, ["seed", "suite", "alpha_floor"]),
}

FLAG_HELP = {
    "p": "field characteristic", "f": "extension degree", "q": "field order (overrides --p/--f)",
    "measure": "uniform | bernoulli:A | point:C | weights:w0,w1,... | JSON file",
    "n": "dimension", "trials": "Monte Carlo trials", "seed": "master seed (generated and printed if absent)",
    "workers": "worker processes (default $FFRAND_WORKERS or 1)", "w": "weight vector, comma separated",
    "r": "target value of w.X", "annihilator": "rows spanning V^perp, e.g. '1,1,0;0,0,1'",
    "delta": "sparsity constant", "d": "exponential threshold constant", "D": "saturation constant",
    "u_points": "points j/N of the u grid", "exhaustive": "all subset pairs", "A": "first set", "B": "second set",
    "sets": "sets for iterated Kneser, ';' separated", "eps": "epsilon list, comma separated",
    "tol": "tail tolerance", "reference": "auto | finite | limit", "exact": "exact enumeration instead of MC",
    "brute": "also compare with brute force", "cap": "resample cap per trial", "ks": "column indices k",
    "suite": "run only these suites (repeatable or comma separated)", "alpha_floor": "alpha floor for random measures",
    "chunk": "trials per work item",
}

BOOL_FLAGS = {"exhaustive", "exact", "brute"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ffrand", description="Random matrices over finite fields: checks and experiments.")
    parser.add_argument("--version", action="version", version=f"ffrand {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="cmd", metavar="subcommand")
    sub.required = True
    for name, (_, flags) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat JSON file of flag values")
        sp.add_argument("--format", choices=["json", "table", "csv"], default=None)
        sp.add_argument("--output", help="write the report here instead of stdout")
        for fl in flags:
            opt = "--" + fl.replace("_", "-")
            if fl in BOOL_FLAGS:
                sp.add_argument(opt, dest=fl, action="store_true", default=None, help=FLAG_HELP[fl])
            elif fl == "suite":
                sp.add_argument(opt, dest=fl, action="append", default=None, help=FLAG_HELP[fl])
            else:
                sp.add_argument(opt, dest=fl, default=None, help=FLAG_HELP[fl])
    return parser


def _merge(o, parser_flags):
    cfg = {}
    if o.config:
        try:
            with open(o.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {o.config}: {exc}") from exc
        if not isinstance(cfg, dict) or any(isinstance(v, dict) for v in cfg.values()):
            raise UsageError("config must be a flat JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(parser_flags) - {"format", "output"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in list(parser_flags) + ["format", "output"]:
        if getattr(o, key, None) is None:
            setattr(o, key, cfg.get(key, DEFAULTS.get(key)))
    return o


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, list) and obj and all(isinstance(v, dict) for v in obj):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, obj))
    return out


def render(rep: ExperimentReport, fmt: str) -> str:
    data = rep.to_json()
    if fmt == "json":
        return dumps(data, indent=2) + "\n"
    body = data["body"]
    if fmt == "table":
        rows = _flatten("", body, [])
        width = max(len(k) for k, _ in rows)
        text = "\n".join(f"{k:<{width}}  {json.dumps(v) if not isinstance(v, str) else v}" for k, v in rows)
        if getattr(rep, "scorecard", None):
            text = rep.scorecard + "\n\n" + text
        return text + "\n"
    buf = io.StringIO()
    res = body["results"]
    table = res.get("rows") or ([{"t": t, **v} for t, v in res["values"].items()] if "values" in res else None)
    if table:
        keys = sorted({k for row in table for k in row})
        wr = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        wr.writeheader()
        for row in table:
            wr.writerow({k: row.get(k) for k in keys})
    else:
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["key", "value"])
        for k, v in _flatten("", body, []):
            wr.writerow([k, json.dumps(v) if not isinstance(v, str) else v])
    return buf.getvalue()


def run(argv=None) -> int:
    parser = build_parser()
    try:
        o = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    func, flags = COMMANDS[o.cmd]
    try:
        _merge(o, flags)
        if getattr(o, "q", None) and o.cmd != "limits":
            s = field_of_order(int(o.q))
            o.p, o.f = s.p, s.f
        if o.cmd in STOCHASTIC and o.seed is None:
            o.seed = fresh_seed()
            print(f"seed: {o.seed}", file=sys.stderr)
        if "workers" in flags:
            o.workers = default_workers() if o.workers is None else int(o.workers)
        rep = func(o)
    except BudgetExceededError as exc:
        print(f"error: budget '{exc.budget_name}' exceeded: {exc}", file=sys.stderr)
        return 2
    except (UsageError, FfrandError, ValueError, KeyError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(rep, o.format)
    if o.output:
        with open(o.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(rep, "scorecard", None) and o.format == "json":
        print(rep.scorecard, file=sys.stderr)
    if rep.passed is False:
        witness = _first_witness(rep.body())
        print(f"property check FAILED; witness: {dumps(witness)}", file=sys.stderr)
        return 1
    return 0


def _first_witness(body):
    found = []

    def walk(x):
        if found:
            return
        if isinstance(x, dict):
            if x.get("passed") is False and "witness" in x and x["witness"] is not None:
                found.append(x["witness"])
                return
            for v in x.values():
                walk(v)
        elif isinstance(x, list):
            for v in x:
                walk(v)

    walk(body)
    if found:
        return found[0]
    res = body.get("results") or {}
    return {k: res[k] for k in ("estimate", "se", "reference_value", "max_z") if k in res} or None


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
