"""Command line interface.

Exit codes: 0 when every check passes, 1 when a tolerance check fails,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import asymptotics as asy
from .errors import ParameterError, TableMissError
from .experiments import (
    ExperimentConfig,
    TolerancePolicy,
    clt_sweep,
    result_report,
    run_experiment,
    sandwich_violations,
    write_csv,
    write_report,
)
from .functionals import AdmissibleSequence
from .geometry import Window, sample_poisson, stream_seed, unit_ball_volume
from .moments import MomentTable, build_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CLT_NOTE = ("multivariate normality is probed by univariate KS distances per "
            "coordinate together with covariance agreement")


def _regime(text):
    try:
        a, beta = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a,beta but got {text!r}")
    return a, beta


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p, t_list=False):
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--window", choices=("cube", "ball"), default="cube")
    p.add_argument("--t", type=_floats if t_list else float, required=True,
                   help="intensity" + (" (comma-separated list)" if t_list else ""))
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--delta", type=float)
    g.add_argument("--regime", type=_regime, metavar="a,beta",
                   help="scale schedule delta = a * t**(-beta)")
    p.add_argument("--spec", required=True, help="k:alpha[,k:alpha...]")
    p.add_argument("--complex", choices=("rips", "cech", "both"), default="rips")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--moments-cache", metavar="PATH")
    p.add_argument("--samples", type=int, default=1_000_000,
                   help="Monte Carlo samples per missing geometric constant")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--se-multiplier", type=float, default=3.0)
    p.add_argument("--bias-slack", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrpower", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run replications and compare with predictions")
    _common(p)
    p.add_argument("--standardize", choices=("empirical", "predicted"), default="empirical")

    p = sub.add_parser("moments", help="build or update the moment cache")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--complex", choices=("rips", "cech", "both"), default="rips")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--moments-cache", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json",), default="json")

    p = sub.add_parser("predict", help="report the leading-order predictions")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--delta", type=float)
    g.add_argument("--regime", type=_regime, metavar="a,beta")
    p.add_argument("--spec", required=True)
    p.add_argument("--complex", choices=("rips", "cech", "both"), default="rips")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--moments-cache", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json",), default="json")

    p = sub.add_parser("clt", help="KS distance to the normal law along a sweep in t")
    _common(p, t_list=True)
    p.add_argument("--ks-max", type=float, default=None,
                   help="fail when the KS distance at the largest t exceeds this")

    p = sub.add_parser("compare", help="Čech/Rips sandwich and prediction ordering checks")
    _common(p)
    p.add_argument("--k-max", type=int, default=3)
    return parser


def _emit(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _kinds(flag):
    return ("rips", "cech") if flag == "both" else (flag,)


def _table(args, seq, d):
    table = MomentTable.load(args.moments_cache)
    before = len(table)
    for kind in _kinds(args.complex):
        build_table(seq, d, kind == "cech", args.samples, args.seed, table)
    if args.moments_cache and len(table) != before:
        table.save(args.moments_cache)
    return table


def _config(args, t=None):
    return ExperimentConfig(
        dim=args.dim, t=args.t if t is None else t, seq=args.spec, reps=args.reps,
        seed=args.seed, window=args.window, delta=args.delta, regime=args.regime,
        complex_kind=args.complex, moments_cache=args.moments_cache,
        moment_samples=args.samples,
        policy=TolerancePolicy(args.se_multiplier, args.bias_slack),
        standardize=getattr(args, "standardize", "empirical"), workers=args.workers,
    )


def cmd_simulate(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg)
    if args.format == "csv":
        _emit(write_csv(result), args.out)
    else:
        _emit(write_report(result_report(result)), args.out)
    for f in result.failures:
        print(f"replication {f['rep_id']} (seed {f['seed']}) failed: {f['error']}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_moments(args) -> int:
    seq = AdmissibleSequence.parse(args.spec)
    seq.check(args.dim)
    table = _table(args, seq, args.dim)
    bad = []
    for (kind, idx, alphas, d), est in table.entries.items():
        if kind in ("mu", "nu") and d == args.dim and alphas[0] >= 0:
            bound = (d * unit_ball_volume(d) / (alphas[0] + d)) ** idx[0]
            if est.value > bound + 3 * est.std_error:
                bad.append(f"{kind}{idx}{alphas} exceeds {bound}")
    report = {"entries": json.loads(table.to_json()), "violations": bad}
    _emit(write_report(report), args.out)
    return EXIT_FAIL if bad else EXIT_OK


def _predict_report(args, seq, table, kind):
    d, t = args.dim, args.t
    cech = kind == "cech"
    if args.regime is not None:
        regime = asy.RegimeSpec.from_schedule(args.regime[0], args.regime[1], d)
        delta = regime.delta(t)
    else:
        delta = args.delta
        regime = _regime_at(t, delta, d)
    cov = asy.covariance_matrix(t, delta, seq, table, d, cech)
    lim = asy.limiting_sigma(regime, seq, table, d, cech)
    return {
        "delta": delta,
        "regime": {"mode": regime.mode, "c": regime.c},
        "expectations": [asy.expected_functional(t, delta, s.k, s.alpha, table, d, cech) for s in seq],
        "covariance": cov.matrix,
        "covariance_terms": {f"{i},{j}": [[tm.m, tm.value] for tm in terms]
                             for (i, j), terms in cov.breakdown.items()},
        "normalizers": [asy.normalizer_Q(t, delta, s.k, s.alpha, d) for s in seq],
        "limit_sigma": lim.matrix,
        "limit_family": lim.family,
        "rank": str(asy.rank_prediction(regime, seq)),
        "rate_shape": asy.clt_rate_bound(t, delta, seq.k_max, d),
    }


def _regime_at(t, delta, d):
    """Regime read off from a single (t, delta) pair, via c = t * delta**d."""
    return asy.RegimeSpec.thermodynamic(t * delta ** d)


def cmd_predict(args) -> int:
    seq = AdmissibleSequence.parse(args.spec)
    seq.check(args.dim)
    if not args.t > 0 or (args.delta is not None and not args.delta > 0):
        raise ParameterError("t and delta must be positive")
    table = _table(args, seq, args.dim)
    report = {
        "inputs": {"dim": args.dim, "t": args.t, "delta": args.delta,
                   "regime": list(args.regime) if args.regime else None, "spec": args.spec},
        "complexes": {kind: _predict_report(args, seq, table, kind) for kind in _kinds(args.complex)},
    }
    _emit(write_report(report), args.out)
    return EXIT_OK


def cmd_clt(args) -> int:
    if not args.t:
        raise ParameterError("--t needs at least one value")
    cfg = _config(args, t=args.t[0])
    rows = clt_sweep(cfg, args.t)
    ok = True
    for kind in _kinds(args.complex):
        mine = [r for r in rows if r["complex"] == kind]
        first, last = mine[0]["ks"], mine[-1]["ks"]
        for a, b in zip(first, last):
            if a is None or b is None:
                ok = False
            elif len(mine) > 1 and b > a:
                ok = False
            elif args.ks_max is not None and b > args.ks_max:
                ok = False
        ok &= all(r["failures"] == 0 for r in mine)
    report = {"config": cfg.to_dict(), "sweep": rows, "note": CLT_NOTE, "passed": ok}
    if args.format == "csv":
        lines = ["t,delta,complex,spec_index,ks,rate_shape"]
        for r in rows:
            for i, ks in enumerate(r["ks"]):
                lines.append(f"{r['t']!r},{r['delta']!r},{r['complex']},{i},{ks!r},{r['rate_shape']!r}")
        _emit("# " + CLT_NOTE + "\n" + "\n".join(lines) + "\n", args.out)
    else:
        _emit(write_report(report), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compare(args) -> int:
    cfg = _config(args)
    d, t, delta = cfg.dim, cfg.t, cfg.scale()
    window = Window(cfg.window, d)
    violations = 0
    for r in range(cfg.reps):
        cloud = sample_poisson(window, t, stream_seed(cfg.seed, r))
        violations += sandwich_violations(cloud, delta, args.k_max)
    seq = cfg.sequence
    args.complex = "both"
    table = _table(args, seq, d)
    s = asy.sandwich_factor(d)
    ordering = []
    for spec in seq:
        if spec.alpha != 0.0:
            continue
        try:
            rips = asy.expected_functional(t, delta, spec.k, 0.0, table, d)
            cech = asy.expected_functional(t, delta, spec.k, 0.0, table, d, cech=True)
            cech_big = asy.expected_functional(t, s * delta, spec.k, 0.0, table, d, cech=True)
        except TableMissError as exc:
            ordering.append({"spec": str(spec), "error": str(exc)})
            continue
        se = lambda c, dl: asy.expected_functional_se(t, dl, spec.k, 0.0, table, d, c)
        tol_lo = cfg.policy.se_multiplier * math.hypot(se(False, delta), se(True, delta))
        tol_hi = cfg.policy.se_multiplier * math.hypot(se(False, delta), se(True, s * delta))
        ordering.append({
            "spec": str(spec), "cech": cech, "rips": rips, "cech_scaled": cech_big,
            "passed": bool(cech <= rips + tol_lo and rips <= cech_big + tol_hi),
        })
    ok = violations == 0 and all(o.get("passed", False) for o in ordering)
    report = {"config": cfg.to_dict(), "sandwich_factor": s, "sandwich_violations": violations,
              "prediction_ordering": ordering, "passed": ok}
    _emit(write_report(report), args.out)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "moments": cmd_moments, "predict": cmd_predict,
            "clt": cmd_clt, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"vrpower {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
