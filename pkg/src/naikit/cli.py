"""``naikit`` command line.

Exit status: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .activations import ActivationError, catalog_json, get_activation, list_catalog
from .bfunction import BFunctionError, build_bfunction
from .composed import ComposedB, make_approximate_identity, write_grid_csv, write_levels
from .network import (
    NetworkError,
    build_mc_network,
    build_quadrature_network_1d,
    error_budget,
    eval_network,
    export_network,
)
from .quadrature import uniform_partition
from .targets import get_target
from . import verification as V

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parse_params(items):
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise UsageError(f"--params expects k=v, got {part!r}")
            k, v = part.split("=", 1)
            k = k.strip()
            v = v.strip()
            try:
                num = float(v)
                out[k] = int(num) if k == "q" and num.is_integer() else num
            except ValueError:
                out[k] = v
    return out


def _spec(args):
    try:
        return get_activation(args.activation, _parse_params(args.params))
    except (ActivationError, ValueError, TypeError) as e:
        raise UsageError(str(e)) from None


def _int_list(text):
    try:
        return [int(float(t)) for t in text.split(",") if t]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None


def _emit(text, out=None):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _base_config(args, **extra):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}
    cfg["version"] = __version__
    cfg.update(extra)
    return cfg


def _eval_grid(n, res):
    if res is None:
        res = {1: 512, 2: 64}.get(n, 16)
    ax = np.linspace(-1.0, 1.0, res)
    if n == 1:
        return ax[:, None]
    mesh = np.meshgrid(*([ax] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# -- commands -------------------------------------------------------------


def cmd_catalog(args):
    specs = list_catalog()
    if args.id:
        specs = [s for s in specs if s.id == args.id]
        if not specs:
            raise UsageError(f"unknown activation id {args.id!r}")
    if args.json:
        print(catalog_json(specs, indent=2))
        return EXIT_OK
    print(f"{'id':<22}{'k':>3}{'scale':>14}{'step':>6}  params")
    for s in specs:
        params = ", ".join(f"{k}={v}" for k, v in s.params.items())
        print(f"{s.id:<22}{s.fd_order_k:>3}{s.recipe_scale:>14.6g}{s.step_multiplier:>6g}  {params}")
    return EXIT_OK


def cmd_bfunc_grid(args):
    spec = _spec(args)
    n = args.dims
    if n not in (1, 2, 3):
        raise UsageError("bfunc-grid supports --dims 1, 2 or 3")
    res = args.grid_res or {1: 101, 2: 65, 3: 33}[n]
    try:
        cb = ComposedB.of(spec, n)
    except BFunctionError as e:
        raise UsageError(str(e)) from None
    out = Path(args.out or f"bfunc_{spec.id}_n{n}.csv")
    cfg = _base_config(args, activation=spec.to_dict(), grid_res=res, out=str(out))
    P, v = write_grid_csv(cb, out, res, config=cfg)
    summary = {"grid": str(out), "rows": int(len(v)), "max": float(np.max(v)),
               "argmax": P[int(np.argmax(v))].tolist(), "config": cfg}
    if n == 3:
        lv = out.with_suffix(".levels.json")
        summary["levels"] = write_levels(cb, lv, config=cfg)
        summary["levels_file"] = str(lv)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_approximate(args):
    spec = _spec(args)
    n = args.dims
    if n == 1 and args.samples is not None:
        raise UsageError("--samples applies to the Monte-Carlo builder (n >= 2); use --m in 1-D")
    if n >= 2 and args.m is not None:
        raise UsageError("--m applies to the 1-D quadrature builder; use --samples for n >= 2")
    if not args.theta or args.theta <= 0:
        raise UsageError("--theta must be positive")
    kw = {}
    if args.target == "sampled":
        if not args.target_file or args.lipschitz is None:
            raise UsageError("sampled target needs --target-file and --lipschitz")
        kw = {"path": args.target_file, "lipschitz": args.lipschitz}
    elif args.target == "constant" and args.value is not None:
        kw = {"c": args.value}
    try:
        f = get_target(args.target, n, **kw)
    except (ValueError, KeyError, OSError) as e:
        raise UsageError(str(e)) from None
    theta = args.theta
    delta = args.delta if args.delta is not None else math.sqrt(theta)
    G = _eval_grid(n, args.grid_res)
    t0 = time.perf_counter()
    try:
        if n == 1:
            m = args.m or 200
            B = build_bfunction(spec, 1.0)
            net = build_quadrature_network_1d(f, B, theta, m)
            pnorm = uniform_partition(m).norm
            budget = error_budget(f.modulus, delta, pnorm, B, theta, f.sup_norm, 1, tol=args.tol)
        else:
            N = args.samples or 4096
            cb = ComposedB.of(spec, n)
            ai = make_approximate_identity(cb, theta, seed=args.seed, workers=args.workers)
            net = build_mc_network(f, cb, theta, N, args.seed, ai=ai)
            budget = error_budget(f.modulus, delta, 2.0 / N ** (1.0 / n), ai, theta, f.sup_norm, n)
    except (BFunctionError, NetworkError) as e:
        raise UsageError(str(e)) from None
    approx = eval_network(net, G)
    err = float(np.max(np.abs(approx - f(G))))
    cfg = _base_config(args, activation=spec.to_dict(), delta=delta, target=f.describe(),
                       eval_points=int(len(G)))
    net.metadata["config"] = cfg
    out = Path(args.out or "network.json")
    out.write_text(export_network(net, indent=None))
    report = {
        "network": str(out),
        "neuron_count": net.neuron_count,
        "sup_grid_error": err,
        "error_budget": budget.to_dict(),
        "budget_ratio": err / budget.total if budget.total > 0 else (0.0 if err == 0 else float("inf")),
        "build_seconds": time.perf_counter() - t0,
        "config": cfg,
    }
    if n >= 2:
        report["note"] = "partition term uses the mean sample spacing 2 / N^(1/n) as a heuristic |P|"
    text = json.dumps(report, indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_verify(args):
    reports = []
    tol = args.tol if args.tol is not None else 1e-6
    if args.all:
        reports.append(V.verify_all(tol))
    if args.alternating_sum:
        reports.append(V.check_alternating_sum(args.kmax))
    if args.stated_bounds:
        reports.append(V.check_stated_bounds())
    if args.id:
        try:
            spec = get_activation(args.id, _parse_params(args.params))
        except (ActivationError, ValueError, TypeError) as e:
            raise UsageError(str(e)) from None
        if args.irwin_hall:
            if spec.id != "repu":
                raise UsageError("--irwin-hall applies to --id repu")
            reports.append(V.check_irwin_hall(args.qmax, 1e-8))
        if args.taylor:
            reports.append(V.check_taylor_remainder(spec, tol=1e-8))
        if args.general:
            try:
                reports.append(V.check_general_framework(spec))
            except V.ScreeningError as e:
                print(f"screening failed: {e}", file=sys.stderr)
                return EXIT_FAIL
        if args.ai:
            cb = ComposedB.of(spec, 1)
            reports.append(V.check_ai_conditions(cb, [2.0 ** -j for j in range(7)], args.delta or 0.5, tol))
        if not (args.irwin_hall or args.taylor or args.general or args.ai):
            reports.append(V.verify_nai(spec, V.DEFAULT_H_GRID, tol))
    elif args.irwin_hall or args.taylor or args.general or args.ai:
        raise UsageError("--irwin-hall/--taylor/--general/--ai need --id")
    if not reports:
        raise UsageError("nothing to verify; pass --all, --id, --alternating-sum or --stated-bounds")
    ok = all(r.passed for r in reports)
    if args.json or args.out:
        doc = {"passed": ok, "config": _base_config(args), "reports": [r.to_dict() for r in reports]}
        _emit(json.dumps(doc, indent=2), args.out)
    if not args.json:
        for r in reports:
            print(r.text() if (args.verbose or not r.passed) else r.text().splitlines()[0])
        print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_rate_study(args):
    spec = _spec(args)
    n = args.dims
    if n not in (1, 2):
        raise UsageError("rate-study supports --dims 1 or 2")
    N_list = _int_list(args.samples) if args.samples else [2 ** 6, 2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise UsageError("--samples must be increasing")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    if args.trials < 8:
        print(f"warning: {args.trials} trial(s); failure_fraction is meaningless at so few trials",
              file=sys.stderr)
    f = get_target(args.target, n)
    cb = ComposedB.of(spec, n)
    theta_fn = (lambda N: args.theta) if args.theta else None
    res = V.rate_study(f, cb, N_list, trials=args.trials, grid_size=args.grid_res, seed=args.seed,
                       c=args.c, c_prime=args.c_prime, theta_fn=theta_fn, method=args.method,
                       workers=args.workers)
    cfg = _base_config(args, activation=spec.to_dict(), N_list=N_list, study=res.config)
    out = Path(args.out or "rate_study.csv")
    with open(out, "w", newline="") as fh:
        fh.write("# " + json.dumps(cfg, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "trial", "error"])
        for N, t, e in res.rows():
            w.writerow([N, t, repr(float(e))])
    summary = {
        "csv": str(out),
        "slope": res.slope,
        "slope_ci": res.slope_ci,
        "in_window": res.slope is not None and -0.7 <= res.slope <= -0.3,
        "medians": dict(zip(map(str, N_list), res.medians)),
        "median_ratio": res.median_ratio(),
        "failure_fraction": dict(zip(map(str, N_list), res.failure_fraction)),
        "epsilon": dict(zip(map(str, N_list), res.epsilon)),
        "degenerate": res.degenerate,
        "warnings": res.warnings,
        "config": cfg,
    }
    print(json.dumps(summary, indent=2, default=float))
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def _common(p, dims=1):
    p.add_argument("--activation", default="repu", help="catalog id (default repu)")
    p.add_argument("--params", action="append", metavar="K=V", help="activation parameters, e.g. q=1")
    p.add_argument("--dims", type=int, default=dims)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-res", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)


def build_parser():
    ap = argparse.ArgumentParser(prog="naikit", description="Constructive approximate-identity networks.")
    ap.add_argument("--version", action="version", version=f"naikit {__version__}")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("catalog", help="list catalogued activations")
    p.add_argument("--json", action="store_true")
    p.add_argument("--id", default=None)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("bfunc-grid", help="write B-function lattice values as CSV")
    _common(p)
    p.set_defaults(func=cmd_bfunc_grid)

    p = sub.add_parser("approximate", help="build a network for a target and report its error")
    _common(p)
    p.add_argument("--target", default="hat", help="hat, radial_bump, sine_bump, constant, zero, sampled")
    p.add_argument("--target-file", default=None, help="CSV of (x, f(x)) for --target sampled")
    p.add_argument("--lipschitz", type=float, default=None)
    p.add_argument("--value", type=float, default=None, help="value for --target constant")
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=None, help="budget radius (default sqrt(theta))")
    p.add_argument("--m", type=int, default=None, help="partition cells (1-D)")
    p.add_argument("--samples", type=int, default=None, help="Monte-Carlo centers (n >= 2)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--report", default=None, help="also write the report JSON here")
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("verify", help="run verification checks")
    p.add_argument("--all", action="store_true")
    p.add_argument("--id", default=None)
    p.add_argument("--params", action="append", metavar="K=V")
    p.add_argument("--irwin-hall", action="store_true")
    p.add_argument("--qmax", type=int, default=5)
    p.add_argument("--taylor", action="store_true")
    p.add_argument("--general", action="store_true")
    p.add_argument("--ai", action="store_true")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--alternating-sum", action="store_true")
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--stated-bounds", action="store_true", help="stated GELU/SiLU/softplus bounds")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rate-study", help="Monte-Carlo convergence study")
    _common(p)
    p.add_argument("--target", default="hat")
    p.add_argument("--samples", default=None, help="comma-separated N values")
    p.add_argument("--trials", type=int, default=16)
    p.add_argument("--theta", type=float, default=None, help="fix theta instead of (c/sqrt(N))^2")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--c-prime", type=float, default=1.0)
    p.add_argument("--method", choices=("formula", "network"), default="formula")
    p.set_defaults(func=cmd_rate_study)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if not getattr(args, "func", None):
        ap.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"naikit: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
