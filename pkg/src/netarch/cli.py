"""``netarch`` command-line interface.

Exit status is 0 on success, 1 on a runtime or domain error (message on
stderr) and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analytics, ctbp, experiments, rootfind
from .attachment import AttachmentFunction
from .errors import NetarchError
from .generator import EvolvingGraph, export_graph, read_graph


def _clean(obj: Any) -> Any:
    """Make ``obj`` strict-JSON safe (non-finite floats become strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def _emit(obj: Any) -> None:
    print(json.dumps(_clean(obj), allow_nan=False))


def _f_arg(text: str) -> AttachmentFunction:
    try:
        return AttachmentFunction.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"invalid attachment function: {exc}") from None


def _lambda(args) -> float:
    if getattr(args, "lambda_star", None) is not None:
        return args.lambda_star
    return analytics.malthusian_rate(args.f).lambda_star


# -- subcommands -------------------------------------------------------------

def _cmd_generate(args) -> int:
    g = EvolvingGraph(args.m, args.f, args.seed, capacity=args.n + 1).grow_to(args.n)
    data = export_graph(g)
    if args.out == "-":
        sys.stdout.write(data.decode("ascii"))
    else:
        Path(args.out).write_bytes(data)
    if args.degrees_csv:
        Path(args.degrees_csv).write_text(g.degrees_csv())
    return 0


def _cmd_find_root(args) -> int:
    g = read_graph(args.graph)
    if args.method == "topk":
        cs = rootfind.degree_topk(g, args.k)
    elif args.method == "jordan":
        cs = rootfind.jordan_topk(g, args.k)
    else:
        f = g.f
        lam = args.lambda_star if args.lambda_star is not None else analytics.malthusian_rate(f).lambda_star
        cs = rootfind.neighborhood_confidence_set(g, f, args.c1, lam)
    _emit(cs.to_dict())
    return 0


def _cmd_analytic(args) -> int:
    q = args.quantity
    if q == "malthusian":
        _emit(analytics.malthusian_rate(args.f, tol=args.tol).to_dict())
    elif q == "muhat":
        _emit({"theta": args.theta, "muhat": analytics.muhat(args.f, args.theta, args.tol)})
    elif q == "alpha-star":
        lam = _lambda(args)
        _emit({"x": args.x, "lambda_star": lam,
               "alpha_star": analytics.tilde_alpha_star(args.f, lam, args.x)})
    elif q == "rn":
        lam = _lambda(args)
        _emit({"n": args.n, "c1": args.c1, "lambda_star": lam,
               "r_n": analytics.radius_rn(args.n, lam, args.c1, args.f)})
    elif q == "bn":
        _emit({"b_n": analytics.budget_bn(args.n, args.rn, args.alpha, args.lambda_star)})
    elif q == "budget":
        if args.regime == "linear":
            reg = analytics.LinearTheorem(args.m, args.beta)
        elif args.regime == "tree":
            reg = analytics.GeneralTree(args.lambda_star, args.f_star, args.delta)
        else:
            reg = analytics.GeneralM(args.c_f, args.f_star, args.f_m, args.m, args.delta)
        _emit(analytics.budget_bounds(args.epsilon, reg).to_dict())
    return 0


def _parse_set(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _cmd_experiment(args) -> int:
    cfg = experiments.ExperimentConfig.load(args.config)
    over = _parse_set(args.set)
    for key in ("replications", "master_seed", "workers", "output", "experiment"):
        v = getattr(args, key)
        if v is not None:
            over[key] = v
    if over:
        cfg = cfg.with_overrides(**over)
    res = experiments.run_experiment(cfg)
    _emit({"experiment": res.name, "summary": res.summary, "table": res.table})
    return 0


def _validate_embedding(R, seed):
    f = AttachmentFunction.linear(0.0)
    out = []
    for m, l in ((1, 20), (2, 10)):
        cfg = experiments.ExperimentConfig("embedding_equivalence", f, m=m, l=l,
                                           replications=R, master_seed=seed)
        res = experiments.embedding_equivalence(cfg)
        out.extend({"m": m, "l": l, **row} for row in res.table)
    return out, all(row["p_value"] > 0.01 for row in out)


def _validate_martingale(R, seed):
    M = ctbp.martingale_samples(AttachmentFunction.linear(0.0), 0, [1.0, 5.0], R, seed)
    rows = []
    for j, t in enumerate((1.0, 5.0)):
        mean, se = float(M[:, j].mean()), float(M[:, j].std(ddof=1) / math.sqrt(R))
        rows.append({"t": t, "mean": mean, "se": se, "z": mean / se})
    return rows, all(abs(r["z"]) <= 3 for r in rows)


def _validate_drift(R, seed):
    cfg = experiments.ExperimentConfig("tn_drift_experiment", AttachmentFunction.constant(1.0),
                                       n=10_000, replications=R, master_seed=seed, lambda_star=1.0)
    s = experiments.tn_drift_experiment(cfg).summary
    target = -(1.0 - np.euler_gamma)
    return [{"mean": s["mean"], "se": s["se"], "target": target}], \
        abs(s["mean"] - target) <= max(3 * s["se"], 0.03)


_SUITES = {"embedding": (_validate_embedding, 20_000),
           "martingale": (_validate_martingale, 100_000),
           "drift": (_validate_drift, 2_000)}


def _cmd_validate(args) -> int:
    fn, default_r = _SUITES[args.suite]
    rows, ok = fn(args.replications or default_r, args.seed)
    _emit({"suite": args.suite, "passed": ok, "results": rows})
    return 0 if ok else 1


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netarch", description="Degree-driven attachment graphs and root finding.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("generate", help="grow a graph and write it as an EdgeListV1 file")
    g.add_argument("--f", type=_f_arg, required=True, help='attachment function JSON, e.g. \'{"kind":"linear","beta":0}\'')
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output path or - for stdout")
    g.add_argument("--degrees-csv", help="also write vertex,degree CSV here")
    g.set_defaults(func=_cmd_generate)

    fr = sub.add_parser("find-root", help="confidence set for the root of a stored graph")
    fr.add_argument("--graph", required=True)
    fr.add_argument("--method", choices=("topk", "jordan", "neighborhood"), required=True)
    fr.add_argument("--k", type=int, default=1)
    fr.add_argument("--c1", type=float, default=2.0)
    fr.add_argument("--lambda-star", type=float)
    fr.set_defaults(func=_cmd_find_root)

    a = sub.add_parser("analytic", help="analytic quantities (JSON output)")
    asub = a.add_subparsers(dest="quantity", required=True, metavar="QUANTITY")
    q = asub.add_parser("malthusian")
    q.add_argument("--f", type=_f_arg, required=True)
    q.add_argument("--tol", type=float, default=1e-9)
    q = asub.add_parser("muhat")
    q.add_argument("--f", type=_f_arg, required=True)
    q.add_argument("--theta", type=float, required=True)
    q.add_argument("--tol", type=float, default=1e-12)
    q = asub.add_parser("alpha-star")
    q.add_argument("--f", type=_f_arg, required=True)
    q.add_argument("--x", type=float, required=True)
    q.add_argument("--lambda-star", type=float)
    q = asub.add_parser("rn")
    q.add_argument("--f", type=_f_arg, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--c1", type=float, default=2.0)
    q.add_argument("--lambda-star", type=float)
    q = asub.add_parser("bn")
    q.add_argument("--n", type=float, required=True)
    q.add_argument("--rn", type=float, required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--lambda-star", type=float, required=True)
    q = asub.add_parser("budget")
    q.add_argument("--epsilon", type=float, required=True)
    q.add_argument("--regime", choices=("linear", "tree", "general-m"), required=True)
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--beta", type=float, default=0.0)
    q.add_argument("--lambda-star", type=float)
    q.add_argument("--f-star", type=float)
    q.add_argument("--c-f", type=float)
    q.add_argument("--f-m", type=float)
    q.add_argument("--delta", type=float, default=0.1)
    a.set_defaults(func=_cmd_analytic)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment from a netarch-config v1 file")
    e.add_argument("--config", required=True)
    e.add_argument("--experiment")
    e.add_argument("--replications", type=int)
    e.add_argument("--master-seed", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--output", help="directory for the JSONL and summary CSV")
    e.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key (JSON value)")
    e.set_defaults(func=_cmd_experiment)

    v = sub.add_parser("validate", help="built-in statistical self-checks")
    v.add_argument("--suite", choices=tuple(_SUITES), required=True)
    v.add_argument("--replications", type=int)
    v.add_argument("--seed", type=int, default=20240601)
    v.set_defaults(func=_cmd_validate)
    return p


def _check_budget_args(parser, args) -> None:
    if args.command != "analytic" or args.quantity != "budget":
        return
    need = {"tree": ("lambda_star", "f_star"), "general-m": ("c_f", "f_star", "f_m")}.get(args.regime, ())
    missing = [k for k in need if getattr(args, k) is None]
    if missing:
        parser.error(f"--regime {args.regime} needs " + ", ".join("--" + k.replace("_", "-") for k in missing))


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_budget_args(parser, args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"netarch: usage error: {exc}", file=sys.stderr)
        return 2
    except (NetarchError, ValueError, ArithmeticError, OSError, MemoryError) as exc:
        print(f"netarch: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
