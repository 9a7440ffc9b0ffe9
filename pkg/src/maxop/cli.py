"""``maxop`` command line: thin wrappers over the library with file-based I/O.

Exit codes: 0 success, 1 a verdict failed, 2 bad usage or parameters,
3 unreadable/unwritable files or malformed grids.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import gallery
from .basis import Basis
from .experiments import EXPERIMENTS, run_experiment
from .grid import Domain, GridFormatError, format_float, format_grid, load_grid
from .operators import MeanKind, maximal, minimal_operator
from .twoweight import estimate_operator_norm, testing_constant_geometric, testing_constant_harmonic
from .weights import (ainfty_constant, ap_constant, bump_arithmetic_constant,
                      bump_harmonic_constant, condition_a_estimate, doubling_constant,
                      joint_harmonic_constant, twoweight_ainfty_constant)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class IOFailure(Exception):
    pass


# --------------------------------------------------------------- output
def dump_json(obj, indent: int = 0) -> str:
    """JSON with every float printed to 17 significant digits."""
    pad = " " * indent
    inner = " " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return json.dumps(format_float(v)) if not math.isfinite(v) else format_float(v)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dump_json(v, indent + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(dump_json(v, indent + 1) for v in obj) + "]"
    if hasattr(obj, "to_json"):
        return dump_json(obj.to_json(), indent)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {out}: {exc}") from None


def _load(path: str, what: str):
    try:
        return load_grid(path)
    except (OSError, GridFormatError) as exc:
        raise IOFailure(f"{what}: {path}: {exc}") from None


# ----------------------------------------------------------- validation
def _positive(name, v):
    if v is None or not v > 0 or not math.isfinite(v):
        raise UsageError(f"--{name} must be a positive number")
    return v


def _unit(name, v):
    if v is None or not 0 < v < 1:
        raise UsageError(f"--{name} must lie in (0, 1)")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("counts must be nonnegative")
    return v


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("entries must be positive integers")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        return args.threads
    env = os.environ.get("MAXOP_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"MAXOP_THREADS={env!r} is not an integer") from None
        if n < 1:
            raise UsageError("MAXOP_THREADS must be positive")
        return n
    return 1


def _basis(kind: str, domain: Domain) -> Basis:
    try:
        return Basis(kind, domain)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _mean_kind(op: str, r):
    try:
        return MeanKind.parse(op, r)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ------------------------------------------------------------- commands
def cmd_compute(args) -> int:
    if args.op == "min":
        f = _load(args.input, "input")
        if args.sigma:
            raise UsageError("--op min takes no --sigma")
        out = minimal_operator(_basis(args.basis, f.domain), f)
    else:
        kind = _mean_kind(args.op, args.r)
        f = _load(args.input, "input")
        sigma = _load(args.sigma, "sigma") if args.sigma else None
        if sigma is not None and sigma.domain != f.domain:
            raise IOFailure("input and sigma grids have different domains")
        out = maximal(kind, _basis(args.basis, f.domain), f, sigma)
    try:
        text = format_grid(out)
    except GridFormatError as exc:
        raise IOFailure(str(exc)) from None
    _emit(text, args.out)
    return EXIT_OK


_ONE_WEIGHT = {"ap", "ainfty", "doubling", "cond-a"}


def cmd_constants(args) -> int:
    which = args.which
    if which == "ap":
        if args.p is None or not args.p > 1:
            raise UsageError("--which ap requires --p > 1")
    elif which in {"joint", "bump-harmonic"}:
        _positive("p", args.p)
    elif which == "bump-arith":
        if args.p is None or not args.p > 1:
            raise UsageError("--which bump-arith requires --p > 1")
    if which == "bump-harmonic":
        _unit("r", args.r)
    if which == "bump-arith" and (args.r is None or not args.r >= 1):
        raise UsageError("--which bump-arith requires --r >= 1")
    if which == "cond-a":
        _unit("alpha", args.alpha)

    if which in _ONE_WEIGHT:
        path = args.input or args.u
        if not path:
            raise UsageError(f"--which {which} needs --in")
        w = _load(path, "weight")
        if which == "doubling":
            rep = doubling_constant(w, args.max_scale)
        else:
            b = _basis(args.basis, w.domain)
            if which == "ap":
                rep = ap_constant(w, b, args.p)
            elif which == "ainfty":
                rep = ainfty_constant(w, b)
            else:
                rep = condition_a_estimate(w, b, args.alpha, trials=max(args.trials, 1),
                                           rng=args.seed, exhaustive=args.exhaustive)
    else:
        if not args.u:
            raise UsageError(f"--which {which} needs --u")
        second = args.v if which == "tw-ainfty" and args.v else args.sigma
        if not second:
            raise UsageError(f"--which {which} needs --sigma (or --v for tw-ainfty)")
        u = _load(args.u, "u")
        s = _load(second, "sigma")
        if u.domain != s.domain:
            raise IOFailure("weights live on different domains")
        b = _basis(args.basis, u.domain)
        if which == "joint":
            rep = joint_harmonic_constant(u, s, b, args.p)
        elif which == "bump-harmonic":
            rep = bump_harmonic_constant(u, s, b, args.p, args.r)
        elif which == "bump-arith":
            rep = bump_arithmetic_constant(u, s, b, args.p, args.r)
        else:
            rep = twoweight_ainfty_constant(u, s, b)
    _emit(dump_json(rep.to_json()) + "\n", args.out)
    return EXIT_OK


def _pair(args):
    if not args.u or not (args.sigma or args.v):
        raise UsageError("needs --u and --sigma (or --v)")
    u = _load(args.u, "u")
    s = _load(args.sigma or args.v, "sigma")
    if u.domain != s.domain:
        raise IOFailure("weights live on different domains")
    return u, s


def cmd_testing(args) -> int:
    _positive("p", args.p)
    u, s = _pair(args)
    b = _basis(args.basis, u.domain)
    cap = args.max_single if args.max_single else None
    fn = testing_constant_harmonic if args.kind == "harmonic" else testing_constant_geometric
    rep = fn(u, s, b, args.p, union_budget=args.unions, rng=args.seed, max_single=cap)
    _emit(dump_json(rep.to_json()) + "\n", args.out)
    return EXIT_OK


def cmd_normest(args) -> int:
    _positive("p", args.p)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    kind = _mean_kind(args.op, args.r)
    u, s = _pair(args)
    b = _basis(args.basis, u.domain)
    tuck = None if args.tuck == "inverse-sigma" else np.ones(u.domain.shape)
    est = estimate_operator_norm(kind, u, s, b, args.p, trials=args.trials, rng=args.seed,
                                 tuck=tuck, indicators=not args.no_indicators,
                                 max_indicators=args.max_indicators or None,
                                 sweeps=args.sweeps)
    lam = est.weak_witness[1] if est.weak_witness else 0.0
    out = {"strong_ratio": est.strong_ratio, "weak_ratio": est.weak_ratio, "weak_lambda": lam,
           "trials": est.trials, "skipped": est.skipped, "p": est.p, "kind": est.kind,
           "basis": b.kind, "seed": args.seed}
    _emit(dump_json(out) + "\n", args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.name!r}; choose from {sorted(EXPERIMENTS)}")
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise IOFailure(f"config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config must be a JSON object")
    for key in ("seed", "ladder", "p", "r", "alpha", "trials", "sweeps", "fields"):
        val = getattr(args, key)
        if val is not None:
            config[key] = val
    if args.p is not None:
        _positive("p", args.p)
    if args.r is not None:
        _positive("r", args.r)
    if args.alpha is not None:
        _unit("alpha", args.alpha)
    config.setdefault("seed", 0)
    try:
        res = run_experiment(args.name, config, threads=_threads(args))
    except (OSError, GridFormatError) as exc:
        raise IOFailure(str(exc)) from None
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid experiment config: {exc}") from None
    if args.json:
        _emit(dump_json(res.to_json()) + "\n", args.json)
    if args.csv or not args.json:
        _emit(res.to_csv(), args.csv)
    for k, v in res.verdicts.items():
        print(f"{'PASS' if v else 'FAIL'} {k}", file=sys.stderr)
    print(f"{args.name}: {'PASS' if res.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_FAIL


_GEN_PARAMS = ("value", "a", "center", "low", "high", "split", "sigma_log", "smooth", "eps", "decay")


def cmd_gen(args) -> int:
    shape = tuple(args.n)
    try:
        dom = Domain(shape, args.h if args.h is not None else 1.0 / shape[0])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    params = {k: getattr(args, k) for k in _GEN_PARAMS if getattr(args, k) is not None}
    try:
        g = gallery.generate(args.family, dom, np.random.default_rng(args.seed), **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(format_grid(g), args.out)
    side = {"family": args.family, "shape": list(shape), "h": dom.h, "seed": args.seed,
            "params": params}
    _emit(dump_json(side) + "\n", args.out + ".json")
    return EXIT_OK


# --------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxop", description=(
        "Maximal operators (arithmetic, harmonic, geometric, power) over dyadic, cube and "
        "rectangle bases on grids; weight constants; two-weight testing and norm estimates."))
    sub = ap.add_subparsers(dest="command", required=True)

    def basis_flag(p):
        p.add_argument("--basis", default="dyadic", choices=["dyadic", "cubes", "rects"],
                       help="basis of boxes (default: dyadic)")

    def out_flag(p, help_text="output path (default: standard output)"):
        p.add_argument("--out", help=help_text)

    c = sub.add_parser("compute", help="apply a maximal or minimal operator to a grid file")
    c.add_argument("--op", required=True, choices=["m", "m-1", "m0", "m-r", "mr", "min"],
                   help="m arithmetic, m-1 harmonic, m0 geometric, m-r / mr power -r / +r, min minimal")
    c.add_argument("--r", type=float, help="power for m-r / mr (positive)")
    basis_flag(c)
    c.add_argument("--in", dest="input", required=True, help="input GRIDFN file")
    c.add_argument("--sigma", help="weight for sigma-averages (optional)")
    out_flag(c, "output GRIDFN path (default: standard output)")
    c.set_defaults(func=cmd_compute)

    k = sub.add_parser("constants", help="weight constants as JSON")
    k.add_argument("--which", required=True, choices=["ap", "ainfty", "doubling", "cond-a", "joint",
                                                      "bump-harmonic", "bump-arith", "tw-ainfty"],
                   help="which constant to compute")
    basis_flag(k)
    k.add_argument("--in", dest="input", help="weight file for one-weight constants")
    k.add_argument("--u", help="u weight file (two-weight constants)")
    k.add_argument("--sigma", help="sigma weight file (two-weight constants)")
    k.add_argument("--v", help="v weight file (tw-ainfty)")
    k.add_argument("--p", type=float, help="exponent p")
    k.add_argument("--r", type=float, help="bump exponent r")
    k.add_argument("--alpha", type=float, help="condition-A level in (0, 1)")
    k.add_argument("--trials", type=_count, default=200, help="condition-A samples (default 200)")
    k.add_argument("--exhaustive", action="store_true", help="condition A over all subsets (<= 16 cells)")
    k.add_argument("--max-scale", type=int, help="largest cube side for doubling")
    k.add_argument("--seed", type=_seed, default=0, help="64-bit seed (default 0)")
    out_flag(k)
    k.set_defaults(func=cmd_constants)

    t = sub.add_parser("testing", help="two-weight testing constant as JSON")
    t.add_argument("--kind", default="harmonic", choices=["harmonic", "geometric"],
                   help="harmonic: int_F M_-1(sigma^-1 1_F)^p u / sigma(F); geometric: "
                        "int_F M_0(v^-1 1_F)^p u / |F|")
    basis_flag(t)
    t.add_argument("--u", help="u weight file")
    t.add_argument("--sigma", help="sigma weight file (harmonic)")
    t.add_argument("--v", help="v weight file (geometric)")
    t.add_argument("--p", type=float, default=1.0, help="exponent p > 0 (default 1)")
    t.add_argument("--unions", type=_count, default=0, help="random finite unions to add (default 0)")
    t.add_argument("--max-single", type=_count, default=0,
                   help="cap on single sets evaluated (0 = all)")
    t.add_argument("--seed", type=_seed, default=0, help="64-bit seed (default 0)")
    out_flag(t)
    t.set_defaults(func=cmd_testing)

    n = sub.add_parser("normest", help="empirical strong/weak operator norm lower bounds")
    n.add_argument("--op", default="m-1", choices=["m", "m-1", "m0", "m-r", "mr"], help="operator")
    n.add_argument("--r", type=float, help="power for m-r / mr")
    basis_flag(n)
    n.add_argument("--u", help="target weight u")
    n.add_argument("--sigma", help="source weight sigma")
    n.add_argument("--v", help="alias of --sigma")
    n.add_argument("--p", type=float, default=1.0, help="exponent p > 0 (default 1)")
    n.add_argument("--tuck", default="inverse-sigma", choices=["inverse-sigma", "none"],
                   help="operator is M(f sigma^-1) (default) or M(f)")
    n.add_argument("--trials", type=_count, default=32, help="random candidates (default 32)")
    n.add_argument("--sweeps", type=_count, default=3, help="greedy ascent sweeps (default 3)")
    n.add_argument("--max-indicators", type=_count, default=1024,
                   help="cap on single-set indicators (0 = all)")
    n.add_argument("--no-indicators", action="store_true", help="omit single-set indicators")
    n.add_argument("--seed", type=_seed, default=0, help="64-bit seed (default 0)")
    out_flag(n)
    n.set_defaults(func=cmd_normest)

    e = sub.add_parser("experiment", help="run a named experiment; exit 1 if a verdict fails")
    e.add_argument("--name", required=True, help=f"one of: {', '.join(sorted(EXPERIMENTS))}")
    e.add_argument("--config", help="JSON config file; flags below override its keys")
    e.add_argument("--seed", type=_seed, help="64-bit seed (default 0)")
    e.add_argument("--ladder", type=_int_list, help="comma-separated resolutions, e.g. 64,128,256")
    e.add_argument("--p", type=float, help="exponent p")
    e.add_argument("--r", type=float, help="power / bump exponent r")
    e.add_argument("--alpha", type=float, help="condition-A level")
    e.add_argument("--trials", type=_count, help="random candidates per norm estimate")
    e.add_argument("--sweeps", type=_count, help="greedy sweeps per norm estimate")
    e.add_argument("--fields", type=_count, help="random fields (ordering, limit-geometric)")
    e.add_argument("--threads", type=int, help="worker threads (fallback: MAXOP_THREADS, else 1)")
    e.add_argument("--json", help="write the ExperimentResult JSON here")
    e.add_argument("--csv", help="write the flat CSV here (default: standard output)")
    e.set_defaults(func=cmd_experiment)

    g = sub.add_parser("gen", help="write a gallery weight as GRIDFN plus a sidecar JSON")
    g.add_argument("--family", required=True, choices=list(gallery.FAMILIES), help="weight family")
    g.add_argument("--n", type=_int_list, default=[64], help="shape, e.g. 64 or 16,16 (default 64)")
    g.add_argument("--h", type=float, help="cell side (default 1/N so the box is [0,1)^n)")
    g.add_argument("--value", type=float, help="constant: value")
    g.add_argument("--a", type=float, help="power: exponent a")
    g.add_argument("--center", type=_float_list, help="power: center x0 (default box midpoint)")
    g.add_argument("--low", type=float, help="step: value on the first part")
    g.add_argument("--high", type=float, help="step: value on the rest")
    g.add_argument("--split", type=float, help="step: split fraction along axis 0")
    g.add_argument("--sigma-log", type=float, help="lognormal: log standard deviation")
    g.add_argument("--smooth", type=_count, help="lognormal: smoothing passes")
    g.add_argument("--eps", type=float, help="non-ainfty: small value (default N^-decay)")
    g.add_argument("--decay", type=float, help="non-ainfty: decay rate of eps in N")
    g.add_argument("--seed", type=_seed, default=0, help="64-bit seed (default 0)")
    g.add_argument("--out", required=True, help="output GRIDFN path; sidecar at <out>.json")
    g.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"maxop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IOFailure as exc:
        print(f"maxop: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"maxop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
