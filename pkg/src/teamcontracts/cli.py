"""Command-line interface: ``contracts solve|exact|gen|experiment|equilibria``.

Exit codes
----------
0  success
2  instance file fails to parse or validate (also argparse usage errors)
3  parameter out of range / unknown family or suite
4  a printed guarantee failed re-verification
5  instance too large for exhaustive routines
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .algorithms import (
    AlgParams,
    alg3_no_large_agent,
    alg4_fptas_single,
    alg5_robust_single,
    alg6_meta,
)
from .core import Contract, get_config
from .equilibrium import enumerate_equilibria
from .exact import (
    brute_force_optimal_contract,
    first_best_gap_single,
    single_agent_critical_points,
    welfare_opt,
)
from .experiments import SUITES, run_experiment
from .instances import GeneratorSpec
from .io import InstanceFormatError, dumps_instance, load_instance

EXIT_OK, EXIT_SCHEMA, EXIT_PARAM, EXIT_VERIFY, EXIT_CAP = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _set(s) -> list:
    return sorted(int(j) for j in s)


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2, default=_num)
    sys.stdout.write("\n")


def _load(path: str):
    try:
        return load_instance(path)
    except FileNotFoundError:
        raise CliError(EXIT_SCHEMA, f"no such file: {path}") from None
    except InstanceFormatError as exc:
        raise CliError(EXIT_SCHEMA, str(exc)) from None


def _require_cap(inst) -> None:
    cap = get_config().enum_cap
    if inst.m > cap:
        raise CliError(EXIT_CAP, f"instance has {inst.m} actions; exhaustive routines stop at {cap}")


def cmd_solve(args) -> int:
    inst = _load(args.file)
    try:
        params = AlgParams(rho=args.rho, eps=args.eps, fptas_eps=args.fptas_eps)
        if args.algorithm in ("meta", "no-large"):
            params.eps_for(inst.n)
    except ValueError as exc:
        raise CliError(EXIT_PARAM, str(exc)) from None
    if args.algorithm == "fptas" and inst.n != 1:
        raise CliError(EXIT_PARAM, "the fptas algorithm needs a single-agent instance (n = 1)")

    start = time.perf_counter()
    if args.algorithm == "fptas":
        res = alg4_fptas_single(inst, params.fptas_eps)
        contract, lam, prov = Contract((res.alpha,)), None, "alg4"
        extra = {"profile": _set(res.s), "utility": res.utility}
        queries = (res.value_queries, res.demand_queries)
    else:
        run = {"meta": alg6_meta, "no-large": alg3_no_large_agent,
               "robust-single": alg5_robust_single}[args.algorithm]
        gc = run(inst, params)
        contract, lam, prov = gc.contract, gc.lam, gc.provenance
        extra = {}
        queries = (gc.details.get("value_queries", 0), gc.details.get("demand_queries", 0))
    elapsed = time.perf_counter() - start

    report = {
        "algorithm": prov,
        "parameters": {"rho": params.rho, "eps": args.eps, "fptas_eps": params.fptas_eps,
                       "tolerance": get_config().tol},
        "contract": list(contract.alpha),
        "lambda": lam,
        **extra,
        "value_queries": queries[0],
        "demand_queries": queries[1],
        "wall_time": elapsed,
    }
    if args.verify:
        _require_cap(inst)
        rep = enumerate_equilibria(inst, contract)
        exact = brute_force_optimal_contract(inst)
        tol = get_config().tol
        if lam is not None:
            verified = bool(len(rep) == 0 or rep.worst >= lam - tol)
        else:
            verified = bool(res.utility >= (1 - params.fptas_eps) * exact.utility - tol)
        report.update({
            "worst_equilibrium_utility": rep.worst, "best_equilibrium_utility": rep.best,
            "equilibria": len(rep), "optimum": exact.utility, "welfare": exact.welfare,
            "ratio": (lam if lam is not None else res.utility) / exact.utility
            if exact.utility > 0 else 1.0,
            "verified": verified,
        })
        _emit(report)
        return EXIT_OK if verified else EXIT_VERIFY
    _emit(report)
    return EXIT_OK


def cmd_exact(args) -> int:
    inst = _load(args.file)
    _require_cap(inst)
    try:
        res = brute_force_optimal_contract(inst)
    except ValueError as exc:
        raise CliError(EXIT_CAP, str(exc)) from None
    opt, wset = welfare_opt(inst)
    report = {
        "profile": _set(res.profile), "contract": list(res.contract.alpha),
        "utility": res.utility, "welfare": opt, "welfare_set": _set(wset), "gap": res.gap,
    }
    if inst.n == 1:
        cp = single_agent_critical_points(inst)
        gap = first_best_gap_single(inst)
        report["critical_points"] = [{"alpha": a, "set": _set(s)} for a, s in zip(cp.alphas, cp.sets)]
        report["gap_bound_m"] = gap.holds_m
        report["gap_bound_2m"] = gap.holds_2m
        if gap.holds_2m is False or gap.holds_m is False:
            _emit(report)
            return EXIT_VERIFY
    _emit(report)
    return EXIT_OK


GEN_PARAMS = {
    "example1": ("eps",),
    "hidden-team": ("k", "m", "seed"),
    "xos-bad": ("k",),
    "uniform": ("n",),
    "prop-b1": ("n",),
    "coverage": ("n", "actions_per_agent", "universe", "seed"),
    "monotone-table": ("n", "actions_per_agent", "seed"),
    "max-singleton": ("m", "delta"),
    "xos": ("n", "actions_per_agent", "seed"),
}


def cmd_gen(args) -> int:
    params = {k: getattr(args, k) for k in GEN_PARAMS[args.family] if getattr(args, k) is not None}
    try:
        inst = GeneratorSpec(args.family, params).build()
    except ValueError as exc:
        raise CliError(EXIT_PARAM, str(exc)) from None
    text = dumps_instance(inst)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.trials < 0 or args.workers < 1:
        raise CliError(EXIT_PARAM, "trials must be >= 0 and workers >= 1")
    text = run_experiment(args.suite, args.trials, args.seed, args.workers)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_equilibria(args) -> int:
    inst = _load(args.file)
    _require_cap(inst)
    alpha = args.alpha if args.alpha else [0.0] * inst.n
    try:
        contract = Contract(tuple(alpha))
        if len(contract) != inst.n:
            raise ValueError(f"need {inst.n} contract entries, got {len(contract)}")
    except ValueError as exc:
        raise CliError(EXIT_PARAM, str(exc)) from None
    rep = enumerate_equilibria(inst, contract)
    _emit({
        "contract": list(contract.alpha),
        "equilibria": [{"profile": _set(s), "utility": u} for s, u in zip(rep.profiles, rep.utilities)],
        "worst": rep.worst, "best": rep.best,
    })
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # unknown choices are parameter errors, not schema errors
        self.print_usage(sys.stderr)
        code = EXIT_PARAM if "invalid choice" in message else EXIT_SCHEMA
        self.exit(code, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="contracts", description="Linear contracts for teams of agents.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--tolerance", type=float, default=None,
                   help="comparison tolerance (default 1e-9 or $CONTRACTS_TOLERANCE)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run a contract algorithm on an instance file")
    s.add_argument("file")
    s.add_argument("--algorithm", choices=["meta", "no-large", "fptas", "robust-single"],
                   default="meta")
    s.add_argument("--rho", type=float, default=1.0 / 6.0)
    s.add_argument("--eps", type=float, default=None, help="perturbation, in (0, 1/(4n))")
    s.add_argument("--fptas-eps", type=float, default=0.5)
    s.add_argument("--verify", action="store_true",
                   help="enumerate equilibria and check the guarantee")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exact", help="exact optimum and first-best gap")
    e.add_argument("file")
    e.set_defaults(func=cmd_exact)

    g = sub.add_parser("gen", help="write a generated instance as JSON")
    g.add_argument("family", choices=sorted(GEN_PARAMS))
    g.add_argument("--k", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--eps", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--actions-per-agent", dest="actions_per_agent", type=int)
    g.add_argument("--universe", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    x = sub.add_parser("experiment", help="run a seeded experiment suite, write CSV")
    x.add_argument("--suite", choices=sorted(SUITES), required=True)
    x.add_argument("--trials", type=int, default=100)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--out")
    x.set_defaults(func=cmd_experiment)

    q = sub.add_parser("equilibria", help="list pure equilibria of a contract")
    q.add_argument("file")
    q.add_argument("--alpha", type=float, nargs="+")
    q.set_defaults(func=cmd_equilibria)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.tolerance is not None:
        if not args.tolerance > 0:
            print("contracts: error: tolerance must be positive", file=sys.stderr)
            return EXIT_PARAM
        os.environ["CONTRACTS_TOLERANCE"] = repr(args.tolerance)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"contracts: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
