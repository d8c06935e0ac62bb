"""Command-line front end.

Exit codes: 0 ok, 1 solver failure, 2 input error, 3 degeneracy,
4 robust-infeasible.  Every command that writes results also writes a run
manifest (``<out>.manifest.json``, or a ``manifest`` key when printing to
stdout).  Floats are written with 17 significant digits.

Problem files are JSON with keys ``servers`` ([{id, budget}]), ``buffers``
([{id, alpha, input_rate, holding_cost}]), ``flows`` ([{id, server, buffer,
mu_bar, mu_tilde, routing: [{to, p}], processing_cost?}]) and ``horizon``.
Solution files hold ``T``, ``breakpoints``, ``tau``, ``intervals`` (each
with ``K``, ``J``, ``u``, ``x_dot``, ``p``, ``q_dot``), per-breakpoint ``x``
and ``q``, ``boundary``, ``objective``, ``dual_objective`` and ``trace``;
robust files add ``cuts`` and ``rc_certificates``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DegeneracyError, InvalidNetworkError, RobustInfeasibleError, SCLPError
from .lp import TOLERANCES

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SOLVER, EXIT_INPUT, EXIT_DEGENERATE, EXIT_ROBUST_INFEASIBLE = 0, 1, 2, 3, 4

DEFAULTS = {
    "solve": {"horizon": None},
    "solve-robust": {"horizon": None, "method": "auto", "objective_uncertainty": True},
    "reduce": {"objective_uncertainty": False},
    "verify": {},
    "oracle": {"steps": 10_000, "robust": False, "tol": 1e-10},
    "audit": {"samples": 10_000},
    "bench-reduction": {},
    "generate": {},
}


class InputError(Exception):
    pass


# -- output -----------------------------------------------------------------------

def dumps(obj, indent=1, _level=0) -> str:
    """JSON text with every float written as ``%.17g``."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj) + 0.0  # drop negative zero
        if math.isnan(v) or math.isinf(v):
            return json.dumps(str(v))
        return format(v, ".17g")
    if obj is None:
        return "null"
    return json.dumps(str(obj))


class Run:
    """Collects the manifest of one command."""

    def __init__(self, args, params):
        self.args = args
        self.params = params
        self.outputs = []

    def manifest(self):
        inputs = [str(getattr(self.args, k)) for k in ("problem", "solution", "config")
                  if getattr(self.args, k, None)]
        return {"command": self.args.command, "inputs": inputs,
                "overrides": {k: v for k, v in self.params.items() if v is not None},
                "seed": self.args.seed, "outputs": self.outputs, "version": __version__,
                "tolerances": TOLERANCES.as_dict()}

    def emit(self, doc, text=None):
        out = self.args.out
        if out is None:
            if text is not None:
                sys.stdout.write(text)
            else:
                sys.stdout.write(dumps({**doc, "manifest": self.manifest()}) + "\n")
            return
        path = Path(out)
        path.write_text(text if text is not None else dumps(doc) + "\n")
        self.outputs.append(str(path))
        Path(str(path) + ".manifest.json").write_text(dumps(self.manifest()) + "\n")
        summary = {k: doc[k] for k in ("objective", "ok", "max_violation") if k in (doc or {})}
        if summary:
            print(" ".join(f"{k}={dumps(v)}" for k, v in summary.items()))


# -- inputs -----------------------------------------------------------------------

def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _network(path):
    from .model import load_network

    try:
        return load_network(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def _solution(path):
    from .sclp import solution_from_dict

    try:
        return solution_from_dict(_read_json(path))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _params(args):
    """Flags override the config file, which overrides the defaults."""
    params = dict(DEFAULTS[args.command])
    if getattr(args, "config", None) and args.command not in ("bench-reduction", "generate"):
        conf = _read_json(args.config)
        if not isinstance(conf, dict):
            raise InputError(f"{args.config}: top level must be an object")
        unknown = set(conf) - set(params)
        if unknown:
            raise InputError(f"{args.config}: unknown option(s) {sorted(unknown)}")
        params.update(conf)
    for key in params:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return params


# -- commands ---------------------------------------------------------------------

def cmd_solve(args, run):
    from .model import build_matrices
    from .sclp import sclp_simplex, solution_to_dict

    data = build_matrices(_network(args.problem))
    sol = sclp_simplex(data, run.params["horizon"])
    run.emit(solution_to_dict(sol))


def cmd_solve_robust(args, run):
    from .model import build_matrices
    from .robust import robust_sclp_simplex, robust_solution_to_dict

    data = build_matrices(_network(args.problem))
    p = run.params
    sol = robust_sclp_simplex(data, p["horizon"], objective_uncertainty=p["objective_uncertainty"],
                              method=p["method"])
    run.emit(robust_solution_to_dict(data, sol))


def cmd_reduce(args, run):
    from .model import build_matrices
    from .rc import dimension_report
    from .robust import reduce

    data = build_matrices(_network(args.problem))
    ou = run.params["objective_uncertainty"]
    red = reduce(data, ou)
    doc = dimension_report(data, red, ou).as_dict()
    doc["residual"] = [sorted(int(j) for j in R) for R in red.residual]
    doc["absorbed"] = [[int(j) for j in np.flatnonzero(row)] for row in red.absorbed]
    if ou:
        doc["residual_objective"] = sorted(int(j) for j in red.residual_objective)
    run.emit(doc)


def cmd_verify(args, run):
    from .model import build_matrices
    from .sclp import verify_optimality

    data = build_matrices(_network(args.problem))
    sol = _solution(args.solution)
    _check_shapes(data, sol)
    rep = verify_optimality(data, sol)
    run.emit({"ok": rep.ok, "failed": rep.failed(), "checks": rep.as_dict()})


def cmd_oracle(args, run):
    from .model import build_matrices
    from .oracle import discrete_optimum
    from .rc import build_sclp_rc

    data = build_matrices(_network(args.problem))
    p = run.params
    if p["robust"]:
        data = build_sclp_rc(data).problem
    run.emit({"objective": discrete_optimum(data, int(p["steps"]), tol=float(p["tol"])), "steps": int(p["steps"]),
              "robust": bool(p["robust"])})


def cmd_audit(args, run):
    from .model import build_matrices
    from .oracle import audit_feasibility

    data = build_matrices(_network(args.problem))
    sol = _solution(args.solution)
    _check_shapes(data, sol)
    rep = audit_feasibility(data, sol, int(run.params["samples"]), args.seed)
    run.emit({**rep.as_dict(), "max_violation": rep.max_violation})


def cmd_bench_reduction(args, run):
    from .bench import ExperimentConfig, reduction_experiment, to_csv, trend_report

    conf = _read_json(args.config) if args.config else {}
    if not isinstance(conf, dict):
        raise InputError(f"{args.config}: top level must be an object")
    if args.seed is not None:
        conf["seed"] = args.seed
    if args.workers is not None:
        conf["workers"] = args.workers
    try:
        config = ExperimentConfig.from_dict(conf)
    except (TypeError, ValueError) as exc:
        raise InputError(f"experiment config: {exc}") from exc
    rows = reduction_experiment(config)
    run.params.update(conf)
    log.info("trend report: %s", trend_report(rows))
    run.emit(None, to_csv(rows))


def cmd_generate(args, run):
    from .bench import generate_random, random_network
    from .model import network_to_dict

    conf = _read_json(args.config) if args.config else {}
    if not isinstance(conf, dict):
        raise InputError(f"{args.config}: top level must be an object")
    conf = dict(conf)
    kind = conf.pop("kind", "random")
    seed = args.seed
    conf.pop("seed", None)
    run.params.update(kind=kind, **conf)
    try:
        if kind == "random":
            net = random_network(seed, **conf)
        elif kind == "no-routing":
            net = generate_random(seed=seed, **conf)
        else:
            raise InputError(f"unknown generator kind {kind!r} (random, no-routing)")
    except TypeError as exc:
        raise InputError(f"generator config: {exc}") from exc
    run.emit(network_to_dict(net))


def _check_shapes(data, sol):
    for ib in sol.intervals:
        if ib.u.size != data.J + data.I or ib.x_dot.size != data.K:
            raise InputError("solution does not match the problem dimensions")


COMMANDS = {
    "solve": cmd_solve,
    "solve-robust": cmd_solve_robust,
    "reduce": cmd_reduce,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "audit": cmd_audit,
    "bench-reduction": cmd_bench_reduction,
    "generate": cmd_generate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robust-sclp", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help, problem=True, solution=False):
        p = sub.add_parser(name, help=help)
        if problem:
            p.add_argument("problem", help="problem file (JSON)")
        if solution:
            p.add_argument("solution", help="solution file written by solve or solve-robust")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--config", help="JSON file of option values; flags take precedence")
        p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
        return p

    p = add("solve", "solve the nominal SCLP")
    p.add_argument("--horizon", type=float)
    p = add("solve-robust", "solve the robust SCLP")
    p.add_argument("--horizon", type=float)
    p.add_argument("--method", choices=("auto", "cutting-planes", "rc"))
    p.add_argument("--no-objective-uncertainty", dest="objective_uncertainty", action="store_const", const=False)
    p = add("reduce", "report the uncertainty-set reduction")
    p.add_argument("--objective-uncertainty", dest="objective_uncertainty", action="store_const", const=True)
    add("verify", "check the optimality conditions of a solution", solution=True)
    p = add("oracle", "optimum of the time-discretized LP")
    p.add_argument("--steps", type=int)
    p.add_argument("--robust", action="store_const", const=True, help="discretize the robust counterpart")
    p.add_argument("--tol", type=float, help="interior-point tolerance")
    p = add("audit", "simulate a solution under sampled rate realizations", solution=True)
    p.add_argument("--samples", type=int)
    p = add("bench-reduction", "reduction-size experiment; writes a CSV table", problem=False)
    p.add_argument("--workers", type=int)
    add("generate", "write a random problem file; config keys: kind (random | no-routing) and generator "
                    "arguments", problem=False)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        params = _params(args)
        if args.seed is None and args.command != "bench-reduction":
            args.seed = 0
        run = Run(args, params)
        COMMANDS[args.command](args, run)
    except (InputError, InvalidNetworkError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegeneracyError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except RobustInfeasibleError as exc:
        print(f"robust infeasible: {exc}", file=sys.stderr)
        return EXIT_ROBUST_INFEASIBLE
    except (SCLPError, NotImplementedError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
