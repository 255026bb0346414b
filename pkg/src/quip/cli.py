"""The `quip` command line: one binary, subcommand style.

All randomness funnels through a single --seed flag, outputs written
with -o get a RunManifest alongside (same path plus .manifest.json),
and exit codes are fixed: 2 for usage or input problems, 3 when a
computation hits a configured cap, 4 for infeasible instances.  The
QUIP_THREADS environment variable overrides --threads where a command
supports worker threads.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
import time
from typing import Sequence

from .anneal import AnnealSchedule, parallel_tempering, simulated_anneal, tts
from .errors import (FormatError, InfeasibleError, QuipError,
                     ResourceLimitError, UnboundedError)
from .fileio import (OracleSpec, format_qubo, format_samples, json_ready,
                     make_manifest, parse_problem, parse_rational,
                     pretty_json, read_dimacs, read_ising, read_matrix,
                     read_qubo, read_samples, write_manifest)
from .gama import GamaConfig, gama_solve
from .groebner import buchberger
from .lattices import lawrence_graver, pottier
from .models import brute_force
from .polys import grevlex, grlex, lex, parse_poly, poly_to_text
from .reformulate import PenaltyWeights, compile_qubo
from .toric import ct_solve, is_k_colorable

ORACLE_POINT_CAP = 1 << 22

_ORDERS = {"lex": lex, "grlex": grlex, "grevlex": grevlex}


# ---------------------------------------------------------------------------
# shared plumbing


def _resolve_threads(flag_value: int | None) -> int:
    env = os.environ.get("QUIP_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise FormatError(
                f"QUIP_THREADS must be an integer, got {env!r}") from None
    elif flag_value is not None:
        n = flag_value
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise FormatError("thread count must be positive")
    return n


def _report_text(doc: dict) -> str:
    return pretty_json(json_ready(doc)) + "\n"


def _deliver(args, argv: list, text: str, *, config: dict,
             seed: int | None = None, inputs=(), timings=None) -> int:
    """Write the artifact to -o plus a manifest, or to stdout."""
    output = getattr(args, "output", None)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
        manifest = make_manifest(["quip", *argv], config=config, seed=seed,
                                 inputs=inputs, timings=timings or {})
        write_manifest(f"{output}.manifest.json", manifest)
    else:
        sys.stdout.write(text)
    return 0


def _read_model(path: str):
    if path.endswith(".ising"):
        return read_ising(path)
    if path.endswith(".qubo"):
        return read_qubo(path)
    raise FormatError(f"{path}: expected a .qubo or .ising model file")


def _comma_rationals(text: str, flag: str):
    try:
        return tuple(parse_rational(tok) for tok in text.split(","))
    except FormatError as exc:
        raise FormatError(f"{flag}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands


def _cmd_groebner(args, argv: list) -> int:
    with open(args.file, "r", encoding="utf-8") as fh:
        raw = fh.read()
    names = args.vars.split(",") if args.vars else None
    numbered = [(k, line.strip())
                for k, line in enumerate(raw.splitlines(), start=1)
                if line.strip() and not line.strip().startswith("#")]
    if not numbered:
        raise FormatError(f"{args.file}: no polynomials")

    def parse_line(k: int, text: str, arity=None):
        try:
            return parse_poly(text, arity=arity, names=names)
        except (FormatError, ValueError) as exc:
            raise FormatError(f"{args.file}: line {k}: {exc}") from None

    if names:
        polys = [parse_line(k, text) for k, text in numbered]
        arity = len(names)
    else:
        arity = max(parse_line(k, text).arity for k, text in numbered)
        polys = [parse_line(k, text, arity=arity) for k, text in numbered]
    order = _ORDERS[args.order](arity)

    t0 = time.perf_counter()
    basis = buchberger(polys, order)
    dt = time.perf_counter() - t0

    text = "".join(poly_to_text(p, names=names, order=order) + "\n"
                   for p in basis)
    return _deliver(args, argv, text,
                    config={"order": args.order, "vars": args.vars},
                    inputs=[args.file], timings={"buchberger": dt})


def _cmd_ct_solve(args, argv: list) -> int:
    pf = parse_problem(args.problem)
    try:
        ip = pf.toric()
    except ValueError as exc:
        raise FormatError(f"{args.problem}: {exc}") from None
    t0 = time.perf_counter()
    result = ct_solve(ip)
    dt = time.perf_counter() - t0
    doc = {"x": list(result.x), "value": result.value,
           "basis_size": result.basis_size}
    return _deliver(args, argv, _report_text(doc), config={},
                    inputs=[args.problem], timings={"ct_solve": dt})


def _cmd_color(args, argv: list) -> int:
    n, edges = read_dimacs(args.graph)
    if args.k < 1:
        raise FormatError("--k must be at least 1")
    t0 = time.perf_counter()
    ok = is_k_colorable(n, edges, args.k)
    dt = time.perf_counter() - t0
    text = f"colorable: {'true' if ok else 'false'}\n"
    return _deliver(args, argv, text, config={"k": args.k},
                    inputs=[args.graph], timings={"groebner": dt})


def _cmd_graver(args, argv: list) -> int:
    A = read_matrix(args.matrix)
    t0 = time.perf_counter()
    if args.method == "pottier":
        if args.max_elements is None:
            basis = pottier(A)
        else:
            basis = pottier(A, max_elements=args.max_elements)
    else:
        basis = lawrence_graver(A)
    dt = time.perf_counter() - t0
    doc = {"method": args.method,
           "basis": [list(v) for v in basis],
           "count": len(basis),
           "complete": not basis.partial}
    return _deliver(args, argv, _report_text(doc),
                    config={"method": args.method,
                            "max_elements": args.max_elements},
                    inputs=[args.matrix], timings={"graver": dt})


def _cmd_compile(args, argv: list) -> int:
    pf = parse_problem(args.problem)
    try:
        ip = pf.system()
    except ValueError as exc:
        raise FormatError(f"{args.problem}: {exc}") from None
    if args.scheme == "bounded" and args.mu is None:
        raise FormatError("--scheme bounded needs --mu")
    weights = None
    if args.rho != "auto":
        rho = parse_rational(args.rho)
        if rho <= 0:
            raise FormatError("--rho must be positive")
        weights = PenaltyWeights(rho, rho)

    t0 = time.perf_counter()
    model, encoding, report = compile_qubo(ip, args.scheme, args.mu, weights)
    dt = time.perf_counter() - t0

    doc = {
        "n_bits": report.n_bits,
        "n_original": report.n_original,
        "variable_bits": [list(bits) for bits in report.variable_bits],
        "slack_rows": list(report.slack_rows),
        "ancillas": [list(t) for t in report.ancillas],
        "weights": {"rho": report.weights.rho, "lam": report.weights.lam},
        "ancilla_scale": report.ancilla_scale,
        "offset": report.offset,
        "encoding": {"weights": [list(k) for k in encoding.weights],
                     "shifts": list(encoding.shifts)},
        "output": args.output,
    }
    config = {"scheme": args.scheme, "mu": args.mu, "rho": args.rho}
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(format_qubo(model))
    manifest = make_manifest(["quip", *argv], config=config, seed=None,
                             inputs=[args.problem],
                             timings={"compile": dt})
    write_manifest(f"{args.output}.manifest.json", manifest)
    sys.stdout.write(_report_text(doc))
    return 0


def _cmd_anneal(args, argv: list) -> int:
    model = _read_model(args.model)
    threads = _resolve_threads(args.threads)
    if (args.beta_min is None) != (args.beta_max is None):
        raise FormatError("give --beta-min and --beta-max together")
    if args.beta_min is not None:
        schedule = AnnealSchedule(args.beta_min, args.beta_max,
                                  sweeps=args.sweeps, shape=args.shape,
                                  replicas=args.replicas,
                                  exchange_interval=args.exchange_interval)
    else:
        schedule = AnnealSchedule.default(model, sweeps=args.sweeps,
                                          shape=args.shape,
                                          replicas=args.replicas,
                                          exchange_interval=args.exchange_interval)
    sampler = parallel_tempering if args.pt else simulated_anneal
    t0 = time.perf_counter()
    ss = sampler(model, schedule, shots=args.shots, seed=args.seed,
                 threads=threads)
    dt = time.perf_counter() - t0
    config = {"shots": args.shots, "sweeps": args.sweeps, "pt": args.pt,
              "shape": args.shape, "replicas": args.replicas,
              "exchange_interval": args.exchange_interval,
              "beta_min": schedule.beta_min, "beta_max": schedule.beta_max,
              "threads": threads}
    return _deliver(args, argv, format_samples(ss, schedule), config=config,
                    seed=args.seed, inputs=[args.model],
                    timings={"sampling": dt})


def _cmd_tts(args, argv: list) -> int:
    ss, _schedule = read_samples(args.results)
    value = tts(ss, args.tau, args.target, args.confidence)
    doc = {"target": args.target, "confidence": args.confidence,
           "tau": args.tau, "shots": ss.total_shots,
           "success_fraction": ss.success_fraction(args.target),
           "tts": "inf" if math.isinf(value) else value}
    config = {"target": args.target, "confidence": args.confidence,
              "tau": args.tau}
    return _deliver(args, argv, _report_text(doc), config=config,
                    inputs=[args.results], timings={})


def _check_objective_arity(poly, n: int | None, where: str) -> None:
    if n is not None and poly.arity != n:
        raise FormatError(f"{where}: objective uses {poly.arity} variables "
                          f"but the problem has {n}")


def _build_objective(args, pf, n: int | None):
    """Pick exactly one objective source: flags first, then the problem."""
    flags = [name for name, value in
             (("--objective-file", args.objective_file),
              ("--objective", args.objective),
              ("--oracle", args.oracle))
             if value is not None]
    if len(flags) > 1:
        raise FormatError(f"give only one of {', '.join(flags)}")
    if args.oracle is None:
        for flag in ("--mu", "--sigma", "--epsilon"):
            if getattr(args, flag[2:]) is not None:
                raise FormatError(f"{flag} is only valid with --oracle")

    if args.objective_file is not None:
        with open(args.objective_file, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh.read().splitlines()
                     if ln.strip() and not ln.strip().startswith("#")]
        if len(lines) != 1:
            raise FormatError(f"{args.objective_file}: expected exactly one "
                              f"polynomial, found {len(lines)}")
        try:
            poly = parse_poly(lines[0], arity=n)
        except (FormatError, ValueError) as exc:
            raise FormatError(f"{args.objective_file}: {exc}") from None
        _check_objective_arity(poly, n, args.objective_file)
        return poly.evaluate, args.objective_file
    if args.objective is not None:
        try:
            poly = parse_poly(args.objective, arity=n)
        except (FormatError, ValueError) as exc:
            raise FormatError(f"--objective: {exc}") from None
        _check_objective_arity(poly, n, "--objective")
        return poly.evaluate, None
    if args.oracle is not None:
        for flag in ("mu", "sigma", "epsilon"):
            if getattr(args, flag) is None:
                raise FormatError(f"--oracle needs --{flag}")
        try:
            spec = OracleSpec(args.oracle,
                              _comma_rationals(args.mu, "--mu"),
                              _comma_rationals(args.sigma, "--sigma"),
                              parse_rational(args.epsilon))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
        if n is not None and len(spec.mu) != n:
            raise FormatError(f"--mu has {len(spec.mu)} entries for "
                              f"{n} variables")
        return spec.build(), None
    oracle = pf.objective_oracle()
    if oracle is None:
        raise FormatError("the problem has no objective; give one with "
                          "--objective, --objective-file, or --oracle")
    return oracle, None


def _cmd_gama(args, argv: list) -> int:
    pf = parse_problem(args.problem)
    try:
        ip = pf.system()
    except ValueError as exc:
        raise FormatError(f"{args.problem}: {exc}") from None
    oracle, extra_input = _build_objective(args, pf, ip.n)

    if "," in args.width:
        width = tuple(int(tok) for tok in args.width.split(","))
    else:
        width = int(args.width)
    try:
        config = GamaConfig(scheme=args.scheme, width=width,
                            kernel_shots=args.kernel_shots,
                            seed_shots=args.seed_shots,
                            fraction=args.fraction,
                            strategy=args.strategy, seed=args.seed,
                            max_seeds=args.max_seeds)
    except ValueError as exc:
        raise FormatError(str(exc)) from None

    report = gama_solve(ip, oracle, config)
    doc = {
        "best_solution": list(report.best_solution),
        "best_objective": report.best_objective,
        "basis_size": report.basis_size,
        "basis_complete": report.basis_complete,
        "directions_used": report.directions_used,
        "fraction_subseed": report.fraction_subseed,
        "seeds_attempted": report.seeds_attempted,
        "seeds_found": report.seeds_found,
        "trajectories": [list(t) for t in report.trajectories],
    }
    resolved = {"scheme": args.scheme, "width": width,
                "kernel_shots": args.kernel_shots,
                "seed_shots": args.seed_shots, "fraction": args.fraction,
                "strategy": args.strategy, "max_seeds": args.max_seeds}
    inputs = [args.problem]
    if extra_input:
        inputs.append(extra_input)
    return _deliver(args, argv, _report_text(doc), config=resolved,
                    seed=args.seed, inputs=inputs,
                    timings=dict(report.stage_seconds))


def _cmd_oracle(args, argv: list) -> int:
    t0 = time.perf_counter()
    if args.target.endswith(".json"):
        pf = parse_problem(args.target)
        try:
            ip = pf.system()
        except ValueError as exc:
            raise FormatError(f"{args.target}: {exc}") from None
        oracle = pf.objective_oracle()
        spans = []
        total = 1
        for lo, hi in zip(ip.lower, ip.upper):
            if lo is None or hi is None:
                raise UnboundedError("oracle enumeration needs finite bounds")
            spans.append(range(lo, hi + 1))
            total *= hi - lo + 1
            if total > ORACLE_POINT_CAP:
                raise ResourceLimitError(
                    f"box holds more than {ORACLE_POINT_CAP} points",
                    limit="points", value=ORACLE_POINT_CAP)
        best = None
        argmins: list = []
        feasible = 0
        for x in itertools.product(*spans):
            if not ip.is_feasible(x):
                continue
            feasible += 1
            value = oracle(x) if oracle is not None else ip.objective_value(x)
            if best is None or value < best:
                best, argmins = value, [x]
            elif value == best:
                argmins.append(x)
        if best is None:
            raise InfeasibleError("no feasible point in the box",
                                  {"points_scanned": total})
        doc = {"kind": "problem", "value": best,
               "argmins": [list(x) for x in argmins],
               "feasible_count": feasible}
    else:
        model = _read_model(args.target)
        result = brute_force(model)
        doc = {"kind": "qubo" if args.target.endswith(".qubo") else "ising",
               "value": result.energy,
               "argmins": [list(c) for c in result.configurations]}
    dt = time.perf_counter() - t0
    return _deliver(args, argv, _report_text(doc), config={},
                    inputs=[args.target], timings={"enumeration": dt})


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quip",
        description="Test-set integer programming toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(run=func)
        p.add_argument("-o", "--output", help="write the artifact here and "
                       "a .manifest.json alongside")
        return p

    p = add("groebner", _cmd_groebner,
            "reduced Groebner basis of the polynomials in a .poly file")
    p.add_argument("file")
    p.add_argument("--order", choices=sorted(_ORDERS), default="grevlex")
    p.add_argument("--vars", help="comma-separated variable names")

    p = add("ct-solve", _cmd_ct_solve,
            "solve an equality-constrained nonnegative program exactly")
    p.add_argument("problem")

    p = add("color", _cmd_color, "decide k-colorability of a DIMACS graph")
    p.add_argument("graph")
    p.add_argument("--k", type=int, required=True)

    p = add("graver", _cmd_graver, "Graver basis of an integer matrix")
    p.add_argument("-A", "--matrix", required=True)
    p.add_argument("--method", choices=["pottier", "lawrence"],
                   default="pottier")
    p.add_argument("--max-elements", type=int)

    p = add("compile", _cmd_compile,
            "reformulate a bounded integer program as a QUBO")
    p.add_argument("problem")
    p.add_argument("--scheme", choices=["binary", "unary", "bounded"],
                   default="binary")
    p.add_argument("--mu", type=int)
    p.add_argument("--rho", default="auto",
                   help="penalty weight, a rational or 'auto'")

    p = add("anneal", _cmd_anneal, "sample a .qubo or .ising model")
    p.add_argument("model")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pt", action="store_true",
                   help="replica exchange instead of plain annealing")
    p.add_argument("--replicas", type=int, default=8)
    p.add_argument("--exchange-interval", type=int, default=10)
    p.add_argument("--shape", choices=["geometric", "linear"],
                   default="geometric")
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--threads", type=int)

    p = add("tts", _cmd_tts, "time-to-solution from a sample archive")
    p.add_argument("results")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--tau", type=float, required=True,
                   help="seconds per shot")

    p = add("gama", _cmd_gama,
            "kernel sampling plus Graver-descent optimization")
    p.add_argument("problem")
    p.add_argument("--objective-file", help="a .poly file with one polynomial")
    p.add_argument("--objective", help="inline polynomial text")
    p.add_argument("--oracle", help="named objective (capital-budgeting)")
    p.add_argument("--mu", help="comma-separated returns for --oracle")
    p.add_argument("--sigma", help="comma-separated deviations for --oracle")
    p.add_argument("--epsilon", help="risk tolerance for --oracle")
    p.add_argument("--scheme", choices=["binary", "unary"], default="binary")
    p.add_argument("--width", default="2",
                   help="bits per direction component, int or comma list")
    p.add_argument("--kernel-shots", type=int, default=2000)
    p.add_argument("--seed-shots", type=int, default=1000)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--strategy", choices=["bisection", "greedy"],
                   default="bisection")
    p.add_argument("--max-seeds", type=int)
    p.add_argument("--seed", type=int, default=0)

    p = add("oracle", _cmd_oracle,
            "brute-force exact optimum of a model or problem")
    p.add_argument("target")

    return parser


def _print_error(kind: str, exc: Exception, detail) -> None:
    payload = {"error": kind, "message": str(exc),
               "detail": json_ready(detail)}
    print(json.dumps(payload, sort_keys=True))


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else [str(a) for a in argv]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args, argv)
    except ResourceLimitError as exc:
        _print_error("resource-limit", exc,
                     {"limit": exc.limit, "value": exc.value})
        return 3
    except InfeasibleError as exc:
        _print_error("infeasible", exc, exc.detail)
        return 4
    except (QuipError, ValueError) as exc:
        print(f"quip: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"quip: error: {exc}", file=sys.stderr)
        return 2


def run_subcommand(argv: Sequence[str]) -> int:
    """Run one CLI invocation programmatically; returns the exit status."""
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
