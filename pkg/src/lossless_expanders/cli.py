"""Command-line entry point.

Exit codes: 0 success/pass, 1 verified failure, 2 usage or validation
error, 3 refusal (enumeration budget, search exhaustion, non-convergence).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .composer import check_balance, compose
from .errors import (
    BudgetExceeded,
    ConvergenceError,
    ExpanderError,
    PipelineError,
    SearchExhausted,
    ValidationError,
)
from .gadget import GadgetSpec, search_gadget
from .graph import BipartiteGraph, WeightedGraph
from .graphio import read_graph, write_graph
from .manifest import build_manifest, dumps, write_json
from .planner import PlanParams, generate_random_biregular, plan, run_pipeline
from .spectral import lambda2_walk, nonlazy_square
from .verifier import default_mu, expansion_accounting, verify_exact, verify_sampled

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_REFUSED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _emit(obj):
    sys.stdout.write(dumps(obj))


def _bipartite_as_weighted(g: BipartiteGraph) -> WeightedGraph:
    n = g.left_count
    w = {}
    for u, v in g.edges():
        w[(u, n + v)] = w.get((u, n + v), 0) + 1
    return WeightedGraph(n + g.right_count, w)


def cmd_plan(a):
    p = plan(
        a.beta1, a.beta2, a.eps, mode=a.mode, k=a.k, D0=a.D0, eps0=a.eps0, d0=a.d0, mu0=a.mu0
    )
    if a.json:
        _emit(p.to_dict())
    else:
        for key, val in p.to_dict().items():
            print(f"{key}: {val}")
    return EXIT_OK, [], []


def cmd_gen_outer(a):
    g = generate_random_biregular(a.n_left, a.k, a.D0, a.seed, method=a.method)
    write_graph(g, a.out)
    _emit({"left_count": g.left_count, "right_count": g.right_count, "hash": g.content_hash()})
    return EXIT_OK, [], [a.out]


def cmd_search_gadget(a):
    spec = GadgetSpec(n=a.n, beta0=a.beta0, d0=a.d0, mu0=a.mu0, eps0=a.eps0)
    try:
        g, cert = search_gadget(spec, a.max_attempts, a.seed, threads=a.threads)
        code = EXIT_OK
    except SearchExhausted as exc:
        if exc.best is None:
            raise
        g, cert = exc.best
        code = EXIT_REFUSED
        print(str(exc), file=sys.stderr)
    write_graph(g, a.out)
    out = cert.to_dict()
    if code != EXIT_OK:
        out["attempts"] = a.max_attempts
    write_json(out, a.cert)
    _emit(out)
    return code, [], [a.out, a.cert]


def cmd_compose(a):
    outer, gadget = read_graph(a.outer), read_graph(a.gadget)
    comp = compose(outer, gadget, port_shuffle_seed=a.port_shuffle_seed)
    write_graph(comp.result, a.out)
    meta = comp.metadata()
    if a.beta1 is not None and a.beta2 is not None:
        meta["balance"] = check_balance(comp, a.beta1, a.beta2).to_dict()
    _emit(meta)
    return EXIT_OK, [a.outer, a.gadget], [a.out]


def cmd_verify(a):
    g = read_graph(a.graph)
    inputs = [a.graph]
    mu = a.mu
    if mu is None:
        if a.outer is None:
            raise _UsageError("verify: --mu is required unless --outer is given")
        outer = read_graph(a.outer)
        inputs.append(a.outer)
        mu, _ = default_mu(outer.left_degree, lambda2_walk(nonlazy_square(outer)).lambda2)
    if a.sampled:
        if a.seed is None:
            raise _UsageError("verify --sampled requires --seed")
        rep = verify_sampled(g, mu, a.eps, a.trials, a.seed, threads=a.threads)
    else:
        rep = verify_exact(g, mu, a.eps, threads=a.threads)
    out = rep.to_dict()
    if a.json:
        _emit(out)
    else:
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} ({rep.mode}) worst ratio {float(rep.worst_ratio):.6f}")
        print("witness:", " ".join(map(str, rep.witness)))
    return (EXIT_OK if rep.passed else EXIT_FAIL), inputs, []


def cmd_spectrum(a):
    g = read_graph(a.graph)
    if isinstance(g, BipartiteGraph):
        g = nonlazy_square(g) if a.nonlazy_square else _bipartite_as_weighted(g)
    elif a.nonlazy_square:
        raise ValidationError("--nonlazy-square needs a bipartite graph file")
    rep = lambda2_walk(g, method=a.method)
    if a.json:
        _emit(rep.to_dict())
    else:
        print(f"lambda2 = {rep.lambda2:.12g} ({rep.method}, residual {rep.residual:.2e})")
    return EXIT_OK, [a.graph], []


def _read_set(path):
    text = Path(path).read_text()
    vals = []
    for line in text.splitlines():
        vals.extend(int(x) for x in line.split("#", 1)[0].split())
    return vals


def cmd_diagnose(a):
    outer, gadget = read_graph(a.outer), read_graph(a.gadget)
    comp = compose(outer, gadget, port_shuffle_seed=a.port_shuffle_seed)
    ledger = expansion_accounting(comp, _read_set(a.set), a.mu0, a.eps0, a.eps)
    _emit(ledger)
    return EXIT_OK, [a.outer, a.gadget, a.set], []


def cmd_run(a):
    params = PlanParams.from_dict(json.loads(Path(a.params).read_text()))
    report = run_pipeline(
        params,
        a.outer,
        a.seed,
        out_dir=a.out_dir,
        trials=a.trials,
        max_attempts=a.max_attempts,
        threads=a.threads,
        outer_method=a.outer_method,
        flags={"params": Path(a.params).name, "outer": a.outer},
    )
    summary = {k: report[k] for k in ("spectrum", "gadget", "compose")}
    summary["verify"] = {k: v for k, v in report["verify"].items() if k != "witness"}
    _emit(summary)
    return (EXIT_OK if report["verify"]["passed"] else EXIT_FAIL), [], []


def build_parser():
    p = _Parser(prog="expander", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--manifest", help="write a run manifest to this path")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("plan")
    s.add_argument("--beta1", type=float, required=True)
    s.add_argument("--beta2", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--mode", choices=["paper", "desk"], default="paper")
    s.add_argument("--k", type=int)
    s.add_argument("--D0", type=int)
    s.add_argument("--eps0", type=float)
    s.add_argument("--d0", type=int)
    s.add_argument("--mu0", type=float)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("gen-outer")
    s.add_argument("--n-left", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--D0", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--method", choices=["reject", "swap"], default="reject")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_outer)

    s = sub.add_parser("search-gadget")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta0", type=float, required=True)
    s.add_argument("--d0", type=int, required=True)
    s.add_argument("--mu0", type=float, required=True)
    s.add_argument("--eps0", type=float, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--max-attempts", type=int, default=50)
    s.add_argument("--out", required=True)
    s.add_argument("--cert", required=True)
    s.set_defaults(func=cmd_search_gadget)

    s = sub.add_parser("compose")
    s.add_argument("--outer", required=True)
    s.add_argument("--gadget", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--port-shuffle-seed", type=int)
    s.add_argument("--beta1", type=float)
    s.add_argument("--beta2", type=float)
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("verify")
    s.add_argument("--graph", required=True)
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--sampled", action="store_true")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--mu", type=float)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--outer", help="outer graph used to derive mu = k^2 lambda2^2")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("spectrum")
    s.add_argument("graph")
    s.add_argument("--nonlazy-square", action="store_true")
    s.add_argument("--method", choices=["dense", "iterative"])
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("diagnose")
    s.add_argument("--outer", required=True)
    s.add_argument("--gadget", required=True)
    s.add_argument("--set", required=True)
    s.add_argument("--mu0", type=float, required=True)
    s.add_argument("--eps0", type=float, required=True)
    s.add_argument("--eps", type=float)
    s.add_argument("--port-shuffle-seed", type=int)
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("run")
    s.add_argument("--params", required=True)
    s.add_argument("--outer", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--max-attempts", type=int, default=50)
    s.add_argument("--outer-method", choices=["reject", "swap"], default="swap")
    s.set_defaults(func=cmd_run)
    return p


def _exit_code(exc) -> int:
    if isinstance(exc, PipelineError):
        return _exit_code(exc.cause)
    if isinstance(exc, (BudgetExceeded, SearchExhausted, ConvergenceError)):
        return EXIT_REFUSED
    if isinstance(exc, (ValidationError, OSError)):
        return EXIT_USAGE
    return EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        t0 = time.perf_counter()
        code, inputs, outputs = a.func(a)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ExpanderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    if a.manifest:
        flags = {k: v for k, v in vars(a).items() if k not in ("func", "manifest", "threads")}
        seeds = {k: v for k, v in flags.items() if "seed" in k and v is not None}
        write_json(
            build_manifest(
                a.command,
                flags,
                seeds,
                inputs,
                outputs,
                {a.command: round(time.perf_counter() - t0, 6)},
            ),
            a.manifest,
        )
    return code


if __name__ == "__main__":
    sys.exit(main())
