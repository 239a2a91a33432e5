"""Parameter planning, random outer graphs, and the end-to-end pipeline."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .composer import check_balance, compose
from .errors import ExpanderError, PipelineError, SearchExhausted, ValidationError
from .gadget import GadgetSpec, search_gadget, suggest_d0, suggest_mu0
from .graph import BipartiteGraph, validate_biregular
from .graphio import read_graph, write_graph
from .manifest import build_manifest, write_json
from .spectral import lambda2_walk, nonlazy_square
from .verifier import default_mu, expansion_accounting, verify_sampled

log = logging.getLogger(__name__)

SEED_MOD = 2**64
MIN_GADGET_SIZE = 16
MIN_CERT_SIZE = 3
ENGINEERING_FLAG = "d0 and mu0 come from engineering constants, not from a closed form"

# Small k and D0 so the whole pipeline runs in minutes. The wide, high
# interval keeps floor(mu |L|)-sized sets expandable: mu = k^2 lambda2^2 is
# close to 1 at this scale.
DESK_PRESET = {
    "beta1": 24.0,
    "beta2": 31.9,
    "eps": 0.5,
    "mode": "desk",
    "k": 4,
    "D0": 32,
    "eps0": 0.25,
}


def _ceil(x: float) -> int:
    return math.ceil(x - 1e-9)


@dataclass
class PlanParams:
    mode: str
    beta1: float
    beta2: float
    eps: float
    k: int
    eps0: float
    beta0: float
    d0: int
    mu0: float
    lambda2_target: float
    D0_min: int
    D0: int
    n0_proxy: int
    mu: float | None = None
    lambda2: float | None = None
    flags: list[str] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def check(self) -> None:
        """Assert the defining relations between the fields."""
        if self.mode == "paper":
            assert self.k == _ceil(10 / self.eps)
            assert math.isclose(self.eps0, self.eps / 10, rel_tol=1e-12)
        assert math.isclose(self.beta0, self.beta2 / self.k, rel_tol=1e-12)
        assert math.isclose(self.lambda2_target, self.mu0 / (10 * self.k**3), rel_tol=1e-12)
        assert self.D0_min >= self.k / (self.beta2 - self.beta1) - 1e-9
        if self.mu is not None and not any("clamped" in f for f in self.flags):
            assert math.isclose(self.mu, self.k**2 * self.lambda2**2, rel_tol=1e-12)

    def with_lambda2(self, lambda2: float) -> "PlanParams":
        mu, clamped = default_mu(self.k, lambda2)
        flags = list(self.flags)
        if clamped:
            flags.append(f"mu clamped to 1 (k^2 lambda2^2 = {self.k**2 * lambda2**2:.4f})")
        return replace(self, lambda2=lambda2, mu=mu, flags=flags)


def plan(
    beta1: float,
    beta2: float,
    eps: float,
    mode: str = "paper",
    k: int | None = None,
    D0: int | None = None,
    eps0: float | None = None,
    d0: int | None = None,
    mu0: float | None = None,
    n0_proxy: int = MIN_GADGET_SIZE,
    min_cert_size: int = MIN_CERT_SIZE,
) -> PlanParams:
    """Fill the parameter bundle for a target ratio interval and loss.

    ``paper`` mode follows the closed forms exactly (k = ceil(10/eps),
    eps0 = eps/10) and is far beyond desk scale. ``desk`` mode takes k, D0
    and eps0 as given (defaults 4, 32, 0.25) and raises mu0 so at least
    ``min_cert_size``-sets are certified.
    """
    if not 0 < beta1 < beta2:
        raise ValidationError("need 0 < beta1 < beta2")
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    flags = [ENGINEERING_FLAG]
    if mode == "paper":
        k = _ceil(10 / eps)
        eps0 = eps / 10
    elif mode == "desk":
        k = 4 if k is None else k
        eps0 = 0.25 if eps0 is None else eps0
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    if k < 2:
        raise ValidationError("k must be at least 2")
    beta0 = beta2 / k
    d0 = suggest_d0(eps0, beta0) if d0 is None else d0
    D0_min = _ceil(max(k / (beta2 - beta1), n0_proxy))
    if mode == "paper":
        mu0 = suggest_mu0(eps0, beta0, d0) if mu0 is None else mu0
        D0 = D0_min if D0 is None else D0
        flags.append("closed-form parameters are not runnable at desk scale")
    else:
        D0 = 32 if D0 is None else D0
        if mu0 is None:
            mu0 = suggest_mu0(eps0, beta0, d0)
            if mu0 * D0 < min_cert_size:
                mu0 = min_cert_size / D0
                flags.append(f"mu0 raised so sets of size {min_cert_size} are certified")
        if D0 < D0_min:
            flags.append(f"D0 = {D0} is below D0_min = {D0_min}")
    if math.floor(beta0 * D0 + 1e-9) < d0:
        flags.append("floor(beta0 D0) < d0: no simple gadget exists")
    params = PlanParams(
        mode=mode,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        k=k,
        eps0=eps0,
        beta0=beta0,
        d0=d0,
        mu0=mu0,
        lambda2_target=mu0 / (10 * k**3),
        D0_min=D0_min,
        D0=D0,
        n0_proxy=n0_proxy,
        flags=flags,
    )
    params.check()
    return params


def _swap_repair(rights, k, rng, max_rounds):
    """Degree-preserving swaps until no left vertex repeats a right endpoint."""
    n_stubs = len(rights)
    for _ in range(max_rounds):
        rows = rights.reshape(-1, k)
        srt = np.sort(rows, axis=1)
        dup_rows = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
        if dup_rows.size == 0:
            return rights
        for w in dup_rows.tolist():
            row = rights[w * k : (w + 1) * k]
            seen = set()
            for pos in range(k):
                v = int(row[pos])
                if v not in seen:
                    seen.add(v)
                    continue
                i = w * k + pos
                j = int(rng.integers(n_stubs))
                w2, v2 = j // k, int(rights[j])
                if w2 == w or v2 in seen:
                    continue
                if v in set(rights[w2 * k : (w2 + 1) * k].tolist()):
                    continue
                rights[i], rights[j] = v2, v
                seen.add(v2)
    raise ExpanderError(f"swap repair did not reach a simple graph in {max_rounds} rounds")


def generate_random_biregular(
    n_left: int,
    k: int,
    D0: int,
    seed: int,
    method: str = "reject",
    max_tries: int = 10_000,
) -> BipartiteGraph:
    """Configuration-model (k, D0)-biregular graph, deterministic from ``seed``.

    ``reject`` resamples whole pairings until simple; ``swap`` repairs the
    first pairing by degree-preserving endpoint swaps, which is the only
    practical option once k D0 is more than a few dozen.
    """
    if n_left <= 0 or k <= 0 or D0 <= 0:
        raise ValidationError("n_left, k, D0 must be positive")
    if (n_left * k) % D0:
        raise ValidationError(f"n_left * k = {n_left * k} is not divisible by D0 = {D0}")
    n_right = n_left * k // D0
    if k > n_right or D0 > n_left:
        raise ValidationError("degrees too large for a simple biregular graph")
    rng = np.random.default_rng(seed % SEED_MOD)
    stubs = np.repeat(np.arange(n_right), D0)
    if method == "reject":
        for _ in range(max_tries):
            rights = rng.permutation(stubs)
            srt = np.sort(rights.reshape(n_left, k), axis=1)
            if not (srt[:, 1:] == srt[:, :-1]).any():
                break
        else:
            raise ExpanderError(
                f"no simple pairing in {max_tries} tries; use method='swap' for large degrees"
            )
    elif method == "swap":
        rights = _swap_repair(rng.permutation(stubs), k, rng, max_tries)
    else:
        raise ValidationError(f"unknown method {method!r}")
    rows = rights.reshape(n_left, k)
    return BipartiteGraph(n_left, n_right, tuple(tuple(r) for r in rows.tolist()))


def parse_outer_source(source: str):
    """``random:<n_left>:<seed>`` or ``file:<path>``."""
    kind, _, rest = source.partition(":")
    if kind == "random":
        try:
            n_left, seed = (int(x) for x in rest.split(":"))
        except ValueError:
            raise ValidationError(f"bad outer source {source!r}") from None
        return ("random", n_left, seed)
    if kind == "file" and rest:
        return ("file", rest)
    raise ValidationError(f"bad outer source {source!r}; expected random:N:SEED or file:PATH")


class _Stages:
    def __init__(self):
        self.timings = {}

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except PipelineError:
            raise
        except ExpanderError as exc:
            raise PipelineError(name, exc) from exc
        finally:
            self.timings[name] = round(time.perf_counter() - t0, 6)


def run_pipeline(
    params: PlanParams,
    outer_source,
    seed: int,
    out_dir=None,
    trials: int = 10_000,
    max_attempts: int = 50,
    threads: int = 1,
    outer_method: str = "swap",
    flags: dict | None = None,
) -> dict:
    """Outer graph -> spectrum -> gadget -> composition -> sampled check -> diagnostics.

    ``outer_source`` is a BipartiteGraph or a string accepted by
    ``parse_outer_source``. With ``out_dir`` every artifact plus
    ``report.json`` and ``manifest.json`` is written there.
    """
    stages = _Stages()
    k, D0 = params.k, params.D0
    inputs = []
    if isinstance(outer_source, BipartiteGraph):
        outer, src = outer_source, {"kind": "graph"}
    else:
        parsed = parse_outer_source(outer_source)
        if parsed[0] == "random":
            _, n_left, outer_seed = parsed
            outer = stages.run(
                "outer", generate_random_biregular, n_left, k, D0, outer_seed, outer_method
            )
            src = {"kind": "random", "n_left": n_left, "seed": outer_seed, "method": outer_method}
        else:
            outer = stages.run("outer", read_graph, parsed[1])
            src = {"kind": "file", "path": parsed[1]}
            inputs.append(parsed[1])

    def _validate():
        rep = validate_biregular(outer, k, D0)
        if not rep:
            raise ValidationError(f"outer graph is not ({k}, {D0})-biregular: {rep.violation}")
        return rep

    stages.run("validation", _validate)

    def _spectrum():
        sq = nonlazy_square(outer)
        return sq, lambda2_walk(sq)

    square, spec_rep = stages.run("spectrum", _spectrum)
    lam = spec_rep.lambda2
    if lam >= 1:
        log.warning("lambda2 of the nonlazy square is %.4f >= 1; outer is disconnected-like", lam)
    params = params.with_lambda2(lam)
    scale = 1 / D0 + 2 / math.sqrt(D0 * (k - 1))

    gspec = GadgetSpec(n=D0, beta0=params.beta0, d0=params.d0, mu0=params.mu0, eps0=params.eps0)

    def _gadget():
        try:
            return search_gadget(gspec, max_attempts, seed, threads=threads)
        except SearchExhausted as exc:
            err = PipelineError("gadget", exc)
            err.best = exc.best
            raise err from exc

    gadget, cert = stages.run("gadget", _gadget)
    comp = stages.run("compose", compose, outer, gadget)
    balance = check_balance(comp, params.beta1, params.beta2)
    ver = stages.run(
        "verify", verify_sampled, comp.result, params.mu, params.eps, trials, seed, threads
    )
    ledger = stages.run(
        "diagnose",
        expansion_accounting,
        comp,
        ver.witness,
        params.mu0,
        params.eps0,
        params.eps,
        cert,
        lam,
    )

    report = {
        "params": params.to_dict(),
        "outer": {
            "source": src,
            "left_count": outer.left_count,
            "right_count": outer.right_count,
            "hash": outer.content_hash(),
        },
        "spectrum": {
            **spec_rep.to_dict(),
            "reference_scale": scale,
            "deviation_from_scale": lam - scale,
        },
        "gadget": cert.to_dict(),
        "compose": {**comp.metadata(), "balance": balance.to_dict()},
        "verify": ver.to_dict(),
        "diagnose": ledger,
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "outer": out / "outer.txt",
            "gadget": out / "gadget.txt",
            "composed": out / "composed.txt",
            "gadget_cert": out / "gadget_cert.json",
            "params": out / "params.json",
            "report": out / "report.json",
        }
        write_graph(outer, paths["outer"])
        write_graph(gadget, paths["gadget"])
        write_graph(comp.result, paths["composed"])
        write_json(cert.to_dict(), paths["gadget_cert"])
        write_json(params.to_dict(), paths["params"])
        write_json(report, paths["report"])
        manifest = build_manifest(
            "run",
            {
                "trials": trials,
                "max_attempts": max_attempts,
                "outer_method": outer_method,
                **(flags or {}),
            },
            {"pipeline": seed, **({"outer": src["seed"]} if "seed" in src else {})},
            inputs=inputs,
            outputs=list(paths.values()),
            timings=stages.timings,
            base=out,
        )
        write_json(manifest, out / "manifest.json")
        report["manifest"] = manifest
    return report
