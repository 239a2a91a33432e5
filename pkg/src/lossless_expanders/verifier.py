"""Lossless-expansion checks for composed graphs and the heavy-vertex diagnostic."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .composer import Composition, neighborhood_decomposition
from .enumeration import enumerate_worst, max_set_size
from .errors import BudgetExceeded, ValidationError
from .gadget import GadgetCertificate, certify_lossless_exact, exact
from .graph import LEFT, BipartiteGraph, VertexSet, edge_weight_between, neighborhood
from .spectral import lambda2_walk, mixing_bound_check, nonlazy_square

SEED_MOD = 2**64


@dataclass(frozen=True)
class ExpansionReport:
    mode: str
    mu: float
    eps: float
    max_size: int
    sets_examined: int
    worst_ratio: Fraction
    witness: tuple[int, ...]
    passed: bool
    certifying: bool
    seed: int | None = None

    def to_dict(self):
        return {
            "mode": self.mode,
            "mu": self.mu,
            "eps": self.eps,
            "max_size": self.max_size,
            "sets_examined": self.sets_examined,
            "worst_ratio": float(self.worst_ratio),
            "worst_ratio_exact": [self.worst_ratio.numerator, self.worst_ratio.denominator],
            "witness": list(self.witness),
            "passed": self.passed,
            "certifying": self.certifying,
            "seed": self.seed,
        }


def verify_exact(g: BipartiteGraph, mu: float, eps: float, budget=None, threads=1):
    res = enumerate_worst(g, max_set_size(mu, g.left_count), budget=budget, threads=threads)
    worst = res.worst_ratio
    return ExpansionReport(
        mode="exact",
        mu=mu,
        eps=eps,
        max_size=res.max_size,
        sets_examined=res.covered,
        worst_ratio=worst,
        witness=res.witness,
        passed=worst >= 1 - exact(eps),
        certifying=True,
    )


def _sample_chunk(args):
    adj, right_count, max_size, seed, start, stop = args
    n, d = adj.shape
    best = None
    for i in range(start, stop):
        rng = np.random.default_rng([seed, i])
        size = int(rng.integers(1, max_size + 1))
        s = np.sort(rng.choice(n, size, replace=False))
        mark = np.zeros(right_count, dtype=bool)
        mark[adj[s].ravel()] = True
        num, den = int(np.count_nonzero(mark)), d * size
        if best is None:
            best = (num, den, tuple(s.tolist()))
            continue
        lhs, rhs = num * best[1], best[0] * den
        if lhs < rhs or (lhs == rhs and tuple(s.tolist()) < best[2]):
            best = (num, den, tuple(s.tolist()))
    return best


def verify_sampled(
    g: BipartiteGraph, mu: float, eps: float, trials: int, seed: int, threads: int = 1
) -> ExpansionReport:
    """Worst ratio over random left sets; evidence only, never a certificate.

    Each trial draws a size uniformly from 1..floor(mu |L|), then a uniform
    set of that size. Sizes are uniform (rather than sets) so small bad sets
    are not drowned out by the far more numerous large ones. Trial ``i``
    uses its own generator seeded from ``(seed, i)``.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    adj = g.adjacency_array
    max_size = min(max_set_size(mu, g.left_count), g.left_count)
    seed = seed % SEED_MOD
    if max_size == 0:
        return ExpansionReport("sampled", mu, eps, 0, 0, Fraction(1), (), True, False, seed)

    bounds = np.linspace(0, trials, max(1, threads) + 1).astype(int)
    jobs = [(adj, g.right_count, max_size, seed, a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_sample_chunk, jobs))
    else:
        parts = [_sample_chunk(j) for j in jobs]

    best = parts[0]
    for num, den, wit in parts[1:]:
        lhs, rhs = num * best[1], best[0] * den
        if lhs < rhs or (lhs == rhs and wit < best[2]):
            best = (num, den, wit)
    worst = Fraction(best[0], best[1])
    return ExpansionReport(
        mode="sampled",
        mu=mu,
        eps=eps,
        max_size=max_size,
        sets_examined=trials,
        worst_ratio=worst,
        witness=best[2],
        passed=worst >= 1 - exact(eps),
        certifying=False,
        seed=seed,
    )


def default_mu(k: int, lambda2: float) -> tuple[float, bool]:
    """k^2 lambda2^2 clamped to 1; the flag says whether clamping happened."""
    mu = k * k * lambda2 * lambda2
    return (1.0, True) if mu > 1 else (mu, False)


@dataclass(frozen=True)
class HeavyDecomposition:
    threshold: float
    heavy: tuple[int, ...]
    intersections: dict
    counts_all: tuple[int, ...]
    counts_in_s: tuple[int, ...]
    set_size: int
    ratio_le1: Fraction
    ratio_target: float
    heavy_weight: int
    proof_bound: float
    mixing_bound: float
    lambda2: float

    @property
    def s_ge2(self) -> int:
        return sum(self.counts_all[2:])

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "heavy": list(self.heavy),
            "heavy_count": len(self.heavy),
            "counts_all": list(self.counts_all),
            "counts_in_s": list(self.counts_in_s),
            "set_size": self.set_size,
            "ratio_le1": float(self.ratio_le1),
            "ratio_target": self.ratio_target,
            "ratio_meets_target": float(self.ratio_le1) >= self.ratio_target,
            "heavy_weight": self.heavy_weight,
            "proof_bound": self.proof_bound,
            "mixing_bound": self.mixing_bound,
            "lambda2": self.lambda2,
            "s_ge2": self.s_ge2,
        }


def _outer_degrees(outer: BipartiteGraph) -> tuple[int, int]:
    k, D0 = outer.left_degree, outer.right_degree
    if k is None or D0 is None:
        raise ValidationError("outer graph must be biregular")
    return k, D0


def heavy_decomposition(
    outer: BipartiteGraph, s, mu0: float, lambda2: float | None = None, square=None
) -> HeavyDecomposition:
    """Heavy set H = {v : |N(v) ∩ S| >= mu0 D0} and the partition of L by heavy degree.

    ``counts_all[i]`` is the number of left vertices with exactly ``i``
    heavy neighbours; ``counts_in_s`` restricts that to S. Nothing here is
    pass/fail: the mixing bounds are reported alongside the measured weight.
    """
    k, D0 = _outer_degrees(outer)
    s = VertexSet.of(s, LEFT)
    threshold = exact(mu0) * D0
    inter = {}
    for w in s:
        for v in outer.adjacency[w]:
            inter[v] = inter.get(v, 0) + 1
    heavy = tuple(sorted(v for v, c in inter.items() if c >= threshold))
    hset = set(heavy)

    heavy_deg = np.array([sum(v in hset for v in row) for row in outer.adjacency])
    counts_all = np.bincount(heavy_deg, minlength=k + 1)
    counts_s = np.bincount(heavy_deg[list(s.indices)], minlength=k + 1) if len(s) else np.zeros(
        k + 1, dtype=int
    )
    ratio = Fraction(int(counts_s[:2].sum()), len(s)) if len(s) else Fraction(1)

    if square is None:
        square = nonlazy_square(outer)
    if lambda2 is None:
        lambda2 = lambda2_walk(square).lambda2
    hw = edge_weight_between(square, heavy, heavy)
    mix = mixing_bound_check(square, heavy, lambda2).rhs if heavy else 0.0
    return HeavyDecomposition(
        threshold=float(threshold),
        heavy=heavy,
        intersections=dict(sorted(inter.items())),
        counts_all=tuple(int(c) for c in counts_all),
        counts_in_s=tuple(int(c) for c in counts_s),
        set_size=len(s),
        ratio_le1=ratio,
        ratio_target=1 - 1 / (5 * k),
        heavy_weight=hw,
        proof_bound=1.1 * lambda2 * D0 * (k - 1) * len(heavy),
        mixing_bound=float(mix),
        lambda2=float(lambda2),
    )


def _line(value, asserted, holds=None, note=None):
    out = {"value": float(value) if isinstance(value, Fraction) else value, "asserted": asserted}
    if holds is not None:
        out["holds"] = bool(holds)
    if note:
        out["note"] = note
    return out


def expansion_accounting(
    comp: Composition,
    s,
    mu0: float,
    eps0: float,
    eps: float | None = None,
    certificate: GadgetCertificate | None = None,
    lambda2: float | None = None,
    budget: int | None = None,
) -> dict:
    """Evaluate each step of the heavy-vertex counting argument on a concrete S.

    Unconditional steps are asserted; the gadget lower bound is asserted only
    for clusters covered by a passing certificate at loss <= eps0. The
    concentration ratio and final target are reported, not asserted.
    """
    s = VertexSet.of(s, LEFT)
    eps = 10 * eps0 if eps is None else eps
    k, d0 = comp.k, comp.d0
    e0 = exact(eps0)

    decomp = neighborhood_decomposition(comp, s)
    direct = len(neighborhood(comp.result, s))
    cluster_sum = sum(len(x) for x in decomp.values())
    hd = heavy_decomposition(comp.outer, s, mu0, lambda2)
    hset = set(hd.heavy)

    light = [v for v in decomp if v not in hset]
    light_contrib = sum(len(decomp[v]) for v in light)
    light_incidence = sum(hd.intersections[v] for v in light)
    lower = (1 - e0) * d0 * light_incidence
    s_le1 = hd.counts_in_s[0] + hd.counts_in_s[1] if len(s) else 0
    per_vertex = (1 - e0) * d0 * (k - 1) * s_le1

    cert_note = None
    if certificate is None:
        try:
            certificate = certify_lossless_exact(comp.gadget, mu0, eps0, budget=budget)
        except BudgetExceeded as exc:
            cert_note = f"gadget certification refused: {exc}"
    usable = (
        certificate is not None
        and certificate.passed
        and certificate.graph_hash == comp.gadget.content_hash()
        and exact(certificate.eps) <= e0
    )
    if certificate is not None and not usable and cert_note is None:
        cert_note = "certificate failed, mismatched, or weaker than eps0"
    cover = certificate.max_size if usable else 0
    uncovered = [v for v in light if hd.intersections[v] > cover]
    covered = usable and not uncovered

    target = (1 - exact(eps)) * d0 * k * len(s)
    lines = {
        "exact_neighbors": _line(direct, True, direct == cluster_sum),
        "cluster_sum": _line(cluster_sum, True, direct == cluster_sum),
        "nonheavy_contribution": _line(light_contrib, True, direct >= light_contrib),
        "nonheavy_lower_bound": _line(
            lower,
            covered,
            light_contrib >= lower if covered else None,
            None if covered else f"unverified: clusters {uncovered[:10]} not covered"
            + (f"; {cert_note}" if cert_note else ""),
        ),
        "incidence_vs_le1": _line(
            (1 - e0) * d0 * light_incidence, True, light_incidence >= (k - 1) * s_le1
        ),
        "le1_lower_bound": _line(per_vertex, False),
        "claim_ratio": _line(hd.ratio_le1, False, None, f"target {hd.ratio_target:.6f}"),
        "final_target": _line(target, False, direct >= target),
    }
    for name, line in lines.items():
        if line["asserted"] and line.get("holds") is False:
            raise AssertionError(f"accounting line {name} violated: {line}")
    return {
        "set_size": len(s),
        "mu0": mu0,
        "eps0": eps0,
        "eps": eps,
        "k": k,
        "d0": d0,
        "D": d0 * k,
        "certificate_covers": covered,
        "uncovered_clusters": uncovered,
        "heavy": hd.to_dict(),
        "lines": lines,
    }
