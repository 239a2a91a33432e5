"""Placing a gadget copy on every right-neighbourhood of an outer graph.

Right vertex (v, v0) of the result, with v in R(outer) and v0 in R(gadget),
is flattened to index ``v * |R(gadget)| + v0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import CompositionError, ValidationError
from .gadget import exact
from .graph import LEFT, BipartiteGraph, VertexSet


@dataclass(frozen=True, eq=False)
class Composition:
    outer: BipartiteGraph
    gadget: BipartiteGraph
    result: BipartiteGraph
    port_order: tuple[tuple[int, ...], ...]
    port_shuffle_seed: int | None = None
    port_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        idx = {}
        for v, ports in enumerate(self.port_order):
            for p, w in enumerate(ports):
                idx[(v, w)] = p
        object.__setattr__(self, "port_index", idx)

    @property
    def k(self) -> int:
        return self.outer.left_degree

    @property
    def D0(self) -> int:
        return self.gadget.left_count

    @property
    def d0(self) -> int:
        return self.gadget.left_degree

    @property
    def cluster_size(self) -> int:
        return self.gadget.right_count

    @cached_property
    def ratio(self) -> Fraction:
        return Fraction(self.result.right_count, self.result.left_count)

    def cluster_of(self, right_index: int) -> tuple[int, int]:
        return divmod(right_index, self.cluster_size)

    def metadata(self) -> dict:
        degs = self.result.left_degrees
        return {
            "k": self.k,
            "D0": self.D0,
            "d0": self.d0,
            "left_count": self.result.left_count,
            "right_count": self.result.right_count,
            "edge_count": self.result.edge_count,
            "ratio": float(self.ratio),
            "ratio_exact": [self.ratio.numerator, self.ratio.denominator],
            "left_degree_expected": self.d0 * self.k,
            "left_degree_min": int(degs.min()),
            "left_degree_max": int(degs.max()),
            "left_degree_ok": bool(np.all(degs == self.d0 * self.k)),
            "edge_count_ok": self.result.edge_count
            == self.outer.right_count * self.gadget.edge_count,
            "port_shuffle_seed": self.port_shuffle_seed,
            "outer_hash": self.outer.content_hash(),
            "gadget_hash": self.gadget.content_hash(),
            "result_hash": self.result.content_hash(),
        }


def compose(
    outer: BipartiteGraph, gadget: BipartiteGraph, port_shuffle_seed: int | None = None
) -> Composition:
    """Union over v in R(outer) of gadget copies on N_outer(v) x ({v} x R(gadget)).

    Ports of v are its left neighbours in increasing index order, or a
    seeded random permutation of them when ``port_shuffle_seed`` is given.
    """
    D0 = gadget.left_count
    if gadget.left_degree is None:
        raise CompositionError("gadget must be left-regular")
    if outer.left_degree is None:
        raise CompositionError("outer graph must be left-regular")
    if outer.multigraph and len(set(outer.edges())) != outer.edge_count:
        raise CompositionError("outer graph has parallel edges")
    bad = np.flatnonzero(outer.right_degrees != D0)
    if bad.size:
        v = int(bad[0])
        raise CompositionError(
            f"outer right vertex {v} has degree {int(outer.right_degrees[v])}, "
            f"gadget has {D0} left vertices"
        )

    ports = outer.right_adjacency
    if port_shuffle_seed is not None:
        rng = np.random.default_rng(port_shuffle_seed)
        ports = tuple(tuple(np.asarray(p)[rng.permutation(D0)].tolist()) for p in ports)

    m = gadget.right_count
    rows = [[] for _ in range(outer.left_count)]
    for v, order in enumerate(ports):
        base = v * m
        for p, w in enumerate(order):
            rows[w].extend(base + v0 for v0 in gadget.adjacency[p])
    try:
        result = BipartiteGraph(
            outer.left_count, outer.right_count * m, tuple(tuple(r) for r in rows)
        )
    except ValidationError as exc:
        # clusters are disjoint, so this indicates a bug rather than bad input
        raise AssertionError(f"composed graph is not simple: {exc}") from exc
    return Composition(outer, gadget, result, tuple(ports), port_shuffle_seed)


def balance_ratio(k: int, D0: int, beta2) -> Fraction:
    """(k / D0) * floor(D0 beta2 / k), computed exactly."""
    return Fraction(k, D0) * math.floor(Fraction(D0) * exact(beta2) / k)


@dataclass(frozen=True)
class BalanceReport:
    ratio: Fraction
    formula_ratio: Fraction
    in_interval: bool
    boundary: str | None
    hypothesis_holds: bool
    hypothesis_bound: float

    def __bool__(self):
        return self.in_interval

    def to_dict(self):
        return {
            "ratio": float(self.ratio),
            "formula_ratio": float(self.formula_ratio),
            "matches_formula": self.ratio == self.formula_ratio,
            "in_interval": self.in_interval,
            "boundary": self.boundary,
            "hypothesis_holds": self.hypothesis_holds,
            "hypothesis_bound": self.hypothesis_bound,
        }


def check_balance(comp: Composition, beta1, beta2) -> BalanceReport:
    """Is |R(G)| / |L(G)| strictly inside (beta1, beta2)?

    Also reports whether D0 >= k / (beta2 - beta1) holds and flags the case
    where the ratio lands exactly on an endpoint.
    """
    b1, b2 = exact(beta1), exact(beta2)
    if not b1 < b2:
        raise ValidationError("need beta1 < beta2")
    r = comp.ratio
    boundary = "upper" if r == b2 else "lower" if r == b1 else None
    bound = Fraction(comp.k) / (b2 - b1)
    return BalanceReport(
        ratio=r,
        formula_ratio=balance_ratio(comp.k, comp.D0, beta2),
        in_interval=b1 < r < b2,
        boundary=boundary,
        hypothesis_holds=comp.D0 >= bound,
        hypothesis_bound=float(bound),
    )


def neighborhood_decomposition(comp: Composition, s) -> dict[int, tuple[int, ...]]:
    """Per outer right vertex v, the neighbours of N_outer(v) ∩ S inside cluster v.

    Only clusters meeting S appear. Values are flattened right indices of the
    composed graph; clusters are disjoint so their union is N_G(S).
    """
    s = VertexSet.of(s, LEFT)
    hit: dict[int, list[int]] = {}
    for w in s:
        if not 0 <= w < comp.outer.left_count:
            raise ValidationError(f"left vertex {w} out of range")
        for v in comp.outer.adjacency[w]:
            hit.setdefault(v, []).append(w)
    m = comp.cluster_size
    out = {}
    for v in sorted(hit):
        nb = set()
        for w in hit[v]:
            nb.update(comp.gadget.adjacency[comp.port_index[(v, w)]])
        out[v] = tuple(v * m + v0 for v0 in sorted(nb))
    return out
