"""Exhaustive worst-case search over small left subsets.

For a left-regular bipartite graph with degree d, finds the minimum of
|N(S)| / (d |S|) over all S with 1 <= |S| <= max_size, together with the
lexicographically least set attaining it. Neighbourhoods are kept as packed
uint64 bitsets so the last level of every branch is one vectorized OR.

Pruning: a branch rooted at S can only reach sets S' with |N(S')| >= |N(S)|
and |S'| <= t_max, so every ratio inside it is at least |N(S)| / (d t_max).
The branch is skipped when that bound cannot beat the incumbent, which keeps
the result identical to a full scan.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .graph import BipartiteGraph

DEFAULT_BUDGET = 10**8


def enumeration_budget() -> int:
    return int(os.environ.get("EXPANDER_ENUM_BUDGET", DEFAULT_BUDGET))


def max_set_size(mu: float, n: int) -> int:
    # tolerance keeps e.g. mu = 3/n from flooring to 2
    return max(0, math.floor(mu * n + 1e-9))


def subset_count(n: int, max_size: int) -> int:
    return sum(math.comb(n, i) for i in range(1, max_size + 1))


@dataclass(frozen=True)
class EnumerationResult:
    max_size: int
    worst_neighbors: int
    worst_denominator: int
    witness: tuple[int, ...]
    covered: int
    evaluated: int

    @property
    def worst_ratio(self) -> Fraction:
        if self.worst_denominator == 0:
            return Fraction(1)
        return Fraction(self.worst_neighbors, self.worst_denominator)


def pack_neighborhoods(g: BipartiteGraph) -> np.ndarray:
    """Left adjacency as an (|L|, words) array of uint64 bitsets over R."""
    words = (g.right_count + 63) // 64
    bits = np.zeros((g.left_count, words * 64), dtype=bool)
    for u, row in enumerate(g.adjacency):
        bits[u, list(row)] = True
    packed = np.packbits(bits, axis=1, bitorder="little")
    return packed.view(np.uint64).reshape(g.left_count, words)


def _better(num, den, wit, best):
    """True when num/den (witness wit) beats the incumbent under the tie-break."""
    if best is None:
        return True
    bnum, bden, bwit = best
    lhs, rhs = num * bden, bnum * den
    return lhs < rhs or (lhs == rhs and wit < bwit)


class _Shard:
    def __init__(self, masks, d, max_size, prune):
        self.masks = masks
        self.n = masks.shape[0]
        self.d = d
        self.max_size = max_size
        self.prune = prune
        self.best = None
        self.covered = 0
        self.evaluated = 0

    def run(self, first: int):
        mask = self.masks[first]
        pc = int(np.bitwise_count(mask).sum())
        self.evaluated += 1
        self.covered += 1
        self.best = (pc, self.d, (first,))
        if self._skip(pc, 1, first, (first,)):
            return self
        self._visit((first,), mask, first)
        return self

    def _skip(self, pc, size, last, prefix):
        remaining = self.n - 1 - last
        t_max = min(self.max_size, size + remaining)
        if t_max == size:
            return True
        if not self.prune:
            return False
        bnum, bden, bwit = self.best
        # lower bound pc / (d t_max) versus incumbent bnum / bden
        lhs, rhs = pc * bden, bnum * self.d * t_max
        if lhs > rhs or (lhs == rhs and bwit < prefix):
            self.covered += sum(math.comb(remaining, i) for i in range(1, t_max - size + 1))
            return True
        return False

    def _visit(self, prefix, mask, last):
        size = len(prefix) + 1
        cand = np.arange(last + 1, self.n)
        child = self.masks[cand] | mask
        pcs = np.bitwise_count(child).sum(axis=1)
        self.evaluated += len(cand)
        self.covered += len(cand)
        i = int(np.argmin(pcs))
        num, den = int(pcs[i]), self.d * size
        wit = prefix + (int(cand[i]),)
        if _better(num, den, wit, self.best):
            self.best = (num, den, wit)
        if size == self.max_size:
            return
        for j, pc in zip(cand.tolist(), pcs.tolist()):
            p = prefix + (j,)
            if not self._skip(pc, size, j, p):
                self._visit(p, child[j - last - 1], j)


def _run_shard(args):
    masks, d, max_size, prune, first = args
    sh = _Shard(masks, d, max_size, prune).run(first)
    return sh.best, sh.covered, sh.evaluated


def enumerate_worst(
    g: BipartiteGraph,
    max_size: int,
    budget: int | None = None,
    threads: int = 1,
    prune: bool = True,
) -> EnumerationResult:
    """Exact worst expansion ratio over all left sets of size 1..max_size.

    Raises BudgetExceeded before doing any work if the number of sets exceeds
    ``budget``. Results do not depend on ``threads``.
    """
    d = g.left_degree
    if d is None:
        raise ValidationError("exact certification needs a left-regular graph")
    max_size = min(max_size, g.left_count)
    total = subset_count(g.left_count, max_size)
    budget = enumeration_budget() if budget is None else budget
    if total > budget:
        raise BudgetExceeded(f"{total} subsets exceed enumeration budget {budget}")
    if max_size <= 0:
        return EnumerationResult(0, 0, 0, (), 0, 0)

    masks = pack_neighborhoods(g)
    jobs = [(masks, d, max_size, prune, j) for j in range(g.left_count)]
    if threads > 1 and g.left_count > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_run_shard, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        parts = [_run_shard(j) for j in jobs]

    best, covered, evaluated = None, 0, 0
    for b, c, e in parts:
        if _better(*b, best):
            best = b
        covered += c
        evaluated += e
    assert covered == total, (covered, total)
    return EnumerationResult(max_size, best[0], best[1], best[2], covered, evaluated)
