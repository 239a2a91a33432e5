"""Walk-matrix spectra, the nonlazy square, and the mixing-lemma check."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, ValidationError
from .graph import BipartiteGraph, VertexSet, WeightedGraph, edge_weight_between

DEFAULT_DENSE_CUTOFF = 2048
ANALYTIC_TOL = 1e-9
CROSS_METHOD_TOL = 1e-6


def dense_cutoff() -> int:
    return int(os.environ.get("EXPANDER_DENSE_CUTOFF", DEFAULT_DENSE_CUTOFF))


@dataclass(frozen=True)
class SpectralReport:
    lambda2: float
    lambda_max_nontrivial_abs: float
    method: str
    residual: float
    iterations: int = 0

    def to_dict(self):
        return asdict(self)


def bipartite_square_right(x: BipartiteGraph) -> sp.csr_matrix:
    """Right block of the ordinary square: (B^T B)[v, v'] counts 2-paths v-w-v'."""
    b = x.biadjacency
    return (b.T @ b).tocsr()


def nonlazy_square(x: BipartiteGraph) -> WeightedGraph:
    """Graph on R(x) weighting v != v' by the number of common left neighbours.

    Backtracking walks v -> w -> v are dropped, so the diagonal is zero.
    """
    m = bipartite_square_right(x).tolil()
    m.setdiag(0)
    return WeightedGraph.from_matrix(m.tocsr())


def adjacency_spectrum(g: WeightedGraph) -> np.ndarray:
    """Ascending eigenvalues of the unnormalized integer adjacency matrix."""
    return np.linalg.eigvalsh(g.matrix.toarray().astype(float))


def walk_matrix(g: WeightedGraph) -> np.ndarray:
    d = g.degrees
    if np.any(d == 0):
        raise ValidationError("walk matrix undefined: graph has an isolated vertex")
    return g.matrix.toarray().astype(float) / d[:, None]


def _normalized(g: WeightedGraph):
    d = g.degrees
    if np.any(d <= 0):
        v = int(np.flatnonzero(d <= 0)[0])
        raise ValidationError(f"vertex {v} is isolated; walk matrix undefined")
    if g.vertex_count < 2:
        raise ValidationError("need at least two vertices for a second eigenvalue")
    inv = 1.0 / np.sqrt(d.astype(float))
    # integer adjacency first, normalization last
    a = g.matrix.astype(float)
    n = sp.diags(inv) @ a @ sp.diags(inv)
    top = np.sqrt(d.astype(float))
    return n.tocsr(), top / np.linalg.norm(top)


def _dense(g: WeightedGraph) -> SpectralReport:
    n, _ = _normalized(g)
    vals, vecs = np.linalg.eigh(n.toarray())
    dense = n.toarray()
    res = max(
        float(np.linalg.norm(dense @ vecs[:, i] - vals[i] * vecs[:, i])) for i in (-1, -2)
    )
    return SpectralReport(
        lambda2=float(vals[-2]),
        lambda_max_nontrivial_abs=float(np.max(np.abs(vals[:-1]))),
        method="dense",
        residual=res,
    )


def _top_deflated(op, n, top, block, tol, max_iter, seed=0):
    """Largest eigenpair of ``op`` on the complement of ``top`` by subspace iteration."""
    rng = np.random.default_rng(seed)
    block = min(block, n - 1)
    q = rng.standard_normal((n, block))
    q -= np.outer(top, top @ q)
    q, _ = np.linalg.qr(q)
    for it in range(1, max_iter + 1):
        z = op(q)
        z -= np.outer(top, top @ z)
        if it % 5 == 0 or it == max_iter:
            t = q.T @ z
            t = (t + t.T) / 2
            evals, evecs = np.linalg.eigh(t)
            y = q @ evecs[:, -1]
            theta = evals[-1]
            r = op(y[:, None])[:, 0] - theta * y
            r -= top * (top @ r)
            res = float(np.linalg.norm(r))
            if res < tol:
                return float(theta), res, it
        q, _ = np.linalg.qr(z)
    raise ConvergenceError(f"subspace iteration did not converge in {max_iter} iterations")


def _iterative(g: WeightedGraph, tol: float, max_iter: int, block: int) -> SpectralReport:
    n_mat, top = _normalized(g)
    n = g.vertex_count
    if n == 2:
        return _dense(g)

    # shifts map the spectrum into [0, 1] so the wanted end is the dominant one
    def upper(x):
        return (n_mat @ x + x) / 2

    def lower(x):
        return (x - n_mat @ x) / 2

    hi, res_hi, it_hi = _top_deflated(upper, n, top, block, tol / 2, max_iter)
    lo, res_lo, it_lo = _top_deflated(lower, n, top, block, tol / 2, max_iter, seed=1)
    lam2 = 2 * hi - 1
    lam_min = 1 - 2 * lo
    return SpectralReport(
        lambda2=float(lam2),
        lambda_max_nontrivial_abs=float(max(abs(lam2), abs(lam_min))),
        method="iterative",
        residual=2 * max(res_hi, res_lo),
        iterations=it_hi + it_lo,
    )


def lambda2_walk(
    g: WeightedGraph,
    method: str | None = None,
    cutoff: int | None = None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    block: int = 8,
) -> SpectralReport:
    """Second largest signed eigenvalue of the random walk matrix D^-1 M.

    ``method=None`` picks dense up to ``cutoff`` vertices (default from
    ``EXPANDER_DENSE_CUTOFF`` or 2048) and iterative above it.
    """
    if method is None:
        method = "dense" if g.vertex_count <= (cutoff or dense_cutoff()) else "iterative"
    if method == "dense":
        return _dense(g)
    if method == "iterative":
        return _iterative(g, tol, max_iter, block)
    raise ValidationError(f"unknown eigensolver method {method!r}")


@dataclass(frozen=True)
class MixingCheck:
    lhs: int
    rhs: float
    holds: bool
    lambda2: float
    degree: int

    def to_dict(self):
        return asdict(self)


def mixing_bound_check(
    g: WeightedGraph,
    s,
    lambda2: float | None = None,
    clamp: bool = True,
    tol: float = 1e-9,
) -> MixingCheck:
    """Compare w(S, S) with (lambda2 + |S|/|V|) * D * |S| on a D-regular graph.

    With ``clamp`` (the default) the eigenvalue term is max(lambda2, 0); the
    unclamped form fails for graphs with negative lambda2, e.g. S = V in K_n.
    """
    degree = g.regular_degree
    if degree is None:
        raise ValidationError("mixing bound needs a regular graph (equal total weight degrees)")
    s = VertexSet.of(s, "vertex")
    if lambda2 is None:
        lambda2 = lambda2_walk(g).lambda2
    lhs = edge_weight_between(g, s, s)
    coef = max(lambda2, 0.0) if clamp else lambda2
    size = len(s)
    rhs = (coef + size / g.vertex_count) * degree * size
    return MixingCheck(lhs, rhs, lhs <= rhs + tol * max(1.0, abs(rhs)), float(lambda2), degree)
