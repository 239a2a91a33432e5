"""Core graph containers and set operations.

Vertices on each side of a bipartite graph are dense 0-based integers.
Graphs are immutable once built; derived structures (degree arrays, sparse
matrices) are cached on first use.
"""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class VertexSet:
    """Sorted, duplicate-free set of vertex indices on one side of a graph."""

    side: str
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.side not in (LEFT, RIGHT, "vertex"):
            raise ValidationError(f"unknown side {self.side!r}")
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("vertex indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Iterable[int], side: str = LEFT) -> "VertexSet":
        if isinstance(indices, VertexSet):
            return indices
        return cls(side, tuple(sorted(set(int(i) for i in indices))))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, v):
        return v in set(self.indices)


def _as_indices(s, side: str) -> tuple[int, ...]:
    if isinstance(s, VertexSet):
        return s.indices
    return VertexSet.of(s, side).indices


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Unweighted bipartite graph stored as left-to-right adjacency lists.

    Adjacency lists are kept sorted. Parallel edges are rejected unless
    ``multigraph`` is set.
    """

    left_count: int
    right_count: int
    adjacency: tuple[tuple[int, ...], ...]
    multigraph: bool = False

    def __post_init__(self):
        if self.left_count <= 0 or self.right_count <= 0:
            raise ValidationError("both sides must be non-empty")
        if len(self.adjacency) != self.left_count:
            raise ValidationError(
                f"adjacency has {len(self.adjacency)} rows, expected {self.left_count}"
            )
        adj = []
        for u, row in enumerate(self.adjacency):
            row = tuple(sorted(int(v) for v in row))
            for v in row:
                if not 0 <= v < self.right_count:
                    raise ValidationError(f"edge ({u}, {v}): right index out of range")
            if not self.multigraph and any(a == b for a, b in zip(row, row[1:])):
                raise ValidationError(f"left vertex {u} has a parallel edge")
            adj.append(row)
        object.__setattr__(self, "adjacency", tuple(adj))

    @classmethod
    def from_edges(cls, left_count, right_count, edges, multigraph=False):
        rows = [[] for _ in range(left_count)]
        for u, v in edges:
            if not 0 <= u < left_count:
                raise ValidationError(f"edge ({u}, {v}): left index out of range")
            rows[u].append(v)
        return cls(left_count, right_count, tuple(tuple(r) for r in rows), multigraph)

    def __eq__(self, other):
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            self.left_count == other.left_count
            and self.right_count == other.right_count
            and self.adjacency == other.adjacency
        )

    def __hash__(self):
        return hash((self.left_count, self.right_count, self.adjacency))

    @property
    def edge_count(self) -> int:
        return sum(len(r) for r in self.adjacency)

    def edges(self):
        for u, row in enumerate(self.adjacency):
            for v in row:
                yield u, v

    @cached_property
    def left_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.adjacency], dtype=np.int64)

    @cached_property
    def right_degrees(self) -> np.ndarray:
        deg = np.zeros(self.right_count, dtype=np.int64)
        for row in self.adjacency:
            for v in row:
                deg[v] += 1
        return deg

    @property
    def left_degree(self) -> int | None:
        """Common left degree, or None when not left-regular."""
        d = self.left_degrees
        return int(d[0]) if np.all(d == d[0]) else None

    @property
    def right_degree(self) -> int | None:
        d = self.right_degrees
        return int(d[0]) if np.all(d == d[0]) else None

    @cached_property
    def right_adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Left neighbours of each right vertex, in increasing left index."""
        cols = [[] for _ in range(self.right_count)]
        for u, row in enumerate(self.adjacency):
            for v in row:
                cols[v].append(u)
        return tuple(tuple(c) for c in cols)

    @cached_property
    def biadjacency(self) -> sp.csr_matrix:
        """|L| x |R| integer matrix; entries count parallel edges."""
        rows = np.repeat(np.arange(self.left_count), self.left_degrees)
        cols = np.fromiter((v for _, v in self.edges()), dtype=np.int64, count=self.edge_count)
        data = np.ones(len(cols), dtype=np.int64)
        m = sp.csr_matrix((data, (rows, cols)), shape=(self.left_count, self.right_count))
        m.sum_duplicates()
        return m

    @cached_property
    def adjacency_array(self) -> np.ndarray:
        """Adjacency as an |L| x d array; only defined for left-regular graphs."""
        d = self.left_degree
        if d is None:
            raise ValidationError("graph is not left-regular")
        return np.array(self.adjacency, dtype=np.int64).reshape(self.left_count, d)

    def content_hash(self) -> str:
        from .graphio import format_graph

        return hashlib.sha256(format_graph(self).encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric graph with nonnegative integer weights and zero diagonal.

    ``weights`` maps ``(u, v)`` with ``u < v`` to a positive weight; absent
    pairs have weight zero.
    """

    vertex_count: int
    weights: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if self.vertex_count <= 0:
            raise ValidationError("vertex_count must be positive")
        clean = {}
        for (u, v), w in self.weights.items():
            u, v, w = int(u), int(v), int(w)
            if u == v:
                raise ValidationError(f"self-loop at {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValidationError(f"edge ({u}, {v}) out of range")
            if w < 0:
                raise ValidationError(f"negative weight on ({u}, {v})")
            key = (u, v) if u < v else (v, u)
            if key in clean and clean[key] != w:
                raise ValidationError(f"asymmetric weights on {key}")
            if w:
                clean[key] = w
        object.__setattr__(self, "weights", dict(sorted(clean.items())))

    @classmethod
    def from_matrix(cls, m) -> "WeightedGraph":
        """Build from a symmetric integer matrix (dense or sparse); diagonal must be zero."""
        m = sp.coo_matrix(m)
        n = m.shape[0]
        if m.shape != (n, n):
            raise ValidationError("matrix must be square")
        dense_check = (m - m.T).tocsr()
        dense_check.eliminate_zeros()
        if dense_check.nnz:
            raise ValidationError("matrix is not symmetric")
        w = {}
        for u, v, x in zip(m.row, m.col, m.data):
            if u == v:
                if x:
                    raise ValidationError(f"nonzero diagonal at {u}")
                continue
            if u < v and x:
                w[(int(u), int(v))] = w.get((int(u), int(v)), 0) + int(x)
        return cls(n, w)

    @classmethod
    def complete(cls, n: int, weight: int = 1) -> "WeightedGraph":
        return cls(n, {(u, v): weight for u in range(n) for v in range(u + 1, n)})

    def weight(self, u: int, v: int) -> int:
        if u == v:
            return 0
        return self.weights.get((u, v) if u < v else (v, u), 0)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Symmetric integer adjacency matrix M with M[u, v] = weight(u, v)."""
        n = self.vertex_count
        if not self.weights:
            return sp.csr_matrix((n, n), dtype=np.int64)
        keys = np.array(list(self.weights.keys()), dtype=np.int64)
        vals = np.array(list(self.weights.values()), dtype=np.int64)
        rows = np.concatenate([keys[:, 0], keys[:, 1]])
        cols = np.concatenate([keys[:, 1], keys[:, 0]])
        return sp.csr_matrix((np.concatenate([vals, vals]), (rows, cols)), shape=(n, n))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel().astype(np.int64)

    @property
    def regular_degree(self) -> int | None:
        d = self.degrees
        return int(d[0]) if np.all(d == d[0]) else None

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.vertex_count == other.vertex_count and self.weights == other.weights

    def __hash__(self):
        return hash((self.vertex_count, tuple(self.weights.items())))


def neighborhood(g: BipartiteGraph, s) -> VertexSet:
    """Right neighbours of a set of left vertices."""
    out = set()
    for u in _as_indices(s, LEFT):
        if not 0 <= u < g.left_count:
            raise ValidationError(f"left vertex {u} out of range")
        out.update(g.adjacency[u])
    return VertexSet(RIGHT, tuple(sorted(out)))


def edge_weight_between(g: WeightedGraph, s, t) -> int:
    """Sum of w(u, v) over ordered pairs (u, v) in s x t.

    Internal edges of ``s`` are therefore counted twice when ``t == s``.
    """
    s_idx = _as_indices(s, "vertex")
    t_idx = _as_indices(t, "vertex")
    for i in (*s_idx, *t_idx):
        if not 0 <= i < g.vertex_count:
            raise ValidationError(f"vertex {i} out of range")
    if not s_idx or not t_idx:
        return 0
    m = g.matrix[list(s_idx)][:, list(t_idx)]
    return int(m.sum())


@dataclass(frozen=True)
class BiregularReport:
    ok: bool
    left_degree: int
    right_degree: int
    violation: dict | None = None

    def __bool__(self):
        return self.ok


def validate_biregular(g: BipartiteGraph, k: int, d_right: int) -> BiregularReport:
    """Check every left degree equals ``k`` and every right degree equals ``d_right``.

    On failure the report names the first offending vertex (left side first).
    """
    for u, d in enumerate(g.left_degrees):
        if d != k:
            return BiregularReport(False, k, d_right, {"side": LEFT, "vertex": u, "degree": int(d)})
    for v, d in enumerate(g.right_degrees):
        if d != d_right:
            return BiregularReport(
                False, k, d_right, {"side": RIGHT, "vertex": v, "degree": int(d)}
            )
    return BiregularReport(True, k, d_right)


def complete_bipartite(left_count: int, right_count: int) -> BipartiteGraph:
    return BipartiteGraph(
        left_count, right_count, tuple(tuple(range(right_count)) for _ in range(left_count))
    )


def perfect_matching(n: int) -> BipartiteGraph:
    return BipartiteGraph(n, n, tuple((i,) for i in range(n)))


def parallel_edge_counts(g: BipartiteGraph) -> Counter:
    return Counter(g.edges())


def with_rows(g: BipartiteGraph, rows: Mapping[int, Sequence[int]]) -> BipartiteGraph:
    """Copy of ``g`` with the given left adjacency rows replaced."""
    adj = list(g.adjacency)
    for u, row in rows.items():
        adj[u] = tuple(row)
    return BipartiteGraph(g.left_count, g.right_count, tuple(adj), g.multigraph)
