"""Plain-text edge-list serialization.

Bipartite::

    bipartite <left_count> <right_count> <edge_count>
    u v            # one line per edge, u left, v right

Weighted::

    weighted <n> <entry_count>
    u v w          # u < v

Lines starting with ``#`` are comments. Output is canonically sorted so
files (and their hashes) are stable.
"""
from __future__ import annotations

from pathlib import Path

from .errors import GraphFormatError, ValidationError
from .graph import BipartiteGraph, WeightedGraph


def format_graph(g) -> str:
    if isinstance(g, BipartiteGraph):
        lines = [f"bipartite {g.left_count} {g.right_count} {g.edge_count}"]
        lines.extend(f"{u} {v}" for u, v in g.edges())
    elif isinstance(g, WeightedGraph):
        lines = [f"weighted {g.vertex_count} {len(g.weights)}"]
        lines.extend(f"{u} {v} {w}" for (u, v), w in g.weights.items())
    else:
        raise TypeError(f"cannot serialize {type(g).__name__}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str, multigraph: bool = False):
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    if not rows:
        raise GraphFormatError("empty graph file")

    lineno, head = rows[0]
    kind = head[0]
    try:
        if kind == "bipartite" and len(head) == 4:
            n_left, n_right, m = (int(x) for x in head[1:])
        elif kind == "weighted" and len(head) == 3:
            n, m = int(head[1]), int(head[2])
        else:
            raise ValueError
    except ValueError:
        raise GraphFormatError(f"line {lineno}: malformed header {' '.join(head)!r}") from None

    body = rows[1:]
    if len(body) != m:
        raise GraphFormatError(f"header declares {m} entries, found {len(body)}")
    width = 2 if kind == "bipartite" else 3
    entries = []
    for lineno, parts in body:
        if len(parts) != width:
            raise GraphFormatError(f"line {lineno}: expected {width} fields")
        try:
            entries.append(tuple(int(x) for x in parts))
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer field") from None

    try:
        if kind == "bipartite":
            for u, v in entries:
                if not (0 <= u < n_left and 0 <= v < n_right):
                    raise GraphFormatError(f"edge ({u}, {v}) outside {n_left}x{n_right}")
            return BipartiteGraph.from_edges(n_left, n_right, entries, multigraph=multigraph)
        weights = {}
        for u, v, w in entries:
            if not u < v:
                raise GraphFormatError(f"weighted entry ({u}, {v}) must have u < v")
            if (u, v) in weights:
                raise GraphFormatError(f"duplicate weighted entry ({u}, {v})")
            weights[(u, v)] = w
        return WeightedGraph(n, weights)
    except GraphFormatError:
        raise
    except ValidationError as exc:
        raise GraphFormatError(str(exc)) from None


def read_graph(path, multigraph: bool = False):
    return parse_graph(Path(path).read_text(), multigraph=multigraph)


def write_graph(g, path) -> None:
    Path(path).write_text(format_graph(g))
