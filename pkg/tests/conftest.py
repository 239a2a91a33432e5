import itertools
import random
from fractions import Fraction
from pathlib import Path

import pytest

from lossless_expanders.graph import BipartiteGraph

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_RESULTS = []


@pytest.fixture
def fixtures():
    return FIXTURES


def naive_worst(g, max_size):
    """Brute-force oracle: recompute |N(S)| from scratch for every subset.

    Returns (ratio, witness) minimizing (ratio, witness) lexicographically,
    or (1, ()) when there is nothing to enumerate.
    """
    d = len(g.adjacency[0])
    best = None
    for size in range(1, max_size + 1):
        for s in itertools.combinations(range(g.left_count), size):
            nb = set()
            for u in s:
                for v in g.adjacency[u]:
                    nb.add(v)
            key = (Fraction(len(nb), d * size), s)
            if best is None or key < best:
                best = key
    return best if best else (Fraction(1), ())


def random_left_regular(n_left, n_right, d, seed):
    rng = random.Random(seed)
    rows = tuple(tuple(sorted(rng.sample(range(n_right), d))) for _ in range(n_left))
    return BipartiteGraph(n_left, n_right, rows)


def edge_scan_neighborhood(g, s):
    s = set(s)
    return sorted({v for u, v in g.edges() if u in s})


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)
