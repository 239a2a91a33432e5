from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lossless_expanders.enumeration import enumerate_worst, subset_count
from lossless_expanders.errors import BudgetExceeded, SearchExhausted, ValidationError
from lossless_expanders.gadget import (
    GadgetSpec,
    certify_lossless_exact,
    generate_random_gadget,
    search_gadget,
    suggest_d0,
    suggest_mu0,
)
from lossless_expanders.graph import BipartiteGraph, complete_bipartite, perfect_matching

from conftest import naive_worst, random_left_regular


def test_spec_invariants():
    with pytest.raises(ValidationError):
        GadgetSpec(n=8, beta0=0.25, d0=3, mu0=0.5, eps0=0.1)  # floor(2) < 3
    with pytest.raises(ValidationError):
        GadgetSpec(n=8, beta0=1.0, d0=2, mu0=0.1, eps0=0.1)  # floor(0.8) = 0
    assert GadgetSpec(n=32, beta0=1.0, d0=2, mu0=3 / 32, eps0=0.1).max_size == 3


def test_generation_is_deterministic():
    spec = GadgetSpec(n=16, beta0=0.75, d0=4, mu0=0.2, eps0=0.25)
    a = generate_random_gadget(spec, 1)
    assert a == generate_random_gadget(spec, 1)
    assert a != generate_random_gadget(spec, 2)


def test_generation_forced_complete():
    spec = GadgetSpec(n=6, beta0=0.5, d0=3, mu0=0.2, eps0=0.25)
    assert generate_random_gadget(spec, 9) == complete_bipartite(6, 3)


def test_generation_degree_recount():
    spec = GadgetSpec(n=16, beta0=0.75, d0=4, mu0=0.2, eps0=0.25)
    g = generate_random_gadget(spec, 1)
    assert g.right_count == 12
    left = Counter(u for u, _ in g.edges())
    right = Counter(v for _, v in g.edges())
    assert set(left.values()) == {4} and len(left) == 16
    assert [right.get(v, 0) for v in range(12)] == g.right_degrees.tolist()
    assert sum(right.values()) == 64


def test_certify_matching():
    cert = certify_lossless_exact(perfect_matching(6), mu=1.0, eps=0.0)
    assert cert.passed and cert.worst_ratio == 1
    assert cert.sets_examined == 2**6 - 1


def test_certify_duplicated_pair(fixtures):
    from lossless_expanders.graphio import read_graph

    g = read_graph(fixtures / "dup_pair.txt")
    cert = certify_lossless_exact(g, mu=0.5, eps=0.25)
    assert cert.worst_ratio == Fraction(1, 2)
    assert cert.witness == (0, 1)
    assert not cert.passed
    assert certify_lossless_exact(g, mu=0.5, eps=0.5).passed


def test_certify_random_gadget_against_naive():
    spec = GadgetSpec(n=16, beta0=0.75, d0=4, mu0=0.2, eps0=0.25)
    g = generate_random_gadget(spec, 3)
    cert = certify_lossless_exact(g, mu=0.2, eps=0.25)
    ratio, wit = naive_worst(g, 3)
    assert cert.max_size == 3
    assert (cert.worst_ratio, cert.witness) == (ratio, wit)
    assert cert.passed == (ratio >= Fraction(3, 4))


def test_budget_refusal():
    g = random_left_regular(20, 20, 2, 0)
    with pytest.raises(BudgetExceeded):
        certify_lossless_exact(g, mu=0.5, eps=0.1, budget=1000)


def test_budget_env(monkeypatch):
    monkeypatch.setenv("EXPANDER_ENUM_BUDGET", "5")
    with pytest.raises(BudgetExceeded):
        certify_lossless_exact(perfect_matching(6), mu=1.0, eps=0.0)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 12),
    m=st.integers(4, 14),
    d=st.integers(1, 4),
    size=st.integers(1, 4),
    seed=st.integers(0, 2**32),
)
def test_pruned_engine_equals_naive(n, m, d, size, seed):
    g = random_left_regular(n, m, d, seed)
    res = enumerate_worst(g, size)
    ratio, wit = naive_worst(g, min(size, n))
    assert (res.worst_ratio, res.witness) == (ratio, wit)
    assert res.covered == subset_count(n, min(size, n))
    unpruned = enumerate_worst(g, size, prune=False)
    assert unpruned.evaluated == unpruned.covered


def test_threads_do_not_change_result():
    g = random_left_regular(14, 10, 3, 4)
    a = enumerate_worst(g, 4, threads=1)
    b = enumerate_worst(g, 4, threads=2)
    assert (a.worst_ratio, a.witness, a.covered) == (b.worst_ratio, b.witness, b.covered)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), eps=st.fractions(0, 1), bump=st.fractions(0, 1))
def test_monotone_in_eps(seed, eps, bump):
    g = random_left_regular(10, 8, 3, seed)
    e1 = float(eps)
    e2 = min(0.999, e1 + float(bump))
    if certify_lossless_exact(g, 0.3, e1).passed:
        assert certify_lossless_exact(g, 0.3, e2).passed


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), s1=st.integers(1, 4), s2=st.integers(0, 3))
def test_antimonotone_in_mu(seed, s1, s2):
    n = 10
    g = random_left_regular(n, 8, 3, seed)
    small = certify_lossless_exact(g, s1 / n, 0.2)
    big = certify_lossless_exact(g, (s1 + s2) / n, 0.2)
    assert big.worst_ratio <= small.worst_ratio <= 1
    if not small.passed:
        assert not big.passed


def test_search_trivial_spec():
    spec = GadgetSpec(n=8, beta0=0.5, d0=4, mu0=1 / 8, eps0=0.1)
    g, cert = search_gadget(spec, max_attempts=5, seed=0)
    assert cert.passed and cert.attempts == 1
    assert g == complete_bipartite(8, 4)


def test_search_impossible_spec_exhausts():
    # 8 left vertices with one edge each into 2 right vertices: some pair collides
    spec = GadgetSpec(n=8, beta0=0.25, d0=1, mu0=0.25, eps0=0.0)
    with pytest.raises(SearchExhausted) as info:
        search_gadget(spec, max_attempts=4, seed=7)
    g, cert = info.value.best
    assert isinstance(g, BipartiteGraph)
    assert cert.worst_ratio == Fraction(1, 2)
    assert info.value.attempts == 4


def test_search_reports_attempts():
    spec = GadgetSpec(n=16, beta0=1.0, d0=2, mu0=2 / 16, eps0=0.25)
    g, cert = search_gadget(spec, max_attempts=200, seed=5)
    assert cert.passed and 1 <= cert.attempts <= 200
    assert g == generate_random_gadget(spec, 5 + cert.attempts - 1)


def test_engineering_constants():
    # ceil(4 ln(e / (eps0 beta0)) / eps0)
    assert suggest_d0(0.25, 7.975) == 5
    assert suggest_d0(0.25, 2.0) == 28
    assert suggest_mu0(0.25, 2.0, 28) == pytest.approx(0.25 * 2 / (8 * 28))
