import random
from fractions import Fraction

import numpy as np
import pytest

from lossless_expanders.composer import compose, neighborhood_decomposition
from lossless_expanders.errors import ValidationError
from lossless_expanders.gadget import certify_lossless_exact
from lossless_expanders.graph import BipartiteGraph, complete_bipartite, neighborhood, perfect_matching, with_rows
from lossless_expanders.graphio import read_graph
from lossless_expanders.planner import generate_random_biregular
from lossless_expanders.verifier import (
    default_mu,
    expansion_accounting,
    heavy_decomposition,
    verify_exact,
    verify_sampled,
)

from conftest import naive_worst, random_left_regular

HALF_GADGET = BipartiteGraph(4, 2, ((0,), (0,), (1,), (1,)))


def test_verify_exact_matching():
    rep = verify_exact(perfect_matching(5), 1.0, 0.0)
    assert rep.passed and rep.worst_ratio == 1 and rep.certifying
    assert rep.sets_examined == 31


def test_verify_exact_dup_pair(fixtures):
    rep = verify_exact(read_graph(fixtures / "dup_pair.txt"), 0.5, 0.25)
    assert not rep.passed
    assert rep.witness == (0, 1)


def test_verify_exact_matches_naive():
    g = random_left_regular(12, 9, 3, 21)
    rep = verify_exact(g, 4 / 12, 0.3)
    assert (rep.worst_ratio, rep.witness) == naive_worst(g, 4)


def test_sampled_rejects_zero_trials():
    with pytest.raises(ValidationError):
        verify_sampled(perfect_matching(4), 0.5, 0.1, trials=0, seed=1)


def test_sampled_matching_composition():
    outer = generate_random_biregular(40, 2, 4, 1)
    comp = compose(outer, perfect_matching(4))
    rep = verify_sampled(comp.result, 0.5, 0.0, trials=300, seed=3)
    assert rep.worst_ratio == 1 and rep.passed and not rep.certifying
    assert rep.sets_examined == 300


def test_sampled_is_deterministic():
    g = random_left_regular(30, 20, 3, 2)
    a = verify_sampled(g, 0.3, 0.2, trials=200, seed=9)
    b = verify_sampled(g, 0.3, 0.2, trials=200, seed=9)
    c = verify_sampled(g, 0.3, 0.2, trials=200, seed=9, threads=2)
    assert a == b == c


def test_sampled_never_below_exact():
    for seed in range(5):
        g = random_left_regular(12, 10, 3, seed)
        ex = verify_exact(g, 0.25, 0.2)
        sa = verify_sampled(g, 0.25, 0.2, trials=200, seed=seed)
        assert sa.worst_ratio >= ex.worst_ratio


def test_planted_pair_found():
    # matching-gadget composition expands perfectly except for the planted pair
    n = 20
    outer = generate_random_biregular(n, 2, 4, 4)
    comp = compose(outer, perfect_matching(4))
    g = comp.result
    bad = with_rows(g, {1: g.adjacency[0]})
    mu = 10 / n
    # P(a sampled set holds both 0 and 1) averaged over sizes 1..10 is
    # sum s(s-1) / (10 * 380) = 330 / 3800 ~ 0.087, so 400 trials miss with
    # probability below 1e-15
    rep = verify_sampled(bad, mu, 0.0, trials=400, seed=0)
    assert not rep.passed
    assert {0, 1} <= set(rep.witness)
    size = len(rep.witness)
    assert rep.worst_ratio == Fraction(size - 1, size)


def test_default_mu():
    assert default_mu(4, 0.2) == (pytest.approx(0.64), False)
    assert default_mu(4, 0.3) == (1.0, True)


def _incidence_oracle(outer, s):
    counts = {}
    for w in s:
        for v in outer.adjacency[w]:
            counts[v] = counts.get(v, 0) + 1
    return counts


def test_heavy_empty_set():
    outer = generate_random_biregular(24, 3, 8, 0)
    hd = heavy_decomposition(outer, [], 0.25)
    assert hd.heavy == ()
    assert hd.counts_all == (24, 0, 0, 0)
    assert hd.ratio_le1 == 1


def test_heavy_threshold_above_set_size():
    outer = generate_random_biregular(24, 3, 8, 0)
    hd = heavy_decomposition(outer, [0, 1, 2], 0.5)  # threshold 4 > |S|
    assert hd.heavy == ()
    assert hd.counts_in_s[0] == 3


@pytest.mark.parametrize("seed", range(4))
def test_heavy_matches_recount(seed):
    outer = generate_random_biregular(120, 3, 8, seed, method="swap")
    rng = random.Random(seed)
    s = sorted(rng.sample(range(120), 12))
    hd = heavy_decomposition(outer, s, 0.25)
    counts = _incidence_oracle(outer, s)
    heavy = sorted(v for v, c in counts.items() if c >= 2)
    assert list(hd.heavy) == heavy
    per_w = [sum(v in heavy for v in outer.adjacency[w]) for w in range(120)]
    assert list(hd.counts_all) == [per_w.count(i) for i in range(4)]
    assert sum(hd.counts_all) == 120
    assert list(hd.counts_in_s) == [[per_w[w] for w in s].count(i) for i in range(4)]
    # each w with two heavy neighbours yields a distinct 2-path inside H
    assert hd.s_ge2 <= hd.heavy_weight


def test_accounting_single_vertex():
    comp = compose(complete_bipartite(4, 3), complete_bipartite(4, 2))
    # every pair of gadget ports shares its two slots, so loss 1/2 is needed
    led = expansion_accounting(comp, [2], mu0=0.5, eps0=0.5)
    lines = led["lines"]
    assert lines["exact_neighbors"]["value"] == comp.d0 * comp.k == 6
    assert lines["nonheavy_contribution"]["value"] == 6
    assert led["certificate_covers"]


def test_accounting_no_heavy_hand_built():
    outer = complete_bipartite(4, 3)
    comp = compose(outer, HALF_GADGET)
    # {0, 2}: each v sees two ports mapping to distinct slots; threshold 3 > 2
    led = expansion_accounting(comp, [0, 2], mu0=0.75, eps0=0.5)
    assert led["heavy"]["heavy"] == []
    lines = led["lines"]
    assert lines["exact_neighbors"]["value"] == 6
    assert lines["nonheavy_lower_bound"]["value"] == pytest.approx(0.5 * 1 * 6)
    assert lines["nonheavy_lower_bound"]["asserted"] and lines["nonheavy_lower_bound"]["holds"]


def test_accounting_heavy_cluster_excluded():
    outer = generate_random_biregular(48, 3, 8, 7, method="swap")
    gadget = random_left_regular(8, 6, 2, 3)
    comp = compose(outer, gadget)
    v = 5
    s = list(outer.right_adjacency[v])
    led = expansion_accounting(comp, s, mu0=0.5, eps0=0.25)
    assert v in led["heavy"]["heavy"]
    exact = led["lines"]["exact_neighbors"]["value"]
    parts = neighborhood_decomposition(comp, s)
    heavy_part = sum(len(x) for u, x in parts.items() if u in led["heavy"]["heavy"])
    assert led["lines"]["nonheavy_contribution"]["value"] == exact - heavy_part


def test_accounting_flags_uncovered():
    outer = generate_random_biregular(48, 3, 8, 7, method="swap")
    gadget = random_left_regular(8, 6, 2, 3)
    comp = compose(outer, gadget)
    cert = certify_lossless_exact(gadget, 1 / 8, 0.0)  # only singletons
    s = list(outer.right_adjacency[0])[:3]
    led = expansion_accounting(comp, s, mu0=0.5, eps0=0.25, certificate=cert)
    assert not led["certificate_covers"]
    assert 0 in led["uncovered_clusters"]
    line = led["lines"]["nonheavy_lower_bound"]
    assert not line["asserted"] and "unverified" in line["note"]


def test_accounting_exact_sum_equals_neighborhood():
    outer = generate_random_biregular(60, 3, 6, 1, method="swap")
    gadget = random_left_regular(6, 5, 2, 0)
    comp = compose(outer, gadget)
    rng = np.random.default_rng(0)
    for _ in range(10):
        s = sorted(rng.choice(60, int(rng.integers(1, 15)), replace=False).tolist())
        led = expansion_accounting(comp, s, 0.34, 0.25)
        assert led["lines"]["cluster_sum"]["value"] == len(neighborhood(comp.result, s))
