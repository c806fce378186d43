import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import binary_tree, cycle_graph, path_graph, random_graph, star_graph
from plantedgraphs.detect import (
    H0,
    H1,
    component_count_test,
    dary_height_messages,
    dary_test,
    k_path_test,
    lambda_hat,
    longest_path,
    run_test,
    small_component_counts,
    star_test,
)
from plantedgraphs.errors import InvalidParameterError
from plantedgraphs.graph import DaryTree, Graph, Line, plant, sample_er
from plantedgraphs.oracle import count_copies, count_k_paths


def brute_longest_path(g):
    best = 1 if g.n else 0
    for K in range(2, g.n + 1):
        if count_k_paths(g, K) == 0:
            break
        best = K
    return best


def is_simple_path(g, path):
    return len(set(path)) == len(path) and all(g.has_edge(a, b) for a, b in zip(path, path[1:]))


class TestComponentCount:
    def test_isolated(self):
        r = component_count_test(Graph(50), 3)
        assert r.decision == H0
        s = r.stats
        assert (s["A1"], s["A2"], s["A3"], s["lambda_hat"], s["k_hat"], s["fallback"]) == (50, 0, 0, 0.0, 0.0, 1)

    def test_one_edge(self):
        r = component_count_test(Graph(100, [(0, 1)]), 10)
        s = r.stats
        assert (s["A1"], s["A2"], s["A3"]) == (98, 1, 0)
        assert s["lambda_hat"] == 0 and s["k_hat"] == 2 and s["threshold"] == 10
        assert r.decision == H0

    def test_counts_triangle_and_path(self):
        g = Graph(9, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (6, 7)])
        assert small_component_counts(g) == (1, 1, 2)

    def test_decision_matches_rule(self):
        g = plant(sample_er(10**4, 2.0, 1), Line(2000), 2).graph
        r = component_count_test(g, 2000)
        assert r.decision == (H1 if r.stats["k_hat"] >= r.stats["threshold"] else H0)
        assert r.stats["threshold"] == pytest.approx(math.sqrt(2000 * 100))

    def test_lambda_hat_close(self):
        assert lambda_hat(sample_er(10**5, 2.0, 3)) == pytest.approx(2.0, abs=0.4)

    def test_json(self):
        d = json.loads(component_count_test(Graph(5), 1).to_json())
        assert d["test"] == "components" and d["decision"] == "H0"


class TestLongestPath:
    @pytest.mark.parametrize(
        "g, length",
        [(path_graph(7), 7), (cycle_graph(5), 5), (star_graph(4), 3), (Graph(3), 1), (Graph(0), 0)],
        ids=["path7", "cycle5", "star4", "empty", "null"],
    )
    def test_examples(self, g, length):
        lp = longest_path(g)
        assert lp.length == length and lp.exact
        assert len(lp.path) == length
        assert is_simple_path(g, lp.path)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.floats(0.1, 0.6))
    def test_matches_brute_force(self, seed, n, p):
        g = random_graph(np.random.default_rng(seed), n, p)
        lp = longest_path(g)
        assert lp.exact
        assert lp.length == brute_longest_path(g)
        assert is_simple_path(g, lp.path)

    def test_budget_flag(self):
        # K_{3,9}: the longest path covers 7 of 12 vertices, so the search cannot stop early
        g = Graph(12, [(u, v) for u in range(3) for v in range(3, 12)])
        assert longest_path(g).length == 7
        lp = longest_path(g, budget=20)
        assert not lp.exact and lp.length <= 7 and is_simple_path(g, lp.path)


class TestKPath:
    def test_examples(self):
        assert k_path_test(path_graph(6), 6).decision == H1
        assert k_path_test(Graph(5), 2).decision == H0

    def test_invalid_K(self):
        with pytest.raises(InvalidParameterError):
            k_path_test(Graph(3), 1)

    def test_planted_always_found(self):
        for s in range(5):
            g = plant(sample_er(10**4, 0.5, s), Line(30), s).graph
            assert k_path_test(g, 30).decision == H1


class TestStar:
    def test_examples(self):
        r = star_test(star_graph(5), 5)
        assert r.decision == H1 and r.stats["max_degree"] == 5
        r = star_test(path_graph(10), 3)
        assert r.decision == H0 and r.stats["max_degree"] == 2

    def test_argmax_lowest(self):
        assert star_test(Graph(4, [(0, 1), (2, 3)]), 1).stats["argmax"] == 0

    def test_empty(self):
        assert star_test(Graph(10), 1).decision == H0


class TestDaryHeights:
    def test_binary_tree(self):
        h = dary_height_messages(binary_tree(2), 2, 3)
        assert h.exact
        assert h.heights[0] == 2
        assert all(h.heights[v] >= 1 for v in (1, 2))
        assert all(h.heights[v] == 0 for v in range(3, 7))

    def test_triangle(self):
        h = dary_height_messages(cycle_graph(3), 2, 1)
        assert (h.heights >= 1).all() and not h.exact

    def test_monotone_in_h_max(self):
        g = sample_er(2000, 3.0, 4)
        a = dary_height_messages(g, 2, 4).heights
        b = dary_height_messages(g, 2, 5).heights
        assert (b >= a).all()

    @given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.sampled_from([2, 3]), st.integers(1, 3))
    def test_agrees_with_oracle_when_acyclic(self, seed, n, D, h):
        g = random_graph(np.random.default_rng(seed), n, 0.35)
        heights = dary_height_messages(g, D, h)
        if not heights.exact:
            return
        assert (heights.max_height >= h) == (count_copies(g, DaryTree(D, h)).copies > 0)


class TestDaryTest:
    def test_planted_on_empty(self):
        g = plant(Graph(20), DaryTree(2, 3), 1).graph
        r = dary_test(g, 2, 3)
        assert r.decision == H1 and r.exact and r.stats["witness_root"] >= 0

    def test_empty(self):
        assert dary_test(Graph(10), 2, 1).decision == H0

    @given(st.integers(0, 2**32 - 1), st.integers(3, 10), st.floats(0.2, 0.7), st.sampled_from([2, 3]), st.integers(1, 2))
    def test_exact_on_any_small_graph(self, seed, n, p, D, h):
        # the embedding search settles cyclic neighbourhoods too
        g = random_graph(np.random.default_rng(seed), n, p)
        r = dary_test(g, D, h)
        assert r.exact
        assert (r.decision == H1) == (count_copies(g, DaryTree(D, h)).copies > 0)

    def test_budget_fallback(self):
        g = plant(sample_er(10**4, 2.0, 5), DaryTree(2, 7), 5).graph
        r = dary_test(g, 2, 7, budget=1)
        assert r.decision == H1 and not r.exact

    @pytest.mark.parametrize("D, h", [(1, 2), (2, 0)])
    def test_invalid(self, D, h):
        with pytest.raises(InvalidParameterError):
            dary_test(Graph(3), D, h)


class TestRunTest:
    def test_dispatch(self):
        g = path_graph(5)
        assert run_test(g, "kpath", K=5).test == "kpath"
        assert run_test(g, "star", K=2).decision == H1
        assert run_test(g, "dary", D=2, h=1).decision == H1
        assert run_test(g, "dary", D=2, h=2).decision == H0

    def test_auto(self):
        assert run_test(sample_er(5000, 0.5, 1), "auto", K=40).test == "kpath"
        assert run_test(sample_er(5000, 3.0, 1), "auto", K=40).test == "components"

    @pytest.mark.parametrize("kw", [{"test": "kpath"}, {"test": "dary", "D": 2}, {"test": "nope", "K": 2}])
    def test_missing_args(self, kw):
        test = kw.pop("test")
        with pytest.raises(InvalidParameterError):
            run_test(path_graph(3), test, **kw)

    def test_pure(self):
        g = sample_er(3000, 1.5, 9)
        assert run_test(g, "components", K=10).to_json() == run_test(g, "components", K=10).to_json()
