import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cycle_graph, path_graph, random_graph, star_graph
from plantedgraphs.errors import BudgetExceededError, InvalidParameterError
from plantedgraphs.graph import DaryTree, Graph, Line, Star
from plantedgraphs.oracle import (
    aut_size,
    count_copies,
    count_embeddings,
    count_k_paths,
    exact_E0_L2_line,
    exact_identity_check,
    exact_likelihood_ratio,
    map_posterior_line,
)
from plantedgraphs.theory import markov_bound_E0L2


def brute_automorphisms(spec):
    k = spec.vertex_count()
    edges = {frozenset(e) for e in spec.local_edges()}
    return sum(
        all(frozenset((p[a], p[b])) in edges for a, b in spec.local_edges())
        for p in itertools.permutations(range(k))
    )


class TestAutSize:
    @pytest.mark.parametrize("spec, expected", [(Line(3), 2), (Line(2), 2), (Star(3), 6), (DaryTree(2, 2), 8), (DaryTree(3, 0), 1)])
    def test_examples(self, spec, expected):
        assert aut_size(spec) == expected

    @pytest.mark.parametrize(
        "spec", [Line(2), Line(5), Star(1), Star(2), Star(4), DaryTree(2, 1), DaryTree(2, 2), DaryTree(3, 1), DaryTree(1, 3)]
    )
    def test_matches_brute_force(self, spec):
        assert aut_size(spec) == brute_automorphisms(spec)


class TestCounting:
    def test_triangle_paths(self):
        c = count_copies(cycle_graph(3), Line(3))
        assert (c.embeddings, c.copies) == (6, 3)
        assert count_k_paths(cycle_graph(3), 3) == 6

    def test_path(self):
        c = count_copies(path_graph(3), Line(3))
        assert (c.embeddings, c.copies) == (2, 1)
        assert count_k_paths(path_graph(3), 3) == 2

    def test_star(self):
        assert count_copies(star_graph(3), Star(3)).copies == 1

    def test_four_cycle(self):
        assert count_k_paths(cycle_graph(4), 4) == 8

    def test_budget(self):
        g = Graph(8, list(itertools.combinations(range(8), 2)))
        with pytest.raises(BudgetExceededError):
            count_k_paths(g, 6, budget=100)

    @given(st.integers(0, 2**32 - 1), st.integers(3, 8), st.integers(2, 5))
    def test_paths_twice_copies(self, seed, n, K):
        g = random_graph(np.random.default_rng(seed), n, 0.4)
        assert count_k_paths(g, K) == 2 * count_copies(g, Line(K)).copies

    def test_complete_graph_counts(self):
        g = Graph(5, list(itertools.combinations(range(5), 2)))
        assert count_embeddings(g, DaryTree(2, 1)) == 5 * 4 * 3
        assert count_copies(g, Star(3)).copies == 5 * math.comb(4, 3)


class TestLikelihoodRatio:
    def test_single_edge(self):
        assert exact_likelihood_ratio(Graph(3, [(0, 1)]), Line(2), 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_triangle(self):
        assert exact_likelihood_ratio(cycle_graph(3), Line(3), 1.0) == pytest.approx(9.0, rel=1e-12)

    def test_empty(self):
        assert exact_likelihood_ratio(Graph(6), Star(2), 0.7) == 0.0

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_bad_lambda(self, lam):
        with pytest.raises(InvalidParameterError):
            exact_likelihood_ratio(Graph(3), Line(2), lam)


class TestIdentity:
    @pytest.mark.parametrize("n, spec, lam", [(4, Line(2), 1.0), (5, Line(3), 0.8), (5, Star(2), 1.5), (4, DaryTree(2, 1), 2.0)])
    def test_identity_holds(self, n, spec, lam):
        r = exact_identity_check(n, spec, lam)
        assert r.max_abs_error_P1_vs_LP0 <= 1e-12
        assert abs(r.sum_P1 - 1) <= 1e-12
        assert abs(r.E0_L - 1) <= 1e-12
        assert r.graphs == 2 ** math.comb(n, 2)

    def test_too_large(self):
        with pytest.raises(BudgetExceededError):
            exact_identity_check(7, Line(2), 1.0)


class TestSecondMoment:
    def test_forced(self):
        assert exact_E0_L2_line(2, 2, 1.0) == pytest.approx(2.0)

    def test_five_two(self):
        assert exact_E0_L2_line(5, 2, 1.0) == pytest.approx(1.4)

    def test_below_bound(self):
        v = exact_E0_L2_line(8, 4, 2.0)
        assert 1 < v < markov_bound_E0L2(8, 4, 2.0).bound

    @pytest.mark.parametrize("n, K", [(5, 3), (6, 3), (6, 4), (7, 3)])
    @pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
    def test_dominance(self, n, K, lam):
        exact = exact_E0_L2_line(n, K, lam)
        assert 1.0 <= exact <= markov_bound_E0L2(n, K, lam).bound * (1 + 1e-12)


class TestMapPosterior:
    def test_path(self):
        r = map_posterior_line(path_graph(3), 3)
        assert r.scores == (2, 2, 2) and r.top == (0, 1, 2)

    def test_path_plus_isolated(self):
        r = map_posterior_line(path_graph(3, n=4), 3)
        assert r.scores[3] == 0 and r.top == (0, 1, 2)

    def test_two_paths_tie_break(self):
        g = Graph(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
        r = map_posterior_line(g, 3)
        assert r.scores == (2,) * 6 and r.top == (0, 1, 2)

    def test_no_path(self):
        r = map_posterior_line(Graph(5), 3)
        assert r.scores == (0,) * 5 and r.top == (0, 1, 2)

    def test_unique_planted_path(self):
        g = Graph(7, [(4, 2), (2, 6), (6, 1), (3, 5)])
        assert map_posterior_line(g, 4).top == (1, 2, 4, 6)
