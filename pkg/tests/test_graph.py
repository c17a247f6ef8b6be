import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dagbounds import graph
from oracles import d_separated_paths, is_acyclic_bruteforce, random_dag, transitive_closure

CHAIN = graph.from_edges(3, [(0, 1), (1, 2)])
COLLIDER = graph.from_edges(3, [(0, 1), (2, 1)])
# Z=0, X=1, Y=2
CONFOUNDER = graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
# X=0, M=1, Y=2
MEDIATOR = graph.from_edges(3, [(0, 1), (1, 2)])


@st.composite
def dags(draw, max_d=7):
    d = draw(st.integers(2, max_d))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.sampled_from([0.2, 0.4, 0.6]))
    return random_dag(np.random.default_rng(seed), d, p)


class TestAcyclicity:
    def test_empty_graph(self):
        assert graph.is_acyclic(np.zeros((4, 4)))

    def test_two_cycle(self):
        assert not graph.is_acyclic(graph.from_edges(2, [(0, 1), (1, 0)]))

    def test_illustrative_matrix_with_two_free_edges_on(self):
        # X1->X2, X3->X4, X4->X2 plus X1->X3 and X1->X4
        adj = graph.from_edges(4, [(0, 1), (2, 3), (3, 1), (0, 2), (0, 3)])
        assert graph.is_acyclic(adj)
        order = graph.topological_order(adj)
        assert order.index(0) < order.index(2) < order.index(3) < order.index(1)

    def test_exhaustive_small_matrices_match_closure(self):
        for d in (2, 3):
            slots = [(i, j) for i in range(d) for j in range(d) if i != j]
            for bits in itertools.product([0, 1], repeat=len(slots)):
                adj = graph.from_edges(d, [s for s, b in zip(slots, bits) if b])
                assert graph.is_acyclic(adj) == is_acyclic_bruteforce(adj)


class TestTopologicalOrder:
    def test_chain(self):
        assert graph.topological_order(CHAIN) == [0, 1, 2]

    def test_empty_is_identity(self):
        assert graph.topological_order(np.zeros((4, 4))) == [0, 1, 2, 3]

    def test_cycle_raises(self):
        with pytest.raises(graph.CycleError):
            graph.topological_order(graph.from_edges(2, [(0, 1), (1, 0)]))

    @settings(max_examples=100, deadline=None)
    @given(dags())
    def test_every_edge_points_forward(self, adj):
        pos = {v: k for k, v in enumerate(graph.topological_order(adj))}
        assert all(pos[i] < pos[j] for i, j in graph.edges_of(adj))


class TestDescendants:
    def test_chain(self):
        assert graph.descendants(CHAIN, 0) == {1, 2}

    def test_isolated(self):
        assert graph.descendants(np.zeros((3, 3)), 1) == set()

    @settings(max_examples=100, deadline=None)
    @given(dags())
    def test_matches_boolean_matrix_powers(self, adj):
        closure = transitive_closure(adj)
        for v in range(adj.shape[0]):
            assert graph.descendants(adj, v) == set(np.flatnonzero(closure[v]))
            assert v not in graph.descendants(adj, v)


class TestDSeparation:
    def test_chain_blocked_by_middle(self):
        assert graph.d_separated(CHAIN, 0, 2, {1})
        assert not graph.d_separated(CHAIN, 0, 2, set())

    def test_collider(self):
        assert graph.d_separated(COLLIDER, 0, 2, set())
        assert not graph.d_separated(COLLIDER, 0, 2, {1})

    def test_collider_opened_by_descendant(self):
        adj = graph.from_edges(4, [(0, 1), (2, 1), (1, 3)])
        assert not graph.d_separated(adj, 0, 2, {3})

    def test_preconditions(self):
        with pytest.raises(ValueError):
            graph.d_separated(CHAIN, 0, 0, set())
        with pytest.raises(ValueError):
            graph.d_separated(CHAIN, 0, 2, {0})

    def test_fixed_six_node_graphs_all_triples(self):
        rng = np.random.default_rng(11)
        for _ in range(4):
            adj = random_dag(rng, 6, 0.4)
            for x, y in itertools.combinations(range(6), 2):
                rest = [v for v in range(6) if v not in (x, y)]
                for r in range(4):
                    for z in itertools.combinations(rest, r):
                        assert graph.d_separated(adj, x, y, z) == d_separated_paths(adj, x, y, z)

    @settings(max_examples=150, deadline=None)
    @given(dags(max_d=7), st.data())
    def test_matches_path_oracle_and_is_symmetric(self, adj, data):
        d = adj.shape[0]
        x, y = data.draw(st.lists(st.integers(0, d - 1), min_size=2, max_size=2, unique=True))
        rest = [v for v in range(d) if v not in (x, y)]
        z = data.draw(st.lists(st.sampled_from(rest), unique=True, max_size=3)) if rest else []
        got = graph.d_separated(adj, x, y, z)
        assert got == d_separated_paths(adj, x, y, z)
        assert got == graph.d_separated(adj, y, x, z)


class TestAdjustment:
    def test_parent_chain(self):
        assert graph.parent_adjustment(CHAIN, 1) == {0}

    def test_parent_root(self):
        assert graph.parent_adjustment(CHAIN, 0) == set()

    def test_parent_illustrative_fixture(self):
        base = [(0, 1), (2, 3), (3, 1)]
        assert graph.parent_adjustment(graph.from_edges(4, base), 3) == {2}
        assert graph.parent_adjustment(graph.from_edges(4, base + [(0, 3)]), 3) == {0, 2}

    def test_optimal_confounder(self):
        assert graph.optimal_adjustment(CONFOUNDER, 1, 2) == {0}

    def test_optimal_mediator(self):
        assert graph.optimal_adjustment(MEDIATOR, 0, 2) == set()

    def test_optimal_falls_back_to_parents(self):
        adj = graph.from_edges(4, [(3, 0), (1, 2)])
        assert graph.optimal_adjustment(adj, 0, 2) == {3}

    def test_validity_examples(self):
        assert graph.is_valid_adjustment(CONFOUNDER, 1, 2, {0})
        assert not graph.is_valid_adjustment(CONFOUNDER, 1, 2, set())
        assert not graph.is_valid_adjustment(MEDIATOR, 0, 2, {1})

    def test_thousand_random_instances_are_valid(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 1000:
            adj = random_dag(rng, int(rng.integers(3, 8)), float(rng.choice([0.3, 0.5])))
            d = adj.shape[0]
            x, y = rng.choice(d, size=2, replace=False)
            if y in graph.parents(adj, x):
                continue
            assert graph.is_valid_adjustment(adj, x, y, graph.parent_adjustment(adj, x))
            opt = graph.optimal_adjustment(adj, x, y)
            if y not in opt:
                assert graph.is_valid_adjustment(adj, x, y, opt)
            checked += 1

    @settings(max_examples=150, deadline=None)
    @given(dags(), st.data())
    def test_optimal_avoids_forbidden_nodes(self, adj, data):
        d = adj.shape[0]
        x = data.draw(st.integers(0, d - 1))
        desc = sorted(graph.descendants(adj, x))
        if not desc:
            return
        y = data.draw(st.sampled_from(desc))
        cn = graph.causal_nodes(adj, x, y)
        closure = cn | graph.reachable(adj, cn)
        assert not graph.optimal_adjustment(adj, x, y) & closure
