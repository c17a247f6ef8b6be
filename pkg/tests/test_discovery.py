import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dagbounds import graph
from dagbounds.discovery import (
    Cpdag, NearSingularWarning, _demote_cycles, fisher_z_independent, pc_cpdag, pc_knowledge,
    pc_skeleton,
)
from dagbounds.synthetic import Scm, attach_mechanisms, generate_data, sample_er_dag


def _linear(d, coefs, noise=0.1):
    adj = graph.from_edges(d, list(coefs))
    beta = np.zeros((d, d))
    for (i, j), b in coefs.items():
        beta[i, j] = b
    return Scm(adj, "linear_additive", beta, np.ones(d), np.zeros(d), np.ones(d), noise_scale=noise)


class TestFisherZ:
    def test_size_on_independent_noise(self):
        rng = np.random.default_rng(0)
        rejections = sum(not fisher_z_independent(rng.normal(size=(200, 2)), 0, 1) for _ in range(2000))
        assert 0.04 <= rejections / 2000 <= 0.06

    def test_chain_middle_separates(self):
        data = generate_data(_linear(3, {(0, 1): 0.9, (1, 2): 0.9}, noise=0.3), 5000, 1)
        assert fisher_z_independent(data, 0, 2, (1,))
        assert not fisher_z_independent(data, 0, 2)

    def test_zero_correlation_is_independent(self):
        x = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] * 5)
        for alpha in (0.05, 0.5, 0.99):
            assert fisher_z_independent(x, 0, 1, alpha=alpha)

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            fisher_z_independent(np.random.default_rng(0).normal(size=(4, 3)), 0, 1, (2,))

    def test_near_singular_conditioning_is_dependent(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=500)
        x = np.c_[rng.normal(size=500), rng.normal(size=500), z, z]
        with pytest.warns(NearSingularWarning):
            assert not fisher_z_independent(x, 0, 1, (2, 3))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 2))
    def test_symmetric(self, seed, k):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(100, 5)) @ rng.normal(size=(5, 5))
        cond = tuple(range(2, 2 + k))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearSingularWarning)
            for alpha in (0.01, 0.2):
                assert fisher_z_independent(x, 0, 1, cond, alpha) == fisher_z_independent(x, 1, 0, cond, alpha)


class TestCpdag:
    def test_rejects_both_directions(self):
        with pytest.raises(ValueError):
            Cpdag(2, frozenset({(0, 1), (1, 0)}))

    def test_rejects_directed_and_undirected(self):
        with pytest.raises(ValueError):
            Cpdag(2, frozenset({(0, 1)}), frozenset({frozenset((0, 1))}))

    def test_collider_is_oriented(self):
        data = generate_data(_linear(3, {(0, 2): 0.8, (1, 2): 0.8}), 5000, 2)
        for order in ([0, 1, 2], [2, 1, 0], [1, 2, 0]):
            c = pc_cpdag(data, 0.05, order)
            assert c.directed == {(0, 2), (1, 2)} and not c.undirected

    def test_chain_stays_undirected(self):
        data = generate_data(_linear(3, {(0, 1): 0.8, (1, 2): 0.8}), 5000, 2)
        c = pc_cpdag(data)
        assert not c.directed and c.undirected == {frozenset((0, 1)), frozenset((1, 2))}

    def test_meek_propagates_from_collider(self):
        scm = _linear(4, {(0, 2): 0.8, (1, 2): 0.8, (2, 3): 0.8})
        hits = sum(pc_cpdag(generate_data(scm, 5000, s), 0.01).directed == {(0, 2), (1, 2), (2, 3)}
                   for s in range(20))
        assert hits >= 18

    def test_independent_columns_give_empty_graph(self):
        empty = 0
        # three columns: three marginal tests at 1% each, so about 97% of runs are empty
        for seed in range(200):
            x = np.random.default_rng(seed).normal(size=(5000, 3))
            c = pc_cpdag(x, 0.01)
            empty += not c.directed and not c.undirected
        assert empty / 200 >= 0.95

    def test_column_order_can_matter(self):
        differs = 0
        for seed in range(20):
            scm = attach_mechanisms(sample_er_dag(6, 0.7, seed), "linear", seed)
            data = generate_data(scm, 500, seed)
            a = pc_cpdag(data, 0.05, list(range(6)))
            b = pc_cpdag(data, 0.05, list(range(5, -1, -1)))
            differs += a != b
        assert differs >= 1

    def test_seed_draws_an_order(self):
        data = generate_data(attach_mechanisms(sample_er_dag(5, 0.5, 1), "linear", 1), 1000, 1)
        assert pc_cpdag(data, seed=4) == pc_cpdag(data, seed=4)

    def test_json_shape(self):
        data = generate_data(_linear(3, {(0, 2): 0.8, (1, 2): 0.8}), 2000, 2)
        obj = json.loads(json.dumps(pc_cpdag(data).to_json()))
        assert obj == {"d": 3, "directed": [[0, 2], [1, 2]], "undirected": []}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_skeleton_conditioning_never_exceeds_degree(seed):
    rng = np.random.default_rng(seed)
    adj = sample_er_dag(6, 0.5, seed)
    data = generate_data(attach_mechanisms(adj, "linear", seed), 300, seed)
    record = []
    pc_skeleton(data, 0.05, rng.permutation(6), record)
    assert record
    assert all(len(cond) <= deg for _, _, cond, deg in record)


def test_skeleton_rejects_bad_order():
    with pytest.raises(ValueError):
        pc_skeleton(np.zeros((10, 3)), 0.05, [0, 0, 1])


class TestPcKnowledge:
    @pytest.fixture
    def data(self):
        return generate_data(attach_mechanisms(sample_er_dag(6, 0.5, 7), "linear", 7), 2000, 7)

    def test_single_permutation(self, data):
        k, prov = pc_knowledge(data, 1, 0.05, 3, return_provenance=True)
        c = prov.cpdags[0]
        assert c == pc_cpdag(data, 0.05, prov.orders[0])
        assert k.sure == c.directed
        non_adjacent = {(i, j) for i in range(6) for j in range(6) if i != j and not c.adjacent(i, j)}
        assert k.forbidden == non_adjacent

    def test_nested_monotonicity(self, data):
        prev = None
        for m in range(1, 9):
            k = pc_knowledge(data, m, 0.05, 11)
            if prev is not None:
                assert k.sure <= prev.sure and k.forbidden <= prev.forbidden
            prev = k

    def test_knowledge_is_valid(self):
        for seed in range(10):
            scm = attach_mechanisms(sample_er_dag(5, 0.6, seed), "linear", seed)
            k = pc_knowledge(generate_data(scm, 500, seed), 5, 0.05, seed)
            assert graph.is_acyclic(graph.from_edges(5, k.sure))
            assert not k.sure & k.forbidden

    def test_provenance_json(self, data):
        _, prov = pc_knowledge(data, 3, 0.05, 0, return_provenance=True)
        obj = json.loads(json.dumps(prov.to_json()))
        assert len(obj["orders"]) == len(obj["cpdags"]) == 3 and obj["demoted_sure"] == []

    def test_rejects_zero_permutations(self, data):
        with pytest.raises(ValueError):
            pc_knowledge(data, 0)


def test_cyclic_sure_edges_are_demoted():
    kept, demoted = _demote_cycles(3, {(0, 1), (1, 2), (2, 0)})
    assert demoted == [(2, 0)]
    assert kept == {(0, 1), (1, 2)}
