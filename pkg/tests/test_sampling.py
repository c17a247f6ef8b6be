import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dagbounds import graph
from dagbounds.acyclicity import acyclicity_dagma, acyclicity_notears
from dagbounds.diffcore import Tensor
from dagbounds.knowledge import EdgeKnowledge, random_knowledge
from dagbounds.sampling import (
    DpDagParams, ParamGraph, anneal, gumbel_edge_probability, sample_adjacency, sample_dpdag,
)
from oracles import fig1_knowledge


class TestGumbelProbability:
    def test_symmetric(self):
        for tau in (0.1, 1.0, 5.0):
            assert gumbel_edge_probability(0.5, 0.0, 0.0, tau) == pytest.approx((0.5, 0.5))

    def test_zero_temperature_limit_is_one_hot(self):
        a0, a1 = gumbel_edge_probability(0.6, 0.0, 0.1, 1e-3)
        assert a1 == pytest.approx(1.0) and a0 == pytest.approx(0.0, abs=1e-12)

    def test_direct_formula(self):
        logits = np.array([np.log(0.2) + 0.3, np.log(0.8) - 0.1])
        expected = np.exp(logits) / np.exp(logits).sum()
        assert gumbel_edge_probability(0.8, 0.3, -0.1, 1.0) == pytest.approx(tuple(expected), abs=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            gumbel_edge_probability(1.0, 0, 0, 1)
        with pytest.raises(ValueError):
            gumbel_edge_probability(0.5, 0, 0, 0)


class TestSampleAdjacency:
    def test_frozen_entries(self):
        k = fig1_knowledge()
        p = ParamGraph.from_knowledge(k)
        for seed in range(50):
            s = sample_adjacency(p, seed)
            for i, j in k.sure:
                assert s.hard[i, j] == 1 and s.soft.data[i, j] == 1
            for i, j in k.forbidden:
                assert s.hard[i, j] == 0 and s.soft.data[i, j] == 0
            assert set(np.unique(s.hard)) <= {0.0, 1.0}
            np.testing.assert_array_equal(s.st.data, s.hard)

    def test_fully_frozen_has_no_variance(self):
        adj = graph.from_edges(3, [(0, 1), (1, 2)])
        k = random_knowledge(adj, 1.0, 1.0, 0)
        p = ParamGraph.from_knowledge(k)
        for seed in range(20):
            np.testing.assert_array_equal(sample_adjacency(p, seed).hard, adj)

    def test_saturated_logits(self):
        p = ParamGraph.from_knowledge(EdgeKnowledge(3), init=20.0)
        rng = np.random.default_rng(0)
        ones = sum(sample_adjacency(p, rng).hard[0, 1] for _ in range(10_000))
        assert ones / 10_000 >= 1 - 1e-6

    def test_deterministic_given_seed(self):
        p = ParamGraph.from_knowledge(EdgeKnowledge(4))
        a, b = sample_adjacency(p, 9), sample_adjacency(p, 9)
        np.testing.assert_array_equal(a.hard, b.hard)
        np.testing.assert_array_equal(a.soft.data, b.soft.data)

    def test_straight_through_gradient_equals_soft_gradient(self):
        p = ParamGraph.from_knowledge(fig1_knowledge())
        w = Tensor(np.random.default_rng(3).normal(size=(4, 4)))
        s = sample_adjacency(p, 5)
        (s.st * w).sum().backward()
        g_st = p.logits.grad.copy()
        p.logits.zero_grad()
        s = sample_adjacency(p, 5)
        (s.soft * w).sum().backward()
        np.testing.assert_array_equal(g_st, p.logits.grad)

    def test_frozen_entries_get_no_gradient(self):
        k = fig1_knowledge()
        p = ParamGraph.from_knowledge(k)
        sample_adjacency(p, 1).st.sum().backward()
        for i, j in k.sure | k.forbidden:
            assert p.logits.grad[i, j] == 0

    def test_two_cycles_occur(self):
        p = ParamGraph.from_knowledge(EdgeKnowledge(2))
        hits = sum(not graph.is_acyclic(sample_adjacency(p, s).hard) for s in range(200))
        assert hits > 0


class TestAnneal:
    def test_one_step(self):
        p = ParamGraph.from_knowledge(EdgeKnowledge(2))
        assert anneal(p) == pytest.approx(0.9997)

    def test_ten_thousand_steps(self):
        p = ParamGraph.from_knowledge(EdgeKnowledge(2))
        for _ in range(10_000):
            anneal(p)
        assert p.temperature == pytest.approx(0.9997**10_000, rel=1e-9)
        assert p.temperature == pytest.approx(0.0498, abs=1e-4)

    def test_floor(self):
        p = ParamGraph.from_knowledge(EdgeKnowledge(2), temperature=1e-2)
        assert anneal(p) == 1e-2

    def test_rejects_nonpositive_temperature(self):
        with pytest.raises(ValueError):
            ParamGraph.from_knowledge(EdgeKnowledge(2), temperature=0.0)


class TestDpDag:
    def test_identity_permutation_saturated(self):
        d = 4
        p = DpDagParams(Tensor(np.array([300.0, 200.0, 100.0, 0.0]), requires_grad=True),
                        Tensor(np.full((d, d), 50.0), requires_grad=True), np.zeros((d, d), bool))
        s = sample_dpdag(p, 0)
        np.testing.assert_array_equal(s.hard, np.triu(np.ones((d, d)), k=1))

    def test_forbidden_always_zero(self):
        k = fig1_knowledge()
        p = DpDagParams.from_knowledge(k)
        for seed in range(100):
            s = sample_dpdag(p, seed)
            for i, j in k.forbidden:
                assert s.hard[i, j] == 0 and s.soft.data[i, j] == 0

    def test_sure_edges_not_enforced(self):
        k = fig1_knowledge()
        p = DpDagParams.from_knowledge(k)
        assert any(not k.allows(sample_dpdag(p, s).hard) for s in range(50))

    def test_thousand_samples_acyclic_with_zero_penalty(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            d = int(rng.integers(2, 8))
            p = DpDagParams(Tensor(rng.normal(size=d) * 3), Tensor(rng.normal(size=(d, d)) * 3),
                            rng.random((d, d)) < 0.3, temperature=float(rng.uniform(0.05, 1.0)))
            s = sample_dpdag(p, rng)
            assert graph.is_acyclic(s.hard)
            assert abs(acyclicity_notears(s.hard).item()) <= 1e-9
            assert abs(acyclicity_dagma(s.hard, 1.0).item()) <= 1e-9
            np.testing.assert_array_equal(s.st.data, s.hard)

    def test_gradients_reach_both_parameter_sets(self):
        p = DpDagParams.from_knowledge(EdgeKnowledge(4))
        s = sample_dpdag(p, 3)
        (s.st * Tensor(np.arange(16.0).reshape(4, 4))).sum().backward()
        assert np.any(p.edge_logits.grad != 0)
        assert np.any(p.perm_scores.grad != 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hard_is_binary_and_soft_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    p = ParamGraph(Tensor(rng.normal(size=(d, d)) * 4, requires_grad=True),
                   rng.random((d, d)) < 0.6, (rng.random((d, d)) < 0.3).astype(float),
                   temperature=float(rng.uniform(0.01, 2)))
    s = sample_adjacency(p, rng)
    assert set(np.unique(s.hard)) <= {0.0, 1.0}
    assert np.all((s.soft.data >= 0) & (s.soft.data <= 1))
    frozen = ~p.free
    np.testing.assert_array_equal(s.hard[frozen], s.soft.data[frozen])
