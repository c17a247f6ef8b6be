"""Differentiable graph samplers.

``sample_adjacency`` draws every free entry independently with a two-class
straight-through Gumbel-Softmax; sure and forbidden entries are fixed.
``sample_dpdag`` draws a permutation and an upper-triangular edge pattern,
so every sample is acyclic by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import Tensor, straight_through
from .knowledge import EdgeKnowledge


@dataclass
class GraphSample:
    soft: Tensor
    hard: np.ndarray
    st: Tensor


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _gumbel(rng, shape) -> np.ndarray:
    return rng.gumbel(0.0, 1.0, size=shape)


def gumbel_edge_probability(pi1: float, g0: float, g1: float, tau: float) -> tuple[float, float]:
    """Two-class Gumbel-Softmax weights (absent, present) for one edge."""
    if not 0 < pi1 < 1 or tau <= 0:
        raise ValueError("need 0 < pi1 < 1 and tau > 0")
    logits = np.array([np.log(1 - pi1) + g0, np.log(pi1) + g1]) / tau
    e = np.exp(logits - logits.max())
    a0, a1 = e / e.sum()
    return float(a0), float(a1)


@dataclass
class ParamGraph:
    """Edge logits with sure/forbidden entries frozen.

    ``fixed`` holds 1 for sure, 0 for forbidden (and the diagonal); ``free``
    marks trainable entries.  Edge probability is ``sigmoid(logit)``.
    """

    logits: Tensor
    free: np.ndarray
    fixed: np.ndarray
    temperature: float = 1.0
    decay: float = 0.9997
    floor: float = 1e-2

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        self.free = np.asarray(self.free, dtype=bool)
        np.fill_diagonal(self.free, False)
        self.fixed = np.asarray(self.fixed, dtype=float) * ~self.free

    @classmethod
    def from_knowledge(cls, k: EdgeKnowledge, init: float = 0.0, **kw) -> "ParamGraph":
        free = np.zeros((k.d, k.d), dtype=bool)
        for i, j in k.uncertain_slots:
            free[i, j] = True
        logits = Tensor(np.where(free, init, 0.0), requires_grad=True)
        return cls(logits, free, k.sure_matrix().astype(float), **kw)

    @property
    def d(self) -> int:
        return self.free.shape[0]

    def probabilities(self) -> np.ndarray:
        p = 1.0 / (1.0 + np.exp(-self.logits.data))
        return np.where(self.free, p, self.fixed)


def anneal(p, factor: float | None = None, floor: float | None = None) -> float:
    """Multiply the temperature by the decay factor, never going below the floor."""
    factor = p.decay if factor is None else factor
    floor = p.floor if floor is None else floor
    p.temperature = max(p.temperature * factor, floor)
    return p.temperature


def sample_adjacency(p: ParamGraph, seed) -> GraphSample:
    rng = _rng(seed)
    d = p.d
    g0 = _gumbel(rng, (d, d))
    g1 = _gumbel(rng, (d, d))
    # log(pi1) - log(1 - pi1) == logit, so the two-class softmax collapses to a sigmoid
    score = p.logits + Tensor(g1 - g0)
    soft_free = (score * (1.0 / p.temperature)).sigmoid()
    free = Tensor(p.free.astype(float))
    soft = soft_free * free + Tensor(p.fixed)
    hard = np.where(p.free, (score.data > 0).astype(float), p.fixed)
    return GraphSample(soft, hard, straight_through(hard, soft))


# -- DP-DAG ------------------------------------------------------------------------


@dataclass
class DpDagParams:
    perm_scores: Tensor
    edge_logits: Tensor
    forbidden: np.ndarray
    temperature: float = 1.0
    decay: float = 0.9997
    floor: float = 1e-2

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        self.forbidden = np.asarray(self.forbidden, dtype=bool)

    @classmethod
    def from_knowledge(cls, k: EdgeKnowledge, **kw) -> "DpDagParams":
        """Only forbidden edges are kept; sure edges become uncertain."""
        scores = Tensor(np.zeros(k.d), requires_grad=True)
        logits = Tensor(np.zeros((k.d, k.d)), requires_grad=True)
        return cls(scores, logits, k.forbidden_matrix().astype(bool), **kw)

    @property
    def d(self) -> int:
        return self.forbidden.shape[0]


def _soft_sort(scores: Tensor, tau: float) -> Tensor:
    """Row k is a softmax over nodes, peaked at the node with the k-th largest score."""
    ranked = np.sort(scores.data)[::-1].copy()
    diff = (Tensor(ranked.reshape(-1, 1)) - scores.reshape(1, -1)).abs()
    return (diff * (-1.0 / tau)).softmax(axis=1)


def sample_dpdag(p: DpDagParams, seed) -> GraphSample:
    """A = P^T U P with P a sampled permutation and U strictly upper triangular."""
    rng = _rng(seed)
    d = p.d
    tau = p.temperature
    perturbed = p.perm_scores + Tensor(_gumbel(rng, d))
    order = np.argsort(-perturbed.data, kind="stable")
    perm_hard = np.zeros((d, d))
    perm_hard[np.arange(d), order] = 1.0
    perm_soft = _soft_sort(perturbed, tau)
    perm_st = straight_through(perm_hard, perm_soft)

    upper = np.triu(np.ones((d, d)), k=1)
    g0 = _gumbel(rng, (d, d))
    g1 = _gumbel(rng, (d, d))
    score = p.edge_logits + Tensor(g1 - g0)
    u_soft = (score * (1.0 / tau)).sigmoid() * Tensor(upper)
    u_hard = (score.data > 0) * upper
    u_st = straight_through(u_hard, u_soft)

    keep = Tensor((~p.forbidden).astype(float))
    hard = perm_hard.T @ u_hard @ perm_hard * (~p.forbidden)
    soft = (perm_soft.T @ u_soft @ perm_soft) * keep
    st = straight_through(hard, (perm_st.T @ u_st @ perm_st) * keep)
    return GraphSample(soft, hard, st)

