"""Random ground-truth SCMs and observational data."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import graph
from .estimation import Dataset

Kind = Literal["linear_additive", "sigmoid_mixed", "sigmoid_additive"]
KINDS = ("linear_additive", "sigmoid_mixed", "sigmoid_additive")
ALIASES = {"linear": "linear_additive", "sig_mix": "sigmoid_mixed", "sig mix": "sigmoid_mixed",
           "sig_add": "sigmoid_additive", "sig add": "sigmoid_additive"}


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown mechanism {kind!r}")
    return kind


@dataclass
class Scm:
    """Adjacency plus per-node mechanism parameters.

    ``beta[i, j]`` weights the edge i -> j (linear and sigmoid-additive).
    The sigmoid-mixed mechanism uses one ``beta_node[j]`` per node.
    """

    adjacency: np.ndarray
    kind: str
    beta: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    beta_node: np.ndarray
    noise_scale: float = 0.1
    root_low: float = -1.0
    root_high: float = 1.0
    seed: int | None = None
    order: list = field(default_factory=list)

    def __post_init__(self):
        self.adjacency = graph.as_adjacency(self.adjacency)
        if not self.order:
            self.order = graph.topological_order(self.adjacency)

    @property
    def d(self) -> int:
        return self.adjacency.shape[0]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "edges": [list(e) for e in graph.edges_of(self.adjacency)],
            "beta": self.beta.tolist(),
            "alpha": self.alpha.tolist(),
            "gamma": self.gamma.tolist(),
            "beta_node": self.beta_node.tolist(),
            "noise_scale": self.noise_scale,
            "root_low": self.root_low,
            "root_high": self.root_high,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj) -> "Scm":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            adjacency=graph.from_edges(obj["d"], obj["edges"]),
            kind=obj["kind"],
            beta=np.asarray(obj["beta"], dtype=float),
            alpha=np.asarray(obj["alpha"], dtype=float),
            gamma=np.asarray(obj["gamma"], dtype=float),
            beta_node=np.asarray(obj["beta_node"], dtype=float),
            noise_scale=obj.get("noise_scale", 0.1),
            root_low=obj.get("root_low", -1.0),
            root_high=obj.get("root_high", 1.0),
            seed=obj.get("seed"),
        )


def sample_er_dag(d: int, edge_prob: float, seed) -> np.ndarray:
    """Erdos-Renyi DAG over a uniformly random causal order."""
    if not 0 <= edge_prob <= 1:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(d)
    adj = np.zeros((d, d), dtype=np.int8)
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < edge_prob:
                adj[order[a], order[b]] = 1
    return adj


def _signed_uniform(rng, size) -> np.ndarray:
    # Uniform([-1, -0.25] U [0.25, 1])
    mag = rng.uniform(0.25, 1.0, size=size)
    sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return mag * sign


def attach_mechanisms(adj, kind: str, seed, *, noise_scale: float = 0.1,
                      root_low: float = -1.0, root_high: float = 1.0) -> Scm:
    kind = canonical_kind(kind)
    adj = graph.as_adjacency(adj)
    d = adj.shape[0]
    rng = np.random.default_rng(seed)
    beta = _signed_uniform(rng, (d, d)) * adj
    alpha = rng.exponential(scale=1 / 0.25, size=d) + 1.0
    gamma = rng.uniform(-2.0, 2.0, size=d)
    beta_node = _signed_uniform(rng, d)
    if kind == "linear_additive":
        alpha = np.ones(d)
        gamma = np.zeros(d)
    return Scm(adj, kind, beta, alpha, gamma, beta_node, noise_scale, root_low, root_high,
               seed=seed if isinstance(seed, int) else None)


def _node_value(scm: Scm, j: int, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    pa = np.flatnonzero(scm.adjacency[:, j])
    lam = scm.noise_scale
    if scm.kind == "linear_additive":
        return x[:, pa] @ scm.beta[pa, j] + lam * eps
    a, g = scm.alpha[j], scm.gamma[j]
    if scm.kind == "sigmoid_mixed":
        b = scm.beta_node[j]
        s = x[:, pa].sum(axis=1) + lam * eps
        return a * b * s / (1.0 + np.abs(b * (s + g)))
    b = scm.beta[pa, j]
    u = x[:, pa] + g
    return (a * b * u / (1.0 + np.abs(b * u))).sum(axis=1) + lam * eps


def _simulate(scm: Scm, n: int, rng, interventions: dict | None = None,
              draws: tuple | None = None) -> np.ndarray:
    d = scm.d
    if draws is None:
        roots = rng.uniform(scm.root_low, scm.root_high, size=(n, d))
        eps = rng.standard_normal(size=(n, d))
    else:
        roots, eps = draws
    x = np.zeros((n, d))
    interventions = interventions or {}
    for j in scm.order:
        if j in interventions:
            x[:, j] = interventions[j]
        elif not scm.adjacency[:, j].any():
            x[:, j] = roots[:, j]
        else:
            x[:, j] = _node_value(scm, j, x, eps[:, j])
    return x


def generate_data(scm: Scm, n: int = 5000, seed=0, names=None) -> Dataset:
    """Ancestral sampling in topological order."""
    rng = np.random.default_rng(seed)
    values = _simulate(scm, n, rng)
    return Dataset(values, names or [f"X{i}" for i in range(scm.d)])


def interventional_mean(scm: Scm, node: int, level: float, outcome: int, n: int, seed) -> float:
    rng = np.random.default_rng(seed)
    return float(_simulate(scm, n, rng, {node: level})[:, outcome].mean())


def total_effect_linear(scm: Scm, x: int, y: int) -> float:
    """Sum over directed x -> y paths of edge-coefficient products."""
    d = scm.d
    w = scm.beta * scm.adjacency
    return float(np.linalg.inv(np.eye(d) - w)[x, y])


def ground_truth_ate(scm: Scm, q, n_mc: int = 100_000, seed=0, return_se: bool = False):
    """E[Y | do(X=high)] - E[Y | do(X=low)] under the known SCM.

    Linear mechanisms use the path-coefficient algebra; the sigmoid ones use
    Monte Carlo with shared exogenous draws across the two interventions.
    """
    delta = q.level_high - q.level_low
    if scm.kind == "linear_additive":
        value = total_effect_linear(scm, q.treatment, q.outcome) * delta
        return (value, 0.0) if return_se else value
    if q.outcome not in graph.descendants(scm.adjacency, q.treatment):
        return (0.0, 0.0) if return_se else 0.0
    rng = np.random.default_rng(seed)
    d = scm.d
    draws = (rng.uniform(scm.root_low, scm.root_high, size=(n_mc, d)),
             rng.standard_normal(size=(n_mc, d)))
    hi = _simulate(scm, n_mc, rng, {q.treatment: q.level_high}, draws)[:, q.outcome]
    lo = _simulate(scm, n_mc, rng, {q.treatment: q.level_low}, draws)[:, q.outcome]
    diff = hi - lo
    value = float(diff.mean())
    se = float(diff.std(ddof=1) / np.sqrt(n_mc))
    return (value, se) if return_se else value


def monte_carlo_ate(scm: Scm, q, n_mc: int = 100_000, seed=0) -> tuple[float, float]:
    """Independent-draw Monte Carlo estimate and its standard error, any mechanism."""
    rng = np.random.default_rng(seed)
    hi = _simulate(scm, n_mc, rng, {q.treatment: q.level_high})[:, q.outcome]
    lo = _simulate(scm, n_mc, rng, {q.treatment: q.level_low})[:, q.outcome]
    value = float(hi.mean() - lo.mean())
    se = float(np.sqrt(hi.var(ddof=1) / n_mc + lo.var(ddof=1) / n_mc))
    return value, se
