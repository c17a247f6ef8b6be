"""Adjustment-based estimation of interventional expectations and ATEs.

The same estimators run in two modes: on a plain adjacency (floats, used by
the brute-force oracle and the bootstrap) and on a sampled graph whose
straight-through entries scale the adjustment columns, so the estimate is
differentiable with respect to the graph parameters.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import graph
from .diffcore import SingularSystemError, Tensor, as_tensor, concat, solve

log = logging.getLogger(__name__)


class EstimationError(RuntimeError):
    """An estimator diverged or produced a non-finite value."""


@dataclass
class Dataset:
    values: np.ndarray
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("dataset must be a 2-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("dataset contains non-finite entries")
        if not self.names:
            self.names = [f"X{i}" for i in range(self.values.shape[1])]
        if len(self.names) != self.values.shape[1]:
            raise ValueError("one name per column required")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def rows(self, index) -> "Dataset":
        return Dataset(self.values[index], list(self.names))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.names)
            w.writerows([repr(float(v)) for v in row] for row in self.values)

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        return cls(np.array(rows[1:], dtype=float), rows[0])


@dataclass(frozen=True)
class CausalQuery:
    """ATE of ``treatment`` on ``outcome`` between two intervention levels."""

    treatment: int
    outcome: int
    level_high: float = 1.0
    level_low: float = 0.0
    adjustment: Literal["parent", "optimal"] = "parent"
    estimator: Literal["linear", "nonlinear"] = "linear"

    def __post_init__(self):
        if self.treatment == self.outcome:
            raise ValueError("treatment and outcome must differ")
        if self.adjustment not in ("parent", "optimal"):
            raise ValueError(f"unknown adjustment {self.adjustment!r}")
        if self.estimator not in ("linear", "nonlinear"):
            raise ValueError(f"unknown estimator {self.estimator!r}")


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 32
    lr: float = 0.05
    max_epochs: int = 1000
    patience: int = 25
    tol: float = 1e-5


# -- adjustment sets and their gradient-carrying masks ---------------------------


def adjustment_set(adj, q: CausalQuery) -> set[int]:
    if q.adjustment == "parent":
        return graph.parent_adjustment(adj, q.treatment)
    return graph.optimal_adjustment(adj, q.treatment, q.outcome)


def mask_weights(adj, q: CausalQuery) -> np.ndarray:
    """Constant d x d weights turning graph entries into a per-node mask.

    ``(A * W).sum(axis=1)[z]`` is the activation of adjustment node ``z``: the
    edge ``z -> x`` for parent adjustment, or the mean of ``z``'s edges into
    causal nodes for optimal adjustment.
    """
    a = graph.as_adjacency(adj)
    d = a.shape[0]
    w = np.zeros((d, d))
    x, y = q.treatment, q.outcome
    cn = graph.causal_nodes(a, x, y) if q.adjustment == "optimal" else set()
    if not cn:
        for z in graph.parents(a, x):
            w[z, x] = 1.0
        return w
    for z in graph.optimal_adjustment(a, x, y):
        targets = sorted(graph.children(a, z) & cn)
        for c in targets:
            w[z, c] = 1.0 / len(targets)
    return w


def select_columns_differentiable(data: Dataset, mask_row) -> Tensor:
    """Data with column j scaled by ``mask_row[j]``; gradients reach the mask."""
    mask_row = as_tensor(mask_row)
    return Tensor(data.values) * mask_row.reshape(1, data.d)


# -- linear ------------------------------------------------------------------------


def _ols_coef(design: np.ndarray, target: np.ndarray) -> float:
    xtx = design.T @ design
    xty = design.T @ target
    if np.linalg.cond(xtx) > 1e12:
        xtx = xtx + 1e-6 * np.eye(xtx.shape[0])
    return float(np.linalg.solve(xtx, xty)[1])


def ols_effect_plain(values: np.ndarray, x: int, y: int, z) -> float:
    """Treatment coefficient of ``y ~ 1 + x + Z`` (no tape)."""
    z = sorted(z)
    design = np.column_stack([np.ones(len(values)), values[:, x], values[:, z]])
    return _ols_coef(design, values[:, y])


def ols_effect(data: Dataset, treatment: int, z_mask, outcome: int) -> Tensor:
    """Differentiable treatment coefficient of ``y ~ 1 + x + mask * Z``.

    Columns whose mask is forward-zero are not part of the regression.  A
    ridge of 1e-6 is added to a numerically singular normal matrix; the
    result's ``meta`` then records ``{"ridge": True}``.
    """
    z_mask = as_tensor(z_mask)
    idx = [j for j in np.flatnonzero(z_mask.data) if j != treatment]
    n = data.n
    parts = [Tensor(np.ones((n, 1))), Tensor(data.values[:, [treatment]])]
    if idx:
        parts.append(select_columns_differentiable(data, z_mask)[:, idx])
    design = concat(parts, axis=1)
    target = Tensor(data.values[:, outcome])
    xtx = design.T @ design
    ridge = np.linalg.cond(xtx.data) > 1e12
    if ridge:
        log.warning("singular normal equations; adding ridge 1e-6")
        xtx = xtx + Tensor(1e-6 * np.eye(xtx.shape[0]))
    try:
        beta = solve(xtx, design.T @ target)
    except SingularSystemError:
        beta = solve(xtx + Tensor(1e-6 * np.eye(xtx.shape[0])), design.T @ target)
        ridge = True
    out = beta[1]
    out.meta = {"ridge": bool(ridge)}
    return out


# -- nonlinear -----------------------------------------------------------------------


@dataclass
class MlpModel:
    """One-hidden-layer tanh regressor with internal standardisation."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    in_mean: np.ndarray
    in_std: np.ndarray
    out_mean: float
    out_std: float
    epochs: int = 0
    loss: float = float("nan")

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        h = np.tanh(((inputs - self.in_mean) / self.in_std) @ self.w1 + self.b1)
        return (h @ self.w2 + self.b2) * self.out_std + self.out_mean

    def predict_tensor(self, inputs: Tensor) -> Tensor:
        scaled = (inputs - Tensor(self.in_mean)) * Tensor(1.0 / self.in_std)
        h = (scaled @ Tensor(self.w1) + Tensor(self.b1)).tanh()
        return (h @ Tensor(self.w2) + self.b2) * self.out_std + self.out_mean


def fit_mlp(inputs: np.ndarray, target: np.ndarray, cfg: MlpConfig = MlpConfig(), seed=0) -> MlpModel:
    """Full-batch Adam on squared error with a plateau stop."""
    rng = np.random.default_rng(seed)
    n, p = inputs.shape
    in_mean = inputs.mean(axis=0)
    in_std = inputs.std(axis=0)
    in_std[in_std == 0] = 1.0
    out_mean = float(target.mean())
    out_std = float(target.std()) or 1.0
    xs = (inputs - in_mean) / in_std
    ys = (target - out_mean) / out_std

    lim1, lim2 = 1 / np.sqrt(p), 1 / np.sqrt(cfg.hidden)
    params = [
        rng.uniform(-lim1, lim1, size=(p, cfg.hidden)),
        rng.uniform(-lim1, lim1, size=cfg.hidden),
        rng.uniform(-lim2, lim2, size=cfg.hidden),
        np.array(rng.uniform(-lim2, lim2)),
    ]
    m = [np.zeros_like(w) for w in params]
    v = [np.zeros_like(w) for w in params]
    b1_, b2_, eps = 0.9, 0.999, 1e-8
    history = []
    best: list[float] = []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        w1, b1, w2, b2 = params
        h = np.tanh(xs @ w1 + b1)
        resid = h @ w2 + b2 - ys
        loss = float(np.mean(resid**2))
        if not np.isfinite(loss):
            raise EstimationError(f"MLP loss became non-finite at epoch {epoch} (n={n}, inputs={p})")
        history.append(loss)
        g_out = 2.0 * resid / n
        g_w2 = h.T @ g_out
        g_b2 = np.array(g_out.sum())
        g_pre = np.outer(g_out, w2) * (1.0 - h**2)
        grads = [xs.T @ g_pre, g_pre.sum(axis=0), g_w2, g_b2]
        for k, g in enumerate(grads):
            m[k] = b1_ * m[k] + (1 - b1_) * g
            v[k] = b2_ * v[k] + (1 - b2_) * g * g
            mhat = m[k] / (1 - b1_**epoch)
            vhat = v[k] / (1 - b2_**epoch)
            params[k] = params[k] - cfg.lr * mhat / (np.sqrt(vhat) + eps)
        # plateau: the best loss has improved by less than tol over the last patience epochs
        best.append(min(loss, best[-1]) if best else loss)
        if epoch > cfg.patience:
            old = best[-cfg.patience - 1]
            if (old - best[-1]) / max(abs(old), 1e-12) < cfg.tol:
                break
    w1, b1, w2, b2 = params
    return MlpModel(w1, b1, w2, float(b2), in_mean, in_std, out_mean, out_std, epoch, history[-1])


def mlp_ate(data: Dataset, treatment: int, z_mask, outcome: int, levels=(1.0, 0.0),
            cfg: MlpConfig = MlpConfig(), seed=0, model: MlpModel | None = None):
    """Mean over rows of f(high, z_i) - f(low, z_i) for a fitted regressor f.

    Returns a Tensor when ``z_mask`` is a Tensor that requires grad (the
    network is frozen; gradients reach the mask through its inputs), and a
    float otherwise.
    """
    z_mask_t = as_tensor(z_mask)
    idx = [j for j in np.flatnonzero(z_mask_t.data) if j != treatment]
    values = data.values
    target = values[:, outcome]
    if np.ptp(target) == 0:
        return Tensor(0.0) if z_mask_t.requires_grad else 0.0
    if model is None:
        model = fit_mlp(np.column_stack([values[:, treatment], values[:, idx]]), target, cfg, seed)
    high, low = levels
    n = data.n
    if not z_mask_t.requires_grad:
        zcols = values[:, idx] * z_mask_t.data[idx]
        f_hi = model.predict(np.column_stack([np.full(n, high), zcols]))
        f_lo = model.predict(np.column_stack([np.full(n, low), zcols]))
        return float(np.mean(f_hi - f_lo))
    parts_hi = [Tensor(np.full((n, 1), high))]
    parts_lo = [Tensor(np.full((n, 1), low))]
    if idx:
        zcols = select_columns_differentiable(data, z_mask_t)[:, idx]
        parts_hi.append(zcols)
        parts_lo.append(zcols)
    f_hi = model.predict_tensor(concat(parts_hi, axis=1))
    f_lo = model.predict_tensor(concat(parts_lo, axis=1))
    return (f_hi - f_lo).mean()


# -- dispatch ------------------------------------------------------------------------------


def _mlp_seed(seed, z) -> int:
    # deterministic per (run seed, adjustment set)
    key = sum(1 << int(j) for j in z)
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, key]).generate_state(1)[0])


def estimate_adjacency(adj, data: Dataset, q: CausalQuery, seed=0,
                       mlp_cfg: MlpConfig = MlpConfig()) -> float:
    """Plain-float estimate on a fixed DAG."""
    a = graph.as_adjacency(adj)
    if not graph.is_acyclic(a):
        raise graph.CycleError("cannot estimate on a cyclic graph")
    z = adjustment_set(a, q)
    if q.estimator == "linear":
        return ols_effect_plain(data.values, q.treatment, q.outcome, z) * (q.level_high - q.level_low)
    mask = np.zeros(data.d)
    mask[sorted(z)] = 1.0
    return mlp_ate(data, q.treatment, mask, q.outcome, (q.level_high, q.level_low), mlp_cfg,
                   seed=_mlp_seed(seed, z))


def estimate_query(graph_or_sample, data: Dataset, q: CausalQuery, seed=0,
                   mlp_cfg: MlpConfig = MlpConfig(), mlp_cache: dict | None = None):
    """Estimate the query for a sampled graph (Tensor result) or an adjacency (float).

    For a sample, the adjustment set comes from the hard matrix and the
    column mask from the straight-through matrix.  ``mlp_cache`` maps an
    adjustment set to an already fitted regressor.
    """
    st = getattr(graph_or_sample, "st", None)
    if st is None:
        return estimate_adjacency(graph_or_sample, data, q, seed, mlp_cfg)
    hard = graph.as_adjacency(graph_or_sample.hard)
    if not graph.is_acyclic(hard):
        raise graph.CycleError("cannot estimate on a cyclic graph")
    w = mask_weights(hard, q)
    mask = (st * Tensor(w)).sum(axis=1)
    if q.estimator == "linear":
        return ols_effect(data, q.treatment, mask, q.outcome) * (q.level_high - q.level_low)
    z = adjustment_set(hard, q)
    model = None
    key = frozenset(z)
    if mlp_cache is not None and key in mlp_cache:
        model = mlp_cache[key]
    values = data.values
    target = values[:, q.outcome]
    if model is None and np.ptp(target) > 0:
        idx = [j for j in sorted(z) if j != q.treatment]
        model = fit_mlp(np.column_stack([values[:, q.treatment], values[:, idx]]), target,
                        mlp_cfg, _mlp_seed(seed, z))
        if mlp_cache is not None:
            mlp_cache[key] = model
    return mlp_ate(data, q.treatment, mask, q.outcome, (q.level_high, q.level_low), mlp_cfg,
                   model=model)
