"""Gradient-based search for the extremes of a causal query over compatible DAGs."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np

from . import graph
from .acyclicity import AcyclicityConfig, acyclicity, dagma_safe_s, h_value
from .diffcore import Tensor
from .estimation import CausalQuery, Dataset, MlpConfig, estimate_adjacency, estimate_query
from .knowledge import EdgeKnowledge, brute_force_bounds
from .sampling import DpDagParams, ParamGraph, anneal, sample_adjacency, sample_dpdag

log = logging.getLogger(__name__)


class NoFeasibleSampleError(RuntimeError):
    """No sampled graph satisfied the knowledge and acyclicity during a run."""


@dataclass
class LagrangianState:
    lam: float = 2.0
    tau: float = 0.1
    tau_max: float = 4.0
    gamma: float = 1.2
    direction: Literal["min", "max"] = "min"
    convention: Literal["paper", "standard"] = "paper"


def penalty(h, st: LagrangianState):
    """xi(h) = -lam*h + tau*h^2/2 (paper) or lam*h + tau*h^2/2 (standard)."""
    sign = -1.0 if st.convention == "paper" else 1.0
    return h * (sign * st.lam) + (h * h) * (st.tau / 2.0)


def lagrangian_loss(q_value, h_value, st: LagrangianState):
    """+q for the lower bound, -q for the upper bound, plus the penalty."""
    q_term = q_value if st.direction == "min" else -q_value
    return q_term + penalty(h_value, st)


def lagrangian_update(st: LagrangianState, h: float) -> LagrangianState:
    if st.convention == "paper":
        lam = max(0.0, st.lam - st.tau * h)
    else:
        lam = st.lam + st.tau * h
    return replace(st, lam=lam, tau=min(st.tau * st.gamma, st.tau_max))


class Adam:
    def __init__(self, params: list[Tensor], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        for k, p in enumerate(self.params):
            g = p.grad
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            mhat = self.m[k] / (1 - self.b1**self.t)
            vhat = self.v[k] / (1 - self.b2**self.t)
            p.data = p.data - self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class SearchConfig:
    """Hyperparameters of one bound search; ``None`` picks the size-based default."""

    rounds: int | None = None
    steps_per_round: int = 30
    lr: float | None = None
    temperature: float = 1.0
    decay: float = 0.9997
    temperature_floor: float = 1e-2
    acyclicity: AcyclicityConfig = field(default_factory=AcyclicityConfig)
    al_convention: Literal["paper", "standard"] = "paper"
    lambda0: float = 2.0
    tau0: float = 0.1
    tau_max: float = 4.0
    gamma: float = 1.2
    logit_init: float = 0.0
    mlp: MlpConfig = field(default_factory=MlpConfig)

    def rounds_for(self, d: int) -> int:
        if self.rounds is not None:
            return self.rounds
        return 100 if d <= 6 else 200

    def lr_for(self, method: str) -> float:
        if self.lr is not None:
            return self.lr
        return 0.3 if method == "lagrangian" else 1e-4

    def to_json(self) -> dict:
        out = asdict(self)
        out["acyclicity"] = asdict(self.acyclicity)
        out["mlp"] = asdict(self.mlp)
        return out


@dataclass
class BoundEstimate:
    value: float
    graph: np.ndarray
    direction: str
    method: str
    sigma: float = 0.0
    trace: list = field(default_factory=list)
    feasible_samples: int = 0
    runtime_sec: float = 0.0


def run_bound_search(data: Dataset, knowledge: EdgeKnowledge, q: CausalQuery,
                     method: Literal["lagrangian", "dpdag"] = "lagrangian",
                     direction: Literal["min", "max"] = "min",
                     cfg: SearchConfig | None = None, seed: int = 0) -> BoundEstimate:
    """Search for the smallest (``min``) or largest (``max``) query value.

    Every step samples a graph, and the query is recorded only when the hard
    sample is acyclic and respects the knowledge in force (DP-DAG drops the
    sure edges).  The best recorded value and its graph are returned.
    """
    cfg = cfg or SearchConfig()
    if method not in ("lagrangian", "dpdag"):
        raise ValueError(f"unknown method {method!r}")
    if direction not in ("min", "max"):
        raise ValueError(f"unknown direction {direction!r}")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    d = knowledge.d
    anneal_kw = dict(temperature=cfg.temperature, decay=cfg.decay, floor=cfg.temperature_floor)
    if method == "lagrangian":
        params = ParamGraph.from_knowledge(knowledge, init=cfg.logit_init, **anneal_kw)
        leaves = [params.logits]
        sampler = sample_adjacency
        active = knowledge
    else:
        params = DpDagParams.from_knowledge(knowledge, **anneal_kw)
        leaves = [params.perm_scores, params.edge_logits]
        sampler = sample_dpdag
        active = knowledge.without_sure()
    opt = Adam(leaves, cfg.lr_for(method))
    state = LagrangianState(cfg.lambda0, cfg.tau0, cfg.tau_max, cfg.gamma, direction, cfg.al_convention)
    sign = 1.0 if direction == "min" else -1.0
    mlp_cache: dict = {}
    best_value, best_graph = None, None
    trace = []
    feasible = 0
    h_soft = 0.0
    for rnd in range(cfg.rounds_for(d)):
        for _ in range(cfg.steps_per_round):
            sample = sampler(params, rng)
            opt.zero_grad()
            terms = []
            if graph.is_acyclic(sample.hard) and active.allows(sample.hard):
                q_val = estimate_query(sample, data, q, seed=seed, mlp_cfg=cfg.mlp, mlp_cache=mlp_cache)
                value = q_val.item()
                feasible += 1
                if best_value is None or sign * value < sign * best_value:
                    best_value, best_graph = value, sample.hard.astype(np.int8)
                terms.append(q_val * sign)
            if method == "lagrangian":
                acfg = cfg.acyclicity
                if acfg.kind == "dagma":
                    acfg = replace(acfg, s=dagma_safe_s(sample.st.data, acfg.s))
                terms.append(penalty(acyclicity(sample.st, acfg), state))
            loss = sum(terms[1:], terms[0]) if terms else None
            if loss is not None and loss.requires_grad:
                loss.backward()
                opt.step()
            anneal(params)
        if method == "lagrangian":
            h_soft = h_value(sample.soft.data, cfg.acyclicity)
            state = lagrangian_update(state, h_soft)
        trace.append({"round": rnd, "best": best_value, "h": h_soft, "lambda": state.lam,
                      "tau": state.tau, "feasible": feasible})
    if best_value is None:
        raise NoFeasibleSampleError(
            f"{method}/{direction}: no feasible sample in {len(trace) * cfg.steps_per_round} steps "
            f"(d={d}, uncertain={len(knowledge.uncertain_slots)})")
    return BoundEstimate(best_value, best_graph, direction, method, trace=trace,
                         feasible_samples=feasible, runtime_sec=time.perf_counter() - start)


def bootstrap_widen(data: Dataset, est: BoundEstimate, q: CausalQuery, B: int = 50, seed: int = 0,
                    mlp_cfg: MlpConfig = MlpConfig()) -> float:
    """Std of the query re-estimated on ``B`` with-replacement resamples, graph held fixed."""
    rng = np.random.default_rng(seed)
    values = []
    for b in range(B):
        idx = rng.integers(0, data.n, size=data.n)
        values.append(estimate_adjacency(est.graph, data.rows(idx), q, seed=seed + b, mlp_cfg=mlp_cfg))
    est.sigma = float(np.std(values, ddof=1)) if B > 1 else 0.0
    return est.sigma


@dataclass
class BoundsResult:
    method: str
    lower: float
    upper: float
    sigma_lower: float
    sigma_upper: float
    arg_lower: np.ndarray
    arg_upper: np.ndarray
    runtime_sec: float
    feasible_samples: int
    config_echo: dict = field(default_factory=dict)

    @property
    def widened(self) -> tuple[float, float]:
        return self.lower - self.sigma_lower, self.upper + self.sigma_upper

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "lower": self.lower,
            "upper": self.upper,
            "sigma_lower": self.sigma_lower,
            "sigma_upper": self.sigma_upper,
            "arg_lower": [list(e) for e in graph.edges_of(self.arg_lower)],
            "arg_upper": [list(e) for e in graph.edges_of(self.arg_upper)],
            "runtime_sec": self.runtime_sec,
            "feasible_samples": self.feasible_samples,
            "config_echo": self.config_echo,
        }


def compute_bounds(data: Dataset, knowledge: EdgeKnowledge, q: CausalQuery,
                   method: Literal["lagrangian", "dpdag", "brute"] = "lagrangian",
                   cfg: SearchConfig | None = None, seed: int = 0, bootstrap: int = 50,
                   enumeration_cap: int = 24) -> BoundsResult:
    """Lower and upper bound with bootstrap spreads (``bootstrap=0`` skips them)."""
    cfg = cfg or SearchConfig()
    start = time.perf_counter()
    if method == "brute":
        pair = brute_force_bounds(knowledge, data, q, cap=enumeration_cap, seed=seed, mlp_cfg=cfg.mlp)
        lo = BoundEstimate(pair.lower, pair.arg_lower, "min", method, feasible_samples=pair.n_graphs)
        hi = BoundEstimate(pair.upper, pair.arg_upper, "max", method, feasible_samples=pair.n_graphs)
    else:
        lo = run_bound_search(data, knowledge, q, method, "min", cfg, seed)
        hi = run_bound_search(data, knowledge, q, method, "max", cfg, seed)
    runtime = time.perf_counter() - start
    if bootstrap:
        bootstrap_widen(data, lo, q, bootstrap, seed, cfg.mlp)
        bootstrap_widen(data, hi, q, bootstrap, seed + 1, cfg.mlp)
    echo = {"method": method, "seed": seed, "treatment": q.treatment, "outcome": q.outcome,
            "adjustment": q.adjustment, "estimator": q.estimator, "bootstrap": bootstrap}
    if method != "brute":
        echo["search"] = cfg.to_json()
    return BoundsResult(method, lo.value, hi.value, lo.sigma, hi.sigma, lo.graph, hi.graph,
                        runtime, lo.feasible_samples + hi.feasible_samples, echo)
