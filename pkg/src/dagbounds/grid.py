"""Experiment grid: cells over data/knowledge axes, one CSV row per (cell, method)."""

from __future__ import annotations

import csv
import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import graph, metrics
from .discovery import pc_knowledge
from .estimation import CausalQuery, MlpConfig, estimate_adjacency
from .knowledge import brute_force_bounds, random_knowledge, uncertain_count
from .optimizer import SearchConfig, compute_bounds
from .synthetic import attach_mechanisms, canonical_kind, generate_data, ground_truth_ate, sample_er_dag

log = logging.getLogger(__name__)

WORKERS_ENV = "DAGBOUNDS_WORKERS"

FIELDS = [
    "cell", "method", "seed", "attempt", "nodes", "edge_prob", "mechanism", "knowledge",
    "p_sure", "p_forbidden", "n_perms", "adjustment", "treatment", "outcome", "n_uncertain",
    "n_compatible", "true_graph_compatible", "truth", "population_ate", "true_lower", "true_upper",
    "est_lower", "est_upper", "sigma_lower", "sigma_upper", "point_coverage", "bound_coverage",
    "bound_narrowness", "narrowness_undefined", "runtime_sec", "brute_runtime_sec",
    "feasible_samples", "error",
]
_INT_FIELDS = {"cell", "seed", "attempt", "nodes", "n_perms", "treatment", "outcome", "n_uncertain",
               "n_compatible", "true_graph_compatible", "point_coverage", "narrowness_undefined",
               "feasible_samples"}
_STR_FIELDS = {"method", "mechanism", "knowledge", "adjustment", "error"}


@dataclass
class GridConfig:
    """Grid axes (lists) and per-cell settings.

    ``seeds`` is the number of replicates per axis combination.  A cell
    redraws its instance (up to ``max_attempts`` times) until it has at most
    ``max_uncertain`` uncertain slots, a treatment with a descendant, and a
    ground-truth interval at least ``min_true_width`` wide.
    """

    nodes: list = field(default_factory=lambda: [4, 5])
    edge_prob: list = field(default_factory=lambda: [0.5])
    mechanism: list = field(default_factory=lambda: ["linear"])
    knowledge: str = "random"
    p_sure: list = field(default_factory=lambda: [0.5])
    p_forbidden: list = field(default_factory=lambda: [0.5])
    n_perms: list = field(default_factory=lambda: [10])
    pc_alpha: float = 0.05
    adjustment: list = field(default_factory=lambda: ["parent", "optimal"])
    seeds: int = 5
    methods: list = field(default_factory=lambda: ["lagrangian"])
    n_samples: int = 5000
    max_uncertain: int | None = None
    min_true_width: float = 0.0
    max_attempts: int = 50
    bootstrap: int = 50
    enumeration_cap: int = 16
    master_seed: int = 0
    population_mc: int = 100_000
    search: dict = field(default_factory=dict)
    mlp: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.knowledge not in ("random", "pc"):
            raise ValueError("knowledge must be 'random' or 'pc'")
        for m in self.methods:
            if m not in ("lagrangian", "dpdag", "brute"):
                raise ValueError(f"unknown method {m!r}")
        self.mechanism = [canonical_kind(m) for m in self.mechanism]

    @classmethod
    def from_json(cls, obj: dict) -> "GridConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**obj)

    def search_config(self) -> SearchConfig:
        mlp = MlpConfig(**self.mlp)
        return SearchConfig(**self.search, mlp=mlp)

    def cells(self) -> list[dict]:
        if self.knowledge == "random":
            know_axes = [{"p_sure": ps, "p_forbidden": pf, "n_perms": None}
                         for ps, pf in itertools.product(self.p_sure, self.p_forbidden)]
        else:
            know_axes = [{"p_sure": None, "p_forbidden": None, "n_perms": n} for n in self.n_perms]
        out = []
        for nodes, p, mech, know, adj, rep in itertools.product(
                self.nodes, self.edge_prob, self.mechanism, know_axes, self.adjustment, range(self.seeds)):
            out.append({"cell": len(out), "nodes": nodes, "edge_prob": p, "mechanism": mech,
                        "knowledge": self.knowledge, **know, "adjustment": adj, "replicate": rep})
        return out


def cell_seeds(master_seed: int, cell: int, attempt: int) -> list[int]:
    """Independent seeds for graph, mechanisms, data, knowledge, query and search."""
    ss = np.random.SeedSequence([master_seed, cell, attempt])
    return [int(s) for s in ss.generate_state(6)]


@dataclass
class Instance:
    seed: int
    attempt: int
    adj: np.ndarray
    scm: object
    data: object
    knowledge: object
    query: CausalQuery
    brute: object = None
    brute_runtime: float = float("nan")


def build_instance(cfg: GridConfig, cell: dict) -> Instance:
    """Draw the first admissible instance for a cell; raises if none in ``max_attempts``."""
    estimator = "linear" if cell["mechanism"] == "linear_additive" else "nonlinear"
    for attempt in range(cfg.max_attempts):
        s_graph, s_mech, s_data, s_know, s_query, s_run = cell_seeds(cfg.master_seed, cell["cell"], attempt)
        adj = sample_er_dag(cell["nodes"], cell["edge_prob"], s_graph)
        scm = attach_mechanisms(adj, cell["mechanism"], s_mech)
        data = generate_data(scm, cfg.n_samples, s_data)
        if cell["knowledge"] == "random":
            k = random_knowledge(adj, cell["p_sure"], cell["p_forbidden"], s_know)
        else:
            k = pc_knowledge(data, cell["n_perms"], cfg.pc_alpha, s_know)
        n_unc = uncertain_count(k)
        if cfg.max_uncertain is not None and n_unc > cfg.max_uncertain:
            continue
        pairs = [(x, y) for x in range(adj.shape[0]) for y in sorted(graph.descendants(adj, x))]
        if not pairs:
            continue
        rng = np.random.default_rng(s_query)
        rng.shuffle(pairs)
        run_brute = n_unc <= cfg.enumeration_cap
        for x, y in pairs:
            q = CausalQuery(int(x), int(y), adjustment=cell["adjustment"], estimator=estimator)
            if not run_brute:
                if cfg.min_true_width > 0:
                    break
                return Instance(s_run, attempt, adj, scm, data, k, q)
            t0 = time.perf_counter()
            bp = brute_force_bounds(k, data, q, cap=cfg.enumeration_cap, seed=s_run,
                                    mlp_cfg=cfg.search_config().mlp)
            elapsed = time.perf_counter() - t0
            if bp.upper - bp.lower >= cfg.min_true_width:
                return Instance(s_run, attempt, adj, scm, data, k, q, bp, elapsed)
    raise RuntimeError(f"no admissible instance for cell {cell['cell']} in {cfg.max_attempts} attempts")


def _base_row(cell: dict) -> dict:
    row = {f: None for f in FIELDS}
    for key in ("cell", "nodes", "edge_prob", "mechanism", "knowledge", "p_sure", "p_forbidden",
                "n_perms", "adjustment"):
        row[key] = cell[key]
    return row


def run_cell(cfg: GridConfig, cell: dict) -> list[dict]:
    """All method rows for one cell; failures become rows with ``error`` set."""
    try:
        inst = build_instance(cfg, cell)
    except Exception as exc:  # recorded, never fatal for the grid
        return [{**_base_row(cell), "method": m, "error": f"{type(exc).__name__}: {exc}"}
                for m in cfg.methods]
    search_cfg = cfg.search_config()
    q = inst.query
    truth = estimate_adjacency(inst.adj, inst.data, q, seed=inst.seed, mlp_cfg=search_cfg.mlp)
    population = ground_truth_ate(inst.scm, q, n_mc=cfg.population_mc, seed=inst.seed)
    shared = {
        **_base_row(cell), "seed": inst.seed, "attempt": inst.attempt,
        "treatment": q.treatment, "outcome": q.outcome,
        "n_uncertain": uncertain_count(inst.knowledge),
        "true_graph_compatible": int(inst.knowledge.allows(inst.adj)),
        "truth": truth, "population_ate": population,
    }
    if inst.brute is not None:
        shared.update(n_compatible=inst.brute.n_graphs, true_lower=inst.brute.lower,
                      true_upper=inst.brute.upper, brute_runtime_sec=inst.brute_runtime)
    rows = []
    for method in cfg.methods:
        row = {**shared, "method": method}
        try:
            res = compute_bounds(inst.data, inst.knowledge, q, method, search_cfg, seed=inst.seed,
                                 bootstrap=cfg.bootstrap, enumeration_cap=cfg.enumeration_cap)
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            continue
        lo, hi = res.widened
        row.update(est_lower=res.lower, est_upper=res.upper, sigma_lower=res.sigma_lower,
                   sigma_upper=res.sigma_upper, runtime_sec=res.runtime_sec,
                   feasible_samples=res.feasible_samples,
                   point_coverage=metrics.point_coverage(res.lower, res.upper, truth,
                                                         res.sigma_lower, res.sigma_upper))
        if inst.brute is not None:
            nar = metrics.bound_narrowness(inst.brute.lower, inst.brute.upper, lo, hi)
            row.update(bound_coverage=metrics.bound_coverage(inst.brute.lower, inst.brute.upper, lo, hi),
                       bound_narrowness=None if metrics.is_undefined(nar) else nar,
                       narrowness_undefined=int(metrics.is_undefined(nar)))
        rows.append(row)
    return rows


# -- CSV persistence ---------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    return str(value)


def _parse(key: str, text: str):
    if text == "":
        return None
    if key in _STR_FIELDS:
        return text
    if key in _INT_FIELDS:
        return int(text)
    return float(text)


def append_rows(path, rows: list[dict]) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(FIELDS)
        for row in rows:
            w.writerow([_fmt(row.get(f)) for f in FIELDS])
        fh.flush()
        os.fsync(fh.fileno())


def read_rows(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: _parse(k, v) for k, v in r.items()} for r in csv.DictReader(fh)]


# -- aggregation -------------------------------------------------------------------


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def summarize(rows: list[dict]) -> dict:
    """Per-method means and standard errors; undefined narrowness is counted, not averaged."""
    out = {}
    for method in sorted({r["method"] for r in rows}):
        rs = [r for r in rows if r["method"] == method]
        ok = [r for r in rs if not r.get("error")]
        undefined = sum(1 for r in ok if r.get("narrowness_undefined") == 1)
        with_truth = [r for r in ok if r.get("narrowness_undefined") is not None]
        stats = {"rows": len(rs), "errors": len(rs) - len(ok)}
        for key in ("point_coverage", "bound_coverage", "bound_narrowness", "runtime_sec"):
            stats[key], stats[key + "_se"] = _mean_se(r.get(key) for r in ok)
        stats["narrowness_undefined"] = undefined
        stats["narrowness_undefined_rate"] = undefined / len(with_truth) if with_truth else float("nan")
        stats["runtime_median"] = float(np.median([r["runtime_sec"] for r in ok])) if ok else float("nan")
        out[method] = stats
    return out


def summarize_csv(path) -> dict:
    return summarize(read_rows(path))


# -- driver ------------------------------------------------------------------------


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    return max(1, int(raw)) if raw else default


def run_grid(config: GridConfig | dict, out_path, workers: int | None = None) -> tuple[list[dict], dict]:
    """Run every pending cell, appending rows as cells finish.

    Cells whose (cell, method) rows already exist in ``out_path`` are
    skipped, so an interrupted grid resumes where it stopped.  Returns all
    rows in the file (sorted by cell and method) and their summary.
    """
    cfg = config if isinstance(config, GridConfig) else GridConfig.from_json(config)
    done = {(r["cell"], r["method"]) for r in read_rows(out_path)}
    pending = [c for c in cfg.cells() if any((c["cell"], m) not in done for m in cfg.methods)]
    workers = worker_count() if workers is None else workers
    log.info("grid: %d cells pending, %d workers", len(pending), workers)
    if workers <= 1:
        for cell in pending:
            append_rows(out_path, [r for r in run_cell(cfg, cell) if (cell["cell"], r["method"]) not in done])
    else:
        with ProcessPoolExecutor(workers) as pool:
            futures = {pool.submit(run_cell, cfg, c): c for c in pending}
            for fut in as_completed(futures):
                cell = futures[fut]
                append_rows(out_path, [r for r in fut.result() if (cell["cell"], r["method"]) not in done])
    rows = sorted(read_rows(out_path), key=lambda r: (r["cell"], r["method"]))
    return rows, summarize(rows)


def config_to_json(cfg: GridConfig) -> dict:
    return asdict(cfg)
