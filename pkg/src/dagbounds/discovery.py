"""Edge knowledge from the PC algorithm run over several column orders."""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import graph
from .estimation import Dataset
from .knowledge import EdgeKnowledge

log = logging.getLogger(__name__)

_SINGULAR_COND = 1e12


class NearSingularWarning(RuntimeWarning):
    """A conditioning set made the correlation submatrix numerically singular."""


@dataclass(frozen=True)
class Cpdag:
    d: int
    directed: frozenset = field(default_factory=frozenset)
    undirected: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        directed = frozenset((int(i), int(j)) for i, j in self.directed)
        undirected = frozenset(frozenset((int(a), int(b))) for a, b in self.undirected)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)
        for i, j in directed:
            if (j, i) in directed:
                raise ValueError(f"pair {i},{j} directed both ways")
            if frozenset((i, j)) in undirected:
                raise ValueError(f"pair {i},{j} both directed and undirected")

    def adjacent(self, i: int, j: int) -> bool:
        return (i, j) in self.directed or (j, i) in self.directed or frozenset((i, j)) in self.undirected

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "directed": sorted([list(e) for e in self.directed]),
            "undirected": sorted(sorted(e) for e in self.undirected),
        }


def _values(data) -> np.ndarray:
    return data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)


def _partial_corr(corr: np.ndarray, i: int, j: int, cond) -> float | None:
    """Partial correlation of i and j given cond, or None if the system is near-singular."""
    idx = [i, j, *cond]
    sub = corr[np.ix_(idx, idx)]
    if np.linalg.cond(sub) > _SINGULAR_COND:
        return None
    prec = np.linalg.inv(sub)
    return float(-prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1]))


def _fisher_z(corr: np.ndarray, n: int, i: int, j: int, cond, alpha: float) -> bool:
    cond = tuple(cond)
    if n <= len(cond) + 3:
        raise ValueError(f"need n > |cond| + 3, got n={n}, |cond|={len(cond)}")
    # canonical order keeps the test exactly symmetric in (i, j)
    a, b = min(i, j), max(i, j)
    r = _partial_corr(corr, a, b, sorted(cond))
    if r is None:
        warnings.warn(f"near-singular conditioning set {sorted(cond)} for ({a}, {b})",
                      NearSingularWarning, stacklevel=3)
        return False
    if abs(r) >= 1.0:
        return False
    stat = np.sqrt(n - len(cond) - 3) * abs(np.arctanh(r))
    return bool(stat <= norm.ppf(1 - alpha / 2))


def fisher_z_independent(data, i: int, j: int, cond=(), alpha: float = 0.05) -> bool:
    """Fisher-z conditional independence test on the sample correlation matrix."""
    x = _values(data)
    return _fisher_z(np.corrcoef(x, rowvar=False), x.shape[0], i, j, cond, alpha)


def pc_skeleton(data, alpha: float = 0.05, column_order=None, record: list | None = None):
    """Adjacency sets and separating sets, visiting pairs and subsets in ``column_order``.

    Edges are removed as soon as a separating set is found, so later tests in
    the same level see the thinned graph.  ``record`` collects
    ``(i, j, cond, degree_minus_one)`` for each test.
    """
    x = _values(data)
    n, d = x.shape
    order = list(range(d)) if column_order is None else [int(v) for v in column_order]
    if sorted(order) != list(range(d)):
        raise ValueError("column_order must be a permutation of the columns")
    rank = {v: k for k, v in enumerate(order)}
    corr = np.corrcoef(x, rowvar=False)
    adj = {v: set(range(d)) - {v} for v in range(d)}
    sepsets: dict[frozenset, tuple] = {}
    level = 0
    while any(len(adj[v]) - 1 >= level for v in range(d)):
        for i in order:
            for j in sorted(adj[i], key=rank.get):
                if j not in adj[i]:
                    continue
                others = sorted(adj[i] - {j}, key=rank.get)
                if len(others) < level:
                    continue
                for cond in itertools.combinations(others, level):
                    if record is not None:
                        record.append((i, j, cond, len(adj[i]) - 1))
                    if _fisher_z(corr, n, i, j, cond, alpha):
                        adj[i].discard(j)
                        adj[j].discard(i)
                        sepsets[frozenset((i, j))] = cond
                        break
        level += 1
    return adj, sepsets


def _orient(adj: dict, sepsets: dict, order: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """V-structures then Meek rules 1-3; returns (directed, undirected) boolean matrices."""
    d = len(adj)
    und = np.zeros((d, d), dtype=bool)
    for v, nb in adj.items():
        for w in nb:
            und[v, w] = True
    dirm = np.zeros((d, d), dtype=bool)

    def adjacent(a, b):
        return und[a, b] or dirm[a, b] or dirm[b, a]

    def direct(a, b) -> bool:
        if not und[a, b]:
            return False
        und[a, b] = und[b, a] = False
        dirm[a, b] = True
        return True

    for k in order:
        nb = [v for v in order if v in adj[k]]
        for i, j in itertools.combinations(nb, 2):
            if adjacent(i, j) or k in sepsets.get(frozenset((i, j)), ()):
                continue
            # a conflicting earlier orientation wins
            if not dirm[k, i]:
                direct(i, k)
            if not dirm[k, j]:
                direct(j, k)

    changed = True
    while changed:
        changed = False
        for a, b in itertools.product(order, order):
            if not und[a, b]:
                continue
            # R1: c -> a - b with c, b nonadjacent
            if any(dirm[c, a] and not adjacent(c, b) for c in range(d) if c != b):
                changed |= direct(a, b)
                continue
            # R2: a -> c -> b with a - b
            if any(dirm[a, c] and dirm[c, b] for c in range(d)):
                changed |= direct(a, b)
                continue
            # R3: a - c -> b and a - e -> b with c, e nonadjacent
            kids = [c for c in range(d) if und[a, c] and dirm[c, b]]
            if any(not adjacent(c, e) for c, e in itertools.combinations(kids, 2)):
                changed |= direct(a, b)
    return dirm, und


def pc_cpdag(data, alpha: float = 0.05, column_order=None, seed=None) -> Cpdag:
    """Original (order-dependent) PC; ``seed`` draws a column order when none is given."""
    d = _values(data).shape[1]
    if column_order is None:
        column_order = list(range(d)) if seed is None else np.random.default_rng(seed).permutation(d)
    order = [int(v) for v in column_order]
    adj, sepsets = pc_skeleton(data, alpha, order)
    dirm, und = _orient(adj, sepsets, order)
    directed = {(int(i), int(j)) for i, j in zip(*np.nonzero(dirm))}
    undirected = {frozenset((int(i), int(j))) for i, j in zip(*np.nonzero(np.triu(und)))}
    return Cpdag(d, frozenset(directed), frozenset(undirected))


def _demote_cycles(d: int, sure: set) -> tuple[set, list]:
    """Drop sure edges (in sorted order) that would close a directed cycle."""
    kept, demoted = set(), []
    for e in sorted(sure):
        if graph.is_acyclic(graph.from_edges(d, kept | {e})):
            kept.add(e)
        else:
            demoted.append(e)
    return kept, demoted


@dataclass
class PcProvenance:
    orders: list
    cpdags: list
    demoted: list

    def to_json(self) -> dict:
        return {
            "orders": [list(map(int, o)) for o in self.orders],
            "cpdags": [c.to_json() for c in self.cpdags],
            "demoted_sure": [list(e) for e in self.demoted],
        }


def pc_knowledge(data, n_perms: int = 10, alpha: float = 0.05, seed=0, return_provenance: bool = False):
    """Intersect PC outputs over ``n_perms`` random column orders.

    Sure edges are directed the same way in every run; a pair is forbidden
    (both directions) when no run has it adjacent.  Orders come from one
    seeded stream, so the first ``m`` orders are shared across ``n_perms >= m``.
    """
    if n_perms < 1:
        raise ValueError("n_perms must be at least 1")
    d = _values(data).shape[1]
    rng = np.random.default_rng(seed)
    orders = [rng.permutation(d) for _ in range(n_perms)]
    runs = [pc_cpdag(data, alpha, order) for order in orders]
    pairs = [(i, j) for i in range(d) for j in range(d) if i != j]
    sure = {p for p in pairs if all(p in c.directed for c in runs)}
    forbidden = {(i, j) for i, j in pairs if not any(c.adjacent(i, j) for c in runs)}
    sure, demoted = _demote_cycles(d, sure)
    if demoted:
        log.warning("demoted cyclic sure edges to uncertain: %s", demoted)
    k = EdgeKnowledge(d, frozenset(sure), frozenset(forbidden))
    if return_provenance:
        return k, PcProvenance(orders, runs, demoted)
    return k
