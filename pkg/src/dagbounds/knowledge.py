"""Partial edge knowledge and the exhaustive bound oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import graph


class EnumerationCapError(RuntimeError):
    """The compatible space is too large to enumerate under the configured cap."""


class EmptySpaceError(ValueError):
    """No DAG is compatible with the knowledge."""


@dataclass(frozen=True)
class EdgeKnowledge:
    """Sure and forbidden ordered pairs over ``d`` nodes.

    Every other off-diagonal ordered pair is an uncertain slot.  A pair with
    both directions uncertain is two independent slots.
    """

    d: int
    sure: frozenset = field(default_factory=frozenset)
    forbidden: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        sure = frozenset((int(i), int(j)) for i, j in self.sure)
        forbidden = frozenset((int(i), int(j)) for i, j in self.forbidden)
        object.__setattr__(self, "sure", sure)
        object.__setattr__(self, "forbidden", forbidden)
        for i, j in sure | forbidden:
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) in knowledge")
            if not (0 <= i < self.d and 0 <= j < self.d):
                raise ValueError(f"pair ({i}, {j}) out of range for d={self.d}")
        if sure & forbidden:
            raise ValueError(f"pairs both sure and forbidden: {sorted(sure & forbidden)}")
        if not graph.is_acyclic(self.sure_matrix()):
            raise EmptySpaceError("sure edges contain a directed cycle")

    @property
    def uncertain_slots(self) -> list[tuple[int, int]]:
        return [
            (i, j)
            for i in range(self.d)
            for j in range(self.d)
            if i != j and (i, j) not in self.sure and (i, j) not in self.forbidden
        ]

    def sure_matrix(self) -> np.ndarray:
        return graph.from_edges(self.d, self.sure)

    def forbidden_matrix(self) -> np.ndarray:
        return graph.from_edges(self.d, self.forbidden)

    def allows(self, adj) -> bool:
        """True when ``adj`` holds every sure edge and no forbidden edge."""
        a = np.asarray(adj) != 0
        return all(a[i, j] for i, j in self.sure) and not any(a[i, j] for i, j in self.forbidden)

    def without_sure(self) -> "EdgeKnowledge":
        return EdgeKnowledge(self.d, frozenset(), self.forbidden)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "sure": sorted([list(e) for e in self.sure]),
            "forbidden": sorted([list(e) for e in self.forbidden]),
        }

    @classmethod
    def from_json(cls, obj) -> "EdgeKnowledge":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["d"]), frozenset(map(tuple, obj.get("sure", []))),
                   frozenset(map(tuple, obj.get("forbidden", []))))


def uncertain_count(k: EdgeKnowledge) -> int:
    return k.d * (k.d - 1) - len(k.sure) - len(k.forbidden)


def _reaches(children: list[set], src: int, dst: int) -> bool:
    stack, seen = [src], {src}
    while stack:
        v = stack.pop()
        if v == dst:
            return True
        for w in children[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def _acyclic_children(children: list[set]) -> bool:
    d = len(children)
    indeg = [0] * d
    for cs in children:
        for w in cs:
            indeg[w] += 1
    ready = [v for v in range(d) if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in children[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return seen == d


def enumerate_compatible(k: EdgeKnowledge, cap: int = 24) -> Iterator[np.ndarray]:
    """Every DAG with all sure edges and no forbidden edge.

    Walks the uncertain slots in binary-reflected Gray-code order so each
    step flips one edge.  Adding an edge to an acyclic graph is checked by a
    single reachability query; other transitions fall back to a full check.
    """
    slots = k.uncertain_slots
    n_slots = len(slots)
    if n_slots > cap:
        raise EnumerationCapError(f"{n_slots} uncertain slots exceed the cap of {cap}")
    adj = k.sure_matrix()
    children = [set(np.flatnonzero(adj[v]).tolist()) for v in range(k.d)]
    acyclic = True
    yield adj.copy()
    for step in range(1, 2**n_slots):
        bit = (step & -step).bit_length() - 1
        i, j = slots[bit]
        if adj[i, j]:
            adj[i, j] = 0
            children[i].discard(j)
            if not acyclic:
                acyclic = _acyclic_children(children)
        else:
            adj[i, j] = 1
            children[i].add(j)
            if acyclic:
                acyclic = not _reaches(children, j, i)
            else:
                acyclic = _acyclic_children(children)
        if acyclic:
            yield adj.copy()


def count_compatible(k: EdgeKnowledge, cap: int = 24) -> int:
    return sum(1 for _ in enumerate_compatible(k, cap))


@dataclass
class BoundPair:
    lower: float
    upper: float
    arg_lower: np.ndarray
    arg_upper: np.ndarray
    n_graphs: int = 0


def brute_force_bounds(k: EdgeKnowledge, data, q, *, cap: int = 24, memoize: bool | None = None,
                       seed: int = 0, mlp_cfg=None) -> BoundPair:
    """Min and max of the query estimate over the whole compatible space.

    ``memoize`` reuses estimates between graphs that yield the same
    adjustment set; it defaults to on for the MLP estimator only.
    """
    from .estimation import MlpConfig, adjustment_set, estimate_adjacency

    mlp_cfg = mlp_cfg or MlpConfig()

    if memoize is None:
        memoize = q.estimator == "nonlinear"
    cache: dict = {}
    best_lo = best_hi = None
    n = 0
    for adj in enumerate_compatible(k, cap):
        n += 1
        if memoize:
            key = frozenset(adjustment_set(adj, q))
            if key not in cache:
                cache[key] = estimate_adjacency(adj, data, q, seed=seed, mlp_cfg=mlp_cfg)
            value = cache[key]
        else:
            value = estimate_adjacency(adj, data, q, seed=seed, mlp_cfg=mlp_cfg)
        if best_lo is None or value < best_lo[0]:
            best_lo = (value, adj)
        if best_hi is None or value > best_hi[0]:
            best_hi = (value, adj)
    if n == 0:
        raise EmptySpaceError("no compatible DAG")
    return BoundPair(best_lo[0], best_hi[0], best_lo[1], best_hi[1], n)


def random_knowledge(true_adj, p_sure: float, p_forbidden: float, seed) -> EdgeKnowledge:
    """Reveal each true edge as sure w.p. ``p_sure`` and each absent pair as forbidden w.p. ``p_forbidden``."""
    a = graph.as_adjacency(true_adj)
    if not graph.is_acyclic(a):
        raise graph.CycleError("true graph must be acyclic")
    if not (0 <= p_sure <= 1 and 0 <= p_forbidden <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    d = a.shape[0]
    sure, forbidden = set(), set()
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            u = rng.random()
            if a[i, j]:
                if u < p_sure:
                    sure.add((i, j))
            elif u < p_forbidden:
                forbidden.add((i, j))
    return EdgeKnowledge(d, frozenset(sure), frozenset(forbidden))
