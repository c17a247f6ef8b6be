"""Deterministic DAG algorithms on 0/1 adjacency matrices.

``adj[i, j] == 1`` means the edge ``i -> j``.  Node sets are plain Python
sets of integer indices.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np


class CycleError(ValueError):
    """The graph has a directed cycle."""


def as_adjacency(adj) -> np.ndarray:
    a = np.asarray(adj)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    return (a != 0).astype(np.int8)


def from_edges(d: int, edges: Iterable) -> np.ndarray:
    adj = np.zeros((d, d), dtype=np.int8)
    for i, j in edges:
        adj[i, j] = 1
    return adj


def edges_of(adj) -> list[tuple[int, int]]:
    rows, cols = np.nonzero(np.asarray(adj))
    return [(int(i), int(j)) for i, j in zip(rows, cols)]


def parents(adj, v: int) -> set[int]:
    return set(np.flatnonzero(np.asarray(adj)[:, v]).tolist())


def children(adj, v: int) -> set[int]:
    return set(np.flatnonzero(np.asarray(adj)[v, :]).tolist())


def topological_order(adj) -> list[int]:
    """Kahn's algorithm, smallest ready index first (identity on empty graphs)."""
    a = as_adjacency(adj)
    d = a.shape[0]
    indeg = a.sum(axis=0).astype(int)
    ready = [v for v in range(d) if indeg[v] == 0]
    order = []
    while ready:
        ready.sort()
        v = ready.pop(0)
        order.append(v)
        for w in np.flatnonzero(a[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(int(w))
    if len(order) != d:
        raise CycleError("graph contains a directed cycle")
    return order


def is_acyclic(adj) -> bool:
    a = np.asarray(adj) != 0
    if np.any(np.diag(a)):
        return False
    indeg = a.sum(axis=0)
    ready = list(np.flatnonzero(indeg == 0))
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in np.flatnonzero(a[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return seen == a.shape[0]


def reachable(adj, sources: Iterable[int]) -> set[int]:
    """Nodes reachable from ``sources`` along directed edges (sources included)."""
    a = np.asarray(adj) != 0
    seen = set(sources)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in np.flatnonzero(a[v]):
            w = int(w)
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def descendants(adj, v: int) -> set[int]:
    return reachable(adj, [v]) - {v}


def ancestors(adj, v: int) -> set[int]:
    return reachable(np.asarray(adj).T, [v]) - {v}


def d_separated(adj, x: int, y: int, given: Iterable[int] = ()) -> bool:
    """Reachability ("Bayes ball") test of x _||_ y | given."""
    a = np.asarray(adj) != 0
    given = set(given)
    if x == y or x in given or y in given:
        raise ValueError("x and y must differ and lie outside the conditioning set")
    # conditioned nodes and their ancestors open colliders
    opens = reachable(a.T, given)
    # (node, arrived_from_child): True when travelling against an edge
    visited = set()
    queue = deque([(x, True)])
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == y:
            return False
        if up and v not in given:
            for p in np.flatnonzero(a[:, v]):
                queue.append((int(p), True))
            for c in np.flatnonzero(a[v]):
                queue.append((int(c), False))
        elif not up:
            if v not in given:
                for c in np.flatnonzero(a[v]):
                    queue.append((int(c), False))
            if v in opens:
                for p in np.flatnonzero(a[:, v]):
                    queue.append((int(p), True))
    return True


def causal_nodes(adj, x: int, y: int) -> set[int]:
    """Nodes on directed x -> y paths, excluding x."""
    return (descendants(adj, x) & (ancestors(adj, y) | {y})) if y in descendants(adj, x) else set()


def forbidden_nodes(adj, x: int, y: int) -> set[int]:
    cn = causal_nodes(adj, x, y)
    return reachable(adj, cn) | {x}


def parent_adjustment(adj, x: int) -> set[int]:
    return parents(adj, x)


def optimal_adjustment(adj, x: int, y: int) -> set[int]:
    """pa(cn) minus forb; falls back to pa(x) when y is not a descendant of x."""
    cn = causal_nodes(adj, x, y)
    if not cn:
        return parent_adjustment(adj, x)
    pa_cn = set()
    for c in cn:
        pa_cn |= parents(adj, c)
    return pa_cn - forbidden_nodes(adj, x, y)


def is_valid_adjustment(adj, x: int, y: int, z: Iterable[int]) -> bool:
    """Adjustment criterion for a single treatment/outcome pair.

    ``z`` must avoid every causal node and its descendants, and must
    d-separate x from y once the first edges of the causal paths (x -> cn)
    are removed, i.e. block every non-causal path.
    """
    a = as_adjacency(adj).copy()
    z = set(z)
    if x in z or y in z:
        raise ValueError("x and y may not be in the adjustment set")
    cn = causal_nodes(a, x, y)
    if z & (reachable(a, cn) if cn else set()):
        return False
    for c in cn:
        a[x, c] = 0
    return d_separated(a, x, y, z)
