"""JSON files for graphs, knowledge, SCMs and bound results."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import graph
from .knowledge import EdgeKnowledge
from .synthetic import Scm


def graph_to_json(adj) -> dict:
    a = graph.as_adjacency(adj)
    return {"d": int(a.shape[0]), "edges": [list(e) for e in graph.edges_of(a)]}


def graph_from_json(obj) -> np.ndarray:
    return graph.from_edges(int(obj["d"]), obj["edges"])


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def save_graph(adj, path) -> None:
    write_json(graph_to_json(adj), path)


def load_graph(path) -> np.ndarray:
    return graph_from_json(read_json(path))


def save_knowledge(k: EdgeKnowledge, path) -> None:
    write_json(k.to_json(), path)


def load_knowledge(path) -> EdgeKnowledge:
    return EdgeKnowledge.from_json(read_json(path))


def save_scm(scm: Scm, path) -> None:
    write_json(scm.to_json(), path)


def load_scm(path) -> Scm:
    return Scm.from_json(read_json(path))
