"""Undirected simple graphs for MaxCut: file format, cut counting, generators.

File format: first line ``vertices <n>``, then one ``edge <u> <v>`` line per
edge. Undirected; duplicate edges (in either orientation) are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u}, {v}) endpoint out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add(key)


def make_graph(num_vertices: int, edges) -> Graph:
    return Graph(num_vertices, tuple((int(u), int(v)) for u, v in edges))


def cut_counts(graph: Graph, indices) -> np.ndarray:
    """Number of cut edges for each bitstring index (vertex v = bit v)."""
    idx = np.asarray(indices, dtype=np.uint64)
    cuts = np.zeros(idx.shape, dtype=np.float64)
    one = np.uint64(1)
    for u, v in graph.edges:
        cuts += ((idx >> np.uint64(u)) ^ (idx >> np.uint64(v))) & one
    return cuts


def cut_value(graph: Graph, bitstring_index: int) -> int:
    """Cut count of a single bipartition given as a basis index."""
    total = 0
    for u, v in graph.edges:
        total += ((bitstring_index >> u) ^ (bitstring_index >> v)) & 1
    return total


def parse_graph(text: str) -> Graph:
    num_vertices = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "vertices":
            if num_vertices is not None:
                raise ValueError(f"line {lineno}: repeated vertices header")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'vertices <n>'")
            num_vertices = int(parts[1])
        elif parts[0] == "edge":
            if num_vertices is None:
                raise ValueError(f"line {lineno}: edge before vertices header")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'edge <u> <v>'")
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise ValueError(f"line {lineno}: unknown directive {parts[0]!r}")
    if num_vertices is None:
        raise ValueError("missing 'vertices <n>' header")
    return make_graph(num_vertices, edges)


def serialize_graph(graph: Graph) -> str:
    lines = [f"vertices {graph.num_vertices}"]
    lines.extend(f"edge {u} {v}" for u, v in graph.edges)
    return "\n".join(lines) + "\n"


def load_graph(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def triangle() -> Graph:
    return make_graph(3, [(0, 1), (1, 2), (0, 2)])
