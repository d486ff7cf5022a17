"""Vertex programs: per-edge map functions, per-vertex reduce functions, and
a single-machine reference executor used as ground truth.

A program maps the state of vertex j to one scalar per neighbor i, then
reduces the collection arriving at i into i's next state. Reduction folds
values in ascending mapper-id order everywhere (engine, decoder, reference),
which makes floating-point results reproducible bit for bit across the
distributed and single-machine paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .graphs import Graph

INF = math.inf


def pagerank_map(mapper: int, rank: float, reducer: int, degree: int) -> float:
    """Mass vertex ``mapper`` sends to neighbor ``reducer``: rank/degree
    (uniform transition probability over neighbors)."""
    return rank / degree


def pagerank_reduce(values, damping: float, n_vertices: int) -> float:
    """New rank from arriving mass: (1 - damping) * sum(values) + damping/n.

    ``values`` must already be ordered by mapper id; summation is a plain
    left fold so permutation-insensitivity is the caller's ordering contract.
    """
    total = 0.0
    for v in values:
        total += v
    return (1.0 - damping) * total + damping / n_vertices


def sssp_map(dist: float, weight: float) -> float:
    """Tentative distance offered across an edge (absorbs +inf)."""
    return dist + weight


def sssp_reduce(values, own_prev: float) -> float:
    """Minimum of offered distances and the vertex's previous distance.

    Including ``own_prev`` keeps distances monotone non-increasing even on
    graphs without self-loops.
    """
    best = own_prev
    for v in values:
        if v < best:
            best = v
    return best


@dataclass(frozen=True)
class PageRank:
    """Iterative rank update: rank_i = (1 - damping) * sum_j rank_j/deg_j + damping/n.

    Vertices with degree 0 emit nothing; their mass is not redistributed.
    """

    damping: float = 0.15

    name = "pagerank"
    needs_own_prev = False

    def __post_init__(self):
        if not (0.0 <= self.damping <= 1.0):
            raise ParameterError(f"damping must be in [0,1], got {self.damping}")

    def initial_state(self, graph: Graph) -> list[float]:
        return [1.0 / graph.n] * graph.n

    def map_value(self, mapper: int, state: float, reducer: int, graph: Graph) -> float:
        return pagerank_map(mapper, state, reducer, graph.degree(mapper))

    def reduce(self, reducer: int, values, own_prev: float, graph: Graph) -> float:
        return pagerank_reduce(values, self.damping, graph.n)


@dataclass(frozen=True)
class ShortestPaths:
    """Single-source shortest-path distance relaxation (Bellman-Ford style)."""

    source: int = 1

    name = "sssp"
    needs_own_prev = True

    def __post_init__(self):
        if self.source < 1:
            raise ParameterError(f"source must be a valid vertex id, got {self.source}")

    def initial_state(self, graph: Graph) -> list[float]:
        if self.source > graph.n:
            raise ParameterError(
                f"source {self.source} outside graph with n={graph.n}")
        state = [INF] * graph.n
        state[self.source - 1] = 0.0
        return state

    def map_value(self, mapper: int, state: float, reducer: int, graph: Graph) -> float:
        return sssp_map(state, graph.edge_weight(mapper, reducer))

    def reduce(self, reducer: int, values, own_prev: float, graph: Graph) -> float:
        return sssp_reduce(values, own_prev)


def program_by_name(name: str, *, damping: float = 0.15, source: int = 1):
    if name == "pagerank":
        return PageRank(damping=damping)
    if name == "sssp":
        return ShortestPaths(source=source)
    raise ParameterError(f"unknown program {name!r} (expected 'pagerank' or 'sssp')")


def reference_execute(graph: Graph, program, iterations: int = 1,
                      state: list[float] | None = None,
                      stop_on_fixed_point: bool = False) -> list[float]:
    """Run the program on a single machine: ground truth for all distributed paths.

    Applies map+reduce per vertex with the same ascending-mapper-id fold the
    engine uses, so outputs are comparable bit for bit.
    """
    if iterations < 0:
        raise ParameterError(f"iterations must be >= 0, got {iterations}")
    if state is None:
        state = program.initial_state(graph)
    state = list(state)
    for _ in range(iterations):
        nxt = []
        for i in range(1, graph.n + 1):
            values = [
                program.map_value(int(j), state[int(j) - 1], i, graph)
                for j in graph.neighbors(i)  # already ascending by mapper id
            ]
            own_prev = state[i - 1] if program.needs_own_prev else 0.0
            nxt.append(program.reduce(i, values, own_prev, graph))
        if stop_on_fixed_point and nxt == state:
            return nxt
        state = nxt
    return state
