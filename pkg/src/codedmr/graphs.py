"""Random graph models and edge-list I/O.

Vertices are 1-based ids in [1..n]. Graphs are undirected, stored as sorted
neighbor arrays, and immutable after construction. Generation uses one
independent PRNG stream per vertex row, so samples do not depend on the
order (or parallelism) in which rows are drawn.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConsistencyError, EdgeListError, ParameterError

DENSE_ADJACENCY_LIMIT = 4096  # above this, dense adjacency matrices are refused


class Graph:
    """Undirected graph with optional per-edge weights.

    ``adjacency[v]`` is a sorted int array of neighbors of ``v`` (index 0 is
    unused). ``weights`` maps ``(u, v)`` with ``u <= v`` to a non-negative
    float; when absent every edge weighs 1.
    """

    __slots__ = ("n", "_adj", "weights", "metadata", "_dense", "_edge_count")

    def __init__(self, n, adjacency, weights=None, metadata=None):
        self.n = n
        self._adj = adjacency
        self.weights = weights
        self.metadata = dict(metadata or {})
        self._dense = None
        self._edge_count = None

    @classmethod
    def from_edges(cls, n: int, edges, weights=None, metadata=None) -> "Graph":
        """Build a graph from an iterable of (u, v) pairs (self-loops allowed)."""
        nbrs: list[list[int]] = [[] for _ in range(n + 1)]
        for u, v in edges:
            if not (1 <= u <= n and 1 <= v <= n):
                raise ParameterError(f"edge ({u},{v}) outside vertex range [1..{n}]")
            nbrs[u].append(v)
            if u != v:
                nbrs[v].append(u)
        adj = [None] + [np.unique(np.asarray(a, dtype=np.int64)) for a in nbrs[1:]]
        return cls(n, adj, weights=weights, metadata=metadata)

    def neighbors(self, v: int) -> np.ndarray:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        a = self._adj[u]
        i = np.searchsorted(a, v)
        return i < len(a) and a[i] == v

    def edge_weight(self, u: int, v: int) -> float:
        if self.weights is None:
            return 1.0
        key = (u, v) if u <= v else (v, u)
        return self.weights[key]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each undirected edge once as (u, v) with u <= v."""
        for u in range(1, self.n + 1):
            a = self._adj[u]
            for v in a[np.searchsorted(a, u):]:
                yield (u, int(v))

    @property
    def edge_count(self) -> int:
        if self._edge_count is None:
            total = sum(len(self._adj[v]) for v in range(1, self.n + 1))
            loops = sum(1 for v in range(1, self.n + 1) if self.has_edge(v, v))
            self._edge_count = (total + loops) // 2
        return self._edge_count

    def dense_adjacency(self) -> np.ndarray:
        """(n+1)x(n+1) boolean matrix, cached; row/col 0 unused."""
        if self._dense is None:
            if self.n > DENSE_ADJACENCY_LIMIT:
                raise ConsistencyError(f"dense adjacency refused for n={self.n}")
            m = np.zeros((self.n + 1, self.n + 1), dtype=bool)
            for v in range(1, self.n + 1):
                m[v, self._adj[v]] = True
            self._dense = m
        return self._dense

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or (self.weights or {}) != (other.weights or {}):
            return False
        return all(
            np.array_equal(self._adj[v], other._adj[v]) for v in range(1, self.n + 1)
        )

    def __hash__(self):
        return object.__hash__(self)

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count})"


def edge_count_between(g: Graph, left, right_sorted) -> int:
    """Number of ordered pairs (i, j) with i in ``left``, j in ``right_sorted``
    and (i, j) an edge. ``right_sorted`` must be ascending. Ids beyond g.n
    (virtual padding) are ignored."""
    left = [v for v in left if v <= g.n]
    right = np.asarray([v for v in right_sorted if v <= g.n], dtype=np.int64)
    if not left or not len(right):
        return 0
    if g.n <= DENSE_ADJACENCY_LIMIT:
        m = g.dense_adjacency()
        return int(m[np.ix_(np.asarray(left), right)].sum())
    total = 0
    for i in left:
        nbrs = g.neighbors(i)
        idx = np.searchsorted(right, nbrs)
        idx[idx >= len(right)] = len(right) - 1
        total += int(np.count_nonzero(right[idx] == nbrs))
    return total


def validate_graph(g: Graph) -> None:
    """Check symmetry, sortedness, id range and weight sign; raise on violation."""
    for v in range(1, g.n + 1):
        a = g.neighbors(v)
        if len(a) and (a[0] < 1 or a[-1] > g.n):
            raise ConsistencyError(f"vertex {v} has neighbor outside [1..{g.n}]")
        if np.any(np.diff(a) <= 0):
            raise ConsistencyError(f"neighbor list of {v} not strictly sorted")
        for u in a:
            if not g.has_edge(int(u), v):
                raise ConsistencyError(f"asymmetric edge ({v},{u})")
    if g.weights is not None:
        for (u, v), w in g.weights.items():
            if w < 0:
                raise ConsistencyError(f"negative weight on ({u},{v})")
            if not g.has_edge(u, v):
                raise ConsistencyError(f"weight on missing edge ({u},{v})")


# ---------------------------------------------------------------------------
# Generators. One Philox stream per vertex row keyed off (seed, row), so the
# sample for a row is independent of how many rows are drawn or in what order.
# ---------------------------------------------------------------------------


def _row_rng(seed: int, row: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(row,)))
    )


def _check_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")


def _check_prob(name: str, value: float, allow_zero: bool = True) -> None:
    lo_ok = value >= 0 if allow_zero else value > 0
    if not (lo_ok and value <= 1):
        rng = "[0,1]" if allow_zero else "(0,1]"
        raise ParameterError(f"{name} must be in {rng}, got {value}")


def _assemble(n, rows_i, rows_j, metadata) -> Graph:
    adj_sets: list[list[int]] = [[] for _ in range(n + 1)]
    for ii, jj in zip(rows_i, rows_j):
        for i, j in zip(ii, jj):
            adj_sets[i].append(j)
            adj_sets[j].append(i)
    adj = [None] + [
        np.asarray(sorted(a), dtype=np.int64) for a in adj_sets[1:]
    ]
    return Graph(n, adj, metadata=metadata)


def gen_er(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi: each unordered pair is an edge independently w.p. ``p``.

    ``p == 0`` is accepted as an explicit empty-graph flag.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    _check_prob("p", p)
    _check_seed(seed)
    rows_i, rows_j = [], []
    for i in range(1, n):
        u = _row_rng(seed, i).random(n - i)
        hit = np.nonzero(u < p)[0]
        if len(hit):
            rows_i.append(np.full(len(hit), i, dtype=np.int64))
            rows_j.append(hit + i + 1)
    meta = {"model": "er", "n": n, "p": p, "seed": seed}
    return _assemble(n, rows_i, rows_j, meta)


def gen_rb(n1: int, n2: int, q: float, seed: int) -> Graph:
    """Random bi-partite: clusters {1..n1} and {n1+1..n1+n2}; only cross
    edges, each present independently w.p. ``q``."""
    if n1 < 1 or n2 < 1:
        raise ParameterError(f"cluster sizes must be >= 1, got {n1}, {n2}")
    _check_prob("q", q)
    _check_seed(seed)
    n = n1 + n2
    rows_i, rows_j = [], []
    for i in range(1, n1 + 1):
        u = _row_rng(seed, i).random(n2)
        hit = np.nonzero(u < q)[0]
        if len(hit):
            rows_i.append(np.full(len(hit), i, dtype=np.int64))
            rows_j.append(hit + n1 + 1)
    meta = {"model": "rb", "n1": n1, "n2": n2, "q": q, "seed": seed}
    return _assemble(n, rows_i, rows_j, meta)


def gen_sbm(n1: int, n2: int, p: float, q: float, seed: int) -> Graph:
    """Stochastic block model: intra-cluster pairs Bernoulli(p), cross pairs
    Bernoulli(q), all independent. Requires q < p; q == 0 disables cross edges."""
    if n1 < 1 or n2 < 1:
        raise ParameterError(f"cluster sizes must be >= 1, got {n1}, {n2}")
    _check_prob("p", p, allow_zero=False)
    _check_prob("q", q)
    if q >= p:
        raise ParameterError(f"SBM requires q < p, got q={q}, p={p}")
    _check_seed(seed)
    n = n1 + n2
    rows_i, rows_j = [], []
    for i in range(1, n):
        m = n - i
        probs = np.full(m, p)
        if i <= n1:
            probs[n1 - i:] = q  # columns j > n1 are cross edges
        u = _row_rng(seed, i).random(m)
        hit = np.nonzero(u < probs)[0]
        if len(hit):
            rows_i.append(np.full(len(hit), i, dtype=np.int64))
            rows_j.append(hit + i + 1)
    meta = {"model": "sbm", "n1": n1, "n2": n2, "p": p, "q": q, "seed": seed}
    return _assemble(n, rows_i, rows_j, meta)


def truncated_power_law_pmf(gamma: float, d_max: int) -> np.ndarray:
    """pmf of the degree law Pr[d] = c * d**(-gamma) on support 1..d_max."""
    d = np.arange(1, d_max + 1, dtype=float)
    w = d ** (-gamma)
    return w / w.sum()


def gen_pl(n: int, gamma: float, rho: float | None, seed: int,
           d_max: int | None = None) -> Graph:
    """Power-law model: degrees d_i drawn i.i.d. from a truncated power law
    with exponent ``gamma`` (support 1..d_max, d_max defaults to n); pair
    (i, j) is an edge w.p. min(1, rho * d_i * d_j).

    ``rho=None`` auto-scales to 1/sum(d), the scaling under which the expected
    degree of i is about d_i. Clamped pairs (rho*d_i*d_j > 1) are counted in
    ``metadata["clamped_pairs"]``.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if gamma <= 2:
        raise ParameterError(
            f"gamma must be > 2 so the mean degree (gamma-1)/(gamma-2) exists, got {gamma}"
        )
    if rho is not None and rho <= 0:
        raise ParameterError(f"rho must be > 0, got {rho}")
    _check_seed(seed)
    if d_max is None:
        d_max = n
    pmf = truncated_power_law_pmf(gamma, d_max)
    cdf = np.cumsum(pmf)
    u = _row_rng(seed, 0).random(n)
    deg = np.searchsorted(cdf, u) + 1  # 1-based degrees, index by vertex-1
    rho_value = (1.0 / deg.sum()) if rho is None else float(rho)
    clamped = 0
    rows_i, rows_j = [], []
    for i in range(1, n):
        probs = rho_value * deg[i - 1] * deg[i:]
        clamped += int(np.count_nonzero(probs > 1.0))
        u = _row_rng(seed, i).random(n - i)
        hit = np.nonzero(u < probs)[0]  # comparison with p>1 is always a hit
        if len(hit):
            rows_i.append(np.full(len(hit), i, dtype=np.int64))
            rows_j.append(hit + i + 1)
    meta = {
        "model": "pl", "n": n, "gamma": gamma, "seed": seed,
        "rho": rho_value, "rho_mode": "auto" if rho is None else "fixed",
        "d_max": d_max, "clamped_pairs": clamped,
        "drawn_degrees_mean": float(deg.mean()),
    }
    return _assemble(n, rows_i, rows_j, meta)


def with_uniform_weights(graph: Graph, seed: int) -> Graph:
    """Copy of ``graph`` with i.i.d. uniform (0,1] weights on every edge."""
    _check_seed(seed)
    weights = {}
    for u in range(1, graph.n + 1):
        a = graph.neighbors(u)
        targets = a[np.searchsorted(a, u):]  # edges (u, v >= u), one stream per row
        if not len(targets):
            continue
        draws = 1.0 - _row_rng(seed, u).random(len(targets))
        for v, w in zip(targets, draws):
            weights[(u, int(v))] = float(w)
    return Graph(graph.n, graph._adj, weights=weights,
                 metadata={**graph.metadata, "weights": "uniform", "weight_seed": seed})


# ---------------------------------------------------------------------------
# Edge-list files: UTF-8 text, lines "u v [w]" with 1-based ids, '#' comments,
# optional first non-comment line "n=<count>" to pin trailing isolated vertices.
# ---------------------------------------------------------------------------


def save_edgelist(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={graph.n}\n")
        for u, v in graph.edges():
            if graph.weights is not None:
                fh.write(f"{u} {v} {graph.edge_weight(u, v)!r}\n")
            else:
                fh.write(f"{u} {v}\n")


def load_edgelist(path) -> Graph:
    n_declared = None
    edges: list[tuple[int, int]] = []
    weights: dict[tuple[int, int], float] = {}
    seen: dict[tuple[int, int], float | None] = {}
    max_id = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("n="):
                if n_declared is not None or edges:
                    raise EdgeListError("n= header must be the first data line", line_no)
                try:
                    n_declared = int(line[2:])
                except ValueError:
                    raise EdgeListError(f"bad vertex count {line!r}", line_no) from None
                if n_declared < 0:
                    raise EdgeListError(f"negative vertex count {n_declared}", line_no)
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise EdgeListError(f"expected 'u v [w]', got {line!r}", line_no)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(f"non-integer vertex id in {line!r}", line_no) from None
            if u < 1 or v < 1:
                raise EdgeListError(f"vertex ids must be >= 1, got {u} {v}", line_no)
            w = None
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise EdgeListError(f"bad weight {parts[2]!r}", line_no) from None
                if w < 0:
                    raise EdgeListError(f"negative weight {w}", line_no)
            key = (u, v) if u <= v else (v, u)
            if key in seen:
                if seen[key] != w:
                    raise EdgeListError(
                        f"duplicate edge {key} with conflicting weight", line_no)
                continue
            seen[key] = w
            edges.append(key)
            if w is not None:
                weights[key] = w
            max_id = max(max_id, u, v)
    n = n_declared if n_declared is not None else max_id
    if n < max_id:
        raise EdgeListError(f"edge id {max_id} exceeds declared n={n}")
    mixed = weights and len(weights) != len(edges)
    if mixed:
        raise EdgeListError("either all or no edges may carry weights")
    g = Graph.from_edges(n, edges, weights=weights or None,
                         metadata={"model": "file", "path": str(path)})
    validate_graph(g)
    return g


# ---------------------------------------------------------------------------
# Model parameter bundle used by sweeps and the CLI.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphModelParams:
    """Which random-graph model to draw from, and with what parameters."""

    model: str  # "er" | "rb" | "sbm" | "pl"
    n: int = 0
    n1: int = 0
    n2: int = 0
    p: float = 0.0
    q: float = 0.0
    gamma: float = 0.0
    rho: float | None = None

    def __post_init__(self):
        if self.model not in ("er", "rb", "sbm", "pl"):
            raise ParameterError(f"unknown model {self.model!r}")

    @property
    def total_vertices(self) -> int:
        if self.model in ("rb", "sbm"):
            return self.n1 + self.n2
        return self.n

    @property
    def headline_probability(self) -> float:
        """Single probability-like column for CSV output: p for ER/SBM,
        q for RB, gamma for PL."""
        if self.model == "er" or self.model == "sbm":
            return self.p
        if self.model == "rb":
            return self.q
        return self.gamma

    def generate(self, seed: int) -> Graph:
        if self.model == "er":
            return gen_er(self.n, self.p, seed)
        if self.model == "rb":
            return gen_rb(self.n1, self.n2, self.q, seed)
        if self.model == "sbm":
            return gen_sbm(self.n1, self.n2, self.p, self.q, seed)
        return gen_pl(self.n, self.gamma, self.rho, seed)
