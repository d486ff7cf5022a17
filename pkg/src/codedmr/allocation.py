"""Subgraph (Map) and Reduce allocations.

The batch scheme splits vertices into C(K, r) equal batches, one per size-r
worker subset (lexicographic order); a worker maps every batch whose subset
contains it, so each vertex is mapped at exactly r workers. Reduce sets
partition the vertex universe.

When the vertex count does not divide evenly, the universe is padded with
virtual vertices (ids above the real n). Virtual vertices are isolated: they
join batches and reduce sets so the combinatorics stay exact, but contribute
no neighbors, no intermediate values and no load, and are stripped from
outputs.

A ``PhasePlan`` describes how a shuffle decomposes into coded stages (XOR
multicast within a worker group) and uncoded stages (plain unicast), which is
what the two-cluster allocations produce.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError


@dataclass(frozen=True)
class Allocation:
    """Per-worker Map sets and disjoint Reduce sets over a padded universe."""

    n: int        # real vertex count
    n_alloc: int  # padded universe size (>= n)
    K: int
    r: int
    map_sets: tuple[tuple[int, ...], ...]     # index k-1 -> sorted M_k
    reduce_sets: tuple[tuple[int, ...], ...]  # index k-1 -> sorted R_k

    def maps_of(self, k: int) -> tuple[int, ...]:
        return self.map_sets[k - 1]

    def reduces_of(self, k: int) -> tuple[int, ...]:
        return self.reduce_sets[k - 1]

    def workers_mapping(self, v: int) -> tuple[int, ...]:
        return self.mapping_workers()[v]

    def owner_of(self, v: int) -> int:
        return self.reduce_owner()[v]

    def is_virtual(self, v: int) -> bool:
        return v > self.n

    # Derived lookups are cached on first use (stored through
    # object.__setattr__ since the dataclass is frozen).
    def mapping_workers(self) -> tuple[tuple[int, ...], ...]:
        cached = self.__dict__.get("_mapping_workers")
        if cached is None:
            acc: list[list[int]] = [[] for _ in range(self.n_alloc + 1)]
            for k, ms in enumerate(self.map_sets, start=1):
                for v in ms:
                    acc[v].append(k)
            cached = tuple(tuple(a) for a in acc)
            object.__setattr__(self, "_mapping_workers", cached)
        return cached

    def reduce_owner(self) -> tuple[int, ...]:
        cached = self.__dict__.get("_reduce_owner")
        if cached is None:
            table = [0] * (self.n_alloc + 1)
            for k, rs in enumerate(self.reduce_sets, start=1):
                for v in rs:
                    table[v] = k
            cached = tuple(table)
            object.__setattr__(self, "_reduce_owner", cached)
        return cached


@dataclass(frozen=True)
class CodedStage:
    """One coded-exchange scope: a worker group, the batches of mapper
    vertices it shares, and the reducer vertices each member serves here."""

    label: str
    workers: tuple[int, ...]
    r: int
    batches: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]  # (subset, vertices)
    reducers: tuple[tuple[int, tuple[int, ...]], ...]             # (worker, vertices)

    def batch_vertices(self, subset: tuple[int, ...]) -> tuple[int, ...]:
        for s, verts in self.batches:
            if s == subset:
                return verts
        return ()

    def reducers_of(self, k: int) -> tuple[int, ...]:
        for w, verts in self.reducers:
            if w == k:
                return verts
        return ()


@dataclass(frozen=True)
class UncodedStage:
    """Records served by plain unicast: each worker's listed reducers pull
    their missing values (restricted to ``mapper_universe`` when set) from the
    lowest-id worker mapping the source vertex."""

    label: str
    reducers: tuple[tuple[int, tuple[int, ...]], ...]
    mapper_universe: tuple[int, ...] | None  # None = all vertices

    def reducers_of(self, k: int) -> tuple[int, ...]:
        for w, verts in self.reducers:
            if w == k:
                return verts
        return ()


@dataclass(frozen=True)
class PhasePlan:
    coded: tuple[CodedStage, ...]
    uncoded: tuple[UncodedStage, ...]


def _round_up(value: int, multiple: int) -> int:
    return -(-value // multiple) * multiple


def _near_equal_chunks(items: list[int], parts: int) -> list[tuple[int, ...]]:
    q, rem = divmod(len(items), parts)
    out, pos = [], 0
    for idx in range(parts):
        size = q + (1 if idx < rem else 0)
        out.append(tuple(items[pos:pos + size]))
        pos += size
    return out


def _batch_allocate(vertices: list[int], workers: tuple[int, ...], r: int):
    """Split ``vertices`` (already padded to a multiple of C(len(workers), r))
    into lexicographic subset batches; return (batches, map_sets dict)."""
    subsets = list(itertools.combinations(workers, r))
    g, rem = divmod(len(vertices), len(subsets))
    if rem:
        raise ParameterError(
            f"{len(vertices)} vertices not divisible into {len(subsets)} batches")
    batches = []
    map_sets: dict[int, list[int]] = {k: [] for k in workers}
    for b, subset in enumerate(subsets):
        verts = tuple(vertices[b * g:(b + 1) * g])
        batches.append((subset, verts))
        for k in subset:
            map_sets[k].extend(verts)
    return tuple(batches), map_sets


def _check_K_r(K: int, r: int) -> None:
    if K < 1:
        raise ParameterError(f"K must be >= 1, got {K}")
    if not (1 <= r <= K):
        raise ParameterError(f"computation load r must satisfy 1 <= r <= K, got r={r}, K={K}")


def er_allocate(n: int, K: int, r: int) -> Allocation:
    """Batch allocation over all K workers: C(K,r) equal batches in
    lexicographic subset order, contiguous reduce ranges of n_alloc/K."""
    _check_K_r(K, r)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    nb = math.comb(K, r)
    n_alloc = _round_up(n, math.lcm(nb, K))
    vertices = list(range(1, n_alloc + 1))
    batches, map_sets = _batch_allocate(vertices, tuple(range(1, K + 1)), r)
    per = n_alloc // K
    reduce_sets = tuple(
        tuple(range((k - 1) * per + 1, k * per + 1)) for k in range(1, K + 1)
    )
    return Allocation(
        n=n, n_alloc=n_alloc, K=K, r=r,
        map_sets=tuple(tuple(sorted(map_sets[k])) for k in range(1, K + 1)),
        reduce_sets=reduce_sets,
    )


def _stage_batches(alloc: Allocation, vertex_ids) -> tuple:
    """Group vertices by their mapping-worker subset, canonical subset order."""
    by_subset: dict[tuple[int, ...], list[int]] = {}
    mw = alloc.mapping_workers()
    for v in vertex_ids:
        by_subset.setdefault(mw[v], []).append(v)
    return tuple(sorted((s, tuple(sorted(vs))) for s, vs in by_subset.items()))


def er_plan(alloc: Allocation) -> PhasePlan:
    """Single coded stage spanning all workers and all vertices."""
    stage = CodedStage(
        label="main",
        workers=tuple(range(1, alloc.K + 1)),
        r=alloc.r,
        batches=_stage_batches(alloc, range(1, alloc.n_alloc + 1)),
        reducers=tuple((k, alloc.reduces_of(k)) for k in range(1, alloc.K + 1)),
    )
    return PhasePlan(coded=(stage,), uncoded=())


def uncoded_only_plan(alloc: Allocation) -> PhasePlan:
    """Baseline: every needed record unicast once, no coding anywhere."""
    stage = UncodedStage(
        label="all",
        reducers=tuple((k, alloc.reduces_of(k)) for k in range(1, alloc.K + 1)),
        mapper_universe=None,
    )
    return PhasePlan(coded=(), uncoded=(stage,))


def rb_split(n1: int, n2: int, K: int) -> tuple[int, int]:
    """Worker-group sizes proportional to cluster sizes, both at least 1."""
    if K < 2:
        raise ParameterError(f"two-cluster allocation needs K >= 2, got K={K}")
    k1 = round(n1 * K / (n1 + n2))
    k1 = min(max(k1, 1), K - 1)
    return k1, K - k1


def rb_allocate(n1: int, n2: int, K: int, r: int) -> tuple[Allocation, PhasePlan]:
    """Two-cluster allocation for bi-partite graphs.

    Cluster sizes need not match: with big/small the larger/smaller cluster,
    phase I places big-side mappers and all small-side reducers on the big
    worker group (coded), phase II places small-side mappers and as many
    big-side reducers as fit on the small group (coded), and phase III parks
    the leftover big-side reducers on the big group, served uncoded.
    Each cluster is padded separately so its batches divide evenly.
    """
    if n1 < 1 or n2 < 1:
        raise ParameterError(f"cluster sizes must be >= 1, got {n1}, {n2}")
    _check_K_r(K, r)
    K1, K2 = rb_split(n1, n2, K)
    if r > min(K1, K2):
        raise ParameterError(
            f"r={r} exceeds min(K1,K2)=({K1},{K2}): the two-cluster scheme "
            f"replicates each cluster's mappers only inside its own worker group")
    n = n1 + n2
    w1 = tuple(range(1, K1 + 1))
    w2 = tuple(range(K1 + 1, K + 1))

    pad1 = _round_up(n1, math.comb(K1, r)) - n1
    pad2 = _round_up(n2, math.comb(K2, r)) - n2
    v1 = list(range(1, n1 + 1)) + list(range(n + 1, n + pad1 + 1))
    v2 = list(range(n1 + 1, n + 1)) + list(range(n + pad1 + 1, n + pad1 + pad2 + 1))
    n_alloc = n + pad1 + pad2

    if len(v1) >= len(v2):
        big_vs, big_ws, small_vs, small_ws = v1, w1, v2, w2
    else:
        big_vs, big_ws, small_vs, small_ws = v2, w2, v1, w1

    big_batches, big_maps = _batch_allocate(big_vs, big_ws, r)
    small_batches, small_maps = _batch_allocate(small_vs, small_ws, r)

    # Phase I: small-side reducers spread over the big group.
    ph1 = _near_equal_chunks(small_vs, len(big_ws))
    # Phase II: as many big-side reducers as the small group's share allows.
    m = min(len(big_vs), len(small_vs))
    ph2 = _near_equal_chunks(big_vs[:m], len(small_ws))
    # Phase III: leftover big-side reducers back on the big group.
    ph3 = _near_equal_chunks(big_vs[m:], len(big_ws))

    reduce_sets_map: dict[int, list[int]] = {k: [] for k in range(1, K + 1)}
    for k, chunk in zip(big_ws, ph1):
        reduce_sets_map[k].extend(chunk)
    for k, chunk in zip(small_ws, ph2):
        reduce_sets_map[k].extend(chunk)
    for k, chunk in zip(big_ws, ph3):
        reduce_sets_map[k].extend(chunk)

    map_sets_map: dict[int, list[int]] = {k: [] for k in range(1, K + 1)}
    for k in big_ws:
        map_sets_map[k] = big_maps[k]
    for k in small_ws:
        map_sets_map[k] = small_maps[k]

    alloc = Allocation(
        n=n, n_alloc=n_alloc, K=K, r=r,
        map_sets=tuple(tuple(sorted(map_sets_map[k])) for k in range(1, K + 1)),
        reduce_sets=tuple(tuple(sorted(reduce_sets_map[k])) for k in range(1, K + 1)),
    )
    plan = PhasePlan(
        coded=(
            CodedStage("phase1", big_ws, r, big_batches,
                       tuple(zip(big_ws, (tuple(sorted(c)) for c in ph1)))),
            CodedStage("phase2", small_ws, r, small_batches,
                       tuple(zip(small_ws, (tuple(sorted(c)) for c in ph2)))),
        ),
        uncoded=(
            UncodedStage("phase3",
                         tuple(zip(big_ws, (tuple(sorted(c)) for c in ph3))),
                         mapper_universe=tuple(small_vs)),
        ),
    )
    return alloc, plan


def sbm_allocate(n1: int, n2: int, K: int, r: int) -> tuple[Allocation, PhasePlan]:
    """Two-cluster allocation for block-model graphs.

    Each cluster's mappers AND reducers live on its own worker group, so both
    intra-cluster components shuffle coded within their groups; cross-cluster
    records are served uncoded (no multicast group can span both sides,
    because a mapper batch is never shared across groups).
    """
    if n1 < 1 or n2 < 1:
        raise ParameterError(f"cluster sizes must be >= 1, got {n1}, {n2}")
    _check_K_r(K, r)
    K1, K2 = rb_split(n1, n2, K)
    if r > min(K1, K2):
        raise ParameterError(
            f"r={r} exceeds min(K1,K2)=({K1},{K2}): the two-cluster scheme "
            f"replicates each cluster's mappers only inside its own worker group")
    n = n1 + n2
    w1 = tuple(range(1, K1 + 1))
    w2 = tuple(range(K1 + 1, K + 1))

    pad1 = _round_up(n1, math.lcm(math.comb(K1, r), K1)) - n1
    pad2 = _round_up(n2, math.lcm(math.comb(K2, r), K2)) - n2
    v1 = list(range(1, n1 + 1)) + list(range(n + 1, n + pad1 + 1))
    v2 = list(range(n1 + 1, n + 1)) + list(range(n + pad1 + 1, n + pad1 + pad2 + 1))
    n_alloc = n + pad1 + pad2

    b1, m1 = _batch_allocate(v1, w1, r)
    b2, m2 = _batch_allocate(v2, w2, r)
    red1 = _near_equal_chunks(v1, K1)
    red2 = _near_equal_chunks(v2, K2)

    map_sets = tuple(
        tuple(sorted(m1[k] if k in m1 else m2[k])) for k in range(1, K + 1)
    )
    reduce_sets = tuple(
        tuple(sorted(red1[k - 1] if k <= K1 else red2[k - K1 - 1]))
        for k in range(1, K + 1)
    )
    alloc = Allocation(n=n, n_alloc=n_alloc, K=K, r=r,
                       map_sets=map_sets, reduce_sets=reduce_sets)
    reducers1 = tuple(zip(w1, (tuple(sorted(c)) for c in red1)))
    reducers2 = tuple(zip(w2, (tuple(sorted(c)) for c in red2)))
    plan = PhasePlan(
        coded=(
            CodedStage("intra1", w1, r, b1, reducers1),
            CodedStage("intra2", w2, r, b2, reducers2),
        ),
        uncoded=(
            UncodedStage("cross1", reducers1, mapper_universe=tuple(v2)),
            UncodedStage("cross2", reducers2, mapper_universe=tuple(v1)),
        ),
    )
    return alloc, plan


def computation_load(alloc: Allocation) -> Fraction:
    """Exact average number of workers mapping each vertex."""
    return Fraction(sum(len(m) for m in alloc.map_sets), alloc.n_alloc)


def multiplicity_profile(alloc: Allocation) -> tuple[int, ...]:
    """a[j] = number of vertices mapped at exactly j workers, j in 1..K
    (returned tuple is indexed j-1). Counts the padded universe, so the
    identities sum(a) = n_alloc and sum(j*a[j]) = r*n_alloc hold exactly."""
    counts = [0] * alloc.K
    mw = alloc.mapping_workers()
    for v in range(1, alloc.n_alloc + 1):
        j = len(mw[v])
        if j == 0 or j > alloc.K:
            raise ParameterError(f"vertex {v} mapped at {j} workers")
        counts[j - 1] += 1
    return tuple(counts)


def validate_allocation(alloc: Allocation) -> None:
    """Structural invariants: sorted unique sets in range, reduce partition,
    total map size r * n_alloc."""
    seen = set()
    for rs in alloc.reduce_sets:
        for v in rs:
            if v in seen:
                raise ParameterError(f"vertex {v} reduced at two workers")
            seen.add(v)
    if seen != set(range(1, alloc.n_alloc + 1)):
        raise ParameterError("reduce sets do not partition the universe")
    total = 0
    for ms in alloc.map_sets:
        if list(ms) != sorted(set(ms)):
            raise ParameterError("map set not sorted/unique")
        if ms and (ms[0] < 1 or ms[-1] > alloc.n_alloc):
            raise ParameterError("map set outside universe")
        total += len(ms)
    if total != alloc.r * alloc.n_alloc:
        raise ParameterError(
            f"sum of map sizes {total} != r*n_alloc = {alloc.r * alloc.n_alloc}")


def allocation_to_json(alloc: Allocation) -> str:
    return json.dumps({
        "n": alloc.n, "n_alloc": alloc.n_alloc, "K": alloc.K, "r": alloc.r,
        "map_sets": [list(m) for m in alloc.map_sets],
        "reduce_sets": [list(rs) for rs in alloc.reduce_sets],
    })


def allocation_from_json(text: str) -> Allocation:
    data = json.loads(text)
    alloc = Allocation(
        n=data["n"], n_alloc=data["n_alloc"], K=data["K"], r=data["r"],
        map_sets=tuple(tuple(m) for m in data["map_sets"]),
        reduce_sets=tuple(tuple(rs) for rs in data["reduce_sets"]),
    )
    validate_allocation(alloc)
    return alloc
