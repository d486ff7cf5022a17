"""Coded and uncoded shuffle mechanics.

For a worker group S of size r+1 and a member k, the Z-set of k collects the
records (reducer i, mapper j) with i reduced by k, j mapped by every other
member of S, and (i, j) an edge. Every value a worker is missing appears in
exactly one Z-set across all groups: take S = (workers mapping j) + (owner
of i).

Each value splits into r segments, one per potential sender. A sender builds
an r x g table: row per other group member, holding that member's Z-set
segments in canonical order, left-aligned; it broadcasts the XOR of each
non-empty column. Receivers rebuild the same layout (they map every mapper
appearing in rows other than their own, so those segments are locally
computable), cancel the known rows, and keep their own row's segment.

Canonical Z-set order is ascending (mapper, reducer); the segment index of a
sender is its 1-based rank within the other members, ascending by worker id.
The conventions are shared by encoder and decoder, so messages carry no
headers beyond (group, sender, column).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .allocation import Allocation, CodedStage, UncodedStage, er_plan
from .errors import ConsistencyError, DecodeError, ParameterError
from .graphs import Graph

DEFAULT_VALUE_BITS = 64  # one float64 scalar per intermediate value


# ---------------------------------------------------------------------------
# Bit-level value segmentation. Accounting charges exactly T/r bits per
# segment (a rational); the bit representation pads each segment to
# ceil(T/r) bits so XOR stays well defined.
# ---------------------------------------------------------------------------


def value_to_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", x))[0]


def bits_to_value(bits: int) -> float:
    return struct.unpack("<d", struct.pack("<Q", bits))[0]


def segment_width(T: int, r: int) -> int:
    """Padded per-segment width in bits."""
    return -(-T // r)


def split_bits(bits: int, T: int, r: int) -> tuple[int, ...]:
    """Split a T-bit pattern into r segments of ceil(T/r) bits, MSB first;
    the pattern is zero-padded at the low end to r*ceil(T/r) bits."""
    w = segment_width(T, r)
    padded = bits << (r * w - T)
    mask = (1 << w) - 1
    return tuple((padded >> ((r - t) * w)) & mask for t in range(1, r + 1))


def join_segments(segments, T: int, r: int) -> int:
    """Inverse of split_bits: concatenate segments 1..r and drop the padding."""
    w = segment_width(T, r)
    acc = 0
    for seg in segments:
        acc = (acc << w) | seg
    return acc >> (r * w - T)


@dataclass(frozen=True)
class CodedMessage:
    """One multicast payload: XOR of the occupied entries of one table column.

    ``parts`` lists the (reducer, mapper, segment_index) triples XORed into
    the payload; it exists for inspection and tests, not for the wire.
    """

    group: tuple[int, ...]
    sender: int
    column: int  # 1-based
    payload: int
    parts: tuple[tuple[int, int, int], ...]


# ---------------------------------------------------------------------------
# Z-sets and the encode/decode pair.
# ---------------------------------------------------------------------------


def _main_stage(alloc: Allocation) -> CodedStage:
    cached = alloc.__dict__.get("_main_stage")
    if cached is None:
        cached = er_plan(alloc).coded[0]
        object.__setattr__(alloc, "_main_stage", cached)
    return cached


def _group_check(stage: CodedStage, S) -> tuple[int, ...]:
    S = tuple(sorted(S))
    if len(S) != stage.r + 1:
        raise ParameterError(
            f"group size must be r+1 = {stage.r + 1}, got {len(S)}")
    if len(set(S)) != len(S) or not set(S) <= set(stage.workers):
        raise ParameterError(f"group {S} not within stage workers {stage.workers}")
    return S


def build_z_set(alloc: Allocation, graph: Graph, S, k: int,
                stage: CodedStage | None = None) -> tuple[tuple[int, int], ...]:
    """Ordered keys (reducer, mapper) of the records needed by worker k and
    mapped at exactly the other members of group S; ascending (mapper, reducer)."""
    stage = stage or _main_stage(alloc)
    S = _group_check(stage, S)
    if k not in S:
        raise ParameterError(f"worker {k} not in group {S}")
    others = tuple(w for w in S if w != k)
    batch = stage.batch_vertices(others)
    out = []
    for j in batch:
        if alloc.is_virtual(j) or j > graph.n:
            continue
        nbrs = graph.neighbors(j)
        for i in stage.reducers_of(k):
            if i <= graph.n:
                idx = np.searchsorted(nbrs, i)
                if idx < len(nbrs) and nbrs[idx] == i:
                    out.append((i, j))
    out.sort(key=lambda key: (key[1], key[0]))
    return tuple(out)


def segment_index_of(S, k: int, sender: int) -> int:
    """1-based segment index assigned to ``sender`` for records destined to
    ``k``: the rank of sender among S without k, ascending."""
    others = sorted(w for w in S if w != k)
    return others.index(sender) + 1


def _table_rows(alloc, graph, S, sender, stage):
    """Rows of the sender's alignment table: (receiver k, z_keys, segment index)."""
    rows = []
    for k in S:
        if k == sender:
            continue
        keys = build_z_set(alloc, graph, S, k, stage=stage)
        rows.append((k, keys, segment_index_of(S, k, sender)))
    return rows


def encode_group(alloc: Allocation, graph: Graph, S, sender: int,
                 map_outputs: Mapping[tuple[int, int], float],
                 T: int = DEFAULT_VALUE_BITS,
                 stage: CodedStage | None = None) -> list[CodedMessage]:
    """Messages broadcast by ``sender`` within group ``S``: one per non-empty
    table column, each the XOR of the sender-assigned segments aligned there."""
    stage = stage or _main_stage(alloc)
    S = _group_check(stage, S)
    if sender not in S:
        raise ParameterError(f"sender {sender} not in group {S}")
    r = stage.r
    rows = _table_rows(alloc, graph, S, sender, stage)
    q = max((len(keys) for _, keys, _ in rows), default=0)
    messages = []
    for c in range(q):
        payload = 0
        parts = []
        for _, keys, t in rows:
            if c < len(keys):
                i, j = keys[c]
                try:
                    value = map_outputs[(i, j)]
                except KeyError:
                    raise ConsistencyError(
                        f"sender {sender} lacks map output for record ({i},{j})"
                    ) from None
                payload ^= split_bits(value_to_bits(value), T, r)[t - 1]
                parts.append((i, j, t))
        messages.append(CodedMessage(group=S, sender=sender, column=c + 1,
                                     payload=payload, parts=tuple(parts)))
    return messages


@dataclass(frozen=True)
class DecodedSegment:
    reducer: int
    mapper: int
    index: int   # segment position 1..r
    payload: int


def decode_group(alloc: Allocation, graph: Graph, S, sender: int, receiver: int,
                 messages: list[CodedMessage],
                 map_outputs: Mapping[tuple[int, int], float],
                 T: int = DEFAULT_VALUE_BITS,
                 stage: CodedStage | None = None) -> list[DecodedSegment]:
    """Recover the receiver's own-row segments from the sender's messages.

    The receiver rebuilds the sender's table layout from the shared
    allocation and graph; every other row's record was mapped by the
    receiver, so those segments are recomputed locally and XORed out.
    """
    stage = stage or _main_stage(alloc)
    S = _group_check(stage, S)
    if receiver not in S or receiver == sender:
        raise ParameterError(
            f"receiver {receiver} must be in group {S} and differ from sender {sender}")
    r = stage.r
    rows = _table_rows(alloc, graph, S, sender, stage)
    q = max((len(keys) for _, keys, _ in rows), default=0)
    if len(messages) != q:
        raise DecodeError(
            f"expected {q} messages, received {len(messages)}",
            group=S, sender=sender)
    own_keys: tuple = ()
    own_t = 0
    got = []
    for c, msg in enumerate(messages):
        if msg.column != c + 1:
            raise DecodeError("message column out of order",
                              group=S, sender=sender, column=msg.column)
        acc = msg.payload
        for k, keys, t in rows:
            if k == receiver:
                own_keys, own_t = keys, t
                continue
            if c < len(keys):
                i, j = keys[c]
                value = map_outputs[(i, j)]  # j in M_receiver by construction
                acc ^= split_bits(value_to_bits(value), T, r)[t - 1]
        if c < len(own_keys):
            i, j = own_keys[c]
            got.append(DecodedSegment(reducer=i, mapper=j, index=own_t, payload=acc))
        elif acc != 0:
            raise DecodeError(
                "residual payload in a column with no own-row entry "
                "(allocation/graph mismatch between peers)",
                group=S, sender=sender, column=c + 1)
    return got


# ---------------------------------------------------------------------------
# Uncoded transfers.
# ---------------------------------------------------------------------------


def stage_uncoded_records(alloc: Allocation, graph: Graph,
                          stage: UncodedStage) -> list[tuple[tuple[int, int], int, int]]:
    """((reducer, mapper), source worker, destination worker) triples for one
    uncoded stage; source is the lowest-id worker mapping the mapper."""
    universe = None
    if stage.mapper_universe is not None:
        universe = np.asarray(sorted(stage.mapper_universe), dtype=np.int64)
    mw = alloc.mapping_workers()
    out = []
    for k, verts in stage.reducers:
        mapped_here = set(alloc.maps_of(k))
        for i in verts:
            if i > graph.n:
                continue
            for j in graph.neighbors(i):
                j = int(j)
                if j in mapped_here:
                    continue
                if universe is not None:
                    idx = np.searchsorted(universe, j)
                    if idx >= len(universe) or universe[idx] != j:
                        continue
                out.append(((i, j), mw[j][0], k))
    return out


def uncoded_plan(alloc: Allocation, graph: Graph):
    """Every needed record (i in R_k, j not in M_k, (i,j) an edge) unicast
    once from the lowest-id worker mapping j."""
    stage = UncodedStage(
        label="all",
        reducers=tuple((k, alloc.reduces_of(k)) for k in range(1, alloc.K + 1)),
        mapper_universe=None,
    )
    return stage_uncoded_records(alloc, graph, stage)


# ---------------------------------------------------------------------------
# Optional binary dump of coded messages:
# group bitmask (u32, bit k-1 set iff worker k in S), sender (u16),
# column (u32), payload bytes; little-endian throughout.
# ---------------------------------------------------------------------------


def _payload_bytes(T: int, r: int) -> int:
    return -(-segment_width(T, r) // 8)


def dump_messages(messages, T: int, r: int, path) -> None:
    nbytes = _payload_bytes(T, r)
    with open(path, "wb") as fh:
        for msg in messages:
            mask = 0
            for k in msg.group:
                if k > 32:
                    raise ParameterError("group bitmask supports worker ids <= 32")
                mask |= 1 << (k - 1)
            fh.write(struct.pack("<IHI", mask, msg.sender, msg.column))
            fh.write(msg.payload.to_bytes(nbytes, "little"))


def load_messages(path, T: int, r: int) -> list[CodedMessage]:
    nbytes = _payload_bytes(T, r)
    rec = struct.calcsize("<IHI")
    out = []
    with open(path, "rb") as fh:
        while True:
            head = fh.read(rec)
            if not head:
                break
            mask, sender, column = struct.unpack("<IHI", head)
            payload = int.from_bytes(fh.read(nbytes), "little")
            group = tuple(k + 1 for k in range(32) if mask >> k & 1)
            out.append(CodedMessage(group=group, sender=sender, column=column,
                                    payload=payload, parts=()))
    return out
