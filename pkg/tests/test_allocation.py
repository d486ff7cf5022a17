import itertools
import math
from fractions import Fraction

import pytest

from codedmr.allocation import (allocation_from_json, allocation_to_json,
                                computation_load, er_allocate, er_plan,
                                multiplicity_profile, rb_allocate, rb_split,
                                sbm_allocate, validate_allocation)
from codedmr.errors import ParameterError


def test_er_allocate_matches_worked_instance():
    alloc = er_allocate(6, 3, 2)
    stage = er_plan(alloc).coded[0]
    assert stage.batch_vertices((1, 2)) == (1, 2)
    assert stage.batch_vertices((1, 3)) == (3, 4)
    assert stage.batch_vertices((2, 3)) == (5, 6)
    assert alloc.maps_of(1) == (1, 2, 3, 4)
    assert alloc.maps_of(2) == (1, 2, 5, 6)
    assert alloc.maps_of(3) == (3, 4, 5, 6)
    assert alloc.reduce_sets == ((1, 2), (3, 4), (5, 6))


def test_er_allocate_r_equals_K_maps_everything():
    alloc = er_allocate(12, 4, 4)
    assert all(m == tuple(range(1, 13)) for m in alloc.map_sets)


@pytest.mark.parametrize("n,K,r", [(6, 3, 2), (30, 5, 2), (60, 4, 3),
                                   (40, 4, 1), (24, 4, 4), (56, 8, 5)])
def test_er_allocate_invariants(n, K, r):
    alloc = er_allocate(n, K, r)
    validate_allocation(alloc)
    sizes = {len(m) for m in alloc.map_sets}
    assert sizes == {alloc.r * alloc.n_alloc // alloc.K}
    assert {len(rs) for rs in alloc.reduce_sets} == {alloc.n_alloc // alloc.K}
    assert all(len(alloc.workers_mapping(v)) == r
               for v in range(1, alloc.n_alloc + 1))


def test_er_allocate_rejects_bad_r():
    with pytest.raises(ParameterError):
        er_allocate(10, 3, 0)
    with pytest.raises(ParameterError):
        er_allocate(10, 3, 4)


def test_er_allocate_padding_multiple():
    # 30 vertices, K=4, r=2: C(4,2)=6 batches and 4 reduce sets need lcm 12.
    alloc = er_allocate(30, 4, 2)
    assert alloc.n == 30
    assert alloc.n_alloc == 36
    assert alloc.is_virtual(31) and not alloc.is_virtual(30)
    validate_allocation(alloc)


def test_pairwise_map_intersections_are_symmetric():
    # Batch design: |M_a ^ M_b| = g * C(K-2, r-2) for every worker pair.
    for K in range(2, 9):
        for r in range(2, K + 1):
            alloc = er_allocate(K * math.comb(K, r), K, r)
            g = alloc.n_alloc // math.comb(K, r)
            expect = g * math.comb(K - 2, r - 2)
            for a, b in itertools.combinations(range(1, K + 1), 2):
                inter = set(alloc.maps_of(a)) & set(alloc.maps_of(b))
                assert len(inter) == expect


def test_computation_load_exact():
    assert computation_load(er_allocate(6, 3, 2)) == 2
    assert computation_load(er_allocate(20, 4, 4)) == 4
    alloc = er_allocate(30, 5, 3)
    assert computation_load(alloc) == Fraction(3)


def test_multiplicity_profile_batch_spike():
    alloc = er_allocate(6, 3, 2)
    assert multiplicity_profile(alloc) == (0, 6, 0)
    alloc = er_allocate(30, 5, 2)
    prof = multiplicity_profile(alloc)
    assert prof[1] == alloc.n_alloc
    assert sum(prof) == alloc.n_alloc
    assert sum(j * a for j, a in enumerate(prof, start=1)) == alloc.r * alloc.n_alloc


def test_rb_split_proportional_with_guards():
    assert rb_split(150, 150, 6) == (3, 3)
    assert rb_split(6, 4, 5) == (3, 2)
    assert rb_split(99, 1, 4) == (3, 1)


def test_rb_allocate_unbalanced_worked_by_hand():
    # n1=6, n2=4, K=5, r=1: K1=3 big-side workers map V1, K2=2 map V2;
    # 4 of the 6 V1 reductions fit on the small group, 2 are left over.
    alloc, plan = rb_allocate(6, 4, 5, 1)
    assert alloc.n_alloc == 10  # no padding needed
    assert alloc.maps_of(1) == (1, 2)
    assert alloc.maps_of(2) == (3, 4)
    assert alloc.maps_of(3) == (5, 6)
    assert alloc.maps_of(4) == (7, 8)
    assert alloc.maps_of(5) == (9, 10)
    validate_allocation(alloc)
    (ph3,) = plan.uncoded
    leftover = [v for _, verts in ph3.reducers for v in verts]
    assert sorted(leftover) == [5, 6]
    assert {w for w, verts in ph3.reducers if verts} <= {1, 2, 3}
    assert set(ph3.mapper_universe) == {7, 8, 9, 10}


def test_rb_allocate_balanced_is_symmetric():
    alloc, plan = rb_allocate(150, 150, 6, 2)
    validate_allocation(alloc)
    n, K = alloc.n_alloc, alloc.K
    assert {len(m) for m in alloc.map_sets} == {n * 2 // K}
    assert {len(rs) for rs in alloc.reduce_sets} == {n // K}
    (ph3,) = plan.uncoded
    assert all(not verts for _, verts in ph3.reducers)


def test_rb_allocate_keeps_clusters_on_their_workers():
    alloc, plan = rb_allocate(60, 40, 5, 1)
    k1, _ = rb_split(60, 40, 5)
    for k in range(1, alloc.K + 1):
        side = {v for v in alloc.maps_of(k) if v <= alloc.n}
        if k <= k1:
            assert all(v <= 60 for v in side)
        else:
            assert all(v > 60 for v in side)


def test_rb_allocate_rejects_r_above_group_size():
    with pytest.raises(ParameterError, match="min"):
        rb_allocate(10, 10, 4, 3)


def test_sbm_allocate_padding_and_stages():
    alloc, plan = sbm_allocate(100, 100, 6, 2)
    validate_allocation(alloc)
    assert alloc.n == 200
    assert alloc.n_alloc == 204  # each cluster padded 100 -> 102
    labels = [s.label for s in plan.coded] + [s.label for s in plan.uncoded]
    assert labels == ["intra1", "intra2", "cross1", "cross2"]
    intra1 = plan.coded[0]
    assert intra1.workers == (1, 2, 3)
    # reducers of the first group are first-cluster vertices only
    for _, verts in intra1.reducers:
        assert all(v <= 100 or alloc.is_virtual(v) for v in verts)


def test_sbm_allocate_swapped_cluster_sizes():
    alloc, plan = sbm_allocate(40, 80, 6, 2)
    validate_allocation(alloc)
    k1, k2 = rb_split(40, 80, 6)
    assert plan.coded[0].workers == tuple(range(1, k1 + 1))
    assert plan.coded[1].workers == tuple(range(k1 + 1, 7))


def test_allocation_json_round_trip():
    alloc = er_allocate(30, 4, 2)
    assert allocation_from_json(allocation_to_json(alloc)) == alloc
    alloc2, _ = rb_allocate(6, 4, 5, 1)
    assert allocation_from_json(allocation_to_json(alloc2)) == alloc2
