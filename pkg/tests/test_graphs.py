import math

import numpy as np
import pytest

from codedmr.errors import EdgeListError, ParameterError
from codedmr.graphs import (Graph, GraphModelParams, edge_count_between,
                            gen_er, gen_pl, gen_rb, gen_sbm, load_edgelist,
                            save_edgelist, truncated_power_law_pmf,
                            validate_graph, with_uniform_weights)


def test_er_complete_graph():
    g = gen_er(4, 1.0, seed=123)
    assert g.edge_count == 6
    assert all(g.degree(v) == 3 for v in range(1, 5))


def test_er_zero_probability_is_empty():
    g = gen_er(100, 0.0, seed=0)
    assert g.edge_count == 0


def test_er_rejects_bad_params():
    with pytest.raises(ParameterError):
        gen_er(10, 1.5, seed=0)
    with pytest.raises(ParameterError):
        gen_er(0, 0.5, seed=0)
    with pytest.raises(ParameterError):
        gen_er(10, 0.5, seed=-1)


def test_er_mean_edge_count_matches_binomial():
    # 200 seeds; binomial oracle: mean C(300,2)*p, sigma = sqrt(mean*(1-p)).
    n, p, seeds = 300, 0.1, 200
    pairs = math.comb(n, 2)
    counts = [gen_er(n, p, seed).edge_count for seed in range(seeds)]
    mean = sum(counts) / seeds
    expect = pairs * p
    sigma = math.sqrt(pairs * p * (1 - p))
    assert abs(mean - expect) <= 3 * sigma / math.sqrt(seeds)


def test_er_deterministic_per_seed():
    assert gen_er(50, 0.3, seed=7) == gen_er(50, 0.3, seed=7)
    assert gen_er(50, 0.3, seed=7) != gen_er(50, 0.3, seed=8)


def test_rb_complete_bipartite():
    g = gen_rb(2, 2, 1.0, seed=5)
    assert g.edge_count == 4
    assert all(exactly_one_low(u, v, 2) for u, v in g.edges())


def exactly_one_low(u, v, n1):
    return (u <= n1) != (v <= n1)


def test_rb_edges_always_cross():
    g = gen_rb(10, 15, 0.4, seed=3)
    assert all(exactly_one_low(u, v, 10) for u, v in g.edges())
    validate_graph(g)


def test_rb_mean_edge_count():
    n1 = n2 = 150
    q, seeds = 0.1, 200
    counts = [gen_rb(n1, n2, q, seed).edge_count for seed in range(seeds)]
    mean = sum(counts) / seeds
    expect = n1 * n2 * q
    sigma = math.sqrt(n1 * n2 * q * (1 - q))
    assert abs(mean - expect) <= 3 * sigma / math.sqrt(seeds)


def test_sbm_two_triangles():
    g = gen_sbm(3, 3, 1.0, 0.0, seed=1)
    assert g.edge_count == 6
    assert not any(exactly_one_low(u, v, 3) for u, v in g.edges())


def test_sbm_rejects_q_not_below_p():
    with pytest.raises(ParameterError):
        gen_sbm(5, 5, 0.2, 0.2, seed=0)
    with pytest.raises(ParameterError):
        gen_sbm(5, 5, 0.2, 0.5, seed=0)


def test_sbm_mean_intra_and_cross_counts():
    n1, n2, p, q, seeds = 60, 40, 0.3, 0.1, 200
    intra = cross = 0
    for seed in range(seeds):
        g = gen_sbm(n1, n2, p, q, seed)
        validate_graph(g)
        for u, v in g.edges():
            if exactly_one_low(u, v, n1):
                cross += 1
            else:
                intra += 1
    intra_pairs = math.comb(n1, 2) + math.comb(n2, 2)
    cross_pairs = n1 * n2
    for count, pairs, prob in ((intra, intra_pairs, p), (cross, cross_pairs, q)):
        mean = count / seeds
        sigma = math.sqrt(pairs * prob * (1 - prob))
        assert abs(mean - pairs * prob) <= 3 * sigma / math.sqrt(seeds)


def test_pl_degree_law_matches_truncated_series():
    # Oracle: expected drawn degree from the truncated pmf evaluated directly.
    n, gamma, seeds = 400, 2.5, 50
    pmf = truncated_power_law_pmf(gamma, n)
    expect = float((np.arange(1, n + 1) * pmf).sum())
    var = float(((np.arange(1, n + 1) ** 2) * pmf).sum()) - expect ** 2
    means = [gen_pl(n, gamma, None, seed).metadata["drawn_degrees_mean"]
             for seed in range(seeds)]
    mean = sum(means) / seeds
    assert abs(mean - expect) <= 3 * math.sqrt(var / (n * seeds))


def test_pl_no_clamping_when_rho_small():
    # rho * d_max^2 <= 1 guarantees no pair probability is clipped.
    n = 50
    rho = 1.0 / (n * n)
    g = gen_pl(n, 3.0, rho, seed=2)
    assert g.metadata["clamped_pairs"] == 0
    validate_graph(g)


def test_pl_invariants_and_auto_rho():
    g = gen_pl(200, 2.5, None, seed=9)
    validate_graph(g)
    assert g.metadata["rho_mode"] == "auto"
    assert g.metadata["d_max"] == 200
    assert 0 < g.metadata["rho"] < 1


def test_pl_rejects_gamma_at_most_two():
    with pytest.raises(ParameterError):
        gen_pl(100, 2.0, None, seed=0)


def test_generated_graphs_pass_invariants():
    for g in (gen_er(40, 0.2, 1), gen_rb(20, 30, 0.3, 2),
              gen_sbm(25, 25, 0.4, 0.1, 3), gen_pl(60, 2.7, None, 4)):
        validate_graph(g)
        assert not any(u == v for u, v in g.edges())


def test_uniform_weights_in_unit_interval():
    g = with_uniform_weights(gen_er(30, 0.3, 11), seed=11)
    assert g.weights
    assert all(0 < w <= 1 for w in g.weights.values())
    assert g == with_uniform_weights(gen_er(30, 0.3, 11), seed=11)


def test_edgelist_minimal_worked_instance(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("1 5\n2 6\n3 4\n")
    g = load_edgelist(path)
    assert g.n == 6
    assert g.edge_count == 3
    assert g.has_edge(1, 5) and g.has_edge(2, 6) and g.has_edge(3, 4)


def test_edgelist_header_fixes_isolated_vertices(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("n=4\n")
    g = load_edgelist(path)
    assert g.n == 4
    assert g.edge_count == 0


def test_edgelist_round_trip(tmp_path):
    for g in (gen_er(30, 0.2, 5), with_uniform_weights(gen_er(20, 0.3, 6), 6)):
        path = tmp_path / "rt.txt"
        save_edgelist(g, path)
        assert load_edgelist(path) == g


def test_edgelist_same_graph_same_bytes(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    save_edgelist(gen_er(25, 0.3, 42), a)
    save_edgelist(gen_er(25, 0.3, 42), b)
    assert a.read_bytes() == b.read_bytes()


def test_edgelist_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 2\nthree four\n")
    with pytest.raises(EdgeListError, match="line 2"):
        load_edgelist(path)
    path.write_text("1 2 0.5\n2 1 0.7\n")
    with pytest.raises(EdgeListError, match="conflicting weight"):
        load_edgelist(path)
    path.write_text("1 9\nn=4\n")
    with pytest.raises(EdgeListError):
        load_edgelist(path)
    path.write_text("0 3\n")
    with pytest.raises(EdgeListError, match="line 1"):
        load_edgelist(path)


def test_edgelist_allows_self_loops_and_comments(tmp_path):
    path = tmp_path / "loop.txt"
    path.write_text("# comment\nn=3\n2 2\n1 3  # trailing\n")
    g = load_edgelist(path)
    assert g.has_edge(2, 2)
    assert g.edge_count == 2


def test_edge_count_between_brute_force():
    g = gen_er(40, 0.25, seed=13)
    rng = np.random.default_rng(0)
    for _ in range(20):
        left = sorted(rng.choice(range(1, 41), size=8, replace=False).tolist())
        right = sorted(rng.choice(range(1, 41), size=12, replace=False).tolist())
        brute = sum(1 for i in left for j in right if g.has_edge(i, j))
        assert edge_count_between(g, left, right) == brute


def test_model_params_dispatch():
    assert GraphModelParams(model="er", n=10, p=0.5).generate(1).n == 10
    assert GraphModelParams(model="rb", n1=4, n2=6, q=0.5).generate(1).n == 10
    assert GraphModelParams(model="sbm", n1=5, n2=5, p=0.5, q=0.1).generate(1).n == 10
    assert GraphModelParams(model="pl", n=10, gamma=2.5).generate(1).n == 10
    with pytest.raises(ParameterError):
        GraphModelParams(model="nope", n=10)
