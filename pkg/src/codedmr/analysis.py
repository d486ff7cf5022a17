"""Closed-form load bounds, the allocation lower bound, the E[Q] Monte Carlo
check, and the computation-load heuristic.

Asymptotic results are reported together with finite-size tolerance windows
derived from the concentration argument behind the coded bound: the expected
per-sender message count Q exceeds its mean p*g by at most about
2*sqrt(g*p*(1-p)*log r), so ratios carry a (1 + 3*sqrt(log r / (g*p)))
allowance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import er_allocate, er_plan, rb_split
from .errors import ParameterError
from .graphs import GraphModelParams, edge_count_between, gen_er


@dataclass(frozen=True)
class BoundSet:
    """uncoded/coded/lower normalized-load values for one model setting."""

    model: str
    K: int
    r: int
    uncoded: float
    coded_upper: float
    lower: float | None
    note: str = ""


def _check_Kr(K: int, r: int) -> None:
    if not (1 <= r <= K):
        raise ParameterError(f"need 1 <= r <= K, got r={r}, K={K}")


def er_bounds(p: float, K: int, r: int) -> BoundSet:
    """Uncoded p(1-r/K); coded and converse both (1/r)p(1-r/K)."""
    if not (0 < p <= 1):
        raise ParameterError(f"p must be in (0,1], got {p}")
    _check_Kr(K, r)
    uncoded = p * (1 - r / K)
    coded = uncoded / r
    return BoundSet(model="er", K=K, r=r, uncoded=uncoded,
                    coded_upper=coded, lower=coded)


def rb_bounds(q: float, K: int, r: int) -> BoundSet:
    """Balanced bi-partite: upper (1/(2r))q(1-2r/K), lower one quarter of it."""
    if not (0 < q <= 1):
        raise ParameterError(f"q must be in (0,1], got {q}")
    _check_Kr(K, r)
    upper = q * (1 - 2 * r / K) / (2 * r)
    lower = q * (1 - 2 * r / K) / (8 * r)
    uncoded = q * (1 - 2 * r / K) / 2
    return BoundSet(model="rb", K=K, r=r, uncoded=uncoded,
                    coded_upper=upper, lower=lower,
                    note="balanced clusters, n1 = n2")


def sbm_bounds(n1: int, n2: int, p: float, q: float, K: int, r: int) -> BoundSet:
    """Block model: upper (1/r)(1-r/K) * (p n1^2 + p n2^2 + 2 q n1 n2)/n^2;
    converse (q/r)(1-r/K)."""
    if n1 < 1 or n2 < 1:
        raise ParameterError(f"cluster sizes must be >= 1, got {n1}, {n2}")
    # q == p is allowed here (the ER-degenerate limit); the generator itself
    # requires strict q < p.
    if not (0 < p <= 1) or not (0 <= q <= 1) or q > p:
        raise ParameterError(f"need 0 <= q <= p <= 1, got p={p}, q={q}")
    _check_Kr(K, r)
    n = n1 + n2
    density = (p * n1 * n1 + p * n2 * n2 + 2 * q * n1 * n2) / (n * n)
    return BoundSet(model="sbm", K=K, r=r,
                    uncoded=density * (1 - r / K),
                    coded_upper=density * (1 - r / K) / r,
                    lower=(q / r) * (1 - r / K))


def pl_bound(gamma: float, K: int, r: int) -> BoundSet:
    """Power law, in units of n*L: uncoded (1-r/K)(gamma-1)/(gamma-2),
    coded a factor r below; no converse known."""
    if gamma <= 2:
        raise ParameterError(f"gamma must be > 2, got {gamma}")
    _check_Kr(K, r)
    mean_degree = (gamma - 1) / (gamma - 2)
    return BoundSet(model="pl", K=K, r=r,
                    uncoded=(1 - r / K) * mean_degree,
                    coded_upper=(1 - r / K) * mean_degree / r,
                    lower=None,
                    note="values are n*L (scale by 1/n for L)")


def allocation_lower_bound(profile, p: float, K: int, n: int) -> float:
    """Converse value p * sum_j (a_j/n) (K-j)/(K j) for a multiplicity
    profile a (a[j-1] vertices mapped at exactly j workers)."""
    if not (0 < p <= 1):
        raise ParameterError(f"p must be in (0,1], got {p}")
    if K < 1 or len(profile) != K:
        raise ParameterError(f"profile must have K={K} entries, got {len(profile)}")
    if any(a < 0 for a in profile):
        raise ParameterError("profile entries must be non-negative")
    if sum(profile) != n:
        raise ParameterError(
            f"profile sums to {sum(profile)}, expected n={n}")
    return p * sum(
        (a / n) * (K - j) / (K * j) for j, a in enumerate(profile, start=1)
    )


@dataclass(frozen=True)
class QEstimate:
    n: int
    p: float
    K: int
    r: int
    trials: int
    mean_q: float
    stderr_q: float
    p_gtilde: float
    ratio: float          # mean_q / (p * gtilde)
    ratio_stderr: float
    window_high: float    # 1 + 3*sqrt(log r / (gtilde * p))


def finite_n_ratio_window(p: float, gtilde: float, r: int) -> float:
    """Upper allowance on E[Q]/(p*g) from the moment-generating-function
    argument; degenerates to 1 at r = 1."""
    return 1.0 + 3.0 * math.sqrt(math.log(r) / (gtilde * p)) if r > 1 else 1.0


def expected_q_monte_carlo(n: int, p: float, K: int, r: int, trials: int,
                           seed: int = 0) -> QEstimate:
    """Sample ER graphs and measure Q = max row length for the canonical
    group S = {1..r+1} and sender 1 under the batch allocation."""
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if not (0 < p <= 1):
        raise ParameterError(f"p must be in (0,1], got {p}")
    alloc = er_allocate(n, K, r)
    stage = er_plan(alloc).coded[0]
    S = tuple(range(1, r + 2))
    gtilde = alloc.n_alloc * alloc.n_alloc / (K * math.comb(K, r))
    qs = np.empty(trials)
    for t in range(trials):
        graph = gen_er(n, p, seed + t)
        qs[t] = max(
            edge_count_between(graph, stage.reducers_of(k),
                               stage.batch_vertices(tuple(w for w in S if w != k)))
            for k in S if k != 1
        )
    mean_q = float(qs.mean())
    stderr_q = float(qs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    pg = p * gtilde
    return QEstimate(
        n=n, p=p, K=K, r=r, trials=trials,
        mean_q=mean_q, stderr_q=stderr_q, p_gtilde=pg,
        ratio=mean_q / pg, ratio_stderr=stderr_q / pg,
        window_high=finite_n_ratio_window(p, gtilde, r),
    )


def er_uncoded_expected_exact(p: float, alloc) -> float:
    """Exact expected normalized uncoded load on a self-loop-free ER graph
    for a given allocation.

    The asymptotic value p(1-r/K) counts the (i, i) diagonal as a potential
    transfer; with self-loops excluded the exact mean is lower by
    p * |{i : i not in M_owner(i)}| / n^2, which matters at the 3-sigma scale
    of finite sweeps. Virtual padding vertices contribute nothing.
    """
    n = alloc.n
    total = 0
    for k in range(1, alloc.K + 1):
        mk = set(alloc.maps_of(k))
        real_mapped = sum(1 for v in alloc.maps_of(k) if v <= n)
        for i in alloc.reduces_of(k):
            if i <= n:
                total += (n - real_mapped) - (0 if i in mk else 1)
    return p * total / (n * n)


def er_coded_floor_exact(p: float, alloc) -> float:
    """Finite-size converse floor for the batch scheme: the diagonal-corrected
    uncoded mean divided by r (per-sender message counts are maxima of row
    sums, so the coded mean can never fall below it)."""
    return er_uncoded_expected_exact(p, alloc) / alloc.r


def r_star(t_map: float, t_shuffle: float) -> float:
    """Minimizer of r*T_map + T_shuffle/r: sqrt(T_shuffle/T_map)."""
    if t_map <= 0:
        raise ParameterError(f"t_map must be > 0, got {t_map}")
    if t_shuffle < 0:
        raise ParameterError(f"t_shuffle must be >= 0, got {t_shuffle}")
    return math.sqrt(t_shuffle / t_map)


# ---------------------------------------------------------------------------
# Expected loads of the implemented schemes (finite worker groups, asymptotic
# in n). These drive the theory columns of sweep CSVs.
# ---------------------------------------------------------------------------


def rb_scheme_expected(n1: int, n2: int, q: float, K: int, r: int,
                       mode: str) -> float:
    """Two-cluster plan on RB(n1,n2,q): coded phases I/II inside each worker
    group plus the uncoded leftover phase."""
    K1, K2 = rb_split(n1, n2, K)
    n = n1 + n2
    big, small = max(n1, n2), min(n1, n2)
    kb, ks = (K1, K2) if n1 >= n2 else (K2, K1)
    phase1 = q * (big * small / (n * n)) * (1 - r / kb)
    phase2 = q * (small * small / (n * n)) * (1 - r / ks)
    phase3 = q * small * (big - small) / (n * n)
    if mode == "uncoded":
        return phase1 + phase2 + phase3
    return (phase1 + phase2) / r + phase3


def sbm_scheme_expected(n1: int, n2: int, p: float, q: float, K: int, r: int,
                        mode: str) -> float:
    """Cluster-resident plan on SBM: intra components coded inside their
    groups, cross component uncoded."""
    K1, K2 = rb_split(n1, n2, K)
    n = n1 + n2
    intra1 = p * (n1 * n1 / (n * n)) * (1 - r / K1)
    intra2 = p * (n2 * n2 / (n * n)) * (1 - r / K2)
    cross = 2 * q * n1 * n2 / (n * n)
    if mode == "uncoded":
        return intra1 + intra2 + cross
    return (intra1 + intra2) / r + cross


def theory_load(params: GraphModelParams, K: int, r: int, mode: str) -> float:
    """Expected normalized load of the implemented scheme for the model."""
    if params.model == "er":
        base = params.p * (1 - r / K)
        return base if mode == "uncoded" else base / r
    if params.model == "rb":
        return rb_scheme_expected(params.n1, params.n2, params.q, K, r, mode)
    if params.model == "sbm":
        return sbm_scheme_expected(params.n1, params.n2, params.p, params.q, K, r, mode)
    # power law: asymptotic value of n*L scaled back to L
    base = (1 - r / K) * (params.gamma - 1) / (params.gamma - 2) / params.n
    return base if mode == "uncoded" else base / r


def lower_bound_load(params: GraphModelParams, K: int, r: int) -> float | None:
    """Best known converse on the optimal coded load for the model."""
    if params.model == "er":
        return er_bounds(params.p, K, r).lower
    if params.model == "rb":
        return rb_bounds(params.q, K, r).lower
    if params.model == "sbm":
        return sbm_bounds(params.n1, params.n2, params.p, params.q, K, r).lower
    return None


def random_profiles(K: int, r: int, n: int, count: int, seed: int = 0):
    """Sample multiplicity profiles satisfying sum(a)=n and sum(j a_j)=r n,
    for probing the converse formula's minimum."""
    rng = np.random.default_rng(seed)
    out = []
    attempts = 0
    while len(out) < count and attempts < count * 20:
        attempts += 1
        a = np.zeros(K, dtype=np.int64)
        # Split mass between a low index jl <= r and a high index jh >= r so
        # both identities can be met, then add random noise pairs.
        jl = int(rng.integers(1, r + 1))
        jh = int(rng.integers(r, K + 1))
        if jl == jh:
            a[jl - 1] = n
            if jl != r:
                continue
        else:
            # x at jl, n-x at jh with jl*x + jh*(n-x) = r*n
            num = (jh - r) * n
            den = jh - jl
            if num % den:
                continue
            x = num // den
            if not (0 <= x <= n):
                continue
            a[jl - 1] = x
            a[jh - 1] = n - x
        out.append(tuple(int(v) for v in a))
    return out
