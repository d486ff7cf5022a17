"""End-to-end acceptance checks.

Each criterion is a function returning a CriterionResult; ``run_all`` executes
them in order (sharing measured data where later checks reuse earlier runs)
and the CLI ``verify`` command prints one pass/fail line per criterion.
Statistical checks use fixed seeds, so the suite is deterministic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .allocation import er_allocate, rb_allocate, sbm_allocate
from .analysis import (allocation_lower_bound, er_coded_floor_exact,
                       expected_q_monte_carlo, finite_n_ratio_window, r_star,
                       sbm_bounds)
from .engine import (JobConfig, account_loads, build_allocation, format_load,
                     measure_sweep, run_iterations)
from .errors import ParameterError
from .graphs import Graph, GraphModelParams
from .programs import PageRank, ShortestPaths, reference_execute
from .shuffle import encode_group


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} {status} ({self.elapsed:6.1f}s) {self.name}: {self.detail}"


# --- shared fixtures -------------------------------------------------------

FIG3_EDGES = ((1, 5), (2, 6), (3, 4))

# Coded message compositions for the 6-vertex worked instance, K=3 r=2:
# per sender, the set of columns, each column the set of
# (reducer, mapper, segment) triples XORed together.
FIG3_MESSAGES = {
    1: {frozenset({(5, 1, 1), (4, 3, 1)}), frozenset({(3, 4, 1), (6, 2, 1)})},
    2: {frozenset({(5, 1, 2), (1, 5, 1)}), frozenset({(6, 2, 2), (2, 6, 1)})},
    3: {frozenset({(4, 3, 2), (1, 5, 2)}), frozenset({(3, 4, 2), (2, 6, 2)})},
}


def fig3_graph() -> Graph:
    return Graph.from_edges(6, FIG3_EDGES)


def _worker_map_outputs(graph, alloc, program, states):
    outputs = {}
    for k in range(1, alloc.K + 1):
        mine = {}
        for j in alloc.maps_of(k):
            if j <= graph.n:
                for i in graph.neighbors(j):
                    mine[(int(i), j)] = program.map_value(j, states[j - 1], int(i), graph)
        outputs[k] = mine
    return outputs


def _max_rel_error(xs, ys) -> float:
    worst = 0.0
    for x, y in zip(xs, ys):
        if x == y:
            continue
        denom = max(abs(x), abs(y), 1e-300)
        worst = max(worst, abs(x - y) / denom)
    return worst


def _pipeline_matches_reference(graph, alloc, plan, tag: str,
                                dominance: list | None = None) -> list[str]:
    """Coded PageRank (one iteration, <=1e-12 relative) and coded SSSP
    (to fixed point, exact) against the single-machine reference."""
    problems = []
    pr = PageRank()
    got, _ = run_iterations(graph, alloc, pr, JobConfig(mode="coded"), plan=plan)
    want = reference_execute(graph, pr, iterations=1)
    err = _max_rel_error(got, want)
    if err > 1e-12:
        problems.append(f"{tag}: pagerank rel err {err:.3e}")
    sp = ShortestPaths(source=1)
    cap = graph.n + 2
    got, _ = run_iterations(graph, alloc, sp,
                            JobConfig(mode="coded", iterations=cap,
                                      stop_on_fixed_point=True), plan=plan)
    want = reference_execute(graph, sp, iterations=cap, stop_on_fixed_point=True)
    if got != want:
        problems.append(f"{tag}: sssp fixed point differs")
    if dominance is not None:
        cl = account_loads(graph, alloc, plan, mode="coded")
        ul = account_loads(graph, alloc, None, mode="uncoded")
        dominance.append((tag, cl.load, ul.load))
    return problems


# --- criteria --------------------------------------------------------------


def criterion_1(ctx) -> CriterionResult:
    """Worked 6-vertex instance: exact loads and symbolic message match."""
    t0 = time.perf_counter()
    graph = fig3_graph()
    alloc = er_allocate(6, 3, 2)
    pr = PageRank()
    problems = []
    _, rep_coded = run_iterations(graph, alloc, pr, JobConfig(mode="coded"))
    _, rep_uncoded = run_iterations(graph, alloc, pr, JobConfig(mode="uncoded"))
    coded_l, uncoded_l = rep_coded[0].load, rep_uncoded[0].load
    if coded_l != Fraction(3, 36):
        problems.append(f"coded L = {coded_l}, expected 3/36")
    if uncoded_l != Fraction(6, 36):
        problems.append(f"uncoded L = {uncoded_l}, expected 6/36")
    outputs = _worker_map_outputs(graph, alloc, pr, pr.initial_state(graph))
    for sender in (1, 2, 3):
        msgs = encode_group(alloc, graph, (1, 2, 3), sender, outputs[sender])
        got = {frozenset(m.parts) for m in msgs}
        if got != FIG3_MESSAGES[sender]:
            problems.append(f"sender {sender} messages {got} != {FIG3_MESSAGES[sender]}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 1.0:
        problems.append(f"runtime {elapsed:.2f}s >= 1s")
    detail = (f"uncoded L = {format_load(uncoded_l, 6)}, coded L = "
              f"{format_load(coded_l, 6)}, message compositions match"
              if not problems else "; ".join(problems))
    return CriterionResult(1, "worked-example exactness", not problems, detail, elapsed)


def criterion_2(ctx) -> CriterionResult:
    """100 random ER instances: coded pipeline equals the reference."""
    t0 = time.perf_counter()
    grid = [(n, p, K) for n in (30, 60) for p in (0.1, 0.3) for K in (3, 4, 5)]
    problems = []
    dominance = ctx.setdefault("dominance", [])
    count = 0
    for idx in range(100):
        n, p, K = grid[idx % len(grid)]
        r = 1 + (idx * 7919) % K
        params = GraphModelParams(model="er", n=n, p=p)
        graph = params.generate(1000 + idx)
        alloc, plan = build_allocation(params, K, r)
        tag = f"er#{idx}(n={n},p={p},K={K},r={r})"
        problems += _pipeline_matches_reference(graph, alloc, plan, tag, dominance)
        count += 1
        if problems and len(problems) > 5:
            break
    elapsed = time.perf_counter() - t0
    if elapsed >= 60.0:
        problems.append(f"runtime {elapsed:.1f}s >= 60s")
    detail = (f"{count} instances, PageRank <=1e-12 rel, SSSP exact"
              if not problems else "; ".join(problems[:6]))
    return CriterionResult(2, "decode correctness", not problems, detail, elapsed)


def criterion_3(ctx) -> CriterionResult:
    """ER(300, 0.1), K=5, 100 seeds, r=1..4: means against theory."""
    t0 = time.perf_counter()
    params = GraphModelParams(model="er", n=300, p=0.1)
    K, p = 5, 0.1
    points = measure_sweep(params, K, [1, 2, 3, 4], range(100))
    ctx["c3_points"] = points
    by = {(pt.r, pt.mode): pt for pt in points}
    problems = []
    details = []
    dominance = ctx.setdefault("dominance", [])
    for r in (1, 2, 3, 4):
        unc, cod = by[(r, "uncoded")], by[(r, "coded")]
        for cu, uu in zip(cod.loads, unc.loads):
            dominance.append((f"er300 r={r}", cu, uu))
        target_u = p * (1 - r / K)
        if abs(unc.mean_L - target_u) > 0.02 * target_u:
            problems.append(f"r={r}: uncoded mean {unc.mean_L:.5f} not within 2% of {target_u:.5f}")
        lb = target_u / r
        alloc = er_allocate(300, K, r)
        floor = er_coded_floor_exact(p, alloc)
        gtilde = 300 * 300 / (K * math.comb(K, r))
        hi = lb * finite_n_ratio_window(p, gtilde, r)
        lo_adj = floor - 3 * cod.stderr_L
        hi_adj = hi + 3 * cod.stderr_L
        if not (lo_adj <= cod.mean_L <= hi_adj):
            problems.append(
                f"r={r}: coded mean {cod.mean_L:.5f} outside [{lo_adj:.5f}, {hi_adj:.5f}]")
        if r >= 2:
            gain = unc.mean_L / cod.mean_L
            if gain < 0.9 * r:
                problems.append(f"r={r}: gain {gain:.3f} < {0.9 * r:.2f}")
            details.append(f"r={r} gain={gain:.2f}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 600.0:
        problems.append(f"runtime {elapsed:.1f}s >= 600s")
    detail = ("means within windows, " + ", ".join(details)
              if not problems else "; ".join(problems))
    return CriterionResult(3, "load sweep vs theory (ER)", not problems, detail, elapsed)


def criterion_4(ctx) -> CriterionResult:
    """E[Q] concentration: ratio to p*g within the proof's window, closing in n."""
    t0 = time.perf_counter()
    problems = []
    ratios = []
    for n in (150, 300, 600):
        est = expected_q_monte_carlo(n, 0.1, 5, 2, trials=300, seed=4000)
        ratios.append((n, est))
        lo = 1 - 3 * est.ratio_stderr
        if not (lo <= est.ratio <= est.window_high):
            problems.append(
                f"n={n}: ratio {est.ratio:.4f} outside [{lo:.4f}, {est.window_high:.4f}]")
    gaps = [abs(est.ratio - 1) for _, est in ratios]
    if not (gaps[0] > gaps[1] > gaps[2]):
        problems.append(f"|ratio-1| not monotone decreasing: {gaps}")
    elapsed = time.perf_counter() - t0
    detail = (", ".join(f"n={n}: {est.ratio:.4f}<= {est.window_high:.4f}"
                        for n, est in ratios)
              if not problems else "; ".join(problems))
    return CriterionResult(4, "expected Q concentration", not problems, detail, elapsed)


def criterion_5(ctx) -> CriterionResult:
    """Converse formula at the batch profile; measured loads above the floor."""
    t0 = time.perf_counter()
    problems = []
    for K in range(1, 9):
        for r in range(1, K + 1):
            for p in (0.1, 0.7):
                n = 4 * K * math.comb(K, r)
                profile = [0] * K
                profile[r - 1] = n
                got = allocation_lower_bound(profile, p, K, n)
                want = (1 / r) * p * (1 - r / K)
                if not math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-15):
                    problems.append(f"K={K} r={r} p={p}: {got!r} != {want!r}")
    points = ctx.get("c3_points")
    if points is None:
        raise ParameterError("criterion 5 needs criterion 3 data")
    for pt in points:
        if pt.mode != "coded":
            continue
        alloc = er_allocate(300, 5, pt.r)
        floor = er_coded_floor_exact(0.1, alloc)
        if pt.mean_L < floor - 3 * pt.stderr_L:
            problems.append(
                f"r={pt.r}: coded mean {pt.mean_L:.5f} below floor {floor:.5f} - 3se")
    elapsed = time.perf_counter() - t0
    detail = ("spike profile matches (1/r)p(1-r/K) for K<=8; sweep means above floor"
              if not problems else "; ".join(problems[:6]))
    return CriterionResult(5, "lower-bound consistency", not problems, detail, elapsed)


def criterion_6(ctx) -> CriterionResult:
    """Balanced RB: coded mean within 15% of theory, empty phase III, decode ok."""
    t0 = time.perf_counter()
    q, K = 0.1, 6
    params = GraphModelParams(model="rb", n1=150, n2=150, q=q)
    problems = []
    details = []
    dominance = ctx.setdefault("dominance", [])
    for r in (1, 2):
        alloc, plan = rb_allocate(150, 150, K, r)
        loads_c, loads_u = [], []
        phase3_bits = Fraction(0)
        for seed in range(100):
            graph = params.generate(seed)
            rep_c = account_loads(graph, alloc, plan, mode="coded")
            rep_u = account_loads(graph, alloc, None, mode="uncoded")
            loads_c.append(rep_c.load)
            loads_u.append(rep_u.load)
            phase3_bits += rep_c.stage_bits.get("phase3", Fraction(0))
            dominance.append((f"rb r={r} seed={seed}", rep_c.load, rep_u.load))
        mean_c = float(sum(loads_c) / len(loads_c))
        target = (1 / (2 * r)) * q * (1 - 2 * r / K)
        if abs(mean_c - target) > 0.15 * target:
            problems.append(f"r={r}: coded mean {mean_c:.6f} not within 15% of {target:.6f}")
        if phase3_bits != 0:
            problems.append(f"r={r}: phase III carried {phase3_bits} bits")
        details.append(f"r={r} mean={mean_c:.6f} target={target:.6f}")
    for seed, r in ((0, 1), (1, 2), (2, 2)):
        graph = params.generate(seed)
        alloc, plan = rb_allocate(150, 150, K, r)
        problems += _pipeline_matches_reference(graph, alloc, plan, f"rb seed={seed} r={r}")
    elapsed = time.perf_counter() - t0
    detail = ("; ".join(details) + "; phase III empty; decode ok"
              if not problems else "; ".join(problems))
    return CriterionResult(6, "bi-partite scheme", not problems, detail, elapsed)


def criterion_7(ctx) -> CriterionResult:
    """SBM: component sums exact, total within the theorem's band."""
    t0 = time.perf_counter()
    n1 = n2 = 100
    p, q, K, r = 0.2, 0.05, 6, 2
    params = GraphModelParams(model="sbm", n1=n1, n2=n2, p=p, q=q)
    alloc, plan = sbm_allocate(n1, n2, K, r)
    problems = []
    loads = []
    dominance = ctx.setdefault("dominance", [])
    for seed in range(100):
        graph = params.generate(seed)
        rep = account_loads(graph, alloc, plan, mode="coded")
        rep_u = account_loads(graph, alloc, None, mode="uncoded")
        stage_sum = sum(rep.stage_bits.values(), Fraction(0))
        if stage_sum != rep.total_bits:
            problems.append(f"seed={seed}: stage sum {stage_sum} != total {rep.total_bits}")
            break
        loads.append(rep.load)
        dominance.append((f"sbm seed={seed}", rep.load, rep_u.load))
    mean = float(sum(loads) / len(loads))
    var = sum((float(x) - mean) ** 2 for x in loads) / (len(loads) - 1)
    stderr = math.sqrt(var / len(loads))
    upper = sbm_bounds(n1, n2, p, q, K, r).coded_upper * 1.15
    lower = (q / r) * (1 - r / K) - 3 * stderr
    if mean > upper:
        problems.append(f"mean {mean:.6f} > bound*(1.15) = {upper:.6f}")
    if mean < lower:
        problems.append(f"mean {mean:.6f} < converse - 3se = {lower:.6f}")
    elapsed = time.perf_counter() - t0
    detail = (f"component sums exact; mean={mean:.6f} in [{lower:.6f}, {upper:.6f}]"
              if not problems else "; ".join(problems))
    return CriterionResult(7, "block-model scheme", not problems, detail, elapsed)


def criterion_8(ctx) -> CriterionResult:
    """Power-law: gain within 20% of r; decode on a smaller PL instance."""
    t0 = time.perf_counter()
    K = 5
    params = GraphModelParams(model="pl", n=2000, gamma=2.5, rho=None)
    problems = []
    details = []
    dominance = ctx.setdefault("dominance", [])
    allocs = {r: build_allocation(params, K, r) for r in (2, 3)}
    sums: dict[tuple[int, str], list[Fraction]] = {}
    for seed in range(50):
        graph = params.generate(seed)
        for r in (2, 3):
            alloc, plan = allocs[r]
            rep_c = account_loads(graph, alloc, plan, mode="coded")
            rep_u = account_loads(graph, alloc, None, mode="uncoded")
            sums.setdefault((r, "coded"), []).append(rep_c.load)
            sums.setdefault((r, "uncoded"), []).append(rep_u.load)
            dominance.append((f"pl r={r} seed={seed}", rep_c.load, rep_u.load))
    for r in (2, 3):
        mean_c = float(sum(sums[(r, "coded")]) / 50)
        mean_u = float(sum(sums[(r, "uncoded")]) / 50)
        gain = mean_u / mean_c
        if not (0.8 * r <= gain <= 1.2 * r):
            problems.append(f"r={r}: gain {gain:.3f} outside [{0.8*r:.2f}, {1.2*r:.2f}]")
        details.append(f"r={r} gain={gain:.3f}")
    small = GraphModelParams(model="pl", n=200, gamma=2.5, rho=None)
    for seed, r in ((0, 2), (1, 3)):
        graph = small.generate(seed)
        alloc, plan = build_allocation(small, K, r)
        problems += _pipeline_matches_reference(graph, alloc, plan, f"pl seed={seed} r={r}")
    elapsed = time.perf_counter() - t0
    detail = ("; ".join(details) + "; decode ok" if not problems
              else "; ".join(problems))
    return CriterionResult(8, "power-law scheme", not problems, detail, elapsed)


def criterion_9(ctx) -> CriterionResult:
    """Per-realization dominance: coded load never exceeded uncoded load."""
    t0 = time.perf_counter()
    pairs = ctx.get("dominance", [])
    if not pairs:
        raise ParameterError("criterion 9 needs instances from criteria 2-8")
    violations = [(tag, c, u) for tag, c, u in pairs if c > u]
    elapsed = time.perf_counter() - t0
    detail = (f"coded <= uncoded on all {len(pairs)} realizations"
              if not violations
              else "; ".join(f"{t}: {float(c):.6f} > {float(u):.6f}"
                             for t, c, u in violations[:5]))
    return CriterionResult(9, "per-realization dominance", not violations, detail, elapsed)


def criterion_10(ctx) -> CriterionResult:
    """Computation-load heuristic reproduces the reported operating point."""
    t0 = time.perf_counter()
    got = r_star(1.649, 43.78)
    ok = abs(got - 5.15) <= 0.005
    elapsed = time.perf_counter() - t0
    detail = f"r_star(1.649, 43.78) = {got:.4f} (expected 5.15 +- 0.005)"
    return CriterionResult(10, "r* heuristic", ok, detail, elapsed)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
    5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8,
    9: criterion_9, 10: criterion_10,
}

_DEPS = {5: (3,), 9: (2, 3, 6, 7, 8)}


def run_all(only: int | None = None) -> list[CriterionResult]:
    if only is not None and only not in CRITERIA:
        raise ParameterError(f"no criterion {only}")
    if only is None:
        numbers = sorted(CRITERIA)
    else:
        numbers = sorted(set(_DEPS.get(only, ())) | {only})
    ctx: dict = {}
    results = []
    for num in numbers:
        t0 = time.perf_counter()
        try:
            results.append(CRITERIA[num](ctx))
        except Exception as exc:  # a crashed criterion is a failed criterion
            results.append(CriterionResult(
                num, CRITERIA[num].__doc__.split("\n")[0], False,
                f"exception: {exc!r}", time.perf_counter() - t0))
    return results
