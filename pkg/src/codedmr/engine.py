"""Job execution over K logical workers with exact load accounting.

Workers are simulated in one process: the Map, Shuffle and Reduce phases run
sequentially and a bus tally records every transmitted bit as an exact
rational (coded messages cost T/r bits each, unicast records T bits). The
normalized load divides total shuffled bits by n^2 * T with n the real vertex
count. Results are independent of any execution order by construction.

Two evaluation paths share the same plan structures: ``run_job`` moves real
payloads end to end (XOR encode/decode, then Reduce), while ``account_loads``
derives the identical LoadReport from Z-set sizes alone, which is what the
Monte Carlo sweeps use.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt

from .allocation import (Allocation, PhasePlan, er_allocate, er_plan,
                         rb_allocate, sbm_allocate, uncoded_only_plan)
from .errors import ConsistencyError, ParameterError
from .graphs import Graph, GraphModelParams, edge_count_between
from .shuffle import (DEFAULT_VALUE_BITS, bits_to_value, decode_group,
                      encode_group, join_segments, stage_uncoded_records)


@dataclass(frozen=True)
class JobConfig:
    mode: str = "coded"            # "coded" | "uncoded"
    iterations: int = 1
    value_bits: int = DEFAULT_VALUE_BITS
    stop_on_fixed_point: bool = False

    def __post_init__(self):
        if self.mode not in ("coded", "uncoded"):
            raise ParameterError(f"mode must be 'coded' or 'uncoded', got {self.mode!r}")
        if self.iterations < 1:
            raise ParameterError(f"iterations must be >= 1, got {self.iterations}")
        if self.value_bits < 1:
            raise ParameterError(f"value_bits must be >= 1, got {self.value_bits}")


@dataclass
class LoadReport:
    """Per-worker transmitted bits and the normalized shuffle load.

    ``load`` excludes the feedback bits spent pushing updated states back to
    mappers between iterations; those are tallied separately.
    """

    mode: str
    n: int
    n_alloc: int
    K: int
    r: int
    value_bits: int
    bits_by_worker: dict[int, Fraction] = field(default_factory=dict)
    stage_bits: dict[str, Fraction] = field(default_factory=dict)
    map_evaluations: int = 0
    coded_messages: int = 0
    unicast_records: int = 0
    decode_operations: int = 0
    feedback_records: int = 0

    @property
    def total_bits(self) -> Fraction:
        return sum(self.bits_by_worker.values(), Fraction(0))

    @property
    def load(self) -> Fraction:
        return self.total_bits / (self.n * self.n * self.value_bits)

    @property
    def feedback_load(self) -> Fraction:
        return Fraction(self.feedback_records * self.value_bits,
                        self.n * self.n * self.value_bits)

    def stage_loads(self) -> dict[str, Fraction]:
        denom = self.n * self.n * self.value_bits
        return {label: bits / denom for label, bits in self.stage_bits.items()}

    def _charge(self, worker: int, label: str, bits: Fraction) -> None:
        self.bits_by_worker[worker] = self.bits_by_worker.get(worker, Fraction(0)) + bits
        self.stage_bits[label] = self.stage_bits.get(label, Fraction(0)) + bits

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "n_alloc": self.n_alloc,
            "K": self.K,
            "r": self.r,
            "value_bits": self.value_bits,
            "bits_by_worker": {str(k): str(v) for k, v in sorted(self.bits_by_worker.items())},
            "stage_loads": {k: str(v) for k, v in self.stage_loads().items()},
            "normalized_load": str(self.load),
            "normalized_load_float": float(self.load),
            "map_evaluations": self.map_evaluations,
            "coded_messages": self.coded_messages,
            "unicast_records": self.unicast_records,
            "decode_operations": self.decode_operations,
            "feedback_records": self.feedback_records,
            "feedback_load": str(self.feedback_load),
        }


def format_load(load: Fraction, n: int) -> str:
    """Render L in n^2 units when exact (e.g. '3/36'), else as a fraction."""
    scaled = load * n * n
    if scaled.denominator == 1:
        return f"{scaled.numerator}/{n * n}"
    return str(load)


def _plan_for(alloc: Allocation, plan: PhasePlan | None, mode: str) -> PhasePlan:
    if mode == "uncoded":
        return uncoded_only_plan(alloc)
    return plan if plan is not None else er_plan(alloc)


def _check_group_dominance(zs: dict[int, int], q_by_sender: dict[int, int], r: int) -> None:
    # Per-realization guarantee: coded bits never exceed uncoded bits for the
    # same group (sum_s Q_s * T/r <= sum_k z_k * T).
    if sum(q_by_sender.values()) > r * sum(zs.values()):
        raise ConsistencyError(
            f"coded group load exceeded uncoded group load: z={zs}, q={q_by_sender}")


# ---------------------------------------------------------------------------
# Fast accounting path: LoadReport from Z-set sizes, no payloads.
# ---------------------------------------------------------------------------


def account_loads(graph: Graph, alloc: Allocation, plan: PhasePlan | None = None,
                  mode: str = "coded", value_bits: int = DEFAULT_VALUE_BITS) -> LoadReport:
    plan = _plan_for(alloc, plan, mode)
    report = LoadReport(mode=mode, n=graph.n, n_alloc=alloc.n_alloc, K=alloc.K,
                        r=alloc.r, value_bits=value_bits)
    for stage in plan.coded:
        r = stage.r
        seg_bits = Fraction(value_bits, r)
        for S in itertools.combinations(stage.workers, r + 1):
            zs = {
                k: edge_count_between(graph, stage.reducers_of(k),
                                      stage.batch_vertices(tuple(w for w in S if w != k)))
                for k in S
            }
            q_by_sender = {s: max(zs[k] for k in S if k != s) for s in S}
            _check_group_dominance(zs, q_by_sender, r)
            for s, q in q_by_sender.items():
                report._charge(s, stage.label, q * seg_bits)
                report.coded_messages += q
    mw = alloc.mapping_workers()
    for stage in plan.uncoded:
        universe = stage.mapper_universe
        by_source: dict[int, list[int]] = {}
        verts = universe if universe is not None else range(1, alloc.n_alloc + 1)
        for v in verts:
            by_source.setdefault(mw[v][0], []).append(v)
        for k, reducers in stage.reducers:
            mapped_here = set(alloc.maps_of(k))
            for src, owned in by_source.items():
                remote = [v for v in owned if v not in mapped_here]
                cnt = edge_count_between(graph, reducers, sorted(remote))
                if cnt:
                    report._charge(src, stage.label, Fraction(cnt * value_bits))
                    report.unicast_records += cnt
    return report


# ---------------------------------------------------------------------------
# Full payload path: Map, Shuffle (encode/decode or unicast), Reduce.
# ---------------------------------------------------------------------------


def _map_phase(graph: Graph, alloc: Allocation, states: list[float], program,
               report: LoadReport) -> dict[int, dict[tuple[int, int], float]]:
    outputs: dict[int, dict[tuple[int, int], float]] = {}
    for k in range(1, alloc.K + 1):
        mine: dict[tuple[int, int], float] = {}
        for j in alloc.maps_of(k):
            if j > graph.n:
                continue  # virtual padding vertex: no file, no neighbors
            state_j = states[j - 1]
            for i in graph.neighbors(j):
                mine[(int(i), j)] = program.map_value(j, state_j, int(i), graph)
                report.map_evaluations += 1
        outputs[k] = mine
    return outputs


def _shuffle_phase(graph: Graph, alloc: Allocation, plan: PhasePlan,
                   outputs: dict[int, dict], report: LoadReport, value_bits: int):
    """Deliver every remotely-needed record; returns per-worker inboxes of
    fully reassembled values keyed by (reducer, mapper)."""
    inbox: dict[int, dict[tuple[int, int], float]] = {k: {} for k in outputs}
    segments: dict[int, dict[tuple[int, int], dict[int, int]]] = {k: {} for k in outputs}
    for stage in plan.coded:
        r = stage.r
        if r != alloc.r:
            raise ConsistencyError("stage r differs from allocation r")
        seg_bits = Fraction(value_bits, r)
        for S in itertools.combinations(stage.workers, r + 1):
            group_bits = Fraction(0)
            for s in S:
                msgs = encode_group(alloc, graph, S, s, outputs[s],
                                    T=value_bits, stage=stage)
                report.coded_messages += len(msgs)
                report._charge(s, stage.label, len(msgs) * seg_bits)
                group_bits += len(msgs) * seg_bits
                for k in S:
                    if k == s:
                        continue
                    got = decode_group(alloc, graph, S, s, k, msgs, outputs[k],
                                       T=value_bits, stage=stage)
                    report.decode_operations += len(got)
                    for seg in got:
                        segments[k].setdefault((seg.reducer, seg.mapper), {})[seg.index] = seg.payload
            zsum = sum(
                edge_count_between(graph, stage.reducers_of(k),
                                   stage.batch_vertices(tuple(w for w in S if w != k)))
                for k in S)
            if group_bits > zsum * value_bits:
                raise ConsistencyError("coded group load exceeded uncoded group load")
    for k, recs in segments.items():
        for (i, j), parts in recs.items():
            if len(parts) != alloc.r:
                raise ConsistencyError(
                    f"record ({i},{j}) at worker {k} reassembled from "
                    f"{len(parts)}/{alloc.r} segments")
            bits = join_segments([parts[t] for t in range(1, alloc.r + 1)],
                                 value_bits, alloc.r)
            inbox[k][(i, j)] = bits_to_value(bits)
    for stage in plan.uncoded:
        for (i, j), src, dst in stage_uncoded_records(alloc, graph, stage):
            value = outputs[src].get((i, j))
            if value is None:
                raise ConsistencyError(
                    f"uncoded source {src} lacks map output for ({i},{j})")
            inbox[dst][(i, j)] = value
            report.unicast_records += 1
            report._charge(src, stage.label, Fraction(value_bits))
    return inbox


def _reduce_phase(graph: Graph, alloc: Allocation, states, program,
                  outputs: dict[int, dict], inbox: dict[int, dict]) -> list[float]:
    result = [0.0] * graph.n
    for k in range(1, alloc.K + 1):
        mine = outputs[k]
        extra = inbox[k]
        for i in alloc.reduces_of(k):
            if i > graph.n:
                continue
            values = []
            for j in graph.neighbors(i):  # ascending mapper order
                j = int(j)
                v = mine.get((i, j))
                if v is None:
                    v = extra.get((i, j))
                if v is None:
                    raise ConsistencyError(
                        f"worker {k} missing intermediate value ({i},{j}) at Reduce")
                values.append(v)
            own_prev = states[i - 1] if program.needs_own_prev else 0.0
            result[i - 1] = program.reduce(i, values, own_prev, graph)
    return result


def _feedback_records(graph: Graph, alloc: Allocation) -> int:
    """Updated states pushed back to every mapper of each vertex except the
    worker that reduced it (when co-located)."""
    mw = alloc.mapping_workers()
    owner = alloc.reduce_owner()
    return sum(
        len(mw[i]) - (1 if owner[i] in mw[i] else 0)
        for i in range(1, graph.n + 1)
    )


def run_job(graph: Graph, alloc: Allocation, program, config: JobConfig,
            plan: PhasePlan | None = None) -> tuple[list[float], LoadReport]:
    """One Map/Shuffle/Reduce pass. Outputs are bit-identical to
    ``reference_execute`` under the shared ascending-mapper summation rule."""
    outputs, reports = run_iterations(graph, alloc, program,
                                      JobConfig(mode=config.mode, iterations=1,
                                                value_bits=config.value_bits),
                                      plan=plan)
    return outputs, reports[0]


def run_iterations(graph: Graph, alloc: Allocation, program, config: JobConfig,
                   plan: PhasePlan | None = None,
                   initial_state: list[float] | None = None
                   ) -> tuple[list[float], list[LoadReport]]:
    if alloc.n != graph.n:
        raise ParameterError(
            f"allocation built for n={alloc.n} but graph has n={graph.n}")
    plan = _plan_for(alloc, plan, config.mode)
    states = list(initial_state if initial_state is not None
                  else program.initial_state(graph))
    reports: list[LoadReport] = []
    feedback = _feedback_records(graph, alloc)
    for _ in range(config.iterations):
        report = LoadReport(mode=config.mode, n=graph.n, n_alloc=alloc.n_alloc,
                            K=alloc.K, r=alloc.r, value_bits=config.value_bits)
        outputs = _map_phase(graph, alloc, states, program, report)
        inbox = _shuffle_phase(graph, alloc, plan, outputs, report, config.value_bits)
        new_states = _reduce_phase(graph, alloc, states, program, outputs, inbox)
        report.feedback_records = feedback
        reports.append(report)
        if config.stop_on_fixed_point and new_states == states:
            break
        states = new_states
    return states, reports


# ---------------------------------------------------------------------------
# Monte Carlo sweeps over seeds and computation loads.
# ---------------------------------------------------------------------------

SWEEP_CSV_HEADER = "r,mode,model,n,p_or_q,K,seed_count,mean_L,stderr_L,theory_L,lower_bound_L"


@dataclass(frozen=True)
class SweepPoint:
    r: int
    mode: str
    model: str
    n: int
    p_or_q: float
    K: int
    seed_count: int
    mean_L: float
    stderr_L: float
    theory_L: float
    lower_bound_L: float | None
    loads: tuple[float, ...] = ()

    def csv_row(self) -> str:
        lb = "" if self.lower_bound_L is None else repr(self.lower_bound_L)
        return (f"{self.r},{self.mode},{self.model},{self.n},{self.p_or_q!r},"
                f"{self.K},{self.seed_count},{self.mean_L!r},{self.stderr_L!r},"
                f"{self.theory_L!r},{lb}")


def build_allocation(params: GraphModelParams, K: int, r: int):
    """Allocation + coded plan for a model: the batch scheme for ER/PL, the
    two-cluster schemes for RB/SBM."""
    if params.model in ("er", "pl"):
        alloc = er_allocate(params.total_vertices, K, r)
        return alloc, er_plan(alloc)
    if params.model == "rb":
        return rb_allocate(params.n1, params.n2, K, r)
    return sbm_allocate(params.n1, params.n2, K, r)


def _sweep_one_seed(args):
    params, K, r_values, modes, value_bits, seed = args
    graph = params.generate(seed)
    out = {}
    for r in r_values:
        alloc, plan = build_allocation(params, K, r)
        for mode in modes:
            rep = account_loads(graph, alloc, plan, mode=mode,
                                value_bits=value_bits)
            out[(r, mode)] = float(rep.load)
    return out


def measure_sweep(params: GraphModelParams, K: int, r_values, seeds,
                  modes=("uncoded", "coded"),
                  value_bits: int = DEFAULT_VALUE_BITS,
                  threads: int = 1) -> list[SweepPoint]:
    """Mean and standard error of the normalized load per (r, mode) across
    seeded graph realizations, with theory columns for joining.

    ``threads`` > 1 fans seeds out to worker processes; per-seed PRNG streams
    make the result identical to the sequential run.
    """
    from . import analysis  # local import: analysis has no engine dependency

    seeds = list(seeds)
    if not seeds:
        raise ParameterError("at least one seed is required")
    r_values = list(r_values)
    jobs = [(params, K, tuple(r_values), tuple(modes), value_bits, seed)
            for seed in seeds]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_seed = list(pool.map(_sweep_one_seed, jobs, chunksize=4))
    else:
        per_seed = [_sweep_one_seed(job) for job in jobs]
    loads: dict[tuple[int, str], list[float]] = {
        (r, m): [] for r in r_values for m in modes}
    for result in per_seed:  # merged in seed order: threads cannot reorder
        for key, value in result.items():
            loads[key].append(value)
    points = []
    for r in r_values:
        for mode in modes:
            xs = loads[(r, mode)]
            mean = sum(xs) / len(xs)
            var = (sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)) if len(xs) > 1 else 0.0
            stderr = sqrt(var / len(xs)) if len(xs) > 1 else 0.0
            points.append(SweepPoint(
                r=r, mode=mode, model=params.model, n=params.total_vertices,
                p_or_q=params.headline_probability, K=K, seed_count=len(xs),
                mean_L=mean, stderr_L=stderr,
                theory_L=analysis.theory_load(params, K, r, mode),
                lower_bound_L=analysis.lower_bound_load(params, K, r),
                loads=tuple(xs),
            ))
    return points


def write_sweep_csv(points, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for p in points:
            fh.write(p.csv_row() + "\n")
