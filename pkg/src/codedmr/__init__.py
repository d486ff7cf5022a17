"""Coded MapReduce shuffling for distributed graph analytics.

Generates random graphs, allocates redundant subgraphs and Reduce tasks to K
logical workers, runs Map / coded-Shuffle / Reduce pipelines for vertex
programs, measures exact communication loads, and checks them against
closed-form bounds.
"""

from .allocation import (Allocation, CodedStage, PhasePlan, UncodedStage,
                         allocation_from_json, allocation_to_json,
                         computation_load, er_allocate, er_plan,
                         multiplicity_profile, rb_allocate, sbm_allocate)
from .analysis import (BoundSet, allocation_lower_bound, er_bounds,
                       expected_q_monte_carlo, pl_bound, r_star, rb_bounds,
                       sbm_bounds)
from .engine import (JobConfig, LoadReport, account_loads, build_allocation,
                     measure_sweep, run_iterations, run_job, write_sweep_csv)
from .errors import (ConsistencyError, DecodeError, EdgeListError,
                     ParameterError)
from .graphs import (Graph, GraphModelParams, gen_er, gen_pl, gen_rb, gen_sbm,
                     load_edgelist, save_edgelist, with_uniform_weights)
from .programs import (PageRank, ShortestPaths, pagerank_map, pagerank_reduce,
                       program_by_name, reference_execute, sssp_map,
                       sssp_reduce)
from .shuffle import (CodedMessage, build_z_set, decode_group, dump_messages,
                      encode_group, uncoded_plan)

__version__ = "0.1.0"
