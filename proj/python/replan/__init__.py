"""Query plan re-optimization toolkit.

Thin wrapper over the _replan extension module: parse catalogs, workloads
and plans, learn problem-pattern templates offline, and re-optimize
queries online by matching those templates against plan graphs.
"""

from _replan import (  # noqa: F401
    Catalog,
    KnowledgeBase,
    Plan,
    Query,
    ReplanError,
    Workload,
    estimated_cost,
    learn,
    match,
    optimize,
    queries,
    random_plan,
    reoptimize,
    scenario,
    scenario_names,
    true_run,
)

__all__ = [
    "Catalog",
    "KnowledgeBase",
    "Plan",
    "Query",
    "ReplanError",
    "Workload",
    "estimated_cost",
    "learn",
    "match",
    "optimize",
    "queries",
    "random_plan",
    "reoptimize",
    "scenario",
    "scenario_names",
    "true_run",
]
