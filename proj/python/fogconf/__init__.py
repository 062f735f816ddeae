"""Eventually consistent configuration service bindings.

The C++ core does the work; this package re-exports the pieces most useful
from Python: the CRDT primitives, the registry, and the scenario runner that
produces the latency/convergence CSVs.
"""

import json as _json

from ._core import (
    Action,
    LwwElementSet,
    NodeInfo,
    Registry,
    ReplicaClock,
    Timestamp,
    builtin_scenarios,
    run_scenario,
    summarize_latency_csv,
)

__all__ = [
    "Action",
    "LwwElementSet",
    "NodeInfo",
    "Registry",
    "ReplicaClock",
    "Timestamp",
    "builtin_scenarios",
    "builtin_scenario",
    "run_scenario",
    "run",
    "summarize",
    "summarize_latency_csv",
]

__version__ = "0.1.0"


def builtin_scenario(name):
    """Return one builtin scenario as a dict."""
    scenarios = builtin_scenarios()
    if name not in scenarios:
        raise KeyError(f"no builtin scenario named {name!r}")
    return _json.loads(scenarios[name])


def run(scenario, paper_zeros=False):
    """Run a scenario given as a dict or JSON string.

    Returns (latency_csv, convergence_csv) as strings.
    """
    if isinstance(scenario, dict):
        scenario = _json.dumps(scenario)
    return run_scenario(scenario, paper_zeros)


def summarize(latency_csv):
    """Summarize a latency CSV string into a dict."""
    return _json.loads(summarize_latency_csv(latency_csv))
