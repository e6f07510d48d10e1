"""Python bindings for the dsmplan conversation planner."""
import json

from ._dsmplan import DsmplanError, count_tokens_approx, reachability, run_cli
from . import _dsmplan

__all__ = [
    "DsmplanError",
    "budget",
    "cluster",
    "cost_j",
    "count_tokens_approx",
    "manifest_dsm_csv",
    "reachability",
    "run_cli",
    "sequence",
]


def manifest_dsm_csv(path, tokens="approx", binary=False):
    return _dsmplan.manifest_dsm_csv(str(path), tokens, binary)


def sequence(csv):
    return json.loads(_dsmplan.sequence_json(csv))


def cluster(csv, alpha=2.0, beta=1.0, seed=42, restarts=32, exhaustive=False):
    return json.loads(_dsmplan.cluster_json(csv, alpha, beta, seed, restarts, exhaustive))


def cost_j(csv, groups, alpha=2.0, beta=1.0):
    return _dsmplan.cost_j(csv, [list(g) for g in groups], alpha, beta)


def budget(plan):
    """Budget of a literal plan given as a dict or JSON text."""
    text = plan if isinstance(plan, str) else json.dumps(plan)
    return json.loads(_dsmplan.budget_json(text))
