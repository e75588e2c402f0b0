"""Energy community simulator (Python front end to the C++ core)."""

import json

from ._csc import (
    AllocationOutcome,
    FormatError,
    PriorityState,
    ValidationError,
    __version__,
    allocate_double_auction,
    allocate_glass_filling,
    allocate_prioritized_glass_filling,
    allocate_pro_rata,
    community_energy,
    contribution,
    glass_fill,
    jain_index,
    meritocratic_index,
    min_max_ratio,
    social_welfare,
    weighted_utility,
)
from . import _csc


def default_config():
    return json.loads(_csc.default_config())


def generate_community(config=None, index=0, uptake=0.0):
    return _csc.generate_community(json.dumps(config or {}), index, uptake)


def run_sweep(config=None, out_root=None, jobs=1, resume=False):
    """Runs the sweep; outputs are written only when out_root is given."""
    return _csc.run_sweep(json.dumps(config or {}), out_root, jobs, resume)
