"""Subtractive random forests: simulation, exact series and verification."""

import json

from ._surf import (
    BudgetError,
    SpecError,
    StepDistribution,
    __version__,
    colors,
    expected_leaves,
    expected_size_series,
    expected_trees,
    renewal_sequence,
    simulate,
    stats_from_steps,
    survival_probability,
)
from ._surf import _enumerate_exact_json, _verify_json


def enumerate_exact(spec, n, budget=10_000_000):
    """Exact expectations by enumerating every step sequence of length n."""
    return json.loads(_enumerate_exact_json(spec, n, budget))


def verify(spec, sizes, seed=20240601, reps=1000, threads=0):
    """Run the verification checks and return the report as a dict."""
    return json.loads(_verify_json(spec, list(sizes), seed, reps, threads))


__all__ = [
    "BudgetError",
    "SpecError",
    "StepDistribution",
    "__version__",
    "colors",
    "enumerate_exact",
    "expected_leaves",
    "expected_size_series",
    "expected_trees",
    "renewal_sequence",
    "simulate",
    "stats_from_steps",
    "survival_probability",
    "verify",
]
