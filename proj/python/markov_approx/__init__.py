"""Markov-chain approximation experiments (C++ core)."""

from ._core import (
    StableParams,
    chain_identity,
    clt_partial_sums,
    empirical_cf,
    expected_gaussian_norm,
    pareto_samples,
    run_sweep,
    sgd_pair,
    solve_assignment,
    sphere_area,
    stable_constants,
    stable_ou_pair,
    stable_samples,
    theorem_bound,
    verify_identity,
    w1,
)

__all__ = [
    "StableParams",
    "chain_identity",
    "clt_partial_sums",
    "empirical_cf",
    "expected_gaussian_norm",
    "pareto_samples",
    "run_sweep",
    "sgd_pair",
    "solve_assignment",
    "sphere_area",
    "stable_constants",
    "stable_ou_pair",
    "stable_samples",
    "theorem_bound",
    "verify_identity",
    "w1",
]
