"""Constrained condenser energy problems for Riesz and Green kernels."""

from ._condenser import (
    CondenserError,
    Problem,
    Solution,
    ball_capacity,
    calibrate_beta,
    config_hash,
    counterexample,
    disc_capacity,
    short_circuit,
    unbounded_constraint,
    versions,
)

__all__ = [
    "CondenserError",
    "Problem",
    "Solution",
    "ball_capacity",
    "calibrate_beta",
    "config_hash",
    "counterexample",
    "disc_capacity",
    "short_circuit",
    "unbounded_constraint",
    "versions",
]
