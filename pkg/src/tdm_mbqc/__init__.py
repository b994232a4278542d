"""Simulation and analysis of time-domain measurement-based quantum computation.

Submodules:

* ``gaussian``: covariance-matrix engine (states, symplectic maps, loss, homodyne);
* ``gates``: single-mode gate algebra, teleportation step map and angle compiler;
* ``chain``: the teleportation chain with analytic and sampled simulation;
* ``estimation``: S matrices, nullifier variances, inseparability, bootstrap;
* ``trace``: temporal mode functions and detector traces;
* ``config``, ``experiments``, ``cli``: the ``tdm-mbqc`` command-line harness.
"""

from .chain import (
    ChainConfig,
    MeasurementSchedule,
    PhaseNoise,
    effective_map,
    feedforward_gains,
    run_analytic,
    run_sampled,
)
from .gates import AnglePair, angles_for, compile_target, v_map

__version__ = "0.1.0"

__all__ = [
    "AnglePair",
    "ChainConfig",
    "MeasurementSchedule",
    "PhaseNoise",
    "angles_for",
    "compile_target",
    "effective_map",
    "feedforward_gains",
    "run_analytic",
    "run_sampled",
    "v_map",
]
