"""Pathwise integration of the jump-driven SPDE and its controlled variant.

Between events the dynamics are deterministic (drift includes the
compensator of the compensated noise term); at a sampled event (t_i, j) the
field takes the multiplicative kick u(t_i) = u(t_i-) * (1 + eps * g_j).
Jump times are inserted exactly into the step sequence, so a scalar
single-mode run admits a closed-form product oracle.
"""

from __future__ import annotations

import numpy as np

from .jumps import (Control, JumpModel, JumpSample, NoiseScale,
                    drift_coefficient, sample_controlled_prm, sample_prm)
from .params import Parameters
from .skeleton import DEFAULT_BLOWUP_FACTOR, TimeGrid, Trajectory, march
from .spectral import SpectralBasis, StateField


def _kicks(events: JumpSample, jm: JumpModel, eps: float) -> np.ndarray:
    if not events.n_events:
        return np.empty(0)
    return 1.0 + eps * jm.g[events.marks]


def solve_spde(params: Parameters, basis: SpectralBasis, u0: StateField,
               jm: JumpModel, eps: NoiseScale, grid: TimeGrid, seed: int,
               events: JumpSample | None = None,
               blowup_factor: float = DEFAULT_BLOWUP_FACTOR,
               event_log: list | None = None, with_norms: bool = True) -> Trajectory:
    """One path of the small-noise SPDE, deterministic given the seed.

    The compensator of the compensated-noise term contributes the constant
    drift -(sum_j g_j nu_j) between kicks; ``events`` overrides sampling
    (used by tests that inject a fixed or empty event set).
    """
    if events is None:
        events = sample_prm(jm, eps, grid.T, seed)
    comp = -float(np.sum(jm.g * jm.nu))
    return march(params, basis, u0, grid, events, _kicks(events, jm, eps.epsilon),
                 lambda b: comp, 1, blowup_factor, event_log, with_norms)


def solve_controlled_spde(params: Parameters, basis: SpectralBasis, u0: StateField,
                          jm: JumpModel, eps: NoiseScale, ctrl: Control,
                          grid: TimeGrid, seed: int,
                          events: JumpSample | None = None,
                          blowup_factor: float = DEFAULT_BLOWUP_FACTOR,
                          event_log: list | None = None,
                          with_norms: bool = True) -> Trajectory:
    """One path of the controlled SPDE driven by the thinned PRM.

    Drift combines the control compensator c(t) u (as in the skeleton) and
    the compensator of the controlled noise, -(sum_j g_j phi(t,j) nu_j) u.
    """
    if events is None:
        events = sample_controlled_prm(jm, eps, ctrl, seed)

    def bin_drift(b: int) -> float:
        t_mid = (b + 0.5) * ctrl.T / ctrl.n_bins
        return (drift_coefficient(jm, ctrl, t_mid)
                - float(np.sum(jm.g * ctrl.phi[b] * jm.nu)))

    return march(params, basis, u0, grid, events, _kicks(events, jm, eps.epsilon),
                 bin_drift, ctrl.n_bins, blowup_factor, event_log, with_norms)
