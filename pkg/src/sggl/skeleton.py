"""Deterministic skeleton equation du/dt = Au + Bu + c(t)u.

c(t) = sum_j g_j (phi(t,z_j) - 1) nu_j is the compensator drift of a control
intensity phi.  The map from a control to its skeleton trajectory is the
deterministic solution operator whose continuity underpins the small-noise
analysis; numerically it is the workhorse behind the rate-function estimator.

The module also hosts the shared marching engine used by the jump solvers:
uniform ETDRK2 steps, refined so control-bin edges are step boundaries, with
exact insertion of sampled jump times and multiplicative kicks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jumps import Control, JumpModel, JumpSample, drift_coefficient, empty_sample
from .params import Parameters
from .spectral import NormReport, SpectralBasis, StateField, _nonlinear_grid, compute_norms
from .timestep import BlowUpError, etdrk2_step, linear_tables

DEFAULT_BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_steps: int
    save_stride: int = 1

    def __post_init__(self):
        if not (self.T > 0 and self.n_steps >= 1 and self.save_stride >= 1):
            raise ValueError("need T > 0, n_steps >= 1, save_stride >= 1")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    def refined_steps(self, n_bins: int) -> int:
        """Step count rounded up so control-bin edges are grid points."""
        q = -(-self.n_steps // n_bins)   # ceil division
        return q * n_bins


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[StateField]
    norms: list[NormReport]

    @property
    def endpoint(self) -> StateField:
        return self.states[-1]


def _norm_p_list(params: Parameters) -> list[int]:
    return [int(round(2 * params.sigma + 2))]


def make_nonlin(params: Parameters, basis: SpectralBasis):
    """Mode-space nonlinearity N(c): septic saturation plus derivative term."""
    def nonlin(modes: np.ndarray) -> np.ndarray:
        return basis.to_modes(_nonlinear_grid(StateField(modes, basis), params))
    return nonlin


def march(params: Parameters, basis: SpectralBasis, u0: StateField,
          grid: TimeGrid, events: JumpSample, kick_factors: np.ndarray,
          bin_drift, n_bins: int,
          blowup_factor: float = DEFAULT_BLOWUP_FACTOR,
          event_log: list | None = None, with_norms: bool = True) -> Trajectory:
    """Integrate du/dt = Au + Bu + d(t)u between events, kick at events.

    d(t) = bin_drift(b) is constant on control bin b; the stiff linear part
    (1+i alpha)Lap + gamma + d is mode-diagonal and integrated exactly.
    An event i at time t_i multiplies the state by kick_factors[i] after the
    drift step ending at t_i (left-limit convention).
    """
    n_steps = grid.refined_steps(n_bins)
    dt = grid.T / n_steps
    nonlin = make_nonlin(params, basis)
    Lbase = (1.0 + 1j * params.alpha) * basis.eigenvalues + params.gamma
    cap = blowup_factor * (u0.l2() + 1.0)
    p_list = _norm_p_list(params)

    # identity kicks are no-ops: drop them to keep the stepping identical to
    # the corresponding deterministic run
    if events.n_events and np.all(kick_factors == 1.0) and event_log is None:
        events = empty_sample(grid.T)
        kick_factors = np.empty(0)

    grid_times = np.arange(1, n_steps + 1) * dt
    c = u0.modes.astype(complex).copy()
    times = [0.0]
    states = [StateField(c.copy(), basis)]
    norms = [compute_norms(states[0], p_list)] if with_norms else []

    tables_cache: dict[tuple[float, int], tuple] = {}

    def step_with(h: float, b: int, c):
        key = (h, b)
        tables = tables_cache.get(key)
        if tables is None:
            tables = linear_tables(h, Lbase + bin_drift(b))
            tables_cache[key] = tables
        return etdrk2_step(c, h, None, nonlin, tables=tables)

    ev_t = events.times
    ev_m = events.marks
    ev_i = 0
    t = 0.0
    for step, t_next in enumerate(grid_times):
        while ev_i < ev_t.size and ev_t[ev_i] <= t_next:
            tj = float(ev_t[ev_i])
            h = tj - t
            b = min(int(t * n_bins / grid.T), n_bins - 1)
            if h > 0:
                c = step_with(h, b, c)
            if event_log is not None:
                pre = float(np.sqrt(np.sum(np.abs(c) ** 2)))
            c = c * kick_factors[ev_i]
            if event_log is not None:
                post = float(np.sqrt(np.sum(np.abs(c) ** 2)))
                event_log.append((tj, int(ev_m[ev_i]), pre, post))
            t = tj
            ev_i += 1
        h = t_next - t
        if h > 0:
            b = min(int(t * n_bins / grid.T), n_bins - 1)
            c = step_with(h, b, c)
        t = float(t_next)
        norm = float(np.sqrt(np.sum(np.abs(c) ** 2)))
        if not np.isfinite(norm) or norm > cap:
            raise BlowUpError(step + 1, t, norm, cap)
        if (step + 1) % grid.save_stride == 0 or step == n_steps - 1:
            u = StateField(c.copy(), basis)
            times.append(t)
            states.append(u)
            if with_norms:
                norms.append(compute_norms(u, p_list))
    return Trajectory(np.asarray(times), states, norms)


def solve_skeleton(params: Parameters, basis: SpectralBasis, u0: StateField,
                   jm: JumpModel, ctrl: Control, grid: TimeGrid,
                   blowup_factor: float = DEFAULT_BLOWUP_FACTOR,
                   with_norms: bool = True) -> Trajectory:
    """Integrate the controlled deterministic equation on [0, T]."""
    def bin_drift(b: int) -> float:
        t_mid = (b + 0.5) * ctrl.T / ctrl.n_bins
        return drift_coefficient(jm, ctrl, t_mid)

    return march(params, basis, u0, grid, empty_sample(grid.T), np.empty(0),
                 bin_drift, ctrl.n_bins, blowup_factor, with_norms=with_norms)


def embed_modes(modes: np.ndarray, basis_to: SpectralBasis) -> np.ndarray:
    """Truncate or zero-pad a coefficient matrix into another basis size."""
    out = np.zeros((basis_to.n1, basis_to.n2), dtype=complex)
    n1 = min(modes.shape[0], basis_to.n1)
    n2 = min(modes.shape[1], basis_to.n2)
    out[:n1, :n2] = modes[:n1, :n2]
    return out


def galerkin_refine(params: Parameters, jm: JumpModel, ctrl: Control,
                    u0: StateField, grid: TimeGrid, n_list: list[int],
                    pad_factor: int = 4) -> list[tuple[int, float]]:
    """Endpoint self-convergence study over basis sizes.

    Runs the skeleton at each n in n_list (increasing; the largest is the
    reference) and reports ||u_n(T) - u_nmax(T)|| for the coarser sizes.
    """
    from .spectral import make_basis
    if sorted(n_list) != list(n_list) or len(n_list) < 2:
        raise ValueError("n_list must be increasing with at least two entries")
    endpoints = {}
    for n in n_list:
        basis_n = make_basis(n, n, params, pad_factor)
        u0_n = StateField(embed_modes(u0.modes, basis_n), basis_n)
        traj = solve_skeleton(params, basis_n, u0_n, jm, ctrl, grid)
        endpoints[n] = traj.endpoint.modes
    n_max = n_list[-1]
    basis_max = make_basis(n_max, n_max, params, pad_factor)
    ref = endpoints[n_max]
    out = []
    for n in n_list[:-1]:
        diff = ref - embed_modes(endpoints[n], basis_max)
        out.append((n, float(np.sqrt(np.sum(np.abs(diff) ** 2)))))
    return out
