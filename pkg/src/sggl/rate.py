"""Relative-entropy cost of controls and the numerical rate-function estimator.

The cost of a piecewise-constant intensity phi is the relative-entropy
functional sum_b sum_j l(phi[b,j]) nu_j (T/n_bins) with density
l(r) = r log r - r + 1.  The rate of an endpoint event (a closed ball around
a target field) is estimated by exterior-penalty minimization of the cost
subject to the skeleton endpoint landing in the ball, using projected
finite-difference gradient descent over the control entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .jumps import Control, JumpModel
from .params import Parameters
from .skeleton import TimeGrid, solve_skeleton
from .timestep import BlowUpError
from .spectral import SpectralBasis, StateField


def ell(r) -> float:
    """Entropy density l(r) = r log r - r + 1, with l(0) = 1 by continuity."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("l(r) is defined for r >= 0 only")
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)) - r + 1.0, 1.0)
    return float(v) if v.ndim == 0 else v


def cost(ctrl: Control, jm: JumpModel) -> float:
    """Relative-entropy cost; exact for piecewise-constant controls."""
    dt_bin = ctrl.T / ctrl.n_bins
    return float(np.sum(ell(ctrl.phi) * jm.nu[None, :]) * dt_bin)


def in_level_set(ctrl: Control, jm: JumpModel, N: float) -> bool:
    """Membership in the closed level set {cost <= N}."""
    if N < 0:
        raise ValueError("level N must be >= 0")
    return cost(ctrl, jm) <= N


@dataclass(frozen=True)
class EndpointSpec:
    """Target event: skeleton endpoint within ``radius`` of ``center`` in L2."""

    center: StateField
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be >= 0")


@dataclass(frozen=True)
class OptConfig:
    n_bins: int = 1
    rho0: float = 10.0
    rho_growth: float = 10.0
    n_rho: int = 6
    max_inner: int = 60
    fd_step: float = 1e-4
    step0: float = 0.5
    gap_tol: float = 1e-4
    extra_starts: tuple[float, ...] = (0.5, 2.0)


@dataclass
class RateResult:
    value: float
    control: Control
    endpoint_gap: float
    iterations: int
    feasible: bool


def _endpoint_gap(phi: np.ndarray, target: EndpointSpec, params, basis, jm,
                  u0, grid) -> float:
    ctrl = Control(T=grid.T, phi=phi)
    try:
        traj = solve_skeleton(params, basis, u0, jm, ctrl, grid)
    except BlowUpError:
        # an exploding skeleton can never satisfy the endpoint constraint;
        # an infinite gap lets the line search back off the candidate
        return math.inf
    diff = traj.endpoint.modes - target.center.modes
    return float(np.sqrt(np.sum(np.abs(diff) ** 2)))


def estimate_rate(target: EndpointSpec, params: Parameters, basis: SpectralBasis,
                  jm: JumpModel, u0: StateField, grid: TimeGrid,
                  opt_cfg: OptConfig = OptConfig()) -> RateResult:
    """Estimate inf{cost(phi) : skeleton endpoint within the target ball}.

    Exterior penalty with geometric continuation in rho; the inner loop is
    projected gradient descent (phi >= 0) with forward-difference gradients
    and backtracking line search.  Control dimension n_bins x K stays small,
    so finite differences are affordable.  Infeasibility within the budget is
    reported via the ``feasible`` flag (the numerical proxy for an infinite
    rate), never as a sentinel value.
    """
    K = jm.n_marks
    shape = (opt_cfg.n_bins, K)
    tol = opt_cfg.gap_tol

    def gap_of(phi):
        return _endpoint_gap(phi, target, params, basis, jm, u0, grid)

    def cost_of(phi):
        return cost(Control(T=grid.T, phi=phi), jm)

    def violation(gap):
        return max(0.0, gap - target.radius)

    best = None   # (cost, phi, gap)
    iterations = 0
    starts = [np.ones(shape)]
    starts += [np.full(shape, s) for s in opt_cfg.extra_starts]
    for phi0 in starts:
        phi = phi0.copy()
        gap = gap_of(phi)
        rho = opt_cfg.rho0
        for _outer in range(opt_cfg.n_rho):
            def objective(p, g=None):
                g = gap_of(p) if g is None else g
                return cost_of(p) + rho * violation(g) ** 2, g

            f, gap = objective(phi, gap)
            step = opt_cfg.step0
            for _inner in range(opt_cfg.max_inner):
                iterations += 1
                grad = np.zeros(shape)
                h = opt_cfg.fd_step
                for idx in np.ndindex(shape):
                    p2 = phi.copy()
                    p2[idx] += h
                    f2, _ = objective(p2)
                    grad[idx] = (f2 - f) / h
                gnorm = float(np.sqrt(np.sum(grad**2)))
                if gnorm < 1e-10:
                    break
                # backtracking projected line search
                improved = False
                s = step
                for _bt in range(25):
                    cand = np.maximum(0.0, phi - s * grad)
                    fc, gc = objective(cand)
                    if fc < f - 1e-14:
                        phi, f, gap = cand, fc, gc
                        step = min(s * 2.0, 1e3)
                        improved = True
                        break
                    s *= 0.5
                if not improved:
                    break
                cur = (cost_of(phi), phi.copy(), gap)
                best = _better(best, cur, target.radius, tol)
            if violation(gap) <= tol and rho > opt_cfg.rho0 * 10:
                break
            rho *= opt_cfg.rho_growth
        best = _better(best, (cost_of(phi), phi.copy(), gap), target.radius, tol)

    c_val, phi_best, gap_best = best
    feasible = violation(gap_best) <= tol
    return RateResult(value=c_val, control=Control(T=grid.T, phi=phi_best),
                      endpoint_gap=gap_best, iterations=iterations,
                      feasible=feasible)


def _better(best, cand, radius: float, tol: float):
    """Prefer feasible candidates; among feasible, lower cost; else lower gap."""
    if best is None:
        return cand
    bc, _, bg = best
    cc, _, cg = cand
    b_feas = bg <= radius + tol
    c_feas = cg <= radius + tol
    if c_feas and not b_feas:
        return cand
    if b_feas and not c_feas:
        return best
    if b_feas:
        return cand if cc < bc else best
    return cand if cg < bg else best
