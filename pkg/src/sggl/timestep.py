"""Exponential time differencing (ETDRK2) engine shared by all solvers.

The mode-diagonal linear part L (stiff Laplacian, gain, and any
mode-independent drift coefficients) is integrated exactly; the remaining
nonlinearity is treated with the two-stage predictor-corrector

    a      = e^(hL) c + h phi1(hL) N(c)
    c_next = a + h phi2(hL) (N(a) - N(c))

which is second order.  phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2
are evaluated by Taylor series near z = 0 to avoid cancellation.
"""

from __future__ import annotations

import numpy as np


class BlowUpError(RuntimeError):
    """Solution norm exceeded the blow-up cap; discretization artifact."""

    def __init__(self, step: int, t: float, norm: float, cap: float):
        self.step, self.t, self.norm, self.cap = step, t, norm, cap
        super().__init__(
            f"blow-up detected at step {step} (t={t:.6g}): "
            f"||u||={norm:.6g} exceeds cap {cap:.6g}")


_SERIES_CUT = 0.5


def phi1(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SERIES_CUT
    zs = np.where(small, 0.0, z)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.where(small, 0.0, (np.exp(zs) - 1.0) / np.where(small, 1.0, zs))
    acc = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(1, 15):          # sum z^(k-1)/k!
        acc = acc + term
        term = term * z / (k + 1)
    return np.where(small, acc, direct)


def phi2(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SERIES_CUT
    zs = np.where(small, 1.0, z)
    direct = (np.exp(zs) - 1.0 - zs) / zs**2
    acc = np.zeros_like(z)
    term = np.full_like(z, 0.5)     # z^k/(k+2)!
    for k in range(0, 14):
        acc = acc + term
        term = term * z / (k + 3)
    return np.where(small, acc, direct)


def linear_tables(h: float, L: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(e^(hL), h*phi1(hL), h*phi2(hL)) for a diagonal L, reusable across steps."""
    z = h * L
    return np.exp(z), h * phi1(z), h * phi2(z)


def etdrk2_step(c: np.ndarray, h: float, L: np.ndarray, nonlin,
                tables=None) -> np.ndarray:
    """One ETDRK2 step of dc/dt = L*c + nonlin(c) with diagonal L."""
    E, hp1, hp2 = tables if tables is not None else linear_tables(h, L)
    n0 = nonlin(c)
    a = E * c + hp1 * n0
    n1 = nonlin(a)
    return a + hp2 * (n1 - n0)
