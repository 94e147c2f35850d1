"""In-vacuo Euler-Bernoulli clamped-free eigenfunctions used as the Galerkin basis.

Mode shapes are

    s_n(x) = c_n [(cos k x - cosh k x) - C_n (sin k x - sinh k x)],   k = kappa_n

with kappa_n L a root of cos(z) cosh(z) = -1 and
C_n = (cos z + cosh z) / (sin z + sinh z). Both the root solve and the
evaluation are written in exponentially rescaled form so they stay accurate
for high modes where cosh overflows or cancels catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .quadrature import QuadratureGrid

MAX_DERIVATIVE = 4


class RootFindingError(RuntimeError):
    pass


def char_residual(z: float) -> float:
    """cos(z) cosh(z) + 1 divided by cosh(z); same roots, no overflow."""
    return math.cos(z) + 1.0 / math.cosh(z) if z < 700 else math.cos(z)


def _solve_one(n: int) -> float:
    guess = (n - 0.5) * math.pi
    lo, hi = max(guess - 0.5, 1e-6), guess + 0.5
    if char_residual(lo) * char_residual(hi) > 0:
        raise RootFindingError(f"no sign change bracketing mode {n}")
    z, info = brentq(char_residual, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, full_output=True)
    if not info.converged:
        raise RootFindingError(f"mode {n}: root finder did not converge")
    return z


def solve_mode_numbers(N: int, L: float = 1.0) -> np.ndarray:
    """First ``N`` positive roots z = kappa_n L of cos(z) cosh(z) + 1 = 0.

    The roots are dimensionless and do not depend on ``L``; it is accepted
    only to validate the call.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    if L <= 0:
        raise ValueError(f"L must be positive, got {L!r}")
    return np.array([_solve_one(n) for n in range(1, int(N) + 1)])


def shape_coefficient(kappaL: float) -> float:
    """C_n = (cos z + cosh z) / (sin z + sinh z), evaluated without overflow."""
    z = float(kappaL)
    e = math.exp(-z)
    return (2.0 * e * math.cos(z) + 1.0 + e * e) / (2.0 * e * math.sin(z) + 1.0 - e * e)


def _growing_coefficient(z: float) -> float:
    # (1 - C) e^z / 2, the weight of e^{k(x-L)} in the hyperbolic block.
    e = math.exp(-z)
    return (math.sin(z) - math.cos(z) - e) / (1.0 + 2.0 * e * math.sin(z) - e * e)


def _raw_shape(z: float, C: float, L: float, x: np.ndarray, d: int) -> np.ndarray:
    """d-th derivative of (cos kx - cosh kx) - C (sin kx - sinh kx), k = z / L."""
    k = z / L
    kx = k * x
    A = _growing_coefficient(z)
    B = 0.5 * (1.0 + C)
    # derivatives of cos and sin rotate with period 4
    trig_c = [np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin][d % 4]
    trig_s = [np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)][d % 4]
    hyp = A * np.exp(k * (x - L)) + B * (-1.0) ** d * np.exp(-kx)
    return k**d * (trig_c(kx) - C * trig_s(kx) - hyp)


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """The first ``N`` clamped-free modes on [0, L], normalized in L^2(0, L).

    Mode indices are 0-based: ``basis.eval(0, x)`` is the first mode.
    """

    N: int
    L: float = 1.0
    grid: QuadratureGrid | None = None
    kappaL: np.ndarray = field(init=False, repr=False)
    C: np.ndarray = field(init=False, repr=False)
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        kappaL = solve_mode_numbers(self.N, self.L)
        C = np.array([shape_coefficient(z) for z in kappaL])
        grid = self.grid if self.grid is not None else QuadratureGrid(self.L)
        if not math.isclose(grid.L, self.L):
            raise ValueError("quadrature grid length does not match beam length")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "kappaL", kappaL)
        object.__setattr__(self, "C", C)
        c = np.array([normalization_constant(z, Cn, self.L, grid) for z, Cn in zip(kappaL, C)])
        object.__setattr__(self, "c", c)
        for arr in (kappaL, C, c):
            arr.setflags(write=False)

    @property
    def kappa(self) -> np.ndarray:
        return self.kappaL / self.L

    def eval(self, n: int, x, d: int = 0):
        """Exact d-th derivative (0 <= d <= 4) of mode ``n`` at ``x`` in [0, L]."""
        if not 0 <= n < self.N:
            raise IndexError(f"mode index {n} outside 0..{self.N - 1}")
        if not 0 <= d <= MAX_DERIVATIVE:
            raise ValueError(f"derivative order must be in 0..4, got {d}")
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0.0) or np.any(xa > self.L):
            raise ValueError("evaluation point outside [0, L]")
        out = self.c[n] * _raw_shape(self.kappaL[n], self.C[n], self.L, xa, d)
        return float(out) if out.ndim == 0 else out

    def sample(self, x, d: int = 0) -> np.ndarray:
        """All modes' d-th derivatives at ``x``; shape (N, len(x))."""
        return np.stack([self.eval(n, np.atleast_1d(x), d) for n in range(self.N)])

    @cached_property
    def samples(self) -> np.ndarray:
        """Derivatives 0..4 of every mode on the basis grid; shape (5, N, M)."""
        s = np.stack([self.sample(self.grid.nodes, d) for d in range(MAX_DERIVATIVE + 1)])
        s.setflags(write=False)
        return s

    @cached_property
    def tip_values(self) -> np.ndarray:
        """s_n(L) for every mode."""
        return self.sample(self.L, 0)[:, 0]

    def truncate(self, N: int) -> "ModeBasis":
        return ModeBasis(N, self.L, self.grid)


def normalization_constant(kappaL: float, C: float, L: float, grid: QuadratureGrid) -> float:
    """Positive c_n making the mode unit-norm in L^2(0, L), by quadrature."""
    raw = _raw_shape(kappaL, C, L, grid.nodes, 0)
    return 1.0 / math.sqrt(grid.integrate(raw * raw))
