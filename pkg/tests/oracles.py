"""Independent reference computations used to freeze golden values.

Nothing here imports the package: mode numbers come from mpmath root finding on
the unscaled characteristic equation, mode shapes from the textbook
cos/cosh form, and integrals from plain trapezoid sums on fine uniform grids.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np


def mode_number(n: int, L: float = 1.0) -> float:
    """n-th positive root of cos z cosh z + 1 = 0 (1-based), divided by L."""
    mpmath.mp.dps = 40
    z = mpmath.findroot(lambda z: mpmath.cos(z) * mpmath.cosh(z) + 1, (n - 0.5) * mpmath.pi)
    return float(z) / L


def shape_constant(n: int) -> float:
    mpmath.mp.dps = 40
    z = mpmath.findroot(lambda z: mpmath.cos(z) * mpmath.cosh(z) + 1, (n - 0.5) * mpmath.pi)
    return float((mpmath.cos(z) + mpmath.cosh(z)) / (mpmath.sin(z) + mpmath.sinh(z)))


def raw_mode(n: int, x: np.ndarray, d: int = 0, L: float = 1.0) -> np.ndarray:
    """d-th derivative of (cos kx - cosh kx) - C (sin kx - sinh kx), unnormalized."""
    k = mode_number(n, L)
    C = shape_constant(n)
    kx = k * x
    cos_d = [np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin][d % 4]
    sin_d = [np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)][d % 4]
    cosh_d = np.cosh if d % 2 == 0 else np.sinh
    sinh_d = np.sinh if d % 2 == 0 else np.cosh
    return k**d * ((cos_d(kx) - cosh_d(kx)) - C * (sin_d(kx) - sinh_d(kx)))


def trapezoid(f: np.ndarray, x: np.ndarray) -> float:
    h = x[1] - x[0]
    return float(h * (f.sum() - 0.5 * (f[0] + f[-1])))


def cumulative_trapezoid(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    h = x[1] - x[0]
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * h * (f[1:] + f[:-1]))
    return out


class ModeOracle:
    """Normalized modes sampled on a uniform grid of ``points`` nodes."""

    def __init__(self, N: int, points: int, L: float = 1.0):
        self.x = np.linspace(0.0, L, points)
        self.N = N
        self.L = L
        raw0 = np.array([raw_mode(n, self.x, 0, L) for n in range(1, N + 1)])
        self.norm = np.array([1.0 / math.sqrt(trapezoid(r * r, self.x)) for r in raw0])
        self._s = {0: self.norm[:, None] * raw0}

    @property
    def s(self):
        return self

    def __getitem__(self, d: int) -> np.ndarray:
        if d not in self._s:
            self._s[d] = np.array([self.norm[n - 1] * raw_mode(n, self.x, d, self.L) for n in range(1, self.N + 1)])
        return self._s[d]

    def S(self, i, j, k, l) -> float:
        s1, s2 = self.s[1], self.s[2]
        return trapezoid(s2[i] * s2[j] * s1[k] * s1[l], self.x)

    def g(self, i, j) -> np.ndarray:
        return cumulative_trapezoid(self.s[1][i] * self.s[1][j], self.x)

    def I(self, i, j, k, l) -> float:
        return trapezoid(self.g(i, j) * self.g(k, l), self.x)

    def project(self, f: np.ndarray) -> np.ndarray:
        return np.array([trapezoid(f * self.s[0][n], self.x) for n in range(self.N)])


if __name__ == "__main__":
    fine = ModeOracle(6, 1_000_001)
    print("S_1111", repr(fine.S(0, 0, 0, 0)))
    print("E_nl_stiff FirstMode (D=1)", repr(0.5 * fine.S(0, 0, 0, 0)))
    print("LinearIV a=1 projections", [repr(v) for v in fine.project(fine.x)])
    print("Polynomial projections", [repr(v) for v in fine.project(-4 * fine.x**5 + 15 * fine.x**4 - 20 * fine.x**3 + 10 * fine.x**2)])
    nested = ModeOracle(6, 100_001)
    print("I_1112", repr(nested.I(0, 0, 0, 1)))
    print("kappa1^4", repr(mode_number(1) ** 4))
