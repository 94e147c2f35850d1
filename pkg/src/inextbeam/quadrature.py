"""Fixed-grid 1-D quadrature on [0, L] with running (cumulative) integrals.

Two rules are provided. Composite Simpson on a uniform grid is the default,
so inner products and cumulative integrals share the same samples. Gauss-Legendre
panels are kept as an independent cross-check of the tensor assembly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre

SIMPSON = "simpson"
GAUSS = "gauss"
RULES = (SIMPSON, GAUSS)

DEFAULT_PANELS = 4096
DEFAULT_GAUSS_ORDER = 8


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and weights of a composite rule on [0, L].

    For ``rule="simpson"``, ``M`` is the (even) number of uniform sub-intervals
    and the grid has ``M + 1`` nodes including both end points. For
    ``rule="gauss"``, ``M`` is the number of panels, each carrying ``order``
    Gauss-Legendre points, so the end points are not nodes.
    """

    L: float
    M: int = DEFAULT_PANELS
    rule: str = SIMPSON
    order: int = DEFAULT_GAUSS_ORDER
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.rule not in RULES:
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.rule == SIMPSON:
            if self.M < 2 or self.M % 2:
                raise ValueError(f"Simpson needs an even number of intervals, got {self.M}")
            nodes = np.linspace(0.0, self.L, self.M + 1)
            h = self.L / self.M
            w = np.full(self.M + 1, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            weights = w * h / 3.0
        else:
            if self.M < 1 or self.order < 1:
                raise ValueError("Gauss panels need M >= 1 and order >= 1")
            t, wt = legendre.leggauss(self.order)
            edges = np.linspace(0.0, self.L, self.M + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
            weights = (half[:, None] * wt[None, :]).ravel()
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.nodes.size

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.rule}|{self.M}|{self.order}|{self.L!r}".encode())
        h.update(self.nodes.tobytes())
        h.update(self.weights.tobytes())
        return h.hexdigest()[:16]

    @cached_property
    def _gauss_cumulative_matrix(self) -> np.ndarray:
        # Q[i, j] = integral over [-1, t_i] of the j-th Lagrange basis polynomial.
        t, _ = legendre.leggauss(self.order)
        V = legendre.legvander(t, self.order - 1)
        coeffs = np.linalg.inv(V)  # column j: Legendre coefficients of l_j
        Q = np.empty((self.order, self.order))
        for j in range(self.order):
            antider = legendre.legint(coeffs[:, j], lbnd=-1.0)
            Q[:, j] = legendre.legval(t, antider)
        return Q

    def _accumulate(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.size:
            raise ValueError(f"integrand has {f.shape[-1]} samples, grid has {self.size}")
        lead = f.shape[:-1]
        if self.rule == SIMPSON:
            h = self.L / self.M
            f0, f1, f2 = f[..., 0:-1:2], f[..., 1::2], f[..., 2::2]
            full = (h / 3.0) * (f0 + 4.0 * f1 + f2)
            half = (h / 12.0) * (5.0 * f0 + 8.0 * f1 - f2)  # exact on quadratics
            totals = np.cumsum(full, axis=-1)
            F = np.empty(lead + (self.size,))
            F[..., 0] = 0.0
            F[..., 2::2] = totals
            starts = np.concatenate([np.zeros(lead + (1,)), totals[..., :-1]], axis=-1)
            F[..., 1::2] = starts + half
            return F, totals[..., -1]
        fp = f.reshape(lead + (self.M, self.order))
        half = 0.5 * self.L / self.M
        within = half * np.einsum("ij,...pj->...pi", self._gauss_cumulative_matrix, fp)
        panel = half * (fp @ legendre.leggauss(self.order)[1])
        totals = np.cumsum(panel, axis=-1)
        starts = np.concatenate([np.zeros(lead + (1,)), totals[..., :-1]], axis=-1)
        F = (starts[..., None] + within).reshape(lead + (self.size,))
        return F, totals[..., -1]

    def integrate(self, f: np.ndarray) -> np.ndarray | float:
        """Integral over [0, L] of samples ``f`` (last axis runs over nodes)."""
        total = self._accumulate(f)[1]
        return float(total) if np.ndim(total) == 0 else total

    def cumulative(self, f: np.ndarray) -> np.ndarray:
        """Running integral F(x_i) = int_0^{x_i} f at every node."""
        return self._accumulate(f)[0]

    def tail(self, f: np.ndarray) -> np.ndarray:
        """Running integral from each node to L, as total minus the running integral."""
        F, total = self._accumulate(f)
        return np.asarray(total)[..., None] - F

    def dot(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Weighted inner products over the last axis; ``f @ diag(w) @ g.T`` for 2-D input."""
        return (np.asarray(f) * self.weights) @ np.asarray(g).T
