"""Linear flutter onset of the flow-coupled cantilever.

The modal system q'' + (beta + k0) q' + (K + beta U Cmat) q = 0 is solved as a
quadratic eigenvalue problem in the growth rate lambda (modal factor e^{lambda t}).
Under the harmonic ansatz e^{-i w t} the frequency is w = i lambda, so a root with
Re(lambda) > 0 is an unstable branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assembly import TensorSet


class NoCrossingError(ValueError):
    """max Re(lambda) does not change sign on the requested interval."""


@dataclass(frozen=True)
class FlutterParams:
    D: float = 1.0
    L: float = 1.0
    beta: float = 1.0
    k0: float = 0.0
    U: float = 0.0
    N: int = 6
    # include beta U (s_n', s_n) = beta U s_n(L)^2 / 2 on the diagonal;
    # False keeps only the off-diagonal flow terms
    diagonal_coupling: bool = True

    def __post_init__(self):
        if self.D <= 0 or self.L <= 0:
            raise ValueError("D and L must be positive")
        if self.beta < 0 or self.k0 < 0:
            raise ValueError("beta and k0 must be non-negative")
        if self.N < 1:
            raise ValueError("N must be at least 1")


@dataclass
class FlutterResult:
    params: FlutterParams
    roots: np.ndarray
    Ucrit: float | None = None
    U: np.ndarray = field(default_factory=lambda: np.empty(0))
    branch_table: np.ndarray = field(default_factory=lambda: np.empty((0, 0), complex))

    @property
    def max_real(self) -> float:
        return float(np.max(self.roots.real))


def flow_coupling(ts: TensorSet, diagonal: bool = True) -> np.ndarray:
    C = ts.Cmat.copy()
    if not diagonal:
        np.fill_diagonal(C, 0.0)
    return C


def build_flutter_matrix(omega, params: FlutterParams, ts: TensorSet) -> np.ndarray:
    """A(omega) with a_mm = -w^2 - i(beta+k0) w + D kappa_m^4 and a_mn = beta U Cmat[m, n]."""
    ts = ts.truncate(params.N)
    omega = complex(omega)
    Omega = -omega**2 - 1j * (params.beta + params.k0) * omega + params.D * ts.Hdiag
    return np.diag(Omega) + params.beta * params.U * flow_coupling(ts, params.diagonal_coupling)


def companion_matrix(params: FlutterParams, ts: TensorSet) -> np.ndarray:
    ts = ts.truncate(params.N)
    N = params.N
    K = np.diag(params.D * ts.Hdiag) + params.beta * params.U * flow_coupling(ts, params.diagonal_coupling)
    top = np.hstack([np.zeros((N, N)), np.eye(N)])
    bottom = np.hstack([-K, -(params.beta + params.k0) * np.eye(N)])
    return np.vstack([top, bottom])


def solve_growth_rates(params: FlutterParams, ts: TensorSet) -> np.ndarray:
    """All 2N growth rates, sorted by decreasing real part then imaginary part."""
    A = companion_matrix(params, ts)
    try:
        lam = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed at U={params.U}: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise RuntimeError(f"non-finite growth rates at U={params.U}")
    order = np.lexsort((-lam.imag, -lam.real))
    return lam[order]


def determinant_residual(lam: complex, params: FlutterParams, ts: TensorSet) -> float:
    """Smallest over largest singular value of A(i lambda); ~0 at a true root."""
    sv = np.linalg.svd(build_flutter_matrix(1j * lam, params, ts), compute_uv=False)
    return float(sv[-1] / sv[0])


def _stability_margin(U: float, params: FlutterParams, ts: TensorSet) -> float:
    p = FlutterParams(**{**params.__dict__, "U": U})
    return float(np.max(solve_growth_rates(p, ts).real))


def _sign_tol(params: FlutterParams, ts: TensorSet) -> float:
    return 1e-10 * max(1.0, params.D * float(ts.Hdiag[params.N - 1]) ** 0.5)


def find_Ucrit(params: FlutterParams, ts: TensorSet, U_lo: float, U_hi: float, tol: float = 1e-8) -> float:
    """Bisect U -> max Re(lambda) for its zero crossing in [U_lo, U_hi]."""
    eps = _sign_tol(params, ts)
    f_lo = _stability_margin(U_lo, params, ts)
    f_hi = _stability_margin(U_hi, params, ts)
    unstable_lo, unstable_hi = f_lo > eps, f_hi > eps
    if unstable_lo == unstable_hi:
        raise NoCrossingError(f"no crossing in range [{U_lo}, {U_hi}]")
    lo, hi = U_lo, U_hi
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if (_stability_margin(mid, params, ts) > eps) == unstable_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def track_branches(table: np.ndarray) -> np.ndarray:
    """Reorder each row of a (nU, 2N) root table to follow continuous branches.

    Rows are matched to a linear extrapolation of the previous two rows by
    minimum-cost assignment in the complex plane.
    """
    out = np.array(table, dtype=complex)
    for r in range(1, out.shape[0]):
        pred = out[r - 1] if r == 1 else 2 * out[r - 1] - out[r - 2]
        cost = np.abs(pred[:, None] - out[r][None, :])
        _, cols = linear_sum_assignment(cost)
        out[r] = out[r][cols]
    return out


def sweep(params: FlutterParams, ts: TensorSet, U_values) -> FlutterResult:
    """Growth rates over a U grid, branch-tracked, with the first crossing located."""
    U_values = np.asarray(U_values, dtype=float)
    rows = [solve_growth_rates(FlutterParams(**{**params.__dict__, "U": U}), ts) for U in U_values]
    table = track_branches(np.array(rows)) if rows else np.empty((0, 2 * params.N), complex)
    Ucrit = None
    if U_values.size >= 2:
        eps = _sign_tol(params, ts)
        unstable = np.max(table.real, axis=1) > eps
        flips = np.nonzero(unstable[1:] != unstable[:-1])[0]
        if flips.size:
            i = flips[0]
            Ucrit = find_Ucrit(params, ts, U_values[i], U_values[i + 1])
    roots = table[0] if rows else np.empty(0, complex)
    return FlutterResult(params=params, roots=roots, Ucrit=Ucrit, U=U_values, branch_table=table)
