"""Truncated nonlinear modal system and its time integration.

With w = sum_j q_j s_j tested against s_l, the weak form reduces to

    M(q) q'' = F(q, q', t)

    M[l, j] = delta_lj + iota sum_ik q_i q_k I[i, j, k, l]
    F_l     = -(beta + k0) q'_l - k2 kappa_l^4 q'_l - D kappa_l^4 q_l
              - beta U sum_j Cmat[l, j] q_j + (p0, s_l)
              - sigma D sum_ijk q_i q_j q_k (S[i, k, j, l] + S[i, l, j, k])
              - iota sum_ijk q'_i q'_j q_k I[i, j, k, l]

The time derivative of the nonlocal momentum yields the q'' terms in M and three
velocity-quadratic terms; one of those cancels against the remaining inertia
term of the weak form, leaving the single q' q' q contraction above.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotrs

from .assembly import TensorSet, cached_assemble
from .config import SimConfig
from .modes import ModeBasis
from .quadrature import QuadratureGrid

log = logging.getLogger(__name__)

# number of running work integrals appended to the state
N_WORK = 4
WORK_NAMES = ("W_damping", "W_kelvin_voigt", "W_flow", "W_static")


class StepFailure(RuntimeError):
    """The integrator could not advance; carries the last accepted state."""

    def __init__(self, t: float, y: np.ndarray, reason: str):
        super().__init__(f"step failure at t={t:.6g}: {reason}")
        self.t = t
        self.y = y
        self.reason = reason


class ModalSystem:
    """Mass matrix, forces and first-order right-hand side for one parameter set."""

    def __init__(self, ts: TensorSet, D=1.0, beta=0.0, U=0.0, k0=0.0, k2=0.0, sigma=1, iota=1, p0_load=None):
        self.ts = ts
        self.N = N = ts.N
        self.D, self.beta, self.U = float(D), float(beta), float(U)
        self.k0, self.k2 = float(k0), float(k2)
        self.sigma, self.iota = int(sigma), int(iota)
        self.kappa4 = ts.Hdiag
        self.Kdiag = self.D * ts.Hdiag
        self.flow = self.beta * self.U * ts.Cmat
        self.damp = (self.beta + self.k0) + self.k2 * ts.Hdiag
        self.p0 = np.zeros(N) if p0_load is None else np.asarray(p0_load, float)
        self._eye = np.eye(N)
        I = ts.I
        # cubic[i, j, k, l] = S[i, k, j, l] + S[i, l, j, k], contracted with q_i q_j q_k
        cubic = np.einsum("ikjl->ijkl", ts.S) + np.einsum("iljk->ijkl", ts.S)
        self._cubic = cubic.reshape(N, N**3)
        self._I = I.reshape(N, N**3)
        self._I_mass = np.einsum("ijkl->ikjl", I).reshape(N, N**3)
        self._S = ts.S.reshape(N, N**3)

    @classmethod
    def from_config(cls, ts: TensorSet, cfg: SimConfig, p0_load=None) -> "ModalSystem":
        p = cfg.physical
        return cls(ts, p.D, p.beta, p.U, p.k0, p.k2, p.sigma, p.iota, p0_load)

    def mass(self, q: np.ndarray) -> np.ndarray:
        N = self.N
        if not self.iota:
            return self._eye.copy()
        G = (q @ (q @ self._I_mass).reshape(N, N * N)).reshape(N, N)
        return self._eye + self.iota * G

    def cubic_force(self, q: np.ndarray) -> np.ndarray:
        N = self.N
        return q @ (q @ (q @ self._cubic).reshape(N, N * N)).reshape(N, N)

    def inertia_force(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        N = self.N
        return q @ (v @ (v @ self._I).reshape(N, N * N)).reshape(N, N)

    def forces(self, t: float, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        F = -self.damp * v - self.Kdiag * q - self.flow @ q + self.p0
        if self.sigma:
            F -= self.sigma * self.D * self.cubic_force(q)
        if self.iota:
            F -= self.iota * self.inertia_force(q, v)
        return F

    def acceleration(self, t: float, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        F = self.forces(t, q, v)
        if not self.iota:
            return F
        c, info = dpotrf(self.mass(q), lower=1, clean=0)
        if info == 0:
            x, info = dpotrs(c, F, lower=1)
        if info != 0:
            raise StepFailure(t, np.concatenate([q, v]), f"mass matrix factorization failed (info={info})")
        return x

    def work_rates(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Rates of dissipated / injected work, ordered as WORK_NAMES."""
        vv = v * v
        return np.array([
            (self.beta + self.k0) * vv.sum(),
            self.k2 * np.dot(self.kappa4, vv),
            np.dot(v, self.flow @ q),
            np.dot(v, self.p0),
        ])

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        N = self.N
        q, v = y[:N], y[N:2 * N]
        return np.concatenate([v, self.acceleration(t, q, v), self.work_rates(q, v)])

    # -- energies --------------------------------------------------------

    def stiffness_energy(self, q: np.ndarray) -> float:
        N = self.N
        return 0.5 * self.sigma * self.D * float(q @ (q @ (q @ (q @ self._S).reshape(N, N * N)).reshape(N, N)))

    def inertia_energy(self, q: np.ndarray, v: np.ndarray) -> float:
        N = self.N
        # (1/2) || sum_ij q_i v_j g_ij ||^2 = (1/2) sum q_i v_j q_k v_l I[i, j, k, l]
        return 0.5 * self.iota * float(v @ (q @ (v @ (q @ self._I).reshape(N, N * N)).reshape(N, N)))

    def energy(self, q: np.ndarray, v: np.ndarray) -> float:
        return (0.5 * v @ v + 0.5 * (self.Kdiag * q * q).sum()
                + self.stiffness_energy(q) + self.inertia_energy(q, v))


def assemble_mass(q: np.ndarray, ts: TensorSet, iota: int = 1) -> np.ndarray:
    return ModalSystem(ts, iota=iota).mass(np.asarray(q, float))


def assemble_forces(q, qdot, t: float, ts: TensorSet, cfg: SimConfig, p0_load=None) -> np.ndarray:
    return ModalSystem.from_config(ts, cfg, p0_load).forces(t, np.asarray(q, float), np.asarray(qdot, float))


# -- initial data -------------------------------------------------------------

def initial_fields(preset: str, x: np.ndarray, basis: ModeBasis, a: float = 1.0):
    """(w0, w1) sampled at ``x`` for a named initial-data preset."""
    zero = np.zeros_like(x)
    if preset == "FirstMode":
        return basis.eval(0, x), zero
    if preset == "SecondMode":
        if basis.N < 2:
            raise ValueError("SecondMode initial data needs N >= 2")
        return basis.eval(1, x), zero
    if preset == "Polynomial":
        xi = x / basis.L
        return -4 * xi**5 + 15 * xi**4 - 20 * xi**3 + 10 * xi**2, zero
    if preset == "LinearIV":
        return zero, a * x
    raise ValueError(f"unknown initial-data preset {preset!r}")


def project_initial(preset: str, basis: ModeBasis, a: float = 1.0, scale: float = 1.0):
    """Orthonormal projections q0_j = (w0, s_j), qdot0_j = (w1, s_j)."""
    if preset in ("FirstMode", "SecondMode"):
        # exact by orthonormality; avoids quadrature round-off in the unit vector
        q0 = np.zeros(basis.N)
        q0[0 if preset == "FirstMode" else 1] = 1.0
        if preset == "SecondMode" and basis.N < 2:
            raise ValueError("SecondMode initial data needs N >= 2")
        return scale * q0, np.zeros(basis.N)
    x = basis.grid.nodes
    w0, w1 = initial_fields(preset, x, basis, a)
    s0 = basis.samples[0]
    return scale * basis.grid.dot(s0, w0[None, :])[:, 0], scale * basis.grid.dot(s0, w1[None, :])[:, 0]


def static_load(p0: dict | None, basis: ModeBasis) -> np.ndarray | None:
    """(p0, s_l) for a tabulated static pressure, linearly interpolated."""
    if p0 is None:
        return None
    x = basis.grid.nodes
    p = np.interp(x, np.asarray(p0["x"], float), np.asarray(p0["p"], float))
    return basis.grid.dot(basis.samples[0], p[None, :])[:, 0]


# -- trajectories ---------------------------------------------------------------

@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    work: np.ndarray  # running work integrals, columns ordered as WORK_NAMES
    status: str = "ok"  # ok | guard | step_failure
    message: str = ""
    diagnostics: dict = field(default_factory=dict)
    config: SimConfig | None = None

    @property
    def N(self) -> int:
        return self.q.shape[1]

    @property
    def t_end_reached(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0


def build_model(cfg: SimConfig, cache_dir=None, tensors: TensorSet | None = None, basis: ModeBasis | None = None):
    """Basis and tensors for a config, reusing the ones passed when compatible."""
    n = cfg.numerical
    if basis is None or basis.N < n.N or basis.L != cfg.physical.L:
        grid = QuadratureGrid(cfg.physical.L, n.quad_points, n.quad_rule)
        basis = ModeBasis(n.N, cfg.physical.L, grid)
    elif basis.N > n.N:
        basis = basis.truncate(n.N)
    if tensors is None or tensors.N < n.N or tensors.L != cfg.physical.L:
        tensors = cached_assemble(basis, cfg.physical.D, cache_dir)
    tensors = tensors.truncate(n.N).with_stiffness(cfg.physical.D)
    return basis, tensors


def simulate(cfg: SimConfig, tensors: TensorSet | None = None, basis: ModeBasis | None = None,
             cache_dir=None, with_diagnostics: bool = True) -> Trajectory:
    """Integrate the modal system described by ``cfg`` from t = 0 to t_end."""
    from . import diagnostics, integrators

    cfg.validate()
    basis, ts = build_model(cfg, cache_dir, tensors, basis)
    system = ModalSystem.from_config(ts, cfg, static_load(cfg.physical.p0, basis))
    q0, v0 = project_initial(cfg.initial.preset, basis, cfg.initial.a, cfg.initial.scale)
    y0 = np.concatenate([q0, v0, np.zeros(N_WORK)])

    n = cfg.numerical
    method = n.integrator
    if method == "auto":
        method = "implicit-second-order" if cfg.physical.k2 > 0 else "adaptive-explicit"
    t_out = output_times(n.t_end, cfg.output.dt)
    if method == "adaptive-explicit":
        result = integrators.integrate_explicit(system, y0, t_out, n)
    else:
        result = integrators.integrate_bdf2(system, y0, t_out, n)
    N = ts.N
    traj = Trajectory(
        times=result.t, q=result.y[:, :N], qdot=result.y[:, N:2 * N], work=result.y[:, 2 * N:],
        status=result.status, message=result.message, config=cfg,
    )
    if with_diagnostics:
        traj.diagnostics = diagnostics.trajectory_diagnostics(traj, system, basis)
    return traj


def output_times(t_end: float, dt: float) -> np.ndarray:
    if t_end <= 0:
        return np.array([0.0])
    n = int(math.floor(t_end / dt + 1e-9))
    t = np.arange(n + 1) * dt
    if t_end - t[-1] > 1e-9 * dt:
        return np.append(t, t_end)
    t[-1] = t_end  # absorb round-off so the last sample lands exactly on t_end
    return t


# -- sweeps -----------------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(tensors, basis):
    _WORKER["tensors"] = tensors
    _WORKER["basis"] = basis


def _run_one(args):
    from .diagnostics import summarize

    cfg, param, value = args
    try:
        run_cfg = cfg.replace(**{param: value})
        traj = simulate(run_cfg, _WORKER.get("tensors"), _WORKER.get("basis"))
        row = summarize(traj)
        row.update(param=param, value=value)
        return row
    except Exception as exc:  # per-row failure; the sweep goes on
        return {"param": param, "value": value, "status": "error", "classification": "indeterminate",
                "message": f"{type(exc).__name__}: {exc}"}


def sweep(template: SimConfig, param: str, values, threads: int = 1, cache_dir=None) -> list[dict]:
    """Run ``simulate`` for each value of ``param``; one summary dict per value, in order."""
    values = list(values)
    if not values:
        return []
    N_max = template.numerical.N
    if param in ("N", "numerical.N"):
        N_max = max(int(v) for v in values)
    base = template.replace(**{"numerical.N": N_max})
    basis, tensors = build_model(base, cache_dir)
    jobs = [(template, param, v) for v in values]
    threads = max(1, int(threads or 1))
    if threads == 1 or len(jobs) == 1:
        _init_worker(tensors, basis)
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs), os.cpu_count() or 1),
                             initializer=_init_worker, initargs=(tensors, basis)) as pool:
        return list(pool.map(_run_one, jobs))
