"""Time integrators for the modal system.

``integrate_explicit`` steps scipy's Dormand-Prince 8(5,3) pair (embedded error
control) and samples its dense output on the requested grid.
``integrate_bdf2`` is a variable-step two-step BDF with a damped Newton solve of
the fully implicit residual M(q) q'' - F(q, q', t) = 0.
Both stop early, keeping the partial trajectory, when max|q| passes the guard or
the step cannot be completed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853
from scipy.linalg import lu_factor, lu_solve

from .dynamics import ModalSystem, StepFailure


@dataclass
class IntegrationResult:
    t: np.ndarray
    y: np.ndarray
    status: str  # ok | guard | step_failure
    message: str = ""


class _Recorder:
    def __init__(self, t_out: np.ndarray, y0: np.ndarray):
        self.t_out = t_out
        self.ts = [float(t_out[0])]
        self.ys = [y0.copy()]
        self.next = 1

    def pending(self, t_hi: float) -> np.ndarray:
        j = np.searchsorted(self.t_out, t_hi, side="right")
        return self.t_out[self.next:j]

    def add(self, ts, ys):
        for t, y in zip(ts, ys):
            self.ts.append(float(t))
            self.ys.append(np.array(y, float))
            self.next += 1

    def add_final(self, t: float, y: np.ndarray):
        if t > self.ts[-1]:
            self.ts.append(float(t))
            self.ys.append(np.array(y, float))

    def result(self, status: str, message: str = "") -> IntegrationResult:
        return IntegrationResult(np.array(self.ts), np.array(self.ys), status, message)


def _guard_tripped(y: np.ndarray, N: int, guard: float) -> bool:
    q = y[:N]
    return not np.all(np.isfinite(y)) or float(np.max(np.abs(q))) > guard


def integrate_explicit(system: ModalSystem, y0: np.ndarray, t_out: np.ndarray, num) -> IntegrationResult:
    rec = _Recorder(t_out, y0)
    t_end = float(t_out[-1])
    if t_end <= 0:
        return rec.result("ok")
    N = system.N
    atol = np.full(y0.size, num.abs_tol)
    solver = DOP853(system.rhs, 0.0, y0, t_end, rtol=num.rel_tol, atol=atol,
                    first_step=min(num.dt_init, t_end))
    while solver.status == "running":
        try:
            msg = solver.step()
        except (StepFailure, np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            return rec.result("step_failure", f"step failure at t={solver.t:.6g}: {exc}")
        if solver.status == "failed":
            return rec.result("step_failure", f"step failure at t={solver.t:.6g}: {msg}")
        if _guard_tripped(solver.y, N, num.guard):
            dense = solver.dense_output()
            for t in rec.pending(solver.t):
                y = dense(t)
                if _guard_tripped(y, N, num.guard):
                    break
                rec.add([t], [y])
            if np.all(np.isfinite(solver.y)):
                rec.add_final(solver.t, solver.y)
            return rec.result("guard", f"|q| exceeded guard {num.guard:g} at t={solver.t:.6g}")
        ts = rec.pending(solver.t)
        if ts.size:
            dense = solver.dense_output()
            rec.add(ts, [dense(t) for t in ts])
    return rec.result("ok")


# -- BDF2 --------------------------------------------------------------------------

def _bdf_coefficients(omega: float | None):
    if omega is None:  # backward Euler start-up step
        return 1.0, -1.0, 0.0
    return (1 + 2 * omega) / (1 + omega), -(1 + omega), omega**2 / (1 + omega)


class _BDF2Stepper:
    def __init__(self, system: ModalSystem, num):
        self.sys = system
        self.num = num
        self.N = system.N

    def _residual(self, t, v, hist, h, coeffs):
        a0, a1, a2 = coeffs
        N = self.N
        (q_n, v_n), (q_m, v_m) = hist
        q = (h * v - a1 * q_n - a2 * q_m) / a0
        acc = (a0 * v + a1 * v_n + a2 * v_m) / h
        M = self.sys.mass(q)
        F = self.sys.forces(t, q, v)
        return M @ acc - F, q, acc, M, F

    def _jacobian(self, t, v, q, acc, M, F, h, a0):
        sysm = self.sys
        N = self.N
        dq_dv = h / a0
        J = (a0 / h) * M
        if sysm.iota:
            # d/dq_m of sum_j M[l, j] acc_j, from the inertia tensor
            I = sysm.ts.I
            dM = np.einsum("j,k,mjkl->lm", acc, q, I) + np.einsum("j,i,ijml->lm", acc, q, I)
            J += sysm.iota * dq_dv * dM
        # force blocks by forward differences
        eps = np.sqrt(np.finfo(float).eps)
        for m in range(N):
            dv = eps * max(1.0, abs(v[m]))
            v2 = v.copy()
            v2[m] += dv
            q2 = q.copy()
            q2[m] += dq_dv * dv
            J[:, m] -= (sysm.forces(t, q2, v2) - F) / dv
        return J

    def solve(self, t, hist, h, coeffs, v_guess):
        num = self.num
        a0 = coeffs[0]
        v = v_guess.copy()
        R, q, acc, M, F = self._residual(t, v, hist, h, coeffs)
        for _ in range(num.newton_max_iter):
            scale = 1.0 + max(np.max(np.abs(M @ acc)), np.max(np.abs(F)))
            rnorm = np.max(np.abs(R)) / scale
            if not np.isfinite(rnorm):
                return None
            if rnorm <= num.newton_tol:
                return v, q
            J = self._jacobian(t, v, q, acc, M, F, h, a0)
            try:
                delta = lu_solve(lu_factor(J), -R)
            except (np.linalg.LinAlgError, ValueError):
                return None
            # damped update: halve until the residual decreases
            lam = 1.0
            for _ in range(8):
                v_try = v + lam * delta
                R_try, q_try, acc_try, M_try, F_try = self._residual(t, v_try, hist, h, coeffs)
                scale_try = 1.0 + max(np.max(np.abs(M_try @ acc_try)), np.max(np.abs(F_try)))
                if np.max(np.abs(R_try)) / scale_try < rnorm or lam < 1e-2:
                    break
                lam *= 0.5
            v, R, q, acc, M, F = v_try, R_try, q_try, acc_try, M_try, F_try
            if np.max(np.abs(lam * delta)) <= 1e-14 * (1.0 + np.max(np.abs(v))):
                return v, q
        return None


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def integrate_bdf2(system: ModalSystem, y0: np.ndarray, t_out: np.ndarray, num) -> IntegrationResult:
    rec = _Recorder(t_out, y0)
    t_end = float(t_out[-1])
    if t_end <= 0:
        return rec.result("ok")
    N = system.N
    stepper = _BDF2Stepper(system, num)

    def full_rhs(t, y):
        return system.rhs(t, y)

    # history of accepted (t, y); y = (q, v, work)
    ts_hist = [0.0]
    ys_hist = [y0.copy()]
    f_prev = full_rhs(0.0, y0)
    h = min(num.dt_init, t_end)
    h_last = None
    n_steps = 0
    while ts_hist[-1] < t_end:
        t_n = ts_hist[-1]
        h = min(h, t_end - t_n)
        if t_end - (t_n + h) < 1e-12 * max(1.0, t_end):
            h = t_end - t_n
        omega = None if h_last is None else h / h_last
        coeffs = _bdf_coefficients(omega)
        y_n = ys_hist[-1]
        y_m = ys_hist[-2] if len(ys_hist) > 1 else y_n
        hist = ((y_n[:N], y_n[N:2 * N]), (y_m[:N], y_m[N:2 * N]))
        # predictor: quadratic extrapolation through the last three points
        if len(ts_hist) >= 3:
            tp = np.array(ts_hist[-3:])
            yp = np.array(ys_hist[-3:])
            pred = _lagrange_extrapolate(tp, yp, t_n + h)
        else:
            pred = y_n + h * f_prev
        t_new = t_n + h
        try:
            sol = stepper.solve(t_new, hist, h, coeffs, pred[N:2 * N])
        except StepFailure as exc:
            sol = None
            reason = str(exc)
        else:
            reason = "Newton iteration did not converge"
        if sol is None:
            h *= 0.5
            if h < num.min_step:
                return rec.result("step_failure", f"step failure at t={t_n:.6g}: {reason}")
            continue
        v_new, q_new = sol
        a0, a1, a2 = coeffs
        # work integrals follow the same BDF formula with an explicit integrand
        w_rates = system.work_rates(q_new, v_new)
        w_new = (h * w_rates - a1 * y_n[2 * N:] - a2 * y_m[2 * N:]) / a0
        y_new = np.concatenate([q_new, v_new, w_new])
        if len(ts_hist) >= 3:
            err = (2.0 / 7.0) * (y_new[:2 * N] - pred[:2 * N])
            sc = num.abs_tol + num.rel_tol * np.maximum(np.abs(y_new[:2 * N]), np.abs(y_n[:2 * N]))
            err_norm = float(np.sqrt(np.mean((err / sc) ** 2)))
        else:
            err_norm = 0.0
        if err_norm > 1.0:
            h *= max(0.2, 0.9 * err_norm ** (-1.0 / 3.0))
            if h < num.min_step:
                return rec.result("step_failure", f"step failure at t={t_n:.6g}: step size underflow")
            continue
        try:
            f_new = full_rhs(t_new, y_new)
        except StepFailure as exc:
            return rec.result("step_failure", str(exc))
        pending = rec.pending(t_new)
        if pending.size:
            rec.add(pending, [_hermite(t_n, y_n, f_prev, t_new, y_new, f_new, t) for t in pending])
        ts_hist.append(t_new)
        ys_hist.append(y_new)
        if len(ts_hist) > 3:
            ts_hist.pop(0)
            ys_hist.pop(0)
        f_prev = f_new
        h_last = h
        n_steps += 1
        if _guard_tripped(y_new, N, num.guard):
            rec.add_final(t_new, y_new)
            return rec.result("guard", f"|q| exceeded guard {num.guard:g} at t={t_new:.6g}")
        if n_steps == 1:
            continue  # keep the start-up step size for the first BDF2 step
        factor = 2.0 if err_norm == 0.0 else min(2.0, max(0.2, 0.9 * err_norm ** (-1.0 / 3.0)))
        h = h * factor
    return rec.result("ok")


def _lagrange_extrapolate(t: np.ndarray, y: np.ndarray, tx: float) -> np.ndarray:
    out = np.zeros_like(y[0])
    for i in range(3):
        w = 1.0
        for j in range(3):
            if j != i:
                w *= (tx - t[j]) / (t[i] - t[j])
        out = out + w * y[i]
    return out
