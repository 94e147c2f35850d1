"""Energies, arc length, longitudinal displacement and long-time classification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import WORK_NAMES, ModalSystem, Trajectory
from .modes import ModeBasis

# rows processed per block when sampling w_x on the quadrature grid
_CHUNK = 256

DIAGNOSTIC_COLUMNS = ("E_total", "E_lin", "E_nl_stiff", "E_nl_inertia", "arc_len", "wL", "uL")


def energy(q, qdot, system: ModalSystem) -> dict[str, float]:
    q = np.asarray(q, float)
    v = np.asarray(qdot, float)
    kin = 0.5 * float(v @ v)
    pot = 0.5 * float((system.Kdiag * q * q).sum())
    stiff = system.stiffness_energy(q)
    inertia = system.inertia_energy(q, v)
    return {
        "E_total": kin + pot + stiff + inertia,
        "E_lin": kin + pot,
        "E_nl_stiff": stiff,
        "E_nl_inertia": inertia,
        "E_kin": kin + inertia,
        "E_pot": pot + stiff,
    }


def slope(q, basis: ModeBasis) -> np.ndarray:
    """w_x on the basis grid for one state (1-D q) or a stack of states (2-D q)."""
    return np.asarray(q, float) @ basis.samples[1]


def arc_length(q, basis: ModeBasis) -> float | np.ndarray:
    """int_0^L sqrt((1 + u_x)^2 + w_x^2) dx with u_x = -w_x^2 / 2."""
    wx = slope(q, basis)
    integrand = np.sqrt((1.0 - 0.5 * wx**2) ** 2 + wx**2)
    return basis.grid.integrate(integrand)


def reconstruct_u(q, basis: ModeBasis, x=None) -> np.ndarray:
    """u(x) = -1/2 int_0^x w_x^2; on the grid nodes, or interpolated at ``x``."""
    wx = slope(q, basis)
    u = -0.5 * basis.grid.cumulative(wx**2)
    if x is None:
        return u
    return np.interp(np.asarray(x, float), basis.grid.nodes, u)


def tip_displacement(q, basis: ModeBasis):
    return np.asarray(q, float) @ basis.tip_values


def trajectory_diagnostics(traj: Trajectory, system: ModalSystem, basis: ModeBasis) -> dict[str, np.ndarray]:
    T = traj.times.size
    cols = {name: np.empty(T) for name in ("E_total", "E_lin", "E_nl_stiff", "E_nl_inertia", "E_kin", "E_pot")}
    for r in range(T):
        for name, val in energy(traj.q[r], traj.qdot[r], system).items():
            cols[name][r] = val
    arc = np.empty(T)
    uL = np.empty(T)
    slope_max = np.empty(T)
    for lo in range(0, T, _CHUNK):
        wx = slope(traj.q[lo:lo + _CHUNK], basis)
        arc[lo:lo + _CHUNK] = basis.grid.integrate(np.sqrt((1.0 - 0.5 * wx**2) ** 2 + wx**2))
        uL[lo:lo + _CHUNK] = -0.5 * basis.grid.integrate(wx**2)
        slope_max[lo:lo + _CHUNK] = np.max(np.abs(wx), axis=1)
    cols.update(arc_len=arc, wL=tip_displacement(traj.q, basis), uL=uL, slope_max=slope_max)
    cols["constraint_exit"] = slope_max >= 1.0
    # E(t) - E(0) - (static work) + damping + Kelvin-Voigt + flow work; zero for exact solutions
    work = dict(zip(WORK_NAMES, traj.work.T))
    cols["balance_residual"] = (cols["E_total"] - cols["E_total"][0] + work["W_damping"]
                                + work["W_kelvin_voigt"] + work["W_flow"] - work["W_static"])
    return cols


# -- long-time classification -------------------------------------------------------

GROWTH_FACTOR = 10.0
STEADY_VELOCITY_RATIO = 1e-5
DECAY_AMPLITUDE = 1e-6
LCO_AMPLITUDE_VARIATION = 0.05
LCO_PERIOD_VARIATION = 0.05
MIN_SAMPLES = 100


@dataclass
class Classification:
    kind: str  # decay | steady_state | LCO | growth | indeterminate
    q_inf: np.ndarray | None = None
    amplitude: float | None = None
    period: float | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "q_inf": None if self.q_inf is None else [float(v) for v in self.q_inf],
            "amplitude": self.amplitude,
            "period": self.period,
            **self.detail,
        }


def _peaks(y: np.ndarray) -> np.ndarray:
    return np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1


def _grew(E: np.ndarray) -> bool:
    """Energy envelope rises block after block and ends >10x above where it started."""
    blocks = np.array_split(E, 4)
    peaks = [b.max() for b in blocks if b.size]
    if len(peaks) < 2 or peaks[0] <= 0:
        return False
    return all(b > a for a, b in zip(peaks, peaks[1:])) and peaks[-1] > GROWTH_FACTOR * peaks[0]


def classify_longtime(traj: Trajectory, window_fraction: float = 0.25) -> Classification:
    """Classify the trailing ``window_fraction`` of a trajectory.

    growth: the blow-up guard tripped, or the energy envelope rose steadily by
    more than 10x across the window. steady_state: max|q'| in the window is
    below 1e-5 of its historical maximum (``decay`` when the terminal state is
    also below 1e-6). LCO: tip-displacement peaks in the window vary by less
    than 5% in height and spacing. Otherwise indeterminate.
    """
    if traj.status == "guard":
        return Classification("growth", detail={"reason": "guard"})
    T = traj.times.size
    if T < MIN_SAMPLES:
        return Classification("indeterminate", detail={"reason": f"only {T} samples"})
    start = int(np.floor((1.0 - window_fraction) * T))
    win = slice(start, T)
    E = traj.diagnostics["E_total"]
    if _grew(E[win]):
        return Classification("growth", detail={"reason": "energy"})

    speed = np.max(np.abs(traj.qdot), axis=1)
    hist_max = float(np.max(speed))
    q_end = traj.q[-1]
    if hist_max == 0.0 or np.max(speed[win]) < STEADY_VELOCITY_RATIO * hist_max:
        drift = np.max(np.abs(traj.q[win] - q_end))
        if drift <= max(1e-3 * np.max(np.abs(q_end)), DECAY_AMPLITUDE):
            if np.max(np.abs(q_end)) < DECAY_AMPLITUDE:
                return Classification("decay", q_inf=q_end.copy())
            return Classification("steady_state", q_inf=q_end.copy())

    wL = traj.diagnostics["wL"][win]
    t = traj.times[win]
    hi, lo = _peaks(wL), _peaks(-wL)
    if hi.size >= 3 and lo.size >= 3:
        heights = wL[hi]
        depths = wL[lo]
        n = min(hi.size, lo.size)
        p2p = heights[-n:] - depths[-n:]
        periods = np.diff(t[hi])
        mean_p2p = float(np.mean(p2p))
        if mean_p2p > 0:
            amp_var = float((p2p.max() - p2p.min()) / mean_p2p)
            per_var = float((periods.max() - periods.min()) / periods.mean())
            if amp_var < LCO_AMPLITUDE_VARIATION and per_var < LCO_PERIOD_VARIATION:
                return Classification("LCO", amplitude=0.5 * mean_p2p, period=float(periods.mean()),
                                      detail={"amplitude_variation": amp_var, "period_variation": per_var})
    return Classification("indeterminate", detail={"reason": "no criterion met"})


def summarize(traj: Trajectory, window_fraction: float = 0.25) -> dict:
    """Run summary used for JSON output and sweep rows."""
    d = traj.diagnostics
    cls = classify_longtime(traj, window_fraction)
    L = traj.config.physical.L if traj.config is not None else 1.0
    has = bool(d) and d["E_total"].size
    exits = np.nonzero(d["constraint_exit"])[0] if has else np.empty(0, int)
    return {
        "status": traj.status,
        "message": traj.message,
        "classification": cls.kind,
        "classification_detail": cls.to_dict(),
        "t_end_reached": traj.t_end_reached,
        "E_initial": float(d["E_total"][0]) if has else None,
        "E_final": float(d["E_total"][-1]) if has else None,
        "E_max": float(np.max(d["E_total"])) if has else None,
        "wL_final": float(d["wL"][-1]) if has else None,
        "uL_final": float(d["uL"][-1]) if has else None,
        "arc_dev_max": float(np.max(np.abs(d["arc_len"] - L)) / L) if has else None,
        "balance_residual_max": float(np.max(np.abs(d["balance_residual"]))) if has else None,
        "constraint_exit_first_t": float(traj.times[exits[0]]) if exits.size else None,
        "q_final": [float(v) for v in traj.q[-1]],
    }


def locate_transition(values, responses, fraction: float = 0.05) -> float | None:
    """Parameter value where |response| first exceeds ``fraction`` of its grid maximum.

    ``values`` are scanned in the order given (start from the trivial end); the
    crossing is interpolated linearly between the bracketing grid points.
    Returns None when the response never leaves the trivial level.
    """
    v = np.asarray(values, float)
    r = np.abs(np.asarray(responses, float))
    if v.size == 0 or not np.isfinite(r).all() or r.max() == 0.0:
        return None
    level = fraction * r.max()
    above = np.nonzero(r > level)[0]
    i = int(above[0])
    if i == 0:
        return None if r[0] <= level else float(v[0])
    r0, r1 = r[i - 1], r[i]
    return float(v[i - 1] + (level - r0) / (r1 - r0) * (v[i] - v[i - 1]))
