"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line (collected in the terminal summary) and
then asserts, so a failing criterion is reported rather than hidden.
"""

import time

import numpy as np
import pytest

from inextbeam.assembly import assemble
from inextbeam.cli import main
from inextbeam.config import SimConfig
from inextbeam.diagnostics import classify_longtime, locate_transition, summarize
from inextbeam.dynamics import assemble_mass, simulate, sweep
from inextbeam.flutter import FlutterParams, determinant_residual, find_Ucrit, sweep as flutter_sweep
from inextbeam.modes import ModeBasis
from inextbeam.output import read_csv

import oracles

REFERENCE_KAPPA_L = [1.8751, 4.6941, 7.8548, 10.9955, 14.1372, 17.2788]


def _run(basis, tensors, **changes):
    return simulate(SimConfig().replace(**changes), tensors=tensors, basis=basis)


def _drift(traj) -> float:
    E = traj.diagnostics["E_total"]
    return float(np.max(np.abs(E - E[0])) / abs(E[0]))


def test_c01_mode_numbers(report, tmp_path):
    t0 = time.perf_counter()
    code = main(["modes", "--n", "6", "--out", str(tmp_path / "modes.csv")])
    elapsed = time.perf_counter() - t0
    _, data = read_csv(tmp_path / "modes.csv")
    err = float(np.max(np.abs(data[:, 1] - REFERENCE_KAPPA_L)))
    ok = code == 0 and err < 1e-3 and elapsed < 1.0
    report("C1 mode numbers", ok, f"max |kappaL - reference| = {err:.2e}, runtime {elapsed:.3f} s")
    assert ok


def test_c02_shape_coefficients(report):
    C = ModeBasis(2).C
    ok = abs(C[0] - 0.7341) <= 5e-4 and abs(C[1] - 1.0185) <= 5e-4
    report("C2 shape coefficients", ok, f"C1 = {C[0]:.6f}, C2 = {C[1]:.6f}")
    assert ok


def test_c03_basis_quality(report, basis8):
    g = basis8.grid
    s0, s2 = basis8.samples[0], basis8.samples[2]
    k4 = basis8.kappa**4
    e0 = float(np.max(np.abs(g.dot(s0, s0) - np.eye(8))))
    e2 = float(np.max(np.abs(g.dot(s2, s2) - np.diag(k4)) / k4[:, None]))
    ok = e0 < 1e-8 and e2 < 1e-6
    report("C3 basis quality (N=8)", ok, f"L2 error {e0:.2e}, H2 relative error {e2:.2e}")
    assert ok


def test_c04_flutter_onset(report, tensors6):
    params = FlutterParams(D=1.0, L=1.0, beta=1.0, k0=0.0, N=6)
    U = np.linspace(100.0, 160.0, 100)
    t0 = time.perf_counter()
    res = flutter_sweep(params, tensors6, U)
    elapsed = time.perf_counter() - t0
    Uc = find_Ucrit(params, tensors6, 130.0, 140.0)
    worst = max(determinant_residual(lam, FlutterParams(**{**params.__dict__, "U": u}), tensors6)
                for u, row in zip(U, res.branch_table) for lam in row)
    ok = 130.0 <= Uc <= 140.0 and worst < 1e-6 and elapsed < 5.0 and res.Ucrit is not None
    report("C4 flutter onset", ok,
           f"Ucrit = {Uc:.4f} (nominal 135.9), worst residual {worst:.1e}, 100-point sweep {elapsed:.2f} s")
    assert ok


def test_c05_linear_oscillator(report, basis6, tensors6):
    traj = _run(basis6, tensors6, sigma=0, iota=0, beta=0.0, U=0.0, preset="FirstMode", t_end=10.0,
                **{"numerical.rel_tol": 1e-9})
    err = float(np.max(np.abs(traj.q[:, 0] - np.cos(tensors6.kappa[0] ** 2 * traj.times))))
    ok = err < 1e-6 and traj.t_end_reached == 10.0
    report("C5 linear oscillator", ok, f"max |q1 - cos(kappa1^2 t)| = {err:.2e}")
    assert ok


def test_c06_energy_conservation(report, basis6, tensors6):
    vac = dict(beta=0.0, U=0.0, k0=0.0, k2=0.0, sigma=1, iota=1, t_end=10.0)
    small = _run(basis6, tensors6, preset="FirstMode", **vac)
    large = _run(basis6, tensors6, preset="LinearIV", a=5.0, **vac)
    d_small, d_large = _drift(small), _drift(large)
    exit_fired = bool(np.any(large.diagnostics["constraint_exit"]))
    # degradation: the large-data run no longer meets the small-data conservation bound
    ok = d_small < 1e-4 and d_large > 1e-4 and exit_fired
    report("C6 energy conservation", ok,
           f"FirstMode drift {d_small:.1e}; LinearIV a=5 drift {d_large:.1e} "
           f"(degradation {'seen' if d_large > 1e-4 else 'not seen'}), constraint exit fired: {exit_fired}")
    assert ok


def test_c07_arc_length(report, basis6, tensors6):
    vac = dict(beta=0.0, U=0.0, sigma=1, iota=1, t_end=20.0)
    devs = {}
    for preset in ("FirstMode", "SecondMode", "Polynomial"):
        devs[preset] = summarize(_run(basis6, tensors6, preset=preset, **vac))["arc_dev_max"]
    by_a = [summarize(_run(basis6, tensors6, preset="LinearIV", a=a, **vac))["arc_dev_max"] for a in (1.0, 2.0, 4.0)]
    within = all(d < 0.01 for d in devs.values())
    ordered = by_a[0] < by_a[1] < by_a[2]
    ok = within and ordered
    report("C7 arc length", ok,
           "max |arc - L|/L: " + ", ".join(f"{k} {v:.3g}" for k, v in devs.items())
           + f"; LinearIV a=1,2,4: {by_a[0]:.2e} < {by_a[1]:.2e} < {by_a[2]:.2e} ({'ordered' if ordered else 'not ordered'})")
    assert ok


def test_c08_linear_dichotomy(report, basis6, tensors6):
    lin = dict(sigma=0, iota=0, beta=1.0, t_end=20.0)
    below = _run(basis6, tensors6, U=120.0, **lin).diagnostics["E_total"]
    above = _run(basis6, tensors6, U=140.0, **lin).diagnostics["E_total"]
    decays = below[-1] < below[0]
    growth = float(np.max(above) / above[0])
    ok = decays and growth > 10.0
    report("C8 linear stability dichotomy", ok,
           f"U=120: E(0)={below[0]:.3g} -> E(20)={below[-1]:.3g}; U=140: max E/E(0) = {growth:.3g}")
    assert ok


def test_c09_stiffness_lco(report, basis6, tensors6):
    traj = _run(basis6, tensors6, sigma=1, iota=0, beta=1.0, U=140.0, preset="LinearIV", a=1.0, t_end=40.0)
    cls = classify_longtime(traj)
    E, t = traj.diagnostics["E_total"], traj.times
    settled = E[(t >= 10.0) & (t < 20.0)].max()
    late = E[t >= 30.0].max()
    plateau = late <= 10.0 * settled
    var = cls.detail.get("amplitude_variation", np.inf)
    ok = cls.kind == "LCO" and var < 0.05 and plateau
    report("C9 stiffness-only LCO", ok,
           f"class {cls.kind}, amplitude {cls.amplitude}, amplitude variation {var:.3g}, "
           f"late/settled energy ratio {late / settled:.3g}")
    assert ok


def test_c10_inertia_blowup(report, basis6, tensors6):
    traj = _run(basis6, tensors6, sigma=1, iota=1, k2=0.0, beta=1.0, U=100.0, preset="LinearIV", a=1.0, t_end=40.0)
    cls = classify_longtime(traj)
    E = traj.diagnostics["E_total"]
    ok = traj.status == "guard" or cls.kind == "growth"
    report("C10 inertia blow-up at U=100", ok,
           f"status {traj.status}, class {cls.kind}, E(0)={E[0]:.3g}, max E={E.max():.3g}, E(end)={E[-1]:.3g}")
    assert ok


def test_c11_inverted_flag(report, basis6, tensors6):
    traj = _run(basis6, tensors6, sigma=1, iota=1, beta=1.0, U=-10.0, preset="LinearIV", a=1.0, t_end=80.0)
    cls = classify_longtime(traj)
    q = np.abs(traj.q[-1])
    dominance = float(min(q[0], q[1]) / max(q[2], q[3]))
    rows = sweep(SimConfig().replace(sigma=1, iota=1, beta=1.0, t_end=20.0), "U",
                 [round(-6.0 - 0.1 * i, 10) for i in range(11)])
    U = [r["value"] for r in rows]
    wL = [r["wL_final"] for r in rows]
    Ut = locate_transition(U, wL)
    located = Ut is not None and -6.8 <= Ut <= -6.0
    ok = cls.kind == "steady_state" and dominance >= 10.0 and located
    report("C11 inverted flag", ok,
           f"U=-10 class {cls.kind}, |q1..q4| = {np.array2string(q[:4], precision=4)}, "
           f"min(|q1|,|q2|)/max(|q3|,|q4|) = {dominance:.2f}; transition at U = {Ut}")
    assert ok


def test_c12_mode_count(report, basis6, tensors6):
    out = {}
    for N in (3, 6):
        traj = _run(basis6, tensors6, sigma=1, iota=1, beta=1.0, U=135.9, N=N, preset="LinearIV", a=1.0, t_end=20.0)
        cls = classify_longtime(traj)
        out[N] = (traj.status, cls.kind, float(traj.diagnostics["E_total"].max()))
    bounded3 = out[3][0] != "guard" and out[3][1] != "growth"
    grows6 = out[6][0] == "guard" or out[6][1] == "growth"
    ok = bounded3 and grows6
    report("C12 mode-count sensitivity", ok,
           f"N=3: status {out[3][0]}, class {out[3][1]}, max E {out[3][2]:.3g}; "
           f"N=6: status {out[6][0]}, class {out[6][1]}, max E {out[6][2]:.3g}")
    assert ok


def test_c13_oracle_equivalence(report, tensors6):
    fine = oracles.ModeOracle(6, 1_000_001)
    nested = oracles.ModeOracle(6, 100_001)
    rng = np.random.default_rng(13)
    worst_S = max(abs(tensors6.S[i, j, k, l] / fine.S(i, j, k, l) - 1) for i, j, k, l in rng.integers(0, 6, (20, 4)))
    worst_I = max(abs(tensors6.I[i, j, k, l] / nested.I(i, j, k, l) - 1) for i, j, k, l in rng.integers(0, 6, (20, 4)))
    S, I = tensors6.S, tensors6.I
    sym = (np.array_equal(S, S.transpose(1, 0, 2, 3)) and np.array_equal(S, S.transpose(0, 1, 3, 2))
           and np.array_equal(I, I.transpose(1, 0, 2, 3)) and np.array_equal(I, I.transpose(0, 1, 3, 2))
           and np.array_equal(I, I.transpose(2, 3, 0, 1)))
    ok = worst_S < 1e-6 and worst_I < 1e-6 and sym
    report("C13 oracle equivalence", ok,
           f"worst relative error S {worst_S:.1e}, I {worst_I:.1e}; exact symmetries: {sym}")
    assert ok


def test_c14_mass_spd(report, tensors6):
    rng = np.random.default_rng(14)
    min_eig = np.inf
    failures = 0
    for _ in range(100):
        q = rng.uniform(-1, 1, 6)
        q *= rng.uniform(0, 2) / np.max(np.abs(q))
        M = assemble_mass(q, tensors6)
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            failures += 1
        min_eig = min(min_eig, float(np.linalg.eigvalsh(M).min()))
    ok = failures == 0
    report("C14 mass matrix SPD", ok, f"{100 - failures}/100 factorized, smallest eigenvalue {min_eig:.6f}")
    assert ok


def test_c15_damped_energy_identity(report, basis6, tensors6):
    traj = _run(basis6, tensors6, k2=0.01, sigma=1, iota=1, beta=0.0, U=0.0, k0=0.0, preset="FirstMode",
                t_end=10.0, **{"numerical.rel_tol": 1e-7, "numerical.abs_tol": 1e-9})
    E = traj.diagnostics["E_total"]
    resid = float(np.max(np.abs(traj.diagnostics["balance_residual"])) / np.max(E))
    ok = traj.status == "ok" and resid < 1e-3
    report("C15 damped energy identity", ok,
           f"integrator implicit-second-order, max |E(t) + k2 int sum kappa^4 qdot^2 - E(0)| / max E = {resid:.1e}, "
           f"E: {E[0]:.4g} -> {E[-1]:.4g}")
    assert ok
