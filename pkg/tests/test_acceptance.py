"""End-to-end acceptance checks, one test per criterion A1..A12.

Each test measures its quantities fresh, prints a single
"A<n> PASS/FAIL: ..." line carrying the numbers, and asserts afterwards,
so the verdict line always precedes the traceback on a failure. The big
stability run is module-scoped and shared by the criteria that read it.
"""

import dataclasses
import math
import time
from pathlib import Path

import numpy as np
import pytest

from shocklab.config import parse_config
from shocklab.diagnostics import inequality_checks
from shocklab.gas import GasParams, check_lax, solve_hugoniot
from shocklab.grid import (
    NGHOST,
    PerturbationSpec,
    State,
    decompose_modes,
    init_state,
    make_boundary,
    make_grid,
)
from shocklab.profile import build_profile, profile_eval, verify_profile
from shocklab.solver import E_ADMISSIBLE, rhs, run, stable_dt, step
from shocklab.tracking import antideriv_residual, nonlinear_norm, solve_shift

GAS = GasParams()


def report(name: str, ok: bool, detail: str) -> None:
    print(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{name}: {detail}"


def march_to(state, bc, gas, t_target, cfl=0.8):
    while state.t < t_target - 1e-12:
        dt = min(stable_dt(state, gas, cfl), t_target - state.t)
        step(state, bc, gas, dt)


# ---------------------------------------------------------------------------
# A1 / A2: wave construction


def test_a01_hugoniot_closed_form():
    t0 = time.perf_counter()
    conn = solve_hugoniot(GAS, rho_minus=1.0, delta=0.1)
    # independent closed form: s = sqrt((p(r-) - p(r+)) / (r- - r+) * r+ / r-)
    # with u1- = 0, then u1+ from mass conservation across the jump
    rm, rp = 1.0, 0.9
    s_exact = math.sqrt((GAS.a * (rm**GAS.gamma - rp**GAS.gamma)) / (rm - rp) * rp / rm)
    u1p_exact = s_exact * (1.0 - rm / rp)
    rel_s = abs(conn.speed - s_exact) / s_exact
    rel_u = abs(conn.plus.u1 - u1p_exact) / abs(u1p_exact)
    # Rankine-Hugoniot defects of the returned connection
    j = conn.mass_flux
    rh1 = abs(-conn.speed * (rp - rm) + (rp * conn.plus.u1 - 0.0))
    rh2 = abs(
        -conn.speed * (rp * conn.plus.u1 - 0.0)
        + (rp * conn.plus.u1**2 + GAS.a * rp**GAS.gamma)
        - (0.0 + GAS.a * rm**GAS.gamma)
    )
    elapsed = time.perf_counter() - t0
    ok = rel_s <= 1e-9 and rel_u <= 1e-9 and rh1 <= 1e-12 and rh2 <= 1e-12 \
        and elapsed < 1.0
    report("A1", ok,
           f"closed-form rel err s={rel_s:.2e} u1+={rel_u:.2e}, "
           f"RH defects {rh1:.2e}/{rh2:.2e}, j={j:.6f}, {elapsed:.2f}s")


def test_a02_lax_gate():
    t0 = time.perf_counter()
    conn = solve_hugoniot(GAS, rho_minus=1.0, delta=0.1)
    lax = check_lax(conn)
    flipped = dataclasses.replace(conn, speed=-conn.speed)
    lax_neg = check_lax(flipped)
    elapsed = time.perf_counter() - t0
    ok = lax.ok and lax.margin_plus > 0.0 and lax.margin_minus > 0.0 \
        and not lax_neg.ok and elapsed < 1.0
    report("A2", ok,
           f"margins +{lax.margin_plus:.4f}/+{lax.margin_minus:.4f}, "
           f"negated-s ok={lax_neg.ok}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# A3 / A4: profile fidelity


def test_a03_profile_fidelity():
    t0 = time.perf_counter()
    conn = solve_hugoniot(GAS, rho_minus=1.0, delta=0.1)
    rep = verify_profile(build_profile(conn))
    rate_err_l = abs(rep.rate_left_fit - rep.rate_left_linearized) \
        / rep.rate_left_linearized
    rate_err_r = abs(rep.rate_right_fit - rep.rate_right_linearized) \
        / rep.rate_right_linearized
    widths = []
    deltas = (0.025, 0.05, 0.1, 0.2)
    for d in deltas:
        c = solve_hugoniot(GAS, rho_minus=1.0, delta=d)
        widths.append(verify_profile(build_profile(c, n_nodes=1025)).width_5_95)
    slope = float(np.polyfit(np.log(deltas), np.log(widths), 1)[0])
    elapsed = time.perf_counter() - t0
    ok = rep.max_ns1_residual <= 1e-8 and rep.monotonicity_violations == 0 \
        and rate_err_l <= 0.05 and rate_err_r <= 0.05 \
        and -1.2 <= slope <= -0.8 and elapsed < 10.0
    report("A3", ok,
           f"NS1 residual {rep.max_ns1_residual:.2e}, "
           f"mono violations {rep.monotonicity_violations}, "
           f"tail-rate errs {rate_err_l:.3f}/{rate_err_r:.3f}, "
           f"width slope {slope:.3f}, {elapsed:.1f}s")


def test_a04_derivative_ratio_stable():
    t0 = time.perf_counter()
    conn = solve_hugoniot(GAS, rho_minus=1.0, delta=0.1)
    ratios = [verify_profile(build_profile(conn, n_nodes=n)).c3_ratio
              for n in (2048, 4096, 8192)]
    spread = (max(ratios) - min(ratios)) / ratios[-1]
    elapsed = time.perf_counter() - t0
    ok = all(np.isfinite(r) and r > 0.0 for r in ratios) and spread <= 0.2 \
        and elapsed < 10.0
    report("A4", ok,
           f"max|u1''|/(delta |u1'|) = {ratios} spread {spread:.3f}, "
           f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# A5 / A6: mode decomposition and inequality oracles


def test_a05_decomposition_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    g = make_grid(10.0, 24, 16, 8)
    worst_pyth = 0.0
    worst_ann = 0.0
    for _ in range(100):
        f = rng.standard_normal((g.n1, g.n2, g.n3))
        zero, fluct = decompose_modes(f)
        zero = np.broadcast_to(zero[:, None, None], f.shape)
        total = float(np.sum(f * f))
        parts = float(np.sum(zero * zero)) + float(np.sum(fluct * fluct))
        worst_pyth = max(worst_pyth, abs(total - parts) / total)
        zz, _ = decompose_modes(fluct)
        worst_ann = max(worst_ann, float(np.max(np.abs(zz))))
    elapsed = time.perf_counter() - t0
    ok = worst_pyth <= 1e-12 and worst_ann <= 1e-13 and elapsed < 5.0
    report("A5", ok,
           f"Pythagoras rel defect {worst_pyth:.2e}, "
           f"D0 of fluctuation {worst_ann:.2e} over 100 fields, {elapsed:.1f}s")


def test_a06_inequality_oracles():
    t0 = time.perf_counter()
    rep = inequality_checks(samples=100)
    elapsed = time.perf_counter() - t0
    eq_p = abs(rep.poincare_equality_ratio - 1.0)
    eq_a = abs(rep.agmon_equality_ratio - 1.0)
    ok = rep.ok and eq_p <= 1e-6 and eq_a <= 0.02 \
        and rep.poincare_max_ratio <= 1.0 + 1e-12 and elapsed < 10.0
    report("A6", ok,
           f"Poincare equality defect {eq_p:.2e}, Agmon equality defect "
           f"{eq_a:.4f}, max ratios {rep.poincare_max_ratio:.6f}/"
           f"{rep.agmon_max_ratio:.4f} over {rep.samples} samples, "
           f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# A7: solver verification


def _rest_state(grid, rho0=1.0):
    st = State.alloc(grid)
    st.rho[...] = rho0
    st.m[...] = 0.0
    return st


def test_a07_solver_verification():
    t0 = time.perf_counter()
    conn = solve_hugoniot(GAS, rho_minus=1.0, delta=0.1)
    table = build_profile(conn, n_nodes=1024)

    rest_drift = 0.0
    for shape in ((400, 1, 1), (128, 8, 8)):
        g = make_grid(40.0, *shape)
        bc = make_boundary(g, conn, k_mean=0.5, k_amp=0.2)
        bc = dataclasses.replace(bc, far_rho=1.0, far_m1=0.0)
        st = _rest_state(g)
        dt = stable_dt(st, GAS, cfl=0.8)
        for _ in range(1000):
            step(st, bc, GAS, dt)
        rest_drift = max(
            rest_drift,
            float(np.max(np.abs(st.rho[NGHOST:-NGHOST] - 1.0))),
            float(np.max(np.abs(st.m[:, NGHOST:-NGHOST]))),
        )

    # smooth manufactured tendency, limiter off, x1 refinement triplet
    length = 4.0
    k1 = 2.0 * np.pi / length
    k2 = 4.0 * np.pi / length
    errs = []
    for n in (128, 256, 512):
        g = make_grid(length, n, 1, 1)
        st = State.alloc(g)
        xp = g.x1_padded[:, None, None]
        rho = 1.0 + 0.1 * np.sin(k1 * xp + 0.3)
        u = 0.15 * np.sin(k2 * xp + 1.1)
        st.rho[...] = rho
        st.m[0] = rho * u
        out = rhs(st, GAS, limiter="none")
        x = g.x1[:, None, None]
        rho = 1.0 + 0.1 * np.sin(k1 * x + 0.3)
        drho = 0.1 * k1 * np.cos(k1 * x + 0.3)
        u = 0.15 * np.sin(k2 * x + 1.1)
        du = 0.15 * k2 * np.cos(k2 * x + 1.1)
        ddu = -0.15 * k2**2 * np.sin(k2 * x + 1.1)
        m = rho * u
        dm = drho * u + rho * du
        dp = GAS.a * GAS.gamma * rho ** (GAS.gamma - 1.0) * drho
        t_rho = -dm
        t_m1 = -(dm * u + m * du + dp) + GAS.mu_tilde * ddu
        e = max(
            float(np.sqrt(np.mean((out.d_rho - t_rho) ** 2))),
            float(np.sqrt(np.mean((out.d_m[0] - t_m1) ** 2))),
        )
        errs.append(e)
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]

    # conservation audit on a perturbed shock, both boundaries active
    g = make_grid(40.0, 128, 8, 8)
    bc = make_boundary(g, conn, k_mean=0.5, k_amp=0.2)
    pert = PerturbationSpec(zero_mass=-0.02, bump_center=13.0, bump_width=4.0,
                            transverse_amp=0.01, seed=5)
    st = init_state(g, table, -12.0, pert)
    vol = g.cell_volume
    dt = stable_dt(st, GAS, cfl=0.8)
    worst_budget = 0.0
    total_prev = float(np.sum(st.rho[NGHOST:-NGHOST])) * vol
    out_prev = st.mass_outflow
    for _ in range(200):
        step(st, bc, GAS, dt)
        total = float(np.sum(st.rho[NGHOST:-NGHOST])) * vol
        budget = abs((total - total_prev) + (st.mass_outflow - out_prev))
        worst_budget = max(worst_budget, budget / total)
        total_prev, out_prev = total, st.mass_outflow

    elapsed = time.perf_counter() - t0
    ok = rest_drift <= 1e-12 and min(orders) >= 1.8 \
        and worst_budget <= 1e-12 and elapsed < 120.0
    report("A7", ok,
           f"rest drift {rest_drift:.2e}/1000 steps, MMS orders "
           f"{[round(o, 2) for o in orders]}, mass budget {worst_budget:.2e}"
           f"/step, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# A8: traveling-wave preservation under refinement


def test_a08_traveling_wave_refinement():
    t0 = time.perf_counter()
    conn = solve_hugoniot(GAS, rho_minus=1.0, delta=0.1)
    table = build_profile(conn)
    alpha = -15.0  # transition mid-domain, wall sits in the dead upstream tail
    drifts = {}
    for n1 in (400, 800):
        g = make_grid(50.0, n1, 1, 1)
        bc = make_boundary(g, conn, k_mean=0.5, k_amp=0.0)
        st = init_state(g, table, alpha, None)
        march_to(st, bc, GAS, 5.0)
        samp = profile_eval(table, g.x1 - conn.speed * st.t + alpha)
        rho = st.rho[NGHOST:-NGHOST, 0, 0]
        m1 = st.m[0, NGHOST:-NGHOST, 0, 0]
        drifts[n1] = max(
            float(np.max(np.abs(rho - samp.rho))),
            float(np.max(np.abs(m1 - samp.m))),
        )
    ratio = drifts[400] / drifts[800]
    elapsed = time.perf_counter() - t0
    ok = ratio >= 3.0 and elapsed < 300.0
    report("A8", ok,
           f"sup drift {drifts[400]:.3e} (400) -> {drifts[800]:.3e} (800), "
           f"ratio {ratio:.2f} >= 3, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# A9 / A10: the stability witness run, shared


@pytest.fixture(scope="module")
def stability_run(tmp_path_factory):
    cfg = parse_config("""
grid.L = 50.0
grid.N1 = 400
grid.N2 = 16
grid.N3 = 16
run.t_end = 20.0
run.output_every = 0.5
pert.zero_mass = -0.02
pert.transverse_amp = 0.01
pert.seed = 12345
""")
    out = tmp_path_factory.mktemp("stability")
    t0 = time.perf_counter()
    art = run(cfg, out)
    elapsed = time.perf_counter() - t0
    return cfg, art, elapsed


def test_a09_nonlinear_stability_witness(stability_run):
    cfg, art, elapsed = stability_run
    s = solve_hugoniot(GAS, cfg.rho_minus, cfg.delta).speed
    n_inf = [r.N_inf for r in art.records]
    ne = [r.nonzero_mode_norm for r in art.records]
    e_vals = [r.E for r in art.records]
    decay = n_inf[-1] / max(n_inf)
    ne_ratio = ne[-1] / ne[0]
    ok = s * cfg.t_end <= 0.6 * cfg.length and art.abort is None \
        and decay <= 0.3 and ne_ratio <= 0.1 \
        and all(np.isfinite(e_vals)) and max(e_vals) <= E_ADMISSIBLE \
        and max(e_vals) <= 1.25 * e_vals[0] \
        and elapsed <= 1800.0
    report("A9", ok,
           f"N_inf final/max {decay:.3f} <= 0.3, nonzero-mode ratio "
           f"{ne_ratio:.2e} <= 0.1, E max {max(e_vals):.3e} <= "
           f"min({E_ADMISSIBLE}, 1.25*E(0)={1.25 * e_vals[0]:.3e}), "
           f"abort={art.abort}, s*t_end={s * cfg.t_end:.1f} <= "
           f"{0.6 * cfg.length:.0f}, {elapsed:.0f}s")


def test_a10_boundary_identity(stability_run):
    cfg, art, _ = stability_run
    dx1 = cfg.length / cfg.n1
    worst = -np.inf
    t_worst = 0.0
    for r in art.records:
        gap = abs(r.Phi_at_wall - r.A_of_t)
        bound = r.trunc_bound + 5.0 * dx1 * r.max_abs_phi_zero
        if gap - bound > worst:
            worst = gap - bound
            t_worst = r.t
    ok = worst <= 0.0
    report("A10", ok,
           f"max of |Phi(t,0) - A(t)| minus its bound = {worst:.3e} "
           f"(at t={t_worst}) over {len(art.records)} outputs")


# ---------------------------------------------------------------------------
# A11: anti-derivative residuals


def test_a11_antideriv_residuals():
    t0 = time.perf_counter()
    conn = solve_hugoniot(GAS, rho_minus=1.0, delta=0.1)
    table = build_profile(conn)
    shift = solve_shift(-0.02, table)
    gap = 0.05

    resids = {}
    for n1 in (400, 800):
        g = make_grid(50.0, n1, 1, 1)
        bc = make_boundary(g, conn, k_mean=0.5, k_amp=0.0)
        st = init_state(g, table, shift.alpha,
                        PerturbationSpec(zero_mass=-0.02, bump_center=10.0,
                                         bump_width=4.0, seed=7))
        march_to(st, bc, GAS, 1.0 - 0.5 * gap)
        a = st.copy()
        march_to(st, bc, GAS, 1.0 + 0.5 * gap)
        resids[n1] = antideriv_residual(a, st, table, shift.alpha)
    ratios = [resids[400][i] / resids[800][i] for i in (0, 1)]

    eps_list = (1e-2, 5e-3, 2.5e-3)
    q_vals = []
    for eps in eps_list:
        g = make_grid(50.0, 400, 1, 1)
        sh = solve_shift(-2.0 * eps, table)
        st = init_state(g, table, sh.alpha,
                        PerturbationSpec(zero_mass=-2.0 * eps, bump_center=10.0,
                                         bump_width=4.0, seed=7))
        q_vals.append(nonlinear_norm(st, table, sh.alpha))
    exponent = float(np.polyfit(np.log(eps_list), np.log(q_vals), 1)[0])

    elapsed = time.perf_counter() - t0
    ok = min(ratios) >= 1.8 and abs(exponent - 2.0) <= 0.2
    report("A11", ok,
           f"residual refinement ratios {[round(r, 2) for r in ratios]} "
           f">= 1.8 at t=1, quadratic-term exponent {exponent:.3f} = 2 +/- "
           f"0.2 over eps={eps_list}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# A12: Lyapunov audit uniformity


def test_a12_lyapunov_audit_uniform(tmp_path):
    t0 = time.perf_counter()
    base = """
grid.L = 50.0
grid.N1 = 200
grid.N2 = 8
grid.N3 = 8
run.t_end = 10.0
run.output_every = 0.5
pert.zero_mass = -0.02
pert.transverse_amp = 0.01
"""
    audits = {}
    for delta in (0.05, 0.1):
        for seed in (12345, 54321):
            cfg = parse_config(base + f"wave.delta = {delta}\n"
                               f"pert.seed = {seed}\n")
            art = run(cfg, tmp_path / f"d{delta}_s{seed}")
            assert art.abort is None
            audits[(delta, seed)] = art.c_audit
    vals = list(audits.values())
    elapsed = time.perf_counter() - t0
    ok = max(vals) <= 2.0 * min(vals) + 1e-12
    report("A12", ok,
           f"C_audit over delta x seed matrix = "
           f"{[f'{v:.3e}' for v in vals]}, max <= 2*min + 1e-12, "
           f"{elapsed:.0f}s")
