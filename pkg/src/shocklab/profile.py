"""Viscous shock profile: construction by quadrature and validation.

Eliminating density through the mass-flux constant J = rho*(u1 - s) turns
the traveling-wave system into one scalar ODE,

    mu_tilde * du1/dxi = R(u1),
    R(u1) = J*u1 + p(J/(u1 - s)) - (J*u1_plus + p(rho_plus)),

with R vanishing at the two endpoint velocities and strictly negative in
between. Rather than marching the stiff ODE, ``build_profile`` inverts it:
nodes are placed uniformly in u1 between the slightly truncated endpoint
values and xi is recovered as the cumulative integral of mu_tilde / R.
Every other column is algebraic in u1, so the quadrature is the only
numerical content of the table and the only thing validation has to chase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator

from .gas import GasParams, ShockConnection, pressure, pressure_derivative


def reduced_rhs(conn: ShockConnection) -> tuple[Callable, Callable]:
    """Return (R, R') for the reduced profile ODE, both vectorized in u1."""
    gas = conn.gas
    j = conn.mass_flux
    s = conn.speed
    anchor = j * conn.plus.u1 + pressure(gas, conn.plus.rho)

    def r(u):
        return j * u + pressure(gas, j / (u - s)) - anchor

    def r_prime(u):
        rho = j / (u - s)
        return j * (1.0 - pressure_derivative(gas, rho) / (u - s) ** 2)

    return r, r_prime


@dataclass(frozen=True)
class ProfileTable:
    """Sampled profile on a strictly increasing xi grid.

    u1_bar decreases from near 0 to near u1_plus; rho_bar, m_bar, w_bar and
    the two derivative columns are algebraic functions of u1_bar. The node
    at xi = 0 carries exactly u1_plus/2 (centering normalization).
    """

    conn: ShockConnection
    j: float
    xi: np.ndarray
    rho_bar: np.ndarray
    u1_bar: np.ndarray
    u1_prime: np.ndarray
    u1_second: np.ndarray
    m_bar: np.ndarray
    w_bar: np.ndarray
    eps_endpoint: float
    _interp: dict = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class ProfileSample:
    """profile_eval output; arrays share the shape of the query points."""

    rho: np.ndarray
    u1: np.ndarray
    u1_prime: np.ndarray
    u1_second: np.ndarray
    m: np.ndarray
    w: np.ndarray


def build_profile(
    conn: ShockConnection, n_nodes: int = 2048, eps_endpoint: float = 1e-4
) -> ProfileTable:
    """Tabulate the profile by Gauss quadrature of mu_tilde / R.

    Parameters
    ----------
    conn : ShockConnection
    n_nodes : int
        Requested node count; rounded up to the next odd number so the
        centering node u1 = u1_plus/2 is hit exactly.
    eps_endpoint : float
        Relative truncation of the u1 range: nodes span
        [u1_plus*(1 - eps), u1_plus*eps]. The integrand diverges like 1/u
        at the untruncated ends, so eps > 0 is structural, not a tolerance.
    """
    if n_nodes < 9:
        raise ValueError(f"n_nodes too small: {n_nodes}")
    if not 0.0 < eps_endpoint < 0.5:
        raise ValueError(f"eps_endpoint must lie in (0, 0.5), got {eps_endpoint}")
    gas = conn.gas
    u_plus = conn.plus.u1
    s = conn.speed
    j = conn.mass_flux
    n = n_nodes if n_nodes % 2 == 1 else n_nodes + 1
    mid = (n - 1) // 2

    v = np.linspace(u_plus * eps_endpoint, u_plus * (1.0 - eps_endpoint), n)
    v[mid] = 0.5 * u_plus  # exact center, linspace is within 1 ulp anyway

    r, r_prime = reduced_rhs(conn)
    nodes, weights = leggauss(16)
    a, b = v[:-1], v[1:]
    midp = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    seg = (gas.mu_tilde / r(midp + half * nodes[None, :])) @ weights
    seg *= half[:, 0]

    xi = np.empty(n)
    xi[0] = 0.0
    np.cumsum(seg, out=xi[1:])
    xi -= xi[mid]

    rho = j / (v - s)
    u1_prime = r(v) / gas.mu_tilde
    u1_second = r_prime(v) * u1_prime / gas.mu_tilde
    m_bar = rho * v
    w_bar = pressure_derivative(gas, rho) - v**2

    interp = {
        name: PchipInterpolator(xi, col, extrapolate=False)
        for name, col in (
            ("rho", rho),
            ("u1", v),
            ("u1_prime", u1_prime),
            ("u1_second", u1_second),
            ("m", m_bar),
            ("w", w_bar),
        )
    }
    return ProfileTable(
        conn=conn,
        j=j,
        xi=xi,
        rho_bar=rho,
        u1_bar=v,
        u1_prime=u1_prime,
        u1_second=u1_second,
        m_bar=m_bar,
        w_bar=w_bar,
        eps_endpoint=eps_endpoint,
        _interp=interp,
    )


def profile_eval(table: ProfileTable, xi) -> ProfileSample:
    """Sample the profile at arbitrary xi.

    Monotone cubic interpolation inside the tabulated range; outside it the
    exact constant end states are returned (derivatives zero), which is
    also what the far-field ghost cells assume.  The momentum sample is the
    product of the sampled density and velocity, never an independent
    interpolant, so pointwise identities between (rho, m) and (rho, u)
    perturbations hold to rounding instead of interpolation error.
    """
    xi_arr = np.asarray(xi, dtype=float)
    scalar = xi_arr.ndim == 0
    xq = np.atleast_1d(xi_arr)
    left = xq < table.xi[0]
    right = xq > table.xi[-1]
    inside = np.clip(xq, table.xi[0], table.xi[-1])

    conn = table.conn
    gas = conn.gas
    out = {}
    ends = {
        "rho": (conn.minus.rho, conn.plus.rho),
        "u1": (0.0, conn.plus.u1),
        "u1_prime": (0.0, 0.0),
        "u1_second": (0.0, 0.0),
        "w": (
            pressure_derivative(gas, conn.minus.rho),
            pressure_derivative(gas, conn.plus.rho) - conn.plus.u1**2,
        ),
    }
    for name, (lo, hi) in ends.items():
        vals = table._interp[name](inside)
        vals[left] = lo
        vals[right] = hi
        out[name] = vals[0] if scalar else vals.reshape(xi_arr.shape)
    out["m"] = out["rho"] * out["u1"]
    return ProfileSample(**out)


@dataclass(frozen=True)
class ProfileReport:
    """verify_profile output; ``ok`` summarizes the asserted checks."""

    max_ns1_residual: float
    max_second_derivative_err: float
    first_integral_residual: float
    mass_flux_err: float
    monotonicity_violations: int
    rate_left_fit: float
    rate_right_fit: float
    rate_left_linearized: float
    rate_right_linearized: float
    c3_ratio: float
    width_5_95: float
    amp_over_delta_sq: float
    w_min_over_pprime: float
    ok: bool


def _d_dv(f: np.ndarray, h: float) -> np.ndarray:
    """Sixth-order centered first derivative on a uniform grid, interior only."""
    return (
        -f[:-6] + 9.0 * f[1:-5] - 45.0 * f[2:-4] + 45.0 * f[4:-2] - 9.0 * f[5:-1] + f[6:]
    ) / (60.0 * h)


def verify_profile(table: ProfileTable, ns1_tol: float = 1e-8) -> ProfileReport:
    """Validate the table against its own ODE.

    The traveling-wave residual is assembled from sixth-order finite
    differences taken in the (uniform) u1 node coordinate and chained
    through the tabulated xi column, so the quadrature output itself is
    what gets differentiated; nothing is recomputed from the closed form
    that built the columns. The outermost nodes are excluded: there the
    1/u1 singularity of dxi/du1 sits inside the difference stencil and no
    fixed-order formula is meaningful.
    """
    conn = table.conn
    gas = conn.gas
    s = conn.speed
    n = table.xi.size
    h = table.u1_bar[1] - table.u1_bar[0]
    r, r_prime = reduced_rhs(conn)

    flux = table.m_bar * table.u1_bar + pressure(gas, table.rho_bar)
    dxi = _d_dv(table.xi, h)
    dm = _d_dv(table.m_bar, h)
    dflux = _d_dv(flux, h)
    dup = _d_dv(table.u1_prime, h)

    trim = max(8, n // 128)
    sl = slice(trim - 3, 3 - trim)  # FD arrays already lost 3 nodes per side
    u1_second_fd = dup[sl] / dxi[sl]
    ns1 = (-s * dm[sl] + dflux[sl]) / dxi[sl] - gas.mu_tilde * u1_second_fd
    max_ns1 = float(np.max(np.abs(ns1)))
    max_d2_err = float(np.max(np.abs(u1_second_fd - table.u1_second[trim:-trim])))

    first_integral = float(
        np.max(np.abs(gas.mu_tilde * table.u1_prime - r(table.u1_bar)))
    )
    mass_flux_err = float(
        np.max(np.abs(table.rho_bar * (table.u1_bar - s) - table.j))
        / abs(table.j)
    )
    violations = int(np.sum(np.diff(table.u1_bar) >= 0.0)) + int(
        np.sum(np.diff(table.rho_bar) >= 0.0)
    )

    # tail decay rates of |u1_prime|, fitted where |u1| is within 3% of an
    # endpoint; compared against the linearized rates R'(endpoint)/mu_tilde
    u_plus = conn.plus.u1
    lin_left = float(r_prime(0.0)) / gas.mu_tilde
    lin_right = float(r_prime(u_plus)) / gas.mu_tilde
    sel_l = np.abs(table.u1_bar) <= 0.03 * abs(u_plus)
    sel_r = np.abs(table.u1_bar) >= 0.97 * abs(u_plus)
    fit = lambda sel: float(
        np.polyfit(table.xi[sel], np.log(np.abs(table.u1_prime[sel])), 1)[0]
    )
    rate_left = fit(sel_l)
    rate_right = fit(sel_r)

    delta = conn.delta
    c3 = float(np.max(np.abs(table.u1_second) / (delta * np.abs(table.u1_prime))))
    amp = float(np.max(np.abs(table.u1_prime)) / delta**2)

    # 5%-95% transition width in xi (u1_bar decreasing, so flip for interp)
    u_rev = table.u1_bar[::-1]
    xi_rev = table.xi[::-1]
    x05, x95 = np.interp([0.05 * u_plus, 0.95 * u_plus], u_rev, xi_rev)
    width = float(x95 - x05)

    w_min_ratio = float(
        np.min(table.w_bar / pressure_derivative(gas, table.rho_bar))
    )

    ok = (
        max_ns1 <= ns1_tol
        and violations == 0
        and mass_flux_err <= 1e-10
        and abs(rate_left - lin_left) <= 0.05 * abs(lin_left)
        and abs(rate_right - lin_right) <= 0.05 * abs(lin_right)
    )
    return ProfileReport(
        max_ns1_residual=max_ns1,
        max_second_derivative_err=max_d2_err,
        first_integral_residual=first_integral,
        mass_flux_err=mass_flux_err,
        monotonicity_violations=violations,
        rate_left_fit=rate_left,
        rate_right_fit=rate_right,
        rate_left_linearized=lin_left,
        rate_right_linearized=lin_right,
        c3_ratio=c3,
        width_5_95=width,
        amp_over_delta_sq=amp,
        w_min_over_pprime=w_min_ratio,
        ok=ok,
    )
