"""Shift selection, boundary absorption bookkeeping, and zero-mode
antiderivatives.

The shift alpha is the root of I(alpha) = mass - (1/s) * int_{-inf}^{alpha}
m_bar dy. Since m_bar <= 0, I is strictly increasing with range (mass, inf),
so a root exists exactly when the perturbation mass is negative; otherwise
NoRoot reports inf I = mass and callers fall back to alpha = 0.

The cumulative momentum integral reuses the profile's own change of
variables: m_bar dxi = m_bar(v) * mu_tilde / R(v) dv is analytic in v even
where the xi spacing stretches logarithmically, so per-segment Gauss
quadrature keeps the integral at rounding accuracy. Beyond the table the
integrand follows the linearized exponential tails.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .gas import pressure, pressure_derivative
from .grid import State
from .profile import ProfileTable, profile_eval, reduced_rhs


class NoRoot(RuntimeError):
    """Mass matching has no shift; inf_I carries the unreachable infimum."""

    def __init__(self, message: str, inf_i: float):
        super().__init__(message)
        self.inf_I = inf_i


@dataclass(frozen=True)
class ShiftResult:
    """Root of the mass-matching function with solver diagnostics."""

    alpha: float
    residual: float
    bracket: tuple[float, float]
    iterations: int


@dataclass(frozen=True)
class AntiderivativeState:
    """Right-anchored antiderivatives of the zero-mode lines.

    Phi and Psi vanish at the far face by construction; the wall values
    extrapolate through the leading half cell. trunc_bound estimates the
    mass ignored beyond the far face from the tail decay of the lines.
    """

    Phi: np.ndarray
    Psi: np.ndarray
    Phi_wall: float
    Psi_wall: float
    trunc_bound: float


class _MassIntegral:
    """C(x) = int_{-inf}^{x} m_bar dy, exact-quadrature core plus tails."""

    def __init__(self, table: ProfileTable):
        conn = table.conn
        gas = conn.gas
        self.table = table
        self.speed = conn.speed
        self.xi = table.xi
        self.v = table.u1_bar
        self.m_inf = conn.plus.rho * conn.plus.u1
        r, r_prime = reduced_rhs(conn)
        self._r = r
        j = conn.mass_flux

        def integrand(u):
            return (j * u / (u - self.speed)) * gas.mu_tilde / r(u)

        nodes, weights = leggauss(16)
        a, b = self.v[:-1], self.v[1:]
        midp = 0.5 * (a + b)[:, None]
        half = 0.5 * (b - a)[:, None]
        seg = (integrand(midp + half * nodes[None, :]) @ weights) * half[:, 0]

        self.rate_left = float(r_prime(0.0)) / gas.mu_tilde
        self.rate_right = -float(r_prime(conn.plus.u1)) / gas.mu_tilde
        self.tail_left = float(table.m_bar[0]) / self.rate_left
        self._integrand = integrand
        self._gl = (nodes, weights)

        cum = np.empty(self.xi.size)
        cum[0] = self.tail_left
        np.cumsum(seg, out=cum[1:])
        cum[1:] += self.tail_left
        self.cum = cum

    def __call__(self, x: float) -> float:
        xi = self.xi
        if x <= xi[0]:
            return self.tail_left * np.exp(self.rate_left * (x - xi[0]))
        if x >= xi[-1]:
            dxr = x - xi[-1]
            edge = float(self.table.m_bar[-1]) - self.m_inf
            return float(self.cum[-1]) + self.m_inf * dxr + \
                (edge / self.rate_right) * -np.expm1(-self.rate_right * dxr)
        i = int(np.searchsorted(xi, x, side="right")) - 1
        v_x = float(self.table._interp["u1"](x))
        nodes, weights = self._gl
        a, b = self.v[i], v_x
        midp = 0.5 * (a + b)
        half = 0.5 * (b - a)
        part = float(self._integrand(midp + half * nodes) @ weights) * half
        return float(self.cum[i]) + part


_MI_CACHE: dict[int, tuple[weakref.ref, _MassIntegral]] = {}


def _mass_integral(table: ProfileTable) -> _MassIntegral:
    entry = _MI_CACHE.get(id(table))
    if entry is not None and entry[0]() is table:
        return entry[1]
    mi = _MassIntegral(table)
    _MI_CACHE[id(table)] = (weakref.ref(table), mi)
    return mi


def solve_shift(zero_mode_mass: float, table: ProfileTable) -> ShiftResult:
    """Shift whose boundary absorption matches the perturbation mass."""
    mass = float(zero_mode_mass)
    mi = _mass_integral(table)
    s = table.conn.speed
    if mass >= 0.0:
        raise NoRoot(
            f"no shift matches nonnegative zero-mode mass {mass:.6g}; "
            f"the matching function stays above its infimum {mass:.6g}",
            inf_i=mass,
        )

    def func(alpha):
        return mass - mi(alpha) / s

    lo, hi = float(table.xi[0]), float(table.xi[-1])
    for _ in range(200):
        if func(lo) < 0.0:
            break
        lo -= 5.0
    else:
        raise RuntimeError("failed to bracket the shift from below")
    for _ in range(200):
        if func(hi) > 0.0:
            break
        hi += 10.0
    else:
        raise RuntimeError("failed to bracket the shift from above")

    alpha, info = brentq(func, lo, hi, xtol=1e-13, rtol=8.9e-16,
                         full_output=True)
    return ShiftResult(
        alpha=float(alpha), residual=float(func(alpha)),
        bracket=(lo, hi), iterations=int(info.iterations),
    )


def boundary_driver_A(table: ProfileTable, alpha: float, t: float) -> float:
    """Mass absorbed by the wall-shift interaction still pending at time t.

    A(t) = -(1/s) * int_{-inf}^{alpha - s t} m_bar dy; nonnegative,
    nonincreasing, A(0) = -mass at the matched shift, and A'(t) equals the
    profile momentum evaluated at the wall-crossing position.
    """
    mi = _mass_integral(table)
    return -mi(alpha - table.conn.speed * t) / table.conn.speed


def _line_anchor(f: np.ndarray, dx1: float) -> np.ndarray:
    tail = np.cumsum(f[::-1])[::-1]
    return -dx1 * (tail - 0.5 * f)


def _decay_length(f: np.ndarray, dx1: float, span: float) -> float:
    tail = np.abs(f[-8:]) + 1e-300
    k = np.arange(tail.size) * dx1
    slope = np.polyfit(k, np.log(tail), 1)[0]
    if slope < 0.0:
        return float(min(-1.0 / slope, span))
    return float(span)


def antiderivative(phi0: np.ndarray, psi1_0: np.ndarray,
                   dx1: float) -> AntiderivativeState:
    """Antiderivatives anchored to zero at the far face.

    Phi_i integrates -int_{x_i}^{L} with trapezoid weights between cell
    centers and a half-cell closure at the far end, so forward differences
    return the face-averaged line exactly. The wall value closes the
    leading half cell the same way.
    """
    phi = _line_anchor(phi0, dx1)
    psi = _line_anchor(psi1_0, dx1)
    span = phi0.size * dx1
    ell = max(_decay_length(phi0, dx1, span), _decay_length(psi1_0, dx1, span))
    trunc = max(abs(float(phi0[-1])), abs(float(psi1_0[-1]))) * ell
    return AntiderivativeState(
        Phi=phi, Psi=psi,
        Phi_wall=float(phi[0] - 0.5 * dx1 * phi0[0]),
        Psi_wall=float(psi[0] - 0.5 * dx1 * psi1_0[0]),
        trunc_bound=trunc,
    )


def zero_mode_perturbation(state: State, table: ProfileTable,
                           alpha: float):
    """Transverse means of (rho, m1) minus the shifted profile lines.

    Returns (phi0, psi1_0, profile sample) on interior cell centers.
    """
    g = state.grid
    samp = profile_eval(table, g.x1 - table.conn.speed * state.t + alpha)
    phi0 = state.rho_int.mean(axis=(1, 2)) - samp.rho
    psi1_0 = state.m_int[0].mean(axis=(1, 2)) - samp.m
    return phi0, psi1_0, samp


def _quadratic_remainders(state: State, table: ProfileTable, alpha: float):
    """Zero modes of the flux remainders left after linearization."""
    g = state.grid
    gas = table.conn.gas
    samp = profile_eval(table, g.x1 - table.conn.speed * state.t + alpha)
    rb = samp.rho[:, None, None]
    ub = samp.u1[:, None, None]
    mb = samp.m[:, None, None]
    rho = state.rho_int
    m1 = state.m_int[0]
    phi = rho - rb
    psi1 = m1 - mb
    n11 = -(m1**2 / rho - mb**2 / rb - 2.0 * ub * psi1 + ub**2 * phi) \
        - (pressure(gas, rho) - pressure(gas, rb)
           - pressure_derivative(gas, rb) * phi)
    n21 = gas.mu_tilde * (m1 / rho - mb / rb - psi1 / rb + (ub / rb) * phi)
    return n11.mean(axis=(1, 2)), n21.mean(axis=(1, 2))


def _d1_line(f: np.ndarray, dx1: float) -> np.ndarray:
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx1)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx1)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx1)
    return out


def nonlinear_norm(state: State, table: ProfileTable, alpha: float) -> float:
    """L2 size of the zero-mode quadratic remainders feeding the
    antiderivative balance: ||N11_0|| + ||d/dx1 N21_0||."""
    n11_0, n21_0 = _quadratic_remainders(state, table, alpha)
    dx1 = state.grid.dx1
    return line_l2(n11_0, dx1) + line_l2(_d1_line(n21_0, dx1), dx1)


def line_l2(f: np.ndarray, dx1: float) -> float:
    """L2 norm of a line sample with cell weight dx1."""
    return float(np.sqrt(np.sum(f**2) * dx1))


def antideriv_residual(state_a: State, state_b: State, table: ProfileTable,
                       alpha: float) -> tuple[float, float]:
    """Time-centered defect of the two antiderivative balance laws.

    Between two states at nearby times, the pair (Phi, Psi) should satisfy
    d/dt Phi + psi1_0 = 0 and d/dt Psi + 2 u_bar psi1_0 + w_bar phi0
    - mu_tilde d/dx[(psi1_0 - u_bar phi0)/rho_bar] = N11_0 + d/dx N21_0,
    with every spatial term averaged Crank-Nicolson style. Both defects
    shrink at second order in the grid spacing.
    """
    dt = state_b.t - state_a.t
    if not dt > 0.0:
        raise ValueError(f"states must be time-ordered, got dt = {dt}")
    gas = table.conn.gas
    dx1 = state_a.grid.dx1

    def parts(st):
        phi0, psi1_0, samp = zero_mode_perturbation(st, table, alpha)
        anti = antiderivative(phi0, psi1_0, dx1)
        visc = gas.mu_tilde * _d1_line((psi1_0 - samp.u1 * phi0) / samp.rho, dx1)
        op = 2.0 * samp.u1 * psi1_0 + samp.w * phi0 - visc
        n11_0, n21_0 = _quadratic_remainders(st, table, alpha)
        return anti, psi1_0, op, n11_0 + _d1_line(n21_0, dx1)

    anti_a, psi_a, op_a, nl_a = parts(state_a)
    anti_b, psi_b, op_b, nl_b = parts(state_b)

    r1 = (anti_b.Phi - anti_a.Phi) / dt + 0.5 * (psi_a + psi_b)
    r2 = (anti_b.Psi - anti_a.Psi) / dt + 0.5 * (op_a + op_b) \
        - 0.5 * (nl_a + nl_b)
    return line_l2(r1, dx1), line_l2(r2, dx1)
