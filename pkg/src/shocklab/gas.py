"""Isentropic gas law, characteristic speeds, and shock jump relations.

The model closes pressure with p(rho) = a * rho**gamma (a > 0, gamma > 1)
and carries two viscosity coefficients mu > 0 and lam with mu + lam >= 0.
The combination mu_tilde = 2*mu + lam is the effective longitudinal
viscosity seen by a planar wave.

A planar shock connection joins a quiescent upstream state (rho_minus, 0)
to a downstream state (rho_plus, u1_plus) moving with speed s > 0. With
u1_minus pinned to zero the two jump conditions collapse to a closed form
in s, which is what ``solve_hugoniot`` evaluates; no iterative solve is
needed away from validation paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidStrength(ValueError):
    """Shock strength outside (0, rho_minus)."""


class NoAdmissibleRoot(RuntimeError):
    """Neither sign of the shock speed satisfies the compressive ordering."""


@dataclass(frozen=True)
class GasParams:
    """Pressure-law and viscosity constants."""

    a: float = 1.0
    gamma: float = 2.0
    mu: float = 0.1
    lam: float = 0.0

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError(f"pressure coefficient a must be positive, got {self.a}")
        if not self.gamma > 1.0:
            raise ValueError(f"adiabatic exponent gamma must exceed 1, got {self.gamma}")
        if not self.mu > 0.0:
            raise ValueError(f"shear viscosity mu must be positive, got {self.mu}")
        if self.mu + self.lam < 0.0:
            raise ValueError(
                f"mu + lam must be nonnegative, got {self.mu} + {self.lam}"
            )

    @property
    def mu_tilde(self) -> float:
        """Longitudinal viscosity 2*mu + lam."""
        return 2.0 * self.mu + self.lam


@dataclass(frozen=True)
class ConstState:
    """Constant far-field state (density, normal velocity)."""

    rho: float
    u1: float


@dataclass(frozen=True)
class ShockConnection:
    """Endpoint states, speed, and strength of one planar shock."""

    gas: GasParams
    minus: ConstState
    plus: ConstState
    speed: float
    delta: float

    @property
    def mass_flux(self) -> float:
        """Mass flux J = rho*(u1 - s) through the wave, negative for s > 0."""
        return self.minus.rho * (self.minus.u1 - self.speed)


def pressure(gas: GasParams, rho):
    """Evaluate p(rho) = a * rho**gamma; rho may be a scalar or array."""
    rho = np.asarray(rho)
    if np.any(rho <= 0.0):
        raise ValueError("density must be positive")
    p = gas.a * rho**gas.gamma
    return float(p) if p.ndim == 0 else p


def pressure_derivative(gas: GasParams, rho):
    """dp/drho = a * gamma * rho**(gamma - 1), the squared sound speed."""
    rho = np.asarray(rho)
    if np.any(rho <= 0.0):
        raise ValueError("density must be positive")
    dp = gas.a * gas.gamma * rho ** (gas.gamma - 1.0)
    return float(dp) if dp.ndim == 0 else dp


def sound_speed(gas: GasParams, rho):
    """c(rho) = sqrt(dp/drho)."""
    dp = pressure_derivative(gas, rho)
    return math.sqrt(dp) if np.isscalar(dp) else np.sqrt(dp)


def char_speeds(gas: GasParams, rho, u1):
    """Acoustic characteristic speeds (u1 - c, u1 + c)."""
    c = sound_speed(gas, rho)
    return u1 - c, u1 + c


def solve_hugoniot(gas: GasParams, rho_minus: float, delta: float) -> ShockConnection:
    """Connect (rho_minus, 0) to the downstream state of strength delta.

    Parameters
    ----------
    gas : GasParams
    rho_minus : float
        Upstream density, must be positive.
    delta : float
        Density drop rho_minus - rho_plus, required to lie in (0, rho_minus).

    Returns
    -------
    ShockConnection
        With speed the root of the jump system that satisfies the
        compressive ordering lam2(plus) < s < lam2(minus).

    Raises
    ------
    InvalidStrength
        If delta is outside (0, rho_minus).
    NoAdmissibleRoot
        If neither sign of the speed satisfies the ordering (cannot occur
        for valid strengths; kept as a guard on the selection logic).
    """
    if not rho_minus > 0.0:
        raise ValueError(f"rho_minus must be positive, got {rho_minus}")
    if not 0.0 < delta < rho_minus:
        raise InvalidStrength(
            f"delta must lie in (0, rho_minus)=(0, {rho_minus}), got {delta}"
        )
    rho_plus = rho_minus - delta
    p_minus = pressure(gas, rho_minus)
    p_plus = pressure(gas, rho_plus)
    # mass jump gives m1_plus = s*(rho_plus - rho_minus); substituting into the
    # momentum jump leaves a single quadratic in s
    s_sq = rho_plus * (p_minus - p_plus) / (rho_minus * (rho_minus - rho_plus))
    s_mag = math.sqrt(s_sq)
    for speed in (s_mag, -s_mag):
        u1_plus = speed * (rho_plus - rho_minus) / rho_plus
        conn = ShockConnection(
            gas=gas,
            minus=ConstState(rho=rho_minus, u1=0.0),
            plus=ConstState(rho=rho_plus, u1=u1_plus),
            speed=speed,
            delta=delta,
        )
        if check_lax(conn).ok:
            return conn
    raise NoAdmissibleRoot(
        f"no compressive ordering for rho_minus={rho_minus}, delta={delta}"
    )


def rh_residuals(conn: ShockConnection) -> tuple[float, float]:
    """Evaluate both jump conditions; zero for an exact connection."""
    s = conn.speed
    rho_m, u_m = conn.minus.rho, conn.minus.u1
    rho_p, u_p = conn.plus.rho, conn.plus.u1
    m_m = rho_m * u_m
    m_p = rho_p * u_p
    r1 = -s * (rho_p - rho_m) + m_p - m_m
    r2 = (
        -s * (m_p - m_m)
        + m_p**2 / rho_p
        - m_m**2 / rho_m
        + pressure(conn.gas, rho_p)
        - pressure(conn.gas, rho_m)
    )
    return r1, r2


@dataclass(frozen=True)
class LaxReport:
    """Compressive-ordering margins for one connection.

    ``ok`` asserts only the incoming-family chain lam2(plus) < s < lam2(minus).
    The sign of s - lam1(minus) is recorded for inspection but not asserted:
    with the upstream at rest it is positive for every right-moving shock, so
    folding it into ``ok`` would reject all of them.
    """

    speed: float
    lam2_plus: float
    lam2_minus: float
    margin_plus: float
    margin_minus: float
    s_minus_lam1_minus: float
    ok: bool
    degenerate: bool


def check_lax(conn: ShockConnection, tol: float = 1e-12) -> LaxReport:
    """Check lam2(plus) < s < lam2(minus) with strict margins."""
    _, lam2_p = char_speeds(conn.gas, conn.plus.rho, conn.plus.u1)
    lam1_m, lam2_m = char_speeds(conn.gas, conn.minus.rho, conn.minus.u1)
    margin_plus = conn.speed - lam2_p
    margin_minus = lam2_m - conn.speed
    degenerate = abs(margin_plus) <= tol and abs(margin_minus) <= tol
    ok = margin_plus > tol and margin_minus > tol
    return LaxReport(
        speed=conn.speed,
        lam2_plus=lam2_p,
        lam2_minus=lam2_m,
        margin_plus=margin_plus,
        margin_minus=margin_minus,
        s_minus_lam1_minus=conn.speed - lam1_m,
        ok=ok,
        degenerate=degenerate,
    )
