"""Closed-form planar shock relations for the Chaplygin gas.

All shocks of a Chaplygin gas are characteristic: the downstream sonic
circle is tangent to the shock line.  Only the compressive branch
``0 < theta < gamma`` is exposed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class ConcentrationError(ValueError):
    """Deflection reaches the shock angle; downstream density would blow up."""

    def __init__(self, theta: float, gamma: float, message: str | None = None):
        self.theta = theta
        self.gamma = gamma
        super().__init__(message or f"concentration: deflection {theta!r} >= shock angle {gamma!r}")


@dataclass(frozen=True)
class PolarState:
    """Downstream state of a planar shock turning the flow by ``theta``."""

    u1: float
    v1: float
    c1: float
    gamma: float
    theta: float

    @property
    def speed(self) -> float:
        return math.hypot(self.u1, self.v1)


def shock_angle(u0: float, c0: float) -> float:
    """Shock angle ``arcsin(c0/u0)`` for supersonic normal-plane flow."""
    if not (c0 > 0 and u0 > c0):
        raise ValueError(f"need u0 > c0 > 0 for an attached shock, got u0={u0}, c0={c0}")
    return math.asin(c0 / u0)


def admissible(u0: float, c0: float, theta: float) -> bool:
    """True iff ``c0 < u0 < c0/sin(theta)`` with ``theta`` in ``(0, pi/2)``."""
    if not (0.0 < theta < 0.5 * math.pi) or not c0 > 0:
        return False
    return c0 < u0 < c0 / math.sin(theta)


def polar_state(u0: float, c0: float, theta: float) -> PolarState:
    """Downstream state of the shock deflecting ``(u0, 0)`` by ``theta``.

    Parameters
    ----------
    u0, c0 : float
        Upstream speed and sound speed in the polar plane.
    theta : float
        Deflection angle in radians.  ``theta == 0`` returns the upstream
        state as the exact limit.

    Returns
    -------
    PolarState

    Raises
    ------
    ConcentrationError
        If ``theta >= gamma``.
    ValueError
        If ``theta < 0`` or the upstream flow is not supersonic.
    """
    gamma = shock_angle(u0, c0)
    if theta < 0:
        raise ValueError(f"only compressive deflections are modeled, got theta={theta}")
    if theta == 0:
        return PolarState(u0, 0.0, c0, gamma, 0.0)
    if theta >= gamma:
        raise ConcentrationError(theta, gamma)
    s = math.sqrt((u0 - c0) * (u0 + c0))
    t = math.tan(theta)
    denom = s + c0 * t
    u1 = u0 * s / denom
    v1 = u1 * t
    c1 = (c0 - t * s) * s / denom
    return PolarState(u1, v1, c1, gamma, theta)
