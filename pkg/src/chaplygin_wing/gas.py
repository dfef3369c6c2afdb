"""Chaplygin gas thermodynamics under the unit Bernoulli normalization.

Every state in the package satisfies ``q**2 - c**2 = 1``.  The polar
constant ``a`` and reference density ``rho_star`` only scale density and
pressure outputs; they never enter the geometry or the potential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class GasConstants:
    """State-equation constants for ``p = a**2 * (1/rho_star - 1/rho)``."""

    a: float = 1.0
    rho_star: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"gas constant a must be positive, got {self.a}")
        if not (self.rho_star > 0 and math.isfinite(self.rho_star)):
            raise ValueError(f"rho_star must be positive, got {self.rho_star}")


@dataclass(frozen=True)
class FreeStream:
    """Normalized incoming flow.

    Only the speed and attack angle are supplied; the sound speed follows
    from ``q_inf**2 - c_inf**2 = 1`` and the density from ``rho * c = a``.

    Parameters
    ----------
    q_inf : float
        Freestream speed, strictly greater than 1.
    alpha : float
        Attack angle in radians, in ``(0, pi/2)``.
    gas : GasConstants, optional
    """

    q_inf: float
    alpha: float
    gas: GasConstants = field(default_factory=GasConstants)
    c_inf: float = field(init=False)
    rho_inf: float = field(init=False)
    v1_inf: float = field(init=False)
    v3_inf: float = field(init=False)

    def __post_init__(self):
        q, alpha = float(self.q_inf), float(self.alpha)
        if not (q > 1.0 and math.isfinite(q)):
            raise ValueError(f"q_inf must satisfy q_inf > 1, got {q}")
        if not (0.0 < alpha < 0.5 * math.pi):
            raise ValueError(f"alpha must lie in (0, pi/2), got {alpha}")
        c = sound_speed(q)
        object.__setattr__(self, "q_inf", q)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "c_inf", c)
        object.__setattr__(self, "rho_inf", self.gas.a / c)
        object.__setattr__(self, "v1_inf", q * math.sin(alpha))
        object.__setattr__(self, "v3_inf", q * math.cos(alpha))

    @property
    def velocity(self) -> tuple[float, float, float]:
        return (self.v1_inf, 0.0, self.v3_inf)


def normalize_freestream(q_inf: float, alpha: float, gas: GasConstants | None = None) -> FreeStream:
    """Build the normalized freestream for speed ``q_inf`` and attack angle ``alpha``."""
    return FreeStream(q_inf, alpha, gas if gas is not None else GasConstants())


def sound_speed(q: float) -> float:
    """Local sound speed ``sqrt(q**2 - 1)``; rejects ``q <= 1``."""
    if not q > 1.0:
        raise ValueError(f"speed must exceed 1 under the normalization, got {q}")
    # (q - 1)(q + 1) keeps precision for q close to 1
    return math.sqrt((q - 1.0) * (q + 1.0))


def density_from_speed(q: float, gas: GasConstants | None = None) -> float:
    """Density ``a / sqrt(q**2 - 1)`` of a normalized state with speed ``q``."""
    gas = gas if gas is not None else GasConstants()
    return gas.a / sound_speed(q)


def density_from_sound_speed(c, gas: GasConstants | None = None):
    """Density ``a / c``; accepts scalars or arrays."""
    gas = gas if gas is not None else GasConstants()
    return gas.a / c


def pressure(rho: float, gas: GasConstants | None = None) -> float:
    """Chaplygin pressure ``a**2 (1/rho_star - 1/rho)``.  May be negative."""
    gas = gas if gas is not None else GasConstants()
    if not rho > 0:
        raise ValueError(f"density must be positive, got {rho}")
    return gas.a**2 * (1.0 / gas.rho_star - 1.0 / rho)
