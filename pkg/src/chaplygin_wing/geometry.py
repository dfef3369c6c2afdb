"""Uniform states, Mach cones, shock lines and regimes outside the elliptic region.

Points live in the conical plane ``xi = (x1/x3, x2/x3)``.  A uniform flow
with velocity ``v`` has the linear potential ``l(xi) = v1*xi1 + v2*xi2 + v3``
and its Mach cone is the curve ``l(xi)**2 = 1 + |xi|**2``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .gas import FreeStream
from .shock_polar import ConcentrationError, admissible, polar_state, shock_angle

ANGLE_TOL = 1e-12
GEOM_TOL = 1e-9
BETA0_GUARD = 1e-3


class GeometryError(ValueError):
    """A construction failed (missing root, non-tangent line, inconsistent states)."""


class Regime(str, enum.Enum):
    DELTA_WING = "DeltaWing"
    SUBCRITICAL = "Subcritical"
    PLANAR_SHOCK = "PlanarShock"
    REFLECTED = "Reflected"
    BEYOND_SCOPE = "BeyondScope"
    SHOCK_DETACHED = "ShockDetached"
    CONCENTRATION = "Concentration"


INTERIOR_REGIMES = (Regime.DELTA_WING, Regime.SUBCRITICAL, Regime.PLANAR_SHOCK, Regime.REFLECTED)


@dataclass(frozen=True)
class WingAngles:
    """Sweep ``sigma`` in ``(0, pi/2)`` and anhedral ``beta`` in ``[0, pi/2)``, radians."""

    sigma: float
    beta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.sigma < 0.5 * math.pi):
            raise ValueError(f"sigma must lie in (0, pi/2), got {self.sigma}")
        if not (0.0 <= self.beta < 0.5 * math.pi):
            raise ValueError(f"beta must lie in [0, pi/2), got {self.beta}")


@dataclass(frozen=True)
class DownstreamUniform:
    """Uniform state behind the attached oblique shock."""

    v1: float
    v2: float
    v3: float
    c: float
    q_j: float
    q_tilde: float
    theta_n: float

    @property
    def velocity(self) -> tuple[float, float, float]:
        return (self.v1, self.v2, self.v3)


@dataclass(frozen=True)
class ResultingUniform:
    """Uniform state behind the reflected shock; ``v2R`` vanishes by symmetry."""

    v1R: float
    v3R: float
    cR: float
    q_tilde_sigma: float
    theta_n_prime: float
    q_jR: float

    @property
    def velocity(self) -> tuple[float, float, float]:
        return (self.v1R, 0.0, self.v3R)


@dataclass(frozen=True)
class ConicCurve:
    """Mach-cone curve ``(p1*xi1 + p2*xi2 + p0)**2 = 1 + |xi|**2``."""

    p1: float
    p2: float
    p0: float

    def form(self, xi1, xi2):
        return self.p1 * xi1 + self.p2 * xi2 + self.p0

    def residual(self, xi1, xi2):
        """``l**2 - (1 + |xi|**2)``; zero on the curve, positive inside."""
        return self.form(xi1, xi2) ** 2 - (1.0 + xi1 * xi1 + xi2 * xi2)

    def ray_radius(self, theta):
        """Distance from O to the curve along polar angle ``theta``, with derivatives.

        Solves ``(p0 + R k)**2 = 1 + R**2`` with ``k = p . (cos, sin)`` in the
        cancellation-free form ``R = (p0**2 - 1) / (D - p0 k)``,
        ``D = sqrt(p0**2 + k**2 - 1)``: the far root with ``l > 0``, finite
        when the quadratic degenerates (``k**2 = 1``).  If O lies inside the
        cone (``p0 > 1``) it is the only positive root.

        Returns
        -------
        R, dR, d2R : ndarray or float
            Radius and its first two derivatives in ``theta``.
        """
        ct, st = np.cos(theta), np.sin(theta)
        k = self.p1 * ct + self.p2 * st
        dk = -self.p1 * st + self.p2 * ct
        d2k = -k
        num = self.p0**2 - 1.0
        disc = num + k * k
        if np.any(disc < -GEOM_TOL):
            raise GeometryError("ray does not meet the cone")
        # a discriminant at round-off level is a double root (tangent ray)
        D = np.sqrt(np.where(disc < 64 * np.finfo(float).eps * (self.p0**2 + k * k), 0.0, disc))
        with np.errstate(divide="ignore", invalid="ignore"):
            dD = k * dk / D
            d2D = (dk * dk + k * d2k) / D - (k * dk) ** 2 / D**3
        Q = D - self.p0 * k
        dQ = dD - self.p0 * dk
        d2Q = d2D - self.p0 * d2k
        with np.errstate(divide="ignore", invalid="ignore"):
            R = num / Q
            dR = -num * dQ / Q**2
            d2R = -num * (d2Q * Q - 2.0 * dQ * dQ) / Q**3
        if not (np.all(np.isfinite(R)) and np.all(R > 0) and np.all(self.p0 + k * R > 0)):
            raise GeometryError("ray does not meet the cone where the potential is positive")
        return R, dR, d2R

    def ray_point(self, direction) -> tuple[float, float]:
        d1, d2 = direction
        theta = math.atan2(d2, d1)
        r = float(self.ray_radius(theta)[0])
        return (r * math.cos(theta), r * math.sin(theta))


@dataclass(frozen=True)
class ShockLine:
    """Trace ``n1*xi1 + n2*xi2 + d = 0`` of a planar shock through the apex.

    The 3D shock plane has unit normal ``normal``; ``upstream`` and
    ``downstream`` are the velocities on either side and ``c_up``/``c_down``
    their sound speeds.
    """

    n1: float
    n2: float
    d: float
    normal: tuple[float, float, float]
    upstream: tuple[float, float, float]
    downstream: tuple[float, float, float]
    c_up: float
    c_down: float

    def value(self, xi1, xi2):
        return self.n1 * xi1 + self.n2 * xi2 + self.d


@dataclass(frozen=True)
class RegimeReport:
    """Everything known in closed form for one parameter tuple."""

    q_inf: float
    alpha: float
    sigma: float
    beta: float
    regime: Regime
    alpha0: float
    sigma0: float | None = None
    beta_c: float | None = None
    beta0: float | None = None
    points: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    shocks: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def conv(obj):
            if isinstance(obj, enum.Enum):
                return obj.value
            if hasattr(obj, "__dataclass_fields__"):
                return {k: conv(getattr(obj, k)) for k in obj.__dataclass_fields__}
            if isinstance(obj, dict):
                return {k: conv(v) for k, v in obj.items()}
            if isinstance(obj, (list, tuple)):
                return [conv(v) for v in obj]
            if isinstance(obj, (np.floating, np.integer)):
                return obj.item()
            return obj

        return conv(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RegimeReport":
        def tup(v):
            return tuple(float(x) for x in v)

        shocks = {}
        for name, s in data.get("shocks", {}).items():
            shocks[name] = ShockLine(
                s["n1"], s["n2"], s["d"], tup(s["normal"]), tup(s["upstream"]),
                tup(s["downstream"]), s["c_up"], s["c_down"])
        states = {}
        for name, s in data.get("states", {}).items():
            states[name] = (ResultingUniform(**s) if "v1R" in s else DownstreamUniform(**s))
        return cls(
            q_inf=data["q_inf"], alpha=data["alpha"], sigma=data["sigma"], beta=data["beta"],
            regime=Regime(data["regime"]), alpha0=data["alpha0"], sigma0=data.get("sigma0"),
            beta_c=data.get("beta_c"), beta0=data.get("beta0"),
            points={k: tup(v) for k, v in data.get("points", {}).items()},
            curves={k: ConicCurve(**v) for k, v in data.get("curves", {}).items()},
            shocks=shocks, states=states, diagnostics=data.get("diagnostics", {}),
        )


def wing_basis(angles: WingAngles) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal frame attached to the right wing plane.

    ``e_i`` is normal to the wing, ``e_j`` runs along the leading edge and
    ``e_k = e_i x e_j``.
    """
    sb, cb = math.sin(angles.beta), math.cos(angles.beta)
    ss, cs = math.sin(angles.sigma), math.cos(angles.sigma)
    e_i = np.array([cb, sb, 0.0])
    e_j = np.array([-cs * sb, cs * cb, ss])
    e_k = np.array([ss * sb, -ss * cb, cs])
    return e_i, e_j, e_k


def critical_alpha(fs: FreeStream) -> float:
    """Largest attack angle free of concentration, ``arcsin(c_inf/q_inf)``."""
    return math.asin(fs.c_inf / fs.q_inf)


def critical_sigma(fs: FreeStream) -> float:
    """Largest sweep angle with the shock attached, ``arcsin(1/(q_inf cos alpha))``."""
    if fs.alpha >= critical_alpha(fs) - ANGLE_TOL:
        raise GeometryError("alpha >= alpha0: no attached-edge sweep exists")
    arg = 1.0 / fs.v3_inf
    if arg >= 1.0:
        raise GeometryError(f"arcsin argument {arg} >= 1")
    return math.asin(arg)


def _normal_plane(fs: FreeStream, angles: WingAngles):
    e_i, e_j, e_k = wing_basis(angles)
    v = np.array(fs.velocity)
    return float(v @ e_i), float(v @ e_j), float(v @ e_k), (e_i, e_j, e_k)


def concentration_check(fs: FreeStream, angles: WingAngles) -> bool:
    """True iff ``c_inf < q_tilde < c_inf/sin(theta_n)`` in the wing normal plane."""
    along_i, _, along_k, _ = _normal_plane(fs, angles)
    q_tilde = math.hypot(along_i, along_k)
    theta_n = math.atan2(along_i, along_k)
    return admissible(q_tilde, fs.c_inf, theta_n)


def downstream_state(fs: FreeStream, angles: WingAngles) -> DownstreamUniform:
    """Uniform state behind the attached shock on the right wing.

    The normal-plane component of the freestream is turned parallel to the
    wing by the planar shock polar; the component along the leading edge is
    unchanged.  The downstream normal-plane speed is the full polar speed.

    Raises
    ------
    ConcentrationError
        If the normal-plane deflection reaches the shock angle.
    """
    along_i, along_j, along_k, (_, e_j, e_k) = _normal_plane(fs, angles)
    q_tilde = math.hypot(along_i, along_k)
    theta_n = math.atan2(along_i, along_k)
    if not admissible(q_tilde, fs.c_inf, theta_n):
        raise ConcentrationError(theta_n, shock_angle(q_tilde, fs.c_inf) if q_tilde > fs.c_inf else 0.0,
                                 "attached shock concentrates (regime Concentration)")
    ps = polar_state(q_tilde, fs.c_inf, theta_n)
    q_j = ps.speed
    v = along_j * e_j + q_j * e_k
    return DownstreamUniform(float(v[0]), float(v[1]), float(v[2]), ps.c1, q_j, q_tilde, theta_n)


def mach_cone_inf(fs: FreeStream) -> ConicCurve:
    return ConicCurve(fs.v1_inf, 0.0, fs.v3_inf)


def mach_cone_downstream(state) -> ConicCurve:
    """Mach cone of any uniform state exposing ``velocity``."""
    v1, v2, v3 = state.velocity
    return ConicCurve(v1, v2, v3)


def shock_between(up, c_up: float, down, c_down: float) -> ShockLine:
    """Shock separating two uniform states; the trace is where their potentials agree."""
    up = np.asarray(up, dtype=float)
    down = np.asarray(down, dtype=float)
    jump = down - up
    norm = float(np.linalg.norm(jump))
    if np.max(np.abs(jump)) < 1e-14:
        raise GeometryError("degenerate shock: no velocity jump")
    return ShockLine(float(jump[0]), float(jump[1]), float(jump[2]),
                     tuple(float(x) for x in jump / norm),
                     tuple(float(x) for x in up), tuple(float(x) for x in down),
                     float(c_up), float(c_down))


def shock_line_ob(fs: FreeStream, state: DownstreamUniform) -> ShockLine:
    """Attached oblique shock between the freestream and ``state``."""
    return shock_between(fs.velocity, fs.c_inf, state.velocity, state.c)


def _solve_quadratic(A: float, B: float, C: float) -> list[float]:
    """Real roots of ``A t**2 + B t + C``, linear branch when ``A`` vanishes."""
    scale = max(abs(A), abs(B), abs(C), 1e-300)
    if abs(A) <= 1e-14 * scale:
        if abs(B) <= 1e-14 * scale:
            return []
        return [-C / B]
    disc = B * B - 4.0 * A * C
    if disc < 0:
        return []
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    roots = [q / A]
    if q != 0:
        roots.append(C / q)
    return sorted(roots)


def tangency_point(line: ShockLine, conic: ConicCurve) -> tuple[tuple[float, float], float]:
    """Double root of the conic restricted to the line.

    Returns
    -------
    point : tuple of float
    residual : float
        Discriminant relative to ``A**2 + B**2 + C**2``.

    Raises
    ------
    GeometryError
        If the relative discriminant exceeds ``1e-9``.
    """
    nn = math.hypot(line.n1, line.n2)
    if nn == 0:
        raise GeometryError("shock line has no in-plane normal")
    x0 = np.array([-line.d * line.n1, -line.d * line.n2]) / nn**2
    tau = np.array([-line.n2, line.n1]) / nn
    p = np.array([conic.p1, conic.p2])
    lt = float(p @ tau)
    l0 = float(p @ x0) + conic.p0
    A = lt * lt - 1.0
    B = 2.0 * (l0 * lt - float(x0 @ tau))
    C = l0 * l0 - 1.0 - float(x0 @ x0)
    disc = B * B - 4.0 * A * C
    residual = abs(disc) / max(A * A + B * B + C * C, 1e-300)
    if residual > GEOM_TOL:
        raise GeometryError(f"line is not tangent to the cone (relative discriminant {residual:.3e})")
    t = -B / (2.0 * A)
    pt = x0 + t * tau
    return (float(pt[0]), float(pt[1])), residual


def _wing_direction(beta: float) -> tuple[float, float]:
    return (-math.sin(beta), math.cos(beta))


def _line_ray(line: ShockLine, direction) -> float:
    denom = line.n1 * direction[0] + line.n2 * direction[1]
    if abs(denom) < 1e-300:
        raise GeometryError("shock line parallel to ray")
    return -line.d / denom


def key_points(fs: FreeStream, angles: WingAngles, state: DownstreamUniform) -> dict:
    """P0, P2, P4, P5, P6 of the attached-shock pattern.

    P2 and P6 sit on the negative xi1-axis; P0, P4, P5 on the wing ray.
    """
    c_inf = mach_cone_inf(fs)
    c_sig = mach_cone_downstream(state)
    s_ob = shock_line_ob(fs, state)
    wing = _wing_direction(angles.beta)
    pts = {}
    pts["P2"] = c_inf.ray_point((-1.0, 0.0))
    pts["P0"] = c_inf.ray_point(wing)
    pts["P4"] = c_sig.ray_point(wing)
    r5 = _line_ray(s_ob, wing)
    if r5 <= 0:
        raise GeometryError("oblique shock does not cross the wing ray")
    pts["P5"] = (r5 * wing[0], r5 * wing[1])
    if abs(s_ob.n1) > 1e-300:
        pts["P6"] = (-s_ob.d / s_ob.n1, 0.0)
    return pts


def critical_beta_c(fs: FreeStream, sigma: float) -> float:
    """Anhedral at which the attached shock is planar, ``arcsin(-xi1_P2 tan sigma)``."""
    xi1_p2 = mach_cone_inf(fs).ray_point((-1.0, 0.0))[0]
    arg = -xi1_p2 * math.tan(sigma)
    if not 0.0 <= arg <= 1.0:
        raise GeometryError(f"beta_c arcsin argument {arg} outside [0, 1]")
    return math.asin(arg)


def resulting_shock_state(fs: FreeStream, state: DownstreamUniform):
    """Reflected shock from the symmetry plane for ``beta > beta_c``.

    The two attached shocks meet along the line ``L_R`` through O and
    ``(xi1_P6, 0, 1)``.  Relative to the orthonormal frame
    ``t = (-k, 0, 1)/|.|`` (along ``L_R``), ``e2`` and ``n = (1, 0, k)/|.|``
    with ``k = -xi1_P6``, the component along ``t`` is kept and the
    ``(e2, n)`` component is turned onto ``n`` by the shock polar.

    Returns
    -------
    ResultingUniform, ShockLine, ConicCurve
    """
    s_ob = shock_line_ob(fs, state)
    if abs(s_ob.n1) < 1e-300:
        raise GeometryError("attached shocks do not meet on the symmetry axis")
    k = s_ob.d / s_ob.n1  # -xi1 of P6
    if not k > 0:
        raise GeometryError("attached shocks do not meet on the negative xi1-axis")
    norm = math.hypot(1.0, k)
    t_dir = np.array([-k, 0.0, 1.0]) / norm
    n_dir = np.array([1.0, 0.0, k]) / norm
    v = np.array(state.velocity)
    along = float(v @ t_dir)
    normal = float(v @ n_dir)
    q_tilde = math.hypot(state.v2, normal)
    theta = math.atan2(-state.v2, normal)
    if not admissible(q_tilde, state.c, theta):
        gamma = shock_angle(q_tilde, state.c) if q_tilde > state.c else 0.0
        raise ConcentrationError(theta, gamma, "reflected shock concentrates (regime BeyondScope)")
    ps = polar_state(q_tilde, state.c, theta)
    q_jr = ps.speed
    vr = along * t_dir + q_jr * n_dir
    res = ResultingUniform(float(vr[0]), float(vr[2]), ps.c1, q_tilde, theta, q_jr)
    s_r = shock_between(state.velocity, state.c, res.velocity, res.cR)
    return res, s_r, mach_cone_downstream(res)


def _beta0_ratio(fs: FreeStream, sigma: float, beta: float) -> float:
    state = downstream_state(fs, WingAngles(sigma, beta))
    s_ob = shock_line_ob(fs, state)
    r4 = math.hypot(*mach_cone_downstream(state).ray_point(_wing_direction(beta)))
    r6 = abs(s_ob.d / s_ob.n1)
    return r4 / r6


def beta0_residual(fs: FreeStream, sigma: float, beta: float) -> float:
    """``beta - arcsin(min(1, |OP4|/|OP6|))``; the reflected pattern fits while negative."""
    return beta - math.asin(min(1.0, _beta0_ratio(fs, sigma, beta)))


@lru_cache(maxsize=256)
def _beta0_search(q_inf: float, alpha: float, sigma: float, step: float):
    fs = FreeStream(q_inf, alpha)
    lo = critical_beta_c(fs, sigma)
    hi = 0.5 * math.pi - BETA0_GUARD
    n = max(2, int(math.ceil((hi - lo) / step)))
    betas = np.linspace(lo, hi, n + 1)[1:]
    trace = []
    for b in betas:
        try:
            trace.append(beta0_residual(fs, sigma, float(b)))
        except (GeometryError, ConcentrationError):
            trace.append(float("nan"))
    trace = np.array(trace)
    roots = []
    for i in range(len(betas) - 1):
        g0, g1 = trace[i], trace[i + 1]
        if not (np.isfinite(g0) and np.isfinite(g1)):
            continue
        if g0 == 0.0:
            roots.append(float(betas[i]))
        elif g0 * g1 < 0:
            a, b = float(betas[i]), float(betas[i + 1])
            ga = g0
            while b - a > 1e-10:
                m = 0.5 * (a + b)
                gm = beta0_residual(fs, sigma, m)
                if gm == 0.0:
                    a = b = m
                    break
                if (gm < 0) == (ga < 0):
                    a, ga = m, gm
                else:
                    b = m
            roots.append(0.5 * (a + b))
    return tuple(roots), betas, trace


def critical_beta_0(fs: FreeStream, sigma: float, step: float = 1e-3):
    """Smallest root of ``beta0_residual`` on ``(beta_c, pi/2 - 1e-3)``.

    Scans with ``step`` for sign changes and bisects each bracket to 1e-10.

    Returns
    -------
    beta0 : float or None
        ``None`` when no sign change was located.
    roots : tuple of float
        Every located root, ascending.
    trace : tuple of ndarray
        The scanned ``(beta, g(beta))`` samples.
    """
    roots, betas, g = _beta0_search(fs.q_inf, fs.alpha, float(sigma), float(step))
    return (min(roots) if roots else None), roots, (betas, g)


def classify_regime(fs: FreeStream, angles: WingAngles) -> RegimeReport:
    """Classify the flow pattern and collect every closed-form ingredient.

    Never raises for admissible inputs; failures become regime labels with
    a note in ``diagnostics``.
    """
    base = dict(q_inf=fs.q_inf, alpha=fs.alpha, sigma=angles.sigma, beta=angles.beta)
    alpha0 = critical_alpha(fs)
    if fs.alpha >= alpha0 - ANGLE_TOL:
        return RegimeReport(regime=Regime.CONCENTRATION, alpha0=alpha0,
                            diagnostics={"note": "alpha >= alpha0"}, **base)
    sigma0 = critical_sigma(fs)
    if angles.sigma > sigma0 + ANGLE_TOL:
        return RegimeReport(regime=Regime.SHOCK_DETACHED, alpha0=alpha0, sigma0=sigma0,
                            diagnostics={"note": "sigma > sigma0"}, **base)
    beta_c = critical_beta_c(fs, angles.sigma)
    beta0, roots, _ = critical_beta_0(fs, angles.sigma)
    diag = {"beta0_roots": list(roots)}
    if beta0 is None:
        diag["note"] = "no beta0 located on (beta_c, pi/2 - 1e-3)"
    crit = dict(alpha0=alpha0, sigma0=sigma0, beta_c=beta_c, beta0=beta0)
    try:
        state = downstream_state(fs, angles)
    except ConcentrationError as exc:
        diag["note"] = str(exc)
        return RegimeReport(regime=Regime.CONCENTRATION, diagnostics=diag, **crit, **base)

    c_inf = mach_cone_inf(fs)
    c_sig = mach_cone_downstream(state)
    s_ob = shock_line_ob(fs, state)
    if not c_sig.p0 > 1.0 + GEOM_TOL:
        # the apex direction is supersonic behind the shock: no elliptic region with corner O
        diag["note"] = f"apex outside the downstream Mach cone (v3 = {state.v3!r} <= 1)"
        return RegimeReport(regime=Regime.BEYOND_SCOPE, curves={"C_inf": c_inf, "C_sigma": c_sig},
                            shocks={"S_ob": s_ob}, states={"downstream": state}, diagnostics=diag,
                            **crit, **base)
    points = key_points(fs, angles, state)
    p1, res1 = tangency_point(s_ob, c_inf)
    points["P1"] = p1
    diag["tangency_residual_P1"] = res1
    curves = {"C_inf": c_inf, "C_sigma": c_sig}
    shocks = {"S_ob": s_ob}
    states = {"downstream": state}

    beta = angles.beta
    if beta <= ANGLE_TOL:
        regime = Regime.DELTA_WING
    elif abs(beta - beta_c) <= ANGLE_TOL:
        regime = Regime.PLANAR_SHOCK
    elif beta < beta_c:
        regime = Regime.SUBCRITICAL
    elif beta0 is None or beta > beta0 + ANGLE_TOL:
        regime = Regime.BEYOND_SCOPE
    else:
        regime = Regime.REFLECTED
        try:
            res, s_r, c_sig_r = resulting_shock_state(fs, state)
            pr, res_r = tangency_point(s_r, c_sig)
            points["PR"] = pr
            points["P7"] = c_sig_r.ray_point((-1.0, 0.0))
            diag["tangency_residual_PR"] = res_r
            curves["C_sigma_prime"] = c_sig_r
            shocks["S_R"] = s_r
            states["resulting"] = res
        except (GeometryError, ConcentrationError) as exc:
            regime = Regime.BEYOND_SCOPE
            diag["note"] = f"reflected construction failed: {exc}"

    return RegimeReport(regime=regime, points=points, curves=curves, shocks=shocks,
                        states=states, diagnostics=diag, **crit, **base)
