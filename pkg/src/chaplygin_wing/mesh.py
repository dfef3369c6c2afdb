"""Elliptic domain and its boundary-fitted fan grid.

The domain is a curved triangle with corner O at the origin, a straight
symmetry side on the negative xi1-axis, a straight wing side along
``(-sin beta, cos beta)`` and an outer sonic boundary made of Mach-cone
arcs.  Nodes are placed on rays from O:

    xi(s, tau) = t(tau) * R(theta(s)) * (cos theta, sin theta),
    theta(s) = pi - (pi/2 - beta) * (s + a * sin(pi s) / pi),

so ``s = 0`` is the symmetry side, ``s = 1`` the wing and ``t = 1`` the
outer arcs.  The outer boundary is only C1 where two arcs meet; the small
warp ``a`` puts that junction exactly on a grid line so no difference
stencil straddles the curvature jump.  The warp is odd about both ends, so
reflections across the straight sides map grid lines onto grid lines.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geometry import ConicCurve, Regime, RegimeReport

INTERIOR, SYM, WING, DEGENERATE, CORNER = 0, 1, 2, 3, 4
TAG_NAMES = {INTERIOR: "Interior", SYM: "Sym", WING: "Wing", DEGENERATE: "Degenerate", CORNER: "CornerO"}


class MeshError(ValueError):
    """Domain or grid construction failed."""


@dataclass(frozen=True)
class OuterArc:
    """Part of the sonic boundary on a single cone, for polar angles in ``[theta_lo, theta_hi]``."""

    name: str
    conic: ConicCurve
    theta_lo: float
    theta_hi: float


@dataclass(frozen=True)
class DomainSpec:
    """Star-shaped elliptic region described by its outer radius as a function of polar angle."""

    regime: Regime
    beta: float
    wing_direction: tuple[float, float]
    wing_extent: float
    sym_extent: float
    arcs: tuple[OuterArc, ...]
    corner_points: dict

    @property
    def theta_wing(self) -> float:
        return 0.5 * math.pi + self.beta

    @property
    def wing_normal(self) -> tuple[float, float]:
        return (math.cos(self.beta), math.sin(self.beta))

    def radius(self, theta):
        """Outer radius ``R`` and its first two polar-angle derivatives."""
        theta = np.asarray(theta, dtype=float)
        R = np.empty_like(theta)
        dR = np.empty_like(theta)
        d2R = np.empty_like(theta)
        assigned = np.zeros(theta.shape, dtype=bool)
        # arcs are ordered from the symmetry side towards the wing
        for arc in self.arcs:
            sel = (theta >= arc.theta_lo - 1e-14) & (theta <= arc.theta_hi + 1e-14) & ~assigned
            if np.any(sel):
                r, dr, d2r = arc.conic.ray_radius(theta[sel])
                R[sel], dR[sel], d2R[sel] = r, dr, d2r
                assigned |= sel
        if not np.all(assigned):
            raise MeshError("polar angle outside the domain sector")
        return R, dR, d2R

    def outer_conic(self, theta: float) -> ConicCurve:
        for arc in self.arcs:
            if arc.theta_lo - 1e-14 <= theta <= arc.theta_hi + 1e-14:
                return arc.conic
        raise MeshError(f"polar angle {theta} outside the domain sector")


def _angle(p) -> float:
    return math.atan2(p[1], p[0])


def _tangent(conic: ConicCurve, theta: float) -> np.ndarray:
    R, dR, _ = conic.ray_radius(theta)
    e = np.array([math.cos(theta), math.sin(theta)])
    e_t = np.array([-math.sin(theta), math.cos(theta)])
    t = float(dR) * e + float(R) * e_t
    return t / np.linalg.norm(t)


def build_domain(report: RegimeReport, n_check: int = 4001) -> DomainSpec:
    """Elliptic domain for an interior regime.

    Raises
    ------
    MeshError
        For regimes without an elliptic region, or when the star-shape
        certificate (finite, continuous, C1 radius) fails; the message names
        the offending polar angle.
    """
    regime = report.regime
    beta = report.beta
    pts = report.points
    c_inf = report.curves.get("C_inf")
    c_sig = report.curves.get("C_sigma")
    th_wing = 0.5 * math.pi + beta
    if regime in (Regime.DELTA_WING, Regime.SUBCRITICAL):
        th_join = _angle(pts["P1"])
        arcs = (OuterArc("C_inf", c_inf, th_join, math.pi), OuterArc("C_sigma", c_sig, th_wing, th_join))
        corners = {"P2": pts["P2"], "P1": pts["P1"], "P4": pts["P4"]}
        sym_end = pts["P2"]
    elif regime == Regime.PLANAR_SHOCK:
        arcs = (OuterArc("C_sigma", c_sig, th_wing, math.pi),)
        corners = {"P2": pts["P2"], "P1": pts["P2"], "P4": pts["P4"]}
        sym_end = pts["P2"]
    elif regime == Regime.REFLECTED:
        th_join = _angle(pts["PR"])
        arcs = (OuterArc("C_sigma_prime", report.curves["C_sigma_prime"], th_join, math.pi),
                OuterArc("C_sigma", c_sig, th_wing, th_join))
        corners = {"P7": pts["P7"], "PR": pts["PR"], "P4": pts["P4"]}
        sym_end = pts["P7"]
    else:
        raise MeshError(f"regime {regime.value} has no elliptic interior problem")
    for arc in arcs:
        if not arc.theta_lo < arc.theta_hi:
            raise MeshError(f"arc {arc.name} has an empty angular range")

    spec = DomainSpec(regime, beta, (-math.sin(beta), math.cos(beta)), math.hypot(*pts["P4"]),
                      math.hypot(*sym_end), arcs, corners)

    # star-shape certificate
    theta = np.linspace(th_wing, math.pi, n_check)
    try:
        R, dR, _ = spec.radius(theta)
    except Exception as exc:
        raise MeshError(f"outer boundary not star-shaped about O: {exc}") from exc
    bad = ~np.isfinite(R) | (R <= 0) | ~np.isfinite(dR)
    if np.any(bad):
        raise MeshError(f"star-shape violation at polar angle {theta[np.argmax(bad)]:.12g}")
    if len(arcs) == 2:
        th = arcs[0].theta_lo
        r_a = float(arcs[0].conic.ray_radius(th)[0])
        r_b = float(arcs[1].conic.ray_radius(th)[0])
        if abs(r_a - r_b) > 1e-9 * max(r_a, 1.0):
            raise MeshError(f"outer arcs do not meet at polar angle {th:.12g}")
        cosang = float(np.clip(_tangent(arcs[0].conic, th) @ _tangent(arcs[1].conic, th), -1, 1))
        if math.acos(cosang) > 1e-6:
            raise MeshError(f"outer boundary not C1 at polar angle {th:.12g}")
    return spec


def tangent_mismatch(spec: DomainSpec) -> float:
    """Angle between the two arc tangents at their junction (0 for one arc)."""
    if len(spec.arcs) < 2:
        return 0.0
    th = spec.arcs[0].theta_lo
    cosang = float(np.clip(_tangent(spec.arcs[0].conic, th) @ _tangent(spec.arcs[1].conic, th), -1, 1))
    return math.acos(cosang)


def radial_map(tau, n_cells: int, stretch: float):
    """Geometric radial distribution ``t(tau)`` with derivatives.

    Successive cells shrink by ``1/stretch``; ``stretch = 1`` is uniform.
    """
    tau = np.asarray(tau, dtype=float)
    if stretch == 1.0:
        return tau.copy(), np.ones_like(tau), np.zeros_like(tau)
    lq = -math.log(stretch) * n_cells
    denom = -math.expm1(lq)
    t = -np.expm1(lq * tau) / denom
    dt = -lq * np.exp(lq * tau) / denom
    d2t = lq * dt
    return t, dt, d2t


@dataclass(frozen=True)
class Grid:
    """Fan grid on ``(Ns, Nt)`` nodes; arrays are indexed ``[i, j]`` with ``i`` angular.

    The row ``j = 0`` collapses onto O.  Flat node index is ``i * Nt + j``.
    """

    domain: DomainSpec
    Ns: int
    Nt: int
    stretch: float
    s: np.ndarray
    tau: np.ndarray
    t: np.ndarray
    dt: np.ndarray
    d2t: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray
    d2theta: np.ndarray
    junction: int | None
    R: np.ndarray
    dR: np.ndarray
    d2R: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    tags: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Ns, self.Nt)

    @property
    def size(self) -> int:
        return self.Ns * self.Nt

    @property
    def ds(self) -> float:
        return 1.0 / (self.Ns - 1)

    @property
    def dtau(self) -> float:
        return 1.0 / (self.Nt - 1)

    @property
    def S(self) -> np.ndarray:
        return np.sqrt(1.0 + self.xi1**2 + self.xi2**2)

    def tag_names(self) -> np.ndarray:
        return np.vectorize(TAG_NAMES.get)(self.tags)

    def outer_residual(self) -> float:
        """Largest ``|l**2 - (1 + |xi|**2)|`` over the ``t = 1`` nodes."""
        worst = 0.0
        for i in range(self.Ns):
            conic = self.domain.outer_conic(float(self.theta[i]))
            worst = max(worst, abs(float(conic.residual(self.xi1[i, -1], self.xi2[i, -1]))))
        return worst

    def map_jacobian(self) -> np.ndarray:
        """``det d(xi1, xi2)/d(s, tau)`` at every node."""
        return (self.t[None, :] * self.dt[None, :]) * (-self.dtheta * self.R**2)[:, None]


def angular_map(s, spec: DomainSpec, Ns: int, align: bool = True):
    """Polar angle ``theta(s)`` with derivatives and the junction node index.

    The junction is aligned with the nearest interior grid line when the
    required warp amplitude stays below 0.5; otherwise the map is linear.
    """
    A = 0.5 * math.pi - spec.beta
    a, junction = 0.0, None
    if align and len(spec.arcs) > 1:
        target = (math.pi - spec.arcs[0].theta_lo) / A
        i_j = int(round(target * (Ns - 1)))
        if 1 <= i_j <= Ns - 2:
            s_j = i_j / (Ns - 1)
            amp = math.pi * (target - s_j) / math.sin(math.pi * s_j)
            if abs(amp) <= 0.5:
                a, junction = amp, i_j
    sigma = s + a * np.sin(math.pi * s) / math.pi
    dsigma = 1.0 + a * np.cos(math.pi * s)
    d2sigma = -a * math.pi * np.sin(math.pi * s)
    theta = math.pi - A * sigma
    if junction is not None:
        theta[junction] = spec.arcs[0].theta_lo
    theta[0] = math.pi
    theta[-1] = spec.theta_wing
    return theta, -A * dsigma, -A * d2sigma, junction


def generate_grid(spec: DomainSpec, Ns: int = 65, Nt: int = 65, stretch: float = 1.05,
                  align_junction: bool = True) -> Grid:
    """Polar fan grid refined geometrically toward the sonic boundary.

    Parameters
    ----------
    spec : DomainSpec
    Ns, Nt : int
        Angular and radial node counts, both at least 9.
    stretch : float
        Ratio between consecutive radial cells (>= 1).
    align_junction : bool
        Warp the angular coordinate so the arc junction is a grid line.

    Raises
    ------
    MeshError
        On invalid sizes or a non-positive map Jacobian at an interior node.
    """
    if Ns < 9 or Nt < 9:
        raise MeshError(f"need Ns, Nt >= 9, got ({Ns}, {Nt})")
    if not stretch >= 1.0:
        raise MeshError(f"stretch must be >= 1, got {stretch}")
    s = np.linspace(0.0, 1.0, Ns)
    tau = np.linspace(0.0, 1.0, Nt)
    t, dt, d2t = radial_map(tau, Nt - 1, stretch)
    t[-1] = 1.0
    theta, dtheta, d2theta, junction = angular_map(s, spec, Ns, align_junction)
    R, dR, d2R = spec.radius(theta)
    if junction is not None:
        # mean of the one-sided curvatures, matching what a central difference sees
        th = theta[junction]
        d2R[junction] = 0.5 * (spec.arcs[0].conic.ray_radius(th)[2] + spec.arcs[1].conic.ray_radius(th)[2])
    xi1 = t[None, :] * (R * np.cos(theta))[:, None]
    xi2 = t[None, :] * (R * np.sin(theta))[:, None]
    xi2[0, :] = 0.0  # symmetry side exactly on the axis
    tags = np.full((Ns, Nt), INTERIOR, dtype=np.int8)
    tags[0, :] = SYM
    tags[-1, :] = WING
    tags[:, 0] = CORNER
    tags[:, -1] = DEGENERATE
    grid = Grid(spec, Ns, Nt, float(stretch), s, tau, t, dt, d2t, theta, dtheta, d2theta, junction,
                R, dR, d2R, xi1, xi2, tags)
    jac = grid.map_jacobian()
    bad = (jac <= 0) & (tags != CORNER)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise MeshError(f"non-positive map Jacobian at node ({i}, {j})")
    return grid


def write_grid_csv(grid: Grid, path) -> None:
    """Dump nodes as ``i,j,xi1,xi2,tag``."""
    names = grid.tag_names()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["i", "j", "xi1", "xi2", "tag"])
        for i in range(grid.Ns):
            for j in range(grid.Nt):
                wr.writerow([i, j, f"{grid.xi1[i, j]:.17g}", f"{grid.xi2[i, j]:.17g}", names[i, j]])
