"""Regularized interior problem: Newton in psi with mu-continuation and an eps-sweep.

The unknown is ``psi = arccosh(w)`` with ``w = phi / sqrt(1 + |xi|**2)``.
Derivatives are taken by central differences of ``w`` in the fan
coordinates ``(s, tau)`` and mapped to ``xi`` with the exact metric of the
grid map.  Each interior row is the w-operator divided by
``(w**2 - 1)**1.5``, which is exactly the psi-operator.  Differencing ``w``
instead of ``psi`` makes the mu = 0 rows linear in ``phi``, so the psi path
and a direct linear solve share one discrete solution.

Boundary rows:

* ``Sym``/``Wing`` (Neumann): even ghost values across the straight side.
  ``xi . nu = 0`` there, so ``D phi . nu = 0`` and ``D psi . nu = 0`` coincide.
* ``Degenerate``: ``phi = sqrt(1 + |xi|**2) + eps``.
* ``CornerO``: the equation at O with ``D phi = 0``, ``Laplacian(psi) + 2 coth(psi) = 0``,
  using the angular mean of the first radial ring.  The duplicated O nodes
  ``(i, 0)`` are tied to ``(0, 0)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .gas import GasConstants, density_from_sound_speed
from .mesh import CORNER, DEGENERATE, INTERIOR, SYM, WING, Grid

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Non-finite residual or violated ellipticity."""


class NewtonFailure(RuntimeError):
    """Newton did not reach the tolerance."""

    def __init__(self, message: str, history: list):
        super().__init__(message)
        self.history = history


class ContinuationFailure(RuntimeError):
    """The mu step fell below its minimum."""

    def __init__(self, message: str, trace: list, psi=None, mu: float = 0.0):
        super().__init__(message)
        self.trace = trace
        self.psi = psi
        self.mu = mu


@dataclass(frozen=True)
class SolverConfig:
    mu_step: float = 0.1
    mu_min_step: float = 1e-3
    eps_schedule: tuple = (0.2, 0.1, 0.05, 0.025, 0.0125)
    newton_max_iter: int = 30
    newton_tol: float = 1e-10
    max_halvings: int = 20
    psi_floor_factor: float = 0.5

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_schedule)
        object.__setattr__(self, "eps_schedule", eps)
        if not eps or any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_schedule must be positive and strictly decreasing")
        if not (0 < self.mu_min_step <= self.mu_step <= 1):
            raise ValueError("need 0 < mu_min_step <= mu_step <= 1")
        if self.newton_max_iter < 1 or self.max_halvings < 0:
            raise ValueError("newton_max_iter >= 1 and max_halvings >= 0 required")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not 0 < self.psi_floor_factor < 1:
            raise ValueError("psi_floor_factor must lie in (0, 1)")


@dataclass
class SolutionField:
    """Converged fields on a grid; arrays have the grid shape ``(Ns, Nt)``."""

    grid: Grid
    psi: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    velocity: np.ndarray  # (3, Ns, Nt)
    c: np.ndarray
    rho: np.ndarray
    L2: np.ndarray
    mu: float
    eps: float
    diagnostics: dict = field(default_factory=dict)
    estimate: bool = False

    @property
    def margin(self) -> float:
        """``min(phi - sqrt(1 + |xi|**2))``."""
        return float(np.min(self.phi - self.grid.S))


# ---------------------------------------------------------------------------
# pointwise operator

def w_operator(x1, x2, w, p1, p2, h11, h12, h22, mu, derivatives=False):
    """The conical equation for ``w = phi/S`` divided by ``S``.

    ``p`` is ``Dw`` and ``h`` the symmetric Hessian of ``w``.  With
    ``derivatives=True`` also returns the partial derivatives with respect
    to ``(w, p1, p2, h11, h12, h22)``.
    """
    S2 = 1.0 + x1 * x1 + x2 * x2
    pxi = p1 * x1 + p2 * x2
    w2m1 = w * w - 1.0
    c2 = w2m1 + S2 * (p1 * p1 + p2 * p2 + pxi * pxi)
    v1 = p1 + pxi * x1
    v2 = p2 + pxi * x2
    A = h11 * (1.0 + x1 * x1) + 2.0 * h12 * x1 * x2 + h22 * (1.0 + x2 * x2)
    Hv1 = h11 * v1 + h12 * v2
    Hv2 = h12 * v1 + h22 * v2
    B = v1 * Hv1 + v2 * Hv2
    first = (1.0 - mu) * c2 + mu * w2m1
    zero = (2.0 - mu) * c2 + mu * w2m1
    W = c2 * A - mu * S2 * B + 2.0 * first * pxi + zero * w / S2
    if not derivatives:
        return W
    dc2_dp1 = 2.0 * S2 * (p1 + pxi * x1)
    dc2_dp2 = 2.0 * S2 * (p2 + pxi * x2)
    common = A + 2.0 * (1.0 - mu) * pxi + (2.0 - mu) * w / S2
    xHv = x1 * Hv1 + x2 * Hv2
    dB_dp1 = 2.0 * (Hv1 + xHv * x1)
    dB_dp2 = 2.0 * (Hv2 + xHv * x2)
    dW = {
        "w": 2.0 * w * A + 4.0 * w * pxi + 4.0 * w * w / S2 + zero / S2,
        "p1": dc2_dp1 * common - mu * S2 * dB_dp1 + 2.0 * first * x1,
        "p2": dc2_dp2 * common - mu * S2 * dB_dp2 + 2.0 * first * x2,
        "h11": c2 * (1.0 + x1 * x1) - mu * S2 * v1 * v1,
        "h12": 2.0 * c2 * x1 * x2 - 2.0 * mu * S2 * v1 * v2,
        "h22": c2 * (1.0 + x2 * x2) - mu * S2 * v2 * v2,
    }
    return W, dW


def psi_operator(x1, x2, psi, q1, q2, k11, k12, k22, mu):
    """The psi-equation written with its own coefficients.

    ``a_ij`` depend only on ``D psi``; the lower-order term is
    ``L = 2 (1 + (1-mu) m) D psi . xi + (1 + m)(2 + (1-mu) m) / (S**2 tanh psi)``
    with ``m = S**2 (|D psi|**2 + (D psi . xi)**2)``.

    Returns
    -------
    value, L, m
    """
    S2 = 1.0 + x1 * x1 + x2 * x2
    qxi = q1 * x1 + q2 * x2
    m = S2 * (q1 * q1 + q2 * q2 + qxi * qxi)
    v1 = q1 + qxi * x1
    v2 = q2 + qxi * x2
    a11 = (1.0 + m) * (1.0 + x1 * x1) - mu * S2 * v1 * v1
    a12 = (1.0 + m) * x1 * x2 - mu * S2 * v1 * v2
    a22 = (1.0 + m) * (1.0 + x2 * x2) - mu * S2 * v2 * v2
    L = 2.0 * (1.0 + (1.0 - mu) * m) * qxi + (1.0 + m) * (2.0 + (1.0 - mu) * m) / (S2 * np.tanh(psi))
    return a11 * k11 + 2.0 * a12 * k12 + a22 * k22 + L, L, m


def psi_zero_order_derivative(x1, x2, psi, q1, q2, mu):
    """``d L / d psi = -(1 + m)(2 + (1-mu) m) / (S**2 sinh(psi)**2)``, strictly negative."""
    S2 = 1.0 + x1 * x1 + x2 * x2
    qxi = q1 * x1 + q2 * x2
    m = S2 * (q1 * q1 + q2 * q2 + qxi * qxi)
    return -(1.0 + m) * (2.0 + (1.0 - mu) * m) / (S2 * np.sinh(psi) ** 2)


# ---------------------------------------------------------------------------
# discrete operators

class Discretization:
    """Difference operators and row bookkeeping for one grid.

    ``G1, G2`` map nodal ``w`` to ``Dw`` and ``H11, H12, H22`` to ``D2 w`` on
    the PDE rows (zero rows elsewhere).  ``corner`` is the row vector of the
    discrete Laplacian at O.

    Parameters
    ----------
    grid : Grid
    all_dirichlet : bool
        Replace the Neumann sides and O by Dirichlet rows (manufactured
        solutions).
    """

    def __init__(self, grid: Grid, all_dirichlet: bool = False):
        self.grid = grid
        self.all_dirichlet = all_dirichlet
        Ns, Nt = grid.shape
        self.N = Ns * Nt
        tags = grid.tags
        self.x1 = grid.xi1.ravel()
        self.x2 = grid.xi2.ravel()
        self.S = np.sqrt(1.0 + self.x1**2 + self.x2**2)
        flat_tags = tags.ravel()
        # duplicated O nodes, tied to node 0
        self.tie_idx = np.arange(1, Ns) * Nt
        if all_dirichlet:
            pde = flat_tags == INTERIOR
            self.dirichlet = ~pde
            self.dirichlet[self.tie_idx] = False
        else:
            pde = np.isin(flat_tags, (INTERIOR, SYM, WING))
            self.dirichlet = flat_tags == DEGENERATE
        self.pde = pde
        self.pde_idx = np.flatnonzero(pde)
        self.corner_pde = not all_dirichlet
        self._build_metric()
        self._build_operators()
        self._build_corner()

    def index(self, i, j):
        return i * self.grid.Nt + j

    def _build_metric(self):
        g = self.grid
        th = g.theta[:, None]
        a = g.dtheta[:, None]
        a2 = g.d2theta[:, None]
        ct, st = np.cos(th), np.sin(th)
        R, dR, d2R = g.R[:, None], g.dR[:, None], g.d2R[:, None]
        t, dt, d2t = g.t[None, :], g.dt[None, :], g.d2t[None, :]
        er = np.stack([ct, st])
        eth = np.stack([-st, ct])
        Xs = t * a * (dR * er + R * eth)
        Xt = dt * R * er
        Xss = t * (a2 * (dR * er + R * eth) + a * a * ((d2R - R) * er + 2.0 * dR * eth))
        Xst = dt * a * (dR * er + R * eth)
        Xtt = d2t * R * er
        shape = (2, g.Ns, g.Nt)
        Xs, Xt, Xss, Xst, Xtt = (np.broadcast_to(v, shape) for v in (Xs, Xt, Xss, Xst, Xtt))
        det = Xs[0] * Xt[1] - Xs[1] * Xt[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            # K[a, k] = d u_a / d xi_k with u = (s, tau)
            K = np.empty((2, 2) + det.shape)
            K[0, 0] = Xt[1] / det
            K[0, 1] = -Xt[0] / det
            K[1, 0] = -Xs[1] / det
            K[1, 1] = Xs[0] / det
        self.K = K
        self.X2 = {"ss": Xss, "st": Xst, "tt": Xtt}

    def _build_operators(self):
        g = self.grid
        Ns, Nt = g.shape
        hs, ht = g.ds, g.dtau
        ii, jj = np.meshgrid(np.arange(Ns), np.arange(Nt), indexing="ij")
        rows_mask = self.pde.reshape(Ns, Nt)
        I, J = ii[rows_mask], jj[rows_mask]
        rows = self.index(I, J)
        K = self.K[:, :, rows_mask]
        X2 = {k: v[:, rows_mask] for k, v in self.X2.items()}

        def nb(di, dj):
            i2 = I + di
            if not self.all_dirichlet:
                i2 = np.where(i2 < 0, -i2, i2)
                i2 = np.where(i2 > Ns - 1, 2 * (Ns - 1) - i2, i2)
            j2 = J + dj
            idx = self.index(i2, j2)
            return np.where(j2 == 0, 0, idx)  # every O duplicate maps to node 0

        # parameter-space stencils: {offset: weight}
        st = {
            "s": {(1, 0): 1 / (2 * hs), (-1, 0): -1 / (2 * hs)},
            "t": {(0, 1): 1 / (2 * ht), (0, -1): -1 / (2 * ht)},
            "ss": {(1, 0): 1 / hs**2, (0, 0): -2 / hs**2, (-1, 0): 1 / hs**2},
            "tt": {(0, 1): 1 / ht**2, (0, 0): -2 / ht**2, (0, -1): 1 / ht**2},
            "st": {(1, 1): 1 / (4 * hs * ht), (1, -1): -1 / (4 * hs * ht),
                   (-1, 1): -1 / (4 * hs * ht), (-1, -1): 1 / (4 * hs * ht)},
        }
        # C_c = sum_m K[c, m] d2X_m, as param-space 2x2 (ss, st, tt)
        C = {c: {k: K[c, 0] * X2[k][0] + K[c, 1] * X2[k][1] for k in ("ss", "st", "tt")} for c in (0, 1)}

        def assemble(coef):
            data, ri, ci = [], [], []
            for name, c in coef.items():
                for (di, dj), wgt in st[name].items():
                    data.append(c * wgt)
                    ri.append(rows)
                    ci.append(nb(di, dj))
            return sp.csr_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                                 shape=(self.N, self.N))

        self.G = [assemble({"s": K[0, k], "t": K[1, k]}) for k in (0, 1)]
        self.H = {}
        for k, l, name in ((0, 0, "11"), (0, 1, "12"), (1, 1, "22")):
            coef = {
                "ss": K[0, k] * K[0, l],
                "tt": K[1, k] * K[1, l],
                "st": K[0, k] * K[1, l] + K[1, k] * K[0, l],
            }
            # first-derivative correction from the curvature of the map
            for c, nm in ((0, "s"), (1, "t")):
                coef[nm] = -(K[0, k] * K[0, l] * C[c]["ss"] + (K[0, k] * K[1, l] + K[1, k] * K[0, l]) * C[c]["st"]
                             + K[1, k] * K[1, l] * C[c]["tt"])
            self.H[name] = assemble(coef)

    def _build_corner(self):
        g = self.grid
        Ns = g.Ns
        r1 = g.t[1] * g.R
        wts = np.full(Ns, 1.0 / (Ns - 1))
        wts[[0, -1]] *= 0.5
        coef = 4.0 * wts / r1**2
        cols = self.index(np.arange(Ns), 1)
        self.corner_cols = cols
        self.corner_coef = coef

    # --- derivatives of nodal w -------------------------------------------------
    def derivatives(self, w):
        return (self.G[0] @ w, self.G[1] @ w, self.H["11"] @ w, self.H["12"] @ w, self.H["22"] @ w)

    def corner_laplacian(self, w):
        return float(self.corner_coef @ (w[self.corner_cols] - w[0]))


def boundary_psi(disc: Discretization, eps: float) -> np.ndarray:
    """Dirichlet data ``arccosh(1 + eps/S)``, i.e. ``phi = S + eps``."""
    return np.arccosh(1.0 + eps / disc.S)


class Problem:
    """Residual and Jacobian for fixed ``(mu, eps)`` and Dirichlet data."""

    def __init__(self, disc: Discretization, eps: float, psi_dirichlet=None):
        self.disc = disc
        self.eps = eps
        self.psi_b = boundary_psi(disc, eps) if psi_dirichlet is None else np.asarray(psi_dirichlet, float)
        self.floor = 0.5 * float(np.min(self.psi_b[disc.dirichlet]))

    def residual(self, psi, mu):
        d = self.disc
        F = np.zeros(d.N)
        w = np.cosh(psi)
        p1, p2, h11, h12, h22 = d.derivatives(w)
        r = d.pde_idx
        g = (w[r] ** 2 - 1.0) ** 1.5
        F[r] = w_operator(d.x1[r], d.x2[r], w[r], p1[r], p2[r], h11[r], h12[r], h22[r], mu) / g
        D = d.dirichlet
        F[D] = psi[D] - self.psi_b[D]
        F[d.tie_idx] = psi[d.tie_idx] - psi[0]
        if d.corner_pde:
            F[0] = (d.corner_laplacian(w) + 2.0 * w[0]) / math.sinh(psi[0])
        if not np.all(np.isfinite(F)):
            k = int(np.flatnonzero(~np.isfinite(F))[0])
            raise SolverError(f"non-finite residual at node {divmod(k, d.grid.Nt)}")
        return F

    def jacobian(self, psi, mu):
        d = self.disc
        N = d.N
        w = np.cosh(psi)
        sh = np.sinh(psi)
        p1, p2, h11, h12, h22 = d.derivatives(w)
        r = d.pde_idx
        W, dW = w_operator(d.x1, d.x2, w, p1, p2, h11, h12, h22, mu, derivatives=True)
        inv_g = np.zeros(N)
        dg_over_g2 = np.zeros(N)
        w2m1 = w[r] ** 2 - 1.0
        inv_g[r] = w2m1**-1.5
        dg_over_g2[r] = 3.0 * w[r] * W[r] * w2m1**-2.5
        diag = sp.diags
        dWdw = (diag(dW["w"]) + diag(dW["p1"]) @ d.G[0] + diag(dW["p2"]) @ d.G[1]
                + diag(dW["h11"]) @ d.H["11"] + diag(dW["h12"]) @ d.H["12"] + diag(dW["h22"]) @ d.H["22"])
        Jw = diag(inv_g) @ dWdw - diag(dg_over_g2)
        J = (Jw @ diag(sh)).tolil()
        ident = np.flatnonzero(d.dirichlet)
        for k in ident:
            J.rows[k] = [k]
            J.data[k] = [1.0]
        for k in d.tie_idx:
            J.rows[k] = [0, k]
            J.data[k] = [-1.0, 1.0]
        if d.corner_pde:
            # F0 = (lap + 2 w0) / sinh(psi0)
            lap = d.corner_laplacian(w)
            cols = d.corner_cols
            coef = d.corner_coef
            dF0 = coef * sh[cols] / sh[0]
            d00 = (-coef.sum() * sh[0] + 2.0 * sh[0]) / sh[0] - (lap + 2.0 * w[0]) * w[0] / sh[0] ** 2
            entries = {0: d00}
            for c, v in zip(cols, dF0):
                entries[int(c)] = entries.get(int(c), 0.0) + float(v)
            keys = sorted(entries)
            J.rows[0] = keys
            J.data[0] = [entries[k] for k in keys]
        return J.tocsc()

    def check_zero_order_sign(self, psi, mu):
        """Assert the zero-order coefficient of the psi linearization is negative on PDE rows."""
        d = self.disc
        r = d.pde_idx
        # D psi from D w: Dw = sinh(psi) D psi
        w = np.cosh(psi)
        sh = np.sinh(psi)
        q1 = (d.G[0] @ w)[r] / sh[r]
        q2 = (d.G[1] @ w)[r] / sh[r]
        dL = psi_zero_order_derivative(d.x1[r], d.x2[r], psi[r], q1, q2, mu)
        if not np.all(dL < 0):
            k = int(r[np.argmax(dL >= 0)])
            raise SolverError(f"zero-order coefficient not negative at node {divmod(k, d.grid.Nt)}")
        return dL


# ---------------------------------------------------------------------------
# Newton and continuation

def _lu_solve(J, rhs):
    lu = spla.splu(J)
    x = lu.solve(rhs)
    nrm = np.linalg.norm(rhs)
    for _ in range(3):
        res = rhs - J @ x
        if np.linalg.norm(res) <= 1e-12 * nrm:
            break
        x = x + lu.solve(res)
    return x


def newton_solve(problem: Problem, mu: float, psi0, config: SolverConfig | None = None):
    """Damped Newton iteration on the psi residual.

    Converged when the residual infinity-norm is below ``newton_tol``.  Rows
    carry ``1/h**2`` and ``1/sinh(psi)**3`` factors, so on fine grids the
    unscaled norm can sit on a round-off floor above the tolerance; the
    residual scaled by the Jacobian diagonal (the size of the pointwise
    psi correction) below ``1e-3 * newton_tol`` is accepted as well.

    Returns
    -------
    psi : ndarray
    history : list of dict
        Residual norms, damping factor and step size per iteration.

    Raises
    ------
    NewtonFailure
    """
    cfg = config or SolverConfig()
    psi = np.maximum(np.asarray(psi0, dtype=float).copy(), problem.floor)
    d = problem.disc
    psi[d.dirichlet] = problem.psi_b[d.dirichlet]
    history = []
    try:
        F = problem.residual(psi, mu)
    except SolverError as exc:
        raise NewtonFailure(str(exc), history) from exc
    nrm = float(np.max(np.abs(F)))
    for it in range(cfg.newton_max_iter + 1):
        J = problem.jacobian(psi, mu)
        scaled = float(np.max(np.abs(F / J.diagonal())))
        history.append({"iter": it, "residual": nrm, "scaled_residual": scaled})
        if nrm < cfg.newton_tol or scaled < 1e-3 * cfg.newton_tol:
            return psi, history
        if it == cfg.newton_max_iter:
            break
        delta = _lu_solve(J, -F)
        if not np.all(np.isfinite(delta)):
            raise NewtonFailure("singular Newton system", history)
        lam = 1.0
        for _ in range(cfg.max_halvings + 1):
            trial = np.maximum(psi + lam * delta, problem.floor)
            try:
                Ft = problem.residual(trial, mu)
                nt = float(np.max(np.abs(Ft)))
            except SolverError:
                nt = math.inf
            if nt < (1.0 - 1e-4 * lam) * nrm:
                break
            lam *= 0.5
        else:
            history[-1]["damping"] = 0.0
            raise NewtonFailure(f"line search failed at mu={mu} (residual {nrm:.3e})", history)
        history[-1]["damping"] = lam
        history[-1]["step"] = float(lam * np.max(np.abs(delta)))
        psi, F, nrm = trial, Ft, nt
    raise NewtonFailure(f"no convergence in {cfg.newton_max_iter} iterations at mu={mu} "
                        f"(residual {nrm:.3e})", history)


def initial_guess(disc: Discretization, eps: float, bump: float = 0.2) -> np.ndarray:
    """Dirichlet lift plus a bump ``bump * (1 - t**2)`` vanishing on the sonic arc.

    The bump is independent of ``eps``: starting near ``w = 1`` puts the
    first Newton steps where the rows carry ``1/sinh(psi)**3``.
    """
    g = disc.grid
    t = np.broadcast_to(g.t[None, :], g.shape).ravel()
    return np.arccosh(1.0 + eps / disc.S + bump * (1.0 - t * t))


def continuation_solve(disc: Discretization, eps: float, config: SolverConfig | None = None,
                       psi_init=None, mu_start: float = 0.0):
    """Follow the solution from ``mu_start`` to ``mu = 1``.

    The step starts at ``config.mu_step``, halves after a Newton failure and
    recovers by doubling after a success, never exceeding the initial step.

    Returns
    -------
    psi : ndarray
    trace : list of dict
        One entry per accepted stage with ``mu``, Newton iterations and the
        ellipticity margin ``min(phi - S)``.

    Raises
    ------
    ContinuationFailure
        If the step drops below ``config.mu_min_step`` or the first stage fails.
    """
    cfg = config or SolverConfig()
    prob = Problem(disc, eps)
    psi = initial_guess(disc, eps) if psi_init is None else np.asarray(psi_init, float)
    trace = []

    def record(mu, psi, hist):
        margin = float(np.min(disc.S * np.cosh(psi) - disc.S))
        trace.append({"mu": mu, "iterations": len(hist) - 1, "residual": hist[-1]["residual"], "margin": margin})

    try:
        psi, hist = newton_solve(prob, mu_start, psi, cfg)
    except NewtonFailure as exc:
        raise ContinuationFailure(f"first stage failed at mu={mu_start}: {exc}", trace) from exc
    record(mu_start, psi, hist)
    mu, step = mu_start, cfg.mu_step
    while mu < 1.0:
        target = min(1.0, mu + step)
        if 1.0 - target < 1e-12:
            target = 1.0
        try:
            new, hist = newton_solve(prob, target, psi, cfg)
        except NewtonFailure as exc:
            step *= 0.5
            log.info("mu step halved to %g at mu=%g: %s", step, mu, exc)
            if step < cfg.mu_min_step:
                raise ContinuationFailure(f"mu step underflow at mu={mu}", trace, psi, mu) from exc
            continue
        psi, mu = new, target
        record(mu, psi, hist)
        step = min(cfg.mu_step, 2.0 * step)
    return psi, trace


def reconstruct_fields(disc: Discretization, psi, eps: float, mu: float = 1.0,
                       gas: GasConstants | None = None, diagnostics: dict | None = None) -> SolutionField:
    """Physical fields from a converged ``psi``.

    ``Dw`` uses the solver stencils on PDE rows, second-order one-sided
    differences in ``tau`` on the sonic arc, and zero at O.  Dirichlet nodes
    take ``phi = S + eps`` exactly.

    Raises
    ------
    SolverError
        If ``c**2 <= 0`` at any node.
    """
    g = disc.grid
    Ns, Nt = g.shape
    psi = np.asarray(psi, float)
    w = np.cosh(psi)
    deg = g.tags.ravel() == DEGENERATE
    if not disc.all_dirichlet:
        w[deg] = 1.0 + eps / disc.S[deg]
    p1, p2, _, _, _ = disc.derivatives(w)
    # one-sided tau derivatives on the outer arc
    K = disc.K
    W2 = w.reshape(Ns, Nt)
    i = np.arange(Ns)
    im = np.abs(i - 1)
    ip = np.where(i == Ns - 1, Ns - 2, i + 1)
    ws = (W2[ip, -1] - W2[im, -1]) / (2 * g.ds)
    wt = (3 * W2[:, -1] - 4 * W2[:, -2] + W2[:, -3]) / (2 * g.dtau)
    k = np.flatnonzero(deg)
    p1[k] = K[0, 0][:, -1] * ws + K[1, 0][:, -1] * wt
    p2[k] = K[0, 1][:, -1] * ws + K[1, 1][:, -1] * wt
    corner = g.tags.ravel() == CORNER
    p1[corner] = 0.0
    p2[corner] = 0.0
    S = disc.S
    x1, x2 = disc.x1, disc.x2
    phi = S * w
    if not disc.all_dirichlet:
        phi[deg] = S[deg] + eps
    d1 = w * x1 / S + S * p1
    d2 = w * x2 / S + S * p2
    v3 = phi - d1 * x1 - d2 * x2
    q2 = d1 * d1 + d2 * d2 + v3 * v3
    c2 = q2 - 1.0
    if np.any(c2 <= 0):
        kk = int(np.argmax(c2 <= 0))
        raise SolverError(f"c^2 <= 0 at node {divmod(kk, Nt)}")
    c = np.sqrt(c2)
    L2 = (q2 - phi * phi / (S * S)) / c2
    rho = density_from_sound_speed(c, gas)
    shape = g.shape
    return SolutionField(
        grid=g, psi=psi.reshape(shape), w=w.reshape(shape), phi=phi.reshape(shape),
        velocity=np.stack([d1, d2, v3]).reshape((3,) + shape), c=c.reshape(shape), rho=rho.reshape(shape),
        L2=L2.reshape(shape), mu=mu, eps=eps, diagnostics=diagnostics or {},
    )


def solve_regularized(grid: Grid, eps: float, config: SolverConfig | None = None,
                      gas: GasConstants | None = None) -> SolutionField:
    """Continuation from ``mu = 0`` to 1 at fixed ``eps`` and reconstruction.

    If the cold start fails, ``eps`` is approached by halving from the first
    schedule value with warm starts at ``mu = 1``.
    """
    cfg = config or SolverConfig()
    disc = Discretization(grid)
    try:
        psi, trace = continuation_solve(disc, eps, cfg)
    except ContinuationFailure:
        e = max(cfg.eps_schedule[0], eps)
        psi, trace = continuation_solve(disc, e, cfg)
        while e > eps:
            e = max(0.5 * e, eps)
            psi, stage = continuation_solve(disc, e, cfg, psi_init=psi, mu_start=1.0)
            trace += [dict(st, eps=e) for st in stage]
    return reconstruct_fields(disc, psi, eps, 1.0, gas, {"stages": trace})


@dataclass
class SweepResult:
    fields: list
    extrapolated: SolutionField | None
    failed_eps: float | None = None
    error: str | None = None


def epsilon_sweep(grid: Grid, config: SolverConfig | None = None, gas: GasConstants | None = None) -> SweepResult:
    """Solve for every ``eps`` in the schedule and extrapolate ``phi`` to ``eps = 0``.

    After the first ``eps`` each solve is attempted directly at ``mu = 1``
    from the previous field; a full continuation is the fallback.  The
    extrapolation is linear in ``eps`` through the last two fields and is
    flagged as an estimate.
    """
    cfg = config or SolverConfig()
    disc = Discretization(grid)
    fields = []
    psi_prev = None
    for eps in cfg.eps_schedule:
        try:
            if psi_prev is None:
                psi, trace = continuation_solve(disc, eps, cfg)
            else:
                try:
                    psi, trace = continuation_solve(disc, eps, cfg, psi_init=psi_prev, mu_start=1.0)
                except ContinuationFailure:
                    psi, trace = continuation_solve(disc, eps, cfg)
            fields.append(reconstruct_fields(disc, psi, eps, 1.0, gas, {"stages": trace}))
        except (ContinuationFailure, SolverError) as exc:
            return SweepResult(fields, _extrapolate(disc, fields, gas), eps, str(exc))
        psi_prev = psi
    return SweepResult(fields, _extrapolate(disc, fields, gas))


def _extrapolate(disc: Discretization, fields: list, gas=None) -> SolutionField | None:
    if len(fields) < 2:
        return None
    f1, f2 = fields[-2], fields[-1]
    e1, e2 = f1.eps, f2.eps
    phi0 = f2.phi - e2 * (f1.phi - f2.phi) / (e1 - e2)
    g = disc.grid
    S = g.S
    w0 = phi0 / S
    with np.errstate(invalid="ignore"):
        psi0 = np.arccosh(np.maximum(w0, 1.0))
    vel = f2.velocity - e2 * (f1.velocity - f2.velocity) / (e1 - e2)
    q2 = np.sum(vel**2, axis=0)
    c2 = q2 - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.sqrt(np.maximum(c2, 0.0))
        L2 = (q2 - phi0**2 / S**2) / c2
        rho = density_from_sound_speed(c, gas)
    return SolutionField(g, psi0, w0, phi0, vel, c, rho, L2, 1.0, 0.0,
                         {"extrapolated_from": [e1, e2]}, estimate=True)
