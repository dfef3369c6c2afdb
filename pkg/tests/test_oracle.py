import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaplygin_wing.mesh import DEGENERATE, generate_grid
from chaplygin_wing.oracle import (EtaVector, OracleError, bound_check, envelope, envelope_pair, exact_w,
                                   linear_phi_solve, manufactured_solve)
from chaplygin_wing.solver import Discretization, Problem, initial_guess, newton_solve, solve_regularized

EPS = 0.05


@pytest.fixture(scope="module")
def env33(grid33):
    return envelope_pair(grid33, EPS)


@pytest.fixture(scope="module")
def field33(grid33):
    return solve_regularized(grid33, EPS)


def test_exact_w_examples():
    assert exact_w((0, 0, 2), 0.0, 0.0) == 2.0
    assert exact_w((0, 0, 2), 1.0, 0.0) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert exact_w(EtaVector((1, 1, 1)), 1.0, 1.0) == pytest.approx(math.sqrt(3), abs=1e-15)


def test_eta_vector_rejects_zero():
    with pytest.raises(OracleError):
        EtaVector((0, 0, 0))


@given(e=st.tuples(*[st.floats(-3, 3)] * 3), k=st.floats(0.1, 10), x1=st.floats(-2, 2), x2=st.floats(-2, 2))
def test_exact_w_homogeneous_in_eta(e, k, x1, x2):
    a = exact_w(tuple(k * v for v in e), x1, x2)
    assert a == pytest.approx(k * exact_w(e, x1, x2), rel=1e-12, abs=1e-12)


@given(e=st.tuples(*[st.floats(-3, 3)] * 3), x1=st.floats(-2, 2), x2=st.floats(-2, 2))
def test_phi_of_exact_w_is_linear(e, x1, x2):
    # S * w_eta is the linear function eta . (xi, 1)
    S = math.sqrt(1 + x1 * x1 + x2 * x2)
    assert S * exact_w(e, x1, x2) == pytest.approx(e[0] * x1 + e[1] * x2 + e[2], abs=1e-12)


def test_envelope_data_on_sonic_arc(grid33, env33):
    deg = grid33.tags == DEGENERATE
    g = 1.0 + EPS / grid33.S[deg]
    assert np.all(env33.w_plus[deg] >= g - 1e-12)
    assert np.all(env33.w_minus[deg] <= g + 1e-12)


def test_envelope_ordering(env33):
    assert np.all(env33.w_minus <= env33.w_plus + 1e-12)
    assert np.all(env33.w_minus > 1.0)
    assert len(env33.samples_plus) >= 1 and len(env33.samples_minus) >= 1


def test_envelope_is_extreme_over_samples(grid33, env33):
    vals_up = np.stack([exact_w(e, grid33.xi1, grid33.xi2) for e in env33.samples_plus])
    vals_lo = np.stack([exact_w(e, grid33.xi1, grid33.xi2) for e in env33.samples_minus])
    assert np.all(env33.w_plus <= vals_up.min(axis=0) + 1e-12)
    assert np.all(env33.w_minus >= vals_lo.max(axis=0) - 1e-12)


def test_samples_respect_boundary_data(grid33, env33):
    # admissibility is imposed on 1024 arc samples plus the sonic-arc nodes;
    # on a 4x denser arc the gap between samples stays far below the
    # comparison buffer
    d = grid33.domain
    theta = np.linspace(d.theta_wing, math.pi, 4001)
    R = d.radius(theta)[0]
    b1, b2 = R * np.cos(theta), R * np.sin(theta)
    g = 1.0 + EPS / np.sqrt(1 + b1 * b1 + b2 * b2)
    deg = grid33.tags == DEGENERATE
    gn = 1.0 + EPS / grid33.S[deg]
    for e in env33.samples_plus:
        assert np.all(exact_w(e, grid33.xi1[deg], grid33.xi2[deg]) >= gn)
        assert np.min(exact_w(e, b1, b2) - g) > -1e-4
    for e in env33.samples_minus:
        assert np.all(exact_w(e, grid33.xi1[deg], grid33.xi2[deg]) <= gn)
        assert np.max(exact_w(e, b1, b2) - g) < 1e-4


def test_solution_within_envelopes(field33, env33):
    rep = bound_check(field33, env33)
    assert rep.count == 0, (rep.max_excess_upper, rep.max_deficit_lower)


def test_bound_check_flags_perturbation(grid33, field33, env33):
    interior = grid33.tags == 0
    w = field33.w + 0.1 * interior
    rep = bound_check(w, env33)
    assert len(rep.upper_violations) > 0
    w = field33.w - 0.5 * interior
    assert len(bound_check(w, env33).lower_violations) > 0


def test_envelope_argument_checks(grid33):
    with pytest.raises(OracleError):
        envelope(grid33, EPS, n_samples=16)
    with pytest.raises(OracleError):
        envelope(grid33, EPS, direction="sideways")


def test_manufactured_solve_small(domain_sub):
    g = generate_grid(domain_sub, 17, 17, 1.0)
    phi_h, phi_ex, hist = manufactured_solve(g, (0.0, 0.0, 2.0), 1.0)
    assert np.max(np.abs(phi_h - phi_ex)) < 1e-2
    with pytest.raises(OracleError):
        manufactured_solve(g, (0.0, 0.0, 0.5), 1.0)


def test_linear_solve_matches_psi_path(grid33):
    d = Discretization(grid33)
    prob = Problem(d, EPS)
    psi, _ = newton_solve(prob, 0.0, initial_guess(d, EPS))
    phi_lin = linear_phi_solve(grid33, EPS).ravel()
    assert np.max(np.abs(d.S * np.cosh(psi) - phi_lin)) < 1e-8
    deg = d.dirichlet
    np.testing.assert_allclose(phi_lin[deg], d.S[deg] + EPS, rtol=0, atol=1e-9)


@pytest.mark.parametrize("eps", [0.2, 0.1])
def test_envelope_survives_near_tangent_directions(domain_sub, eps):
    # coarse grid where the refined optimum sits at |eta| ~ 1e5
    g = generate_grid(domain_sub, 17, 17)
    env = envelope_pair(g, eps)
    deg = g.tags == DEGENERATE
    # |eta| reaches ~1e4 here, so evaluating w carries rounding of order eps_mach * |eta|
    tol = 64 * np.finfo(float).eps * np.linalg.norm(env.eta_plus[deg], axis=-1)
    assert np.all(env.w_plus[deg] >= 1.0 + eps / g.S[deg] - tol)
    assert len(env.samples_plus) >= 256 and len(env.samples_minus) >= 256
