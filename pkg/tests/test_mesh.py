import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaplygin_wing.gas import FreeStream
from chaplygin_wing.geometry import Regime, WingAngles, classify_regime, critical_beta_c
from chaplygin_wing.mesh import (CORNER, DEGENERATE, INTERIOR, SYM, WING, MeshError, build_domain,
                                 generate_grid, radial_map, tangent_mismatch, write_grid_csv)

FS = FreeStream(2.0, math.pi / 6)


def domain(beta, sigma=0.5):
    return build_domain(classify_regime(FS, WingAngles(sigma, beta)))


def test_subcritical_domain(domain_sub, report_sub):
    assert [a.name for a in domain_sub.arcs] == ["C_inf", "C_sigma"]
    assert tangent_mismatch(domain_sub) < 1e-8
    for k in ("P2", "P1", "P4"):
        assert domain_sub.corner_points[k] == pytest.approx(report_sub.points[k], abs=1e-12)
    assert domain_sub.wing_extent == pytest.approx(math.hypot(*report_sub.points["P4"]), abs=1e-12)
    assert domain_sub.sym_extent == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_planar_shock_domain():
    bc = critical_beta_c(FS, 0.5)
    d = domain(bc)
    assert d.regime is Regime.PLANAR_SHOCK
    assert len(d.arcs) == 1
    assert d.corner_points["P1"] == d.corner_points["P2"]
    assert d.corner_points["P2"][1] == pytest.approx(0.0, abs=1e-12)


def test_reflected_domain(report_refl):
    d = build_domain(report_refl)
    assert [a.name for a in d.arcs] == ["C_sigma_prime", "C_sigma"]
    assert tangent_mismatch(d) < 1e-8
    assert d.sym_extent == pytest.approx(math.hypot(*report_refl.points["P7"]), abs=1e-12)


def test_delta_wing_domain():
    d = domain(0.0)
    assert d.wing_direction == pytest.approx((0.0, 1.0), abs=1e-15)
    assert math.pi - d.theta_wing == pytest.approx(math.pi / 2, abs=1e-15)
    assert d.wing_normal == pytest.approx((1.0, 0.0))


def test_no_domain_outside_interior_regimes():
    with pytest.raises(MeshError):
        domain(0.7)


def test_small_uniform_grid():
    g = generate_grid(domain(0.1), 9, 9, 1.0)
    assert g.size == 81
    assert np.max(np.abs(g.outer_residual())) < 1e-12
    np.testing.assert_allclose(np.diff(g.t), 1 / 8, atol=1e-15)


def test_interior_count_quadruples():
    d = domain(0.1)
    counts = [int(np.sum(generate_grid(d, n, n).tags == INTERIOR)) for n in (17, 33, 65)]
    assert counts == [(n - 2) ** 2 for n in (17, 33, 65)]
    assert counts[2] / counts[1] == pytest.approx(4.0, rel=0.15)


def test_radial_stretch_ratio(grid65):
    dt = np.diff(grid65.t)
    # oracle: direct product of the per-cell ratio
    assert dt[-1] / dt[0] == pytest.approx(1.05 ** -63, rel=1e-10)
    np.testing.assert_allclose(dt[1:] / dt[:-1], 1 / 1.05, rtol=1e-10)
    assert grid65.t[0] == 0.0 and grid65.t[-1] == 1.0


def test_radial_map_derivatives():
    tau = np.linspace(0, 1, 101)
    t, dt, d2t = radial_map(tau, 64, 1.05)
    h = 1e-6
    tp, _, _ = radial_map(tau + h, 64, 1.05)
    tm, _, _ = radial_map(tau - h, 64, 1.05)
    np.testing.assert_allclose((tp - tm) / (2 * h), dt, rtol=1e-8)


def test_boundary_placement(grid65):
    g = grid65
    d = g.domain
    assert np.all(g.xi2[0, :] == 0.0) and np.all(g.xi1[0, :] <= 0.0)
    nu = d.wing_normal
    assert np.max(np.abs(g.xi1[-1, :] * nu[0] + g.xi2[-1, :] * nu[1])) < 1e-14
    assert np.all(g.xi1[:, 0] == 0.0) and np.all(np.abs(g.xi2[:, 0]) == 0.0)
    assert np.max(np.abs(g.outer_residual())) < 1e-12
    assert np.all(g.map_jacobian()[:, 1:] > 0)


def test_tags(grid65):
    t = grid65.tags
    assert np.all(t[:, 0] == CORNER)
    assert np.all(t[:, -1] == DEGENERATE)
    assert np.all(t[0, 1:-1] == SYM) and np.all(t[-1, 1:-1] == WING)
    assert np.all(t[1:-1, 1:-1] == INTERIOR)
    names = grid65.tag_names()
    assert names[0, 0] == "CornerO" and names[5, -1] == "Degenerate"


def test_junction_is_grid_line(grid65, domain_sub):
    i = grid65.junction
    assert i is not None
    assert grid65.theta[i] == domain_sub.arcs[0].theta_lo


@given(n=st.integers(9, 40), m=st.integers(9, 40), stretch=st.floats(1.0, 1.1),
       beta=st.sampled_from([0.0, 0.1, 0.25, 0.4, 0.55]))
def test_grid_invariants(n, m, stretch, beta):
    g = generate_grid(domain(beta), n, m, stretch)
    assert np.max(np.abs(g.outer_residual())) < 1e-12
    assert np.all(g.map_jacobian()[:, 1:] > 0)
    assert np.all(np.diff(g.theta) < 0)
    assert np.all(np.isfinite(g.R)) and np.all(g.R > 0)


def test_radius_is_continuous(domain_sub):
    theta = np.linspace(domain_sub.theta_wing, math.pi, 20001)
    R, dR, _ = domain_sub.radius(theta)
    assert np.max(np.abs(np.diff(R))) < 2 * np.max(np.abs(dR)) * (theta[1] - theta[0])


def test_rejects_bad_sizes(domain_sub):
    with pytest.raises(MeshError):
        generate_grid(domain_sub, 8, 33)
    with pytest.raises(MeshError):
        generate_grid(domain_sub, 33, 33, 0.9)


def test_grid_csv(tmp_path, grid33):
    path = tmp_path / "grid.csv"
    write_grid_csv(grid33, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["i", "j", "xi1", "xi2", "tag"]
    assert len(rows) == 1 + 33 * 33
    assert float(rows[5][2]) == grid33.xi1[0, 4]
