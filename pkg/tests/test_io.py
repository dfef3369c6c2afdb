import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from chaplygin_wing import io
from chaplygin_wing.geometry import Regime, WingAngles, classify_regime, critical_beta_c, tangency_point

NS = "{http://www.w3.org/2000/svg}"


def _svg(path):
    return ET.parse(path).getroot()


def _points_by_color(root):
    out = {}
    for pl in root.iter(NS + "polyline"):
        n = len(pl.get("points").split())
        out[pl.get("stroke")] = out.get(pl.get("stroke"), 0) + n
    return out


def _label_xy(root, name):
    for t in root.iter(NS + "text"):
        if t.text == name:
            return float(t.get("x")), float(t.get("y"))
    return None


def test_field_csv(tmp_path, sweep65):
    f = sweep65.fields[-1]
    path = tmp_path / "field.csv"
    io.emit_field_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,j,xi1,xi2,psi,w,phi,v1,v2,v3,c,rho,L2,tag"
    assert len(lines) - 1 == 4225
    rows = list(csv.DictReader(lines))
    r = rows[3 * 65 + 7]
    assert (int(r["i"]), int(r["j"])) == (3, 7)
    assert float(r["phi"]) == f.phi[3, 7]
    assert float(r["L2"]) == f.L2[3, 7]
    assert {row["tag"] for row in rows} == {"Interior", "Sym", "Wing", "CornerO", "Degenerate"}


def test_report_json_round_trip(tmp_path, report_sub, report_refl):
    for rep in (report_sub, report_refl):
        path = tmp_path / "rep.json"
        io.emit_report_json(rep, path)
        back = io.load_report_json(path)
        assert back == rep
        assert io.dumps(back) == path.read_text()


def test_json_is_plain_and_sorted(report_sub):
    text = io.dumps(report_sub)
    data = json.loads(text)
    assert data["regime"] == "Subcritical"
    assert list(data) == sorted(data)
    assert io.dumps({"x": np.float64(0.1), "y": np.arange(2)}) == '{\n  "x": 0.1,\n  "y": [\n    0,\n    1\n  ]\n}\n'


def test_geometry_svg_deterministic(tmp_path, report_refl):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    io.emit_geometry_svg(report_refl, a)
    io.emit_geometry_svg(report_refl, b)
    assert a.read_bytes() == b.read_bytes()


def test_geometry_svg_content(tmp_path, report_sub, report_refl):
    for rep in (report_sub, report_refl):
        path = tmp_path / "g.svg"
        io.emit_geometry_svg(rep, path)
        root = _svg(path)
        counts = _points_by_color(root)
        for name in rep.curves:
            assert counts[io._COLORS[name]] >= 256, name
        for name in rep.shocks:
            assert io._COLORS[name] in counts
        assert counts["black"] >= 2 * 256  # wing ray and symmetry segment
        assert _label_xy(root, "O") is not None


def test_subcritical_svg_p1_above_axis(tmp_path, report_sub):
    assert report_sub.regime is Regime.SUBCRITICAL
    assert report_sub.points["P1"][1] > 0
    path = tmp_path / "g.svg"
    io.emit_geometry_svg(report_sub, path)
    root = _svg(path)
    _, yO = _label_xy(root, "O")
    _, y1 = _label_xy(root, "P1")
    assert y1 < yO  # svg y grows downwards


def test_planar_shock_svg(tmp_path, fs):
    rep = classify_regime(fs, WingAngles(0.5, critical_beta_c(fs, 0.5)))
    assert rep.regime is Regime.PLANAR_SHOCK
    line = rep.shocks["S_ob"]
    for name in ("C_inf", "C_sigma"):
        pt, res = tangency_point(line, rep.curves[name])
        assert res < 1e-9
        assert pt[1] == pytest.approx(0.0, abs=1e-9)
    path = tmp_path / "g.svg"
    io.emit_geometry_svg(rep, path)
    root = _svg(path)
    assert _label_xy(root, "P2") is not None
    assert io._COLORS["S_ob"] in _points_by_color(root)


def test_conic_samples_lie_on_curve(report_sub):
    c = report_sub.curves["C_inf"]
    x, y = io.conic_polyline_points(c, 10.0)
    ok = np.isfinite(x)
    assert ok.sum() >= 256
    # Mach cone curve: (p1 x + p2 y + p0)^2 = 1 + x^2 + y^2 on the physical branch
    lhs = (c.p1 * x[ok] + c.p2 * y[ok] + c.p0) ** 2
    np.testing.assert_allclose(lhs, 1 + x[ok] ** 2 + y[ok] ** 2, rtol=1e-10)


def test_heatmap_svg(tmp_path, sweep65):
    f = sweep65.fields[0]
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    io.emit_heatmap_svg(f, a, "w")
    io.emit_heatmap_svg(f, b, "w")
    assert a.read_bytes() == b.read_bytes()
    assert sum(1 for _ in _svg(a).iter(NS + "polygon")) == 64 * 64


def test_atlas_csv(tmp_path):
    rows = [{"beta": 0.1, "regime": "Subcritical", "beta0": None}]
    path = tmp_path / "atlas.csv"
    io.write_atlas_csv(rows, path)
    assert path.read_text().splitlines() == ["beta,regime,beta0", "0.10000000000000001,Subcritical,"]
    with pytest.raises(ValueError):
        io.write_atlas_csv([], path)
