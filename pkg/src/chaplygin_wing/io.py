"""File emission: JSON reports, CSV fields and deterministic SVG figures."""
from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
from pathlib import Path

import numpy as np

from .geometry import RegimeReport

FIELD_COLUMNS = ("i", "j", "xi1", "xi2", "psi", "w", "phi", "v1", "v2", "v3", "c", "rho", "L2", "tag")


def to_jsonable(obj):
    """Plain JSON types; dataclasses become dicts with their field names as keys."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips to the same double
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def emit_report_json(report, path) -> None:
    Path(path).write_text(dumps(report), encoding="utf-8")


def load_report_json(path) -> RegimeReport:
    return RegimeReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def emit_field_csv(field, path) -> None:
    """One row per node, ``i`` outer, ``j`` inner, floats with 17 significant digits."""
    g = field.grid
    names = g.tag_names()
    cols = [g.xi1, g.xi2, field.psi, field.w, field.phi, field.velocity[0], field.velocity[1],
            field.velocity[2], field.c, field.rho, field.L2]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(FIELD_COLUMNS)
        for i in range(g.Ns):
            for j in range(g.Nt):
                wr.writerow([i, j] + [f"{a[i, j]:.17g}" for a in cols] + [names[i, j]])


# ---------------------------------------------------------------------------
# SVG

_SIZE = 640
_MARGIN = 40
_COLORS = {"C_inf": "#1f77b4", "C_sigma": "#d62728", "C_sigma_prime": "#9467bd",
           "S_ob": "#2ca02c", "S_R": "#ff7f0e"}


class _Frame:
    def __init__(self, xmin, xmax, ymin, ymax):
        span = max(xmax - xmin, ymax - ymin)
        cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
        self.x0, self.x1 = cx - 0.5 * span, cx + 0.5 * span
        self.y0, self.y1 = cy - 0.5 * span, cy + 0.5 * span
        self.scale = (_SIZE - 2 * _MARGIN) / span

    def inside(self, x, y):
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    def px(self, x, y):
        return _MARGIN + (x - self.x0) * self.scale, _SIZE - _MARGIN - (y - self.y0) * self.scale


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _polyline(frame, x, y, color, width=1.5, dash=None):
    keep = frame.inside(x, y) & np.isfinite(x) & np.isfinite(y)
    out = []
    runs = np.split(np.arange(len(x)), np.flatnonzero(np.diff(keep.astype(int)) != 0) + 1)
    for run in runs:
        if len(run) < 2 or not keep[run[0]]:
            continue
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (frame.px(x[k], y[k]) for k in run))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')
    return out


def conic_polyline_points(conic, radius: float, n: int = 1024):
    """Sample the physical branch of a Mach-cone curve by rays from O, out to ``radius``."""
    theta = np.linspace(-math.pi, math.pi, n)
    k = conic.p1 * np.cos(theta) + conic.p2 * np.sin(theta)
    num = conic.p0**2 - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        R = num / (np.sqrt(num + k * k) - conic.p0 * k)
    R = np.where((k < 1.0) & (R > 0) & (R <= radius), R, np.nan)
    return R * np.cos(theta), R * np.sin(theta)


def _line_points(line, frame, n: int = 256):
    g = np.array([line.n1, line.n2])
    base = -line.d * g / (g @ g)
    tdir = np.array([-g[1], g[0]]) / math.hypot(*g)
    half = 2.0 * (frame.x1 - frame.x0)
    s = np.linspace(-half, half, n)
    return base[0] + s * tdir[0], base[1] + s * tdir[1]


def emit_geometry_svg(report: RegimeReport, path, n_curve: int = 1024) -> None:
    """Shock pattern in the (xi1, xi2) plane; identical input gives a byte-identical file."""
    pts = report.points
    xs = [0.0] + [p[0] for p in pts.values()]
    ys = [0.0] + [p[1] for p in pts.values()]
    pad = 0.25 * max(max(xs) - min(xs), max(ys) - min(ys), 0.5)
    frame = _Frame(min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad)
    reach = 2.0 * math.hypot(frame.x1 - frame.x0, frame.y1 - frame.y0) + math.hypot(frame.x0, frame.y0)
    body = [f'<rect x="0" y="0" width="{_SIZE}" height="{_SIZE}" fill="white"/>']
    # axes
    ax = np.array([frame.x0, frame.x1])
    body += _polyline(frame, ax, np.zeros(2), "#999999", 0.8, "4,3")
    body += _polyline(frame, np.zeros(2), np.array([frame.y0, frame.y1]), "#999999", 0.8, "4,3")
    # wing ray and symmetry segment
    if "P5" in pts:
        tip = pts["P5"]
        s = np.linspace(0.0, 1.0, 256)
        body += _polyline(frame, s * tip[0], s * tip[1], "black", 2.5)
    end = pts.get("P6", pts.get("P2"))
    if end is not None:
        s = np.linspace(0.0, 1.0, 256)
        body += _polyline(frame, s * end[0], np.zeros_like(s), "black", 2.5)
    for name in sorted(report.curves):
        x, y = conic_polyline_points(report.curves[name], reach, n_curve)
        body += _polyline(frame, x, y, _COLORS.get(name, "#555555"))
    for name in sorted(report.shocks):
        x, y = _line_points(report.shocks[name], frame)
        body += _polyline(frame, x, y, _COLORS.get(name, "#555555"), 1.5, "6,3")
    px, py = frame.px(0.0, 0.0)
    body.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="black"/>')
    body.append(f'<text x="{_fmt(px + 5)}" y="{_fmt(py - 5)}" font-size="12">O</text>')
    for name in sorted(pts):
        x, y = pts[name]
        if not frame.inside(x, y):
            continue
        px, py = frame.px(x, y)
        body.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="black"/>')
        body.append(f'<text x="{_fmt(px + 5)}" y="{_fmt(py - 5)}" font-size="12">{name}</text>')
    legend = sorted(set(report.curves) | set(report.shocks))
    for k, name in enumerate(legend):
        y = 20 + 16 * k
        body.append(f'<line x1="10" y1="{y}" x2="30" y2="{y}" stroke="{_COLORS.get(name, "#555555")}" '
                    'stroke-width="2"/>')
        body.append(f'<text x="34" y="{y + 4}" font-size="12">{name}</text>')
    title = (f"{report.regime.value}: q_inf={report.q_inf:.6g}, alpha={report.alpha:.6g}, "
             f"sigma={report.sigma:.6g}, beta={report.beta:.6g}")
    body.append(f'<text x="{_SIZE // 2}" y="{_SIZE - 10}" font-size="12" text-anchor="middle">{title}</text>')
    _write_svg(path, body)


def _write_svg(path, body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
            f'viewBox="0 0 {_SIZE} {_SIZE}">')
    Path(path).write_text("\n".join([head] + body + ["</svg>"]) + "\n", encoding="utf-8")


def _ramp(u: float) -> str:
    # blue -> white -> red
    u = min(max(u, 0.0), 1.0)
    if u < 0.5:
        a = 2 * u
        r, g, b = a, a, 1.0
    else:
        a = 2 * (1 - u)
        r, g, b = 1.0, a, a
    return f"#{int(round(255 * r)):02x}{int(round(255 * g)):02x}{int(round(255 * b)):02x}"


def emit_heatmap_svg(field, path, quantity: str = "w") -> None:
    """Node-colored map of ``w`` or ``L2`` over the physical grid, one quad per cell."""
    g = field.grid
    data = getattr(field, quantity)
    lo, hi = float(np.nanmin(data)), float(np.nanmax(data))
    span = hi - lo if hi > lo else 1.0
    frame = _Frame(float(g.xi1.min()), float(g.xi1.max()), float(g.xi2.min()), float(g.xi2.max()))
    body = [f'<rect x="0" y="0" width="{_SIZE}" height="{_SIZE}" fill="white"/>']
    for i in range(g.Ns - 1):
        for j in range(g.Nt - 1):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            val = np.mean([data[c] for c in corners])
            pts = " ".join("{},{}".format(*map(_fmt, frame.px(g.xi1[c], g.xi2[c]))) for c in corners)
            body.append(f'<polygon points="{pts}" fill="{_ramp((val - lo) / span)}" stroke="none"/>')
    body.append(f'<text x="{_SIZE // 2}" y="{_SIZE - 10}" font-size="12" text-anchor="middle">'
                f'{quantity}: min {lo:.6g}, max {hi:.6g}</text>')
    _write_svg(path, body)


def write_atlas_csv(rows: list[dict], path) -> None:
    if not rows:
        raise ValueError("empty atlas")
    keys = list(rows[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(keys)
        for r in rows:
            wr.writerow(["" if r.get(k) is None else (f"{r[k]:.17g}" if isinstance(r[k], float) else r[k])
                         for k in keys])
