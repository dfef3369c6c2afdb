"""Shock patterns across the anhedral-angle range.

Classifies the flow for q_inf = 2, alpha = pi/6, sigma = 0.5 at a few
anhedral angles, prints the critical angles and key points, and writes one
SVG per regime to the output directory.

    python demos/shock_patterns.py [outdir]
"""
import math
import sys
from pathlib import Path

from chaplygin_wing import io
from chaplygin_wing.gas import FreeStream
from chaplygin_wing.geometry import WingAngles, classify_regime, critical_beta_c

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out") / "shock_patterns"
out.mkdir(parents=True, exist_ok=True)

fs = FreeStream(2.0, math.pi / 6)
sigma = 0.5
beta_c = critical_beta_c(fs, sigma)

for beta in (0.0, 0.1, beta_c, 0.5, 0.7):
    rep = classify_regime(fs, WingAngles(sigma, beta))
    print(f"beta = {beta:.6f}  regime = {rep.regime.value}")
    print(f"  alpha0 = {rep.alpha0:.6f}  sigma0 = {rep.sigma0:.6f}  beta_c = {rep.beta_c:.6f}  "
          f"beta0 = {rep.beta0 if rep.beta0 is None else round(rep.beta0, 6)}")
    for name in sorted(rep.points):
        x, y = rep.points[name]
        print(f"  {name:3s} ({x: .6f}, {y: .6f})")
    io.emit_geometry_svg(rep, out / f"{rep.regime.value}_beta{beta:.4f}.svg")

print(f"figures in {out}")
