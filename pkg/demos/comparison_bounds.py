"""Solution bracketed by envelopes of exact solutions.

Every w_eta = (eta . (xi, 1)) / sqrt(1 + |xi|^2) solves the equation exactly.
Those lying above (below) the sonic-arc data bound the solution from above
(below).  This script builds both envelopes on the 65 x 65 grid at
eps = 0.05, compares them with the computed solution and reports the
tightest gaps.

    python demos/comparison_bounds.py
"""
import math
import time

import numpy as np

from chaplygin_wing.gas import FreeStream
from chaplygin_wing.geometry import WingAngles, classify_regime
from chaplygin_wing.mesh import INTERIOR, build_domain, generate_grid
from chaplygin_wing.oracle import bound_check, envelope_pair
from chaplygin_wing.solver import solve_regularized

eps = 0.05
rep = classify_regime(FreeStream(2.0, math.pi / 6), WingAngles(0.5, 0.1))
grid = generate_grid(build_domain(rep), 65, 65)

field = solve_regularized(grid, eps)
t0 = time.perf_counter()
env = envelope_pair(grid, eps)
print(f"envelopes from {len(env.samples_plus)} upper and {len(env.samples_minus)} lower samples "
      f"in {time.perf_counter() - t0:.1f} s")

inner = grid.tags == INTERIOR
print(f"w_plus  - w: min {np.min((env.w_plus - field.w)[inner]):.4e}, median {np.median((env.w_plus - field.w)[inner]):.4e}")
print(f"w - w_minus: min {np.min((field.w - env.w_minus)[inner]):.4e}, median {np.median((field.w - env.w_minus)[inner]):.4e}")
rep = bound_check(field, env, buffer=0.0)
print(f"nodes outside [w_minus, w_plus] with no buffer: {rep.count}")
