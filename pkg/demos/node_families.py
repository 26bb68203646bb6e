"""Transformed node families on the real line and their interpolation order.

Nodes are images of a uniform lattice in (-1, 1) under alpha * erfinv, so
they crowd near the origin and reach further out as the level grows.  The
piecewise-polynomial interpolant built on them converges in the weighted
L2 sense at order p in the node count, provided sigma2 > 1.
"""

import numpy as np

from sllg.interp1d import (
    NodeFamily1D,
    gauss_density,
    interp_at_level,
    level_to_knots,
    make_nodes,
)


def weighted_l2_error(fam, level, u):
    t = np.linspace(-8.0, 8.0, 10_001)
    err = interp_at_level(fam, level, u, t) - u(t)
    w = gauss_density(t)
    return float(np.sqrt(np.trapezoid(err * err * w, t)))


u = lambda t: np.exp(-(t**2) / 8.0)

for p in (2, 3):
    fam = NodeFamily1D(p=p, sigma2=5.0)
    nodes = make_nodes(fam, 2)
    print(f"p={p}: level-2 range [{nodes.points[0]:+.3f}, {nodes.points[-1]:+.3f}],"
          f" {nodes.points.size} points")
    errs, ms = [], []
    for level in range(2, 7):
        ms.append(level_to_knots(level) + 1)
        errs.append(weighted_l2_error(fam, level, u))
    rate = -np.polyfit(np.log(ms), np.log(errs), 1)[0]
    print(f"   errors {['%.2e' % e for e in errs]}")
    print(f"   fitted order {rate:.2f} (expect about {p})")
