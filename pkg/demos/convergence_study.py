"""Error of single-level collocation against grid size, at toy resolution.

The interpolant approximates the parameter-to-trajectory map; the error is
a Monte Carlo average of space-time distances to the direct solve at the
same resolution.  The sample cache is shared along the grid sequence, so
each row only pays for the newly added collocation points.

Runs in about half a minute.  The acceptance-scale version of this study
lives behind "python3 -m sllg.cli conv-sg".
"""

import numpy as np

from sllg import collocation as coll
from sllg.indexset import ProfitParams
from sllg.interp1d import NodeFamily1D

problem = coll.relaxation_problem(dims=16)
params = ProfitParams(p=2, variant="improved")
fam = NodeFamily1D(p=2, sigma2=5.0)

tau, h = 2.0**-4, 1.0 / 4
reference = coll.path_sampler(problem, tau, h)

cache: dict = {}
sizes = coll.doubling_grid_sizes(33, params)
pts, errs = [], []
print("points  mc error   active dims")
for size in sizes:
    lam = coll.quasi_optimal_prefix(size, params)
    sl = coll.single_level(lam, tau, h, problem, family=fam, cache=cache)
    err = coll.estimate_error_mc(sl, reference, n=16, dims=16, seed=5)
    pts.append(sl.grid_size)
    errs.append(err)
    print(f"{sl.grid_size:6d}  {err:.4e}  {sl.active_dimensions}")

_, rate = coll.fit_power_law(pts, errs)
print(f"\nfitted error ~ points^-{rate:.3f}")
print(f"collocation samples solved across all rows: {len(cache)}")
