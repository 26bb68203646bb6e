"""Build a Brownian path from hierarchical hat functions, level by level.

The path is a series in i.i.d. standard normal coefficients.  Coefficient 0
multiplies the linear ramp t; coefficient n >= 1 multiplies a hat supported
on one dyadic subinterval of level bit_length(n).  Truncating the series at
2^k coefficients reproduces the path exactly on the grid t = j 2^-k.
"""

import numpy as np

from sllg.wiener import active_dimension, hier_index, wiener_eval

rng = np.random.default_rng(7)
y = rng.standard_normal(64)

t = np.linspace(0.0, 1.0, 257)

print("coefficient -> (level, position) for the first few terms")
for n in range(8):
    print(f"  y[{n}] -> {hier_index(n)}")

print()
print("sup-norm gap between consecutive truncations")
prev = wiener_eval(y[:1], t)
for k in range(1, 7):
    cur = wiener_eval(y[: 2**k], t)
    print(f"  {2**(k-1):3d} -> {2**k:3d} coefficients: {np.abs(cur - prev).max():.4f}")
    prev = cur

# dyadic invariance: terms past 2^k vanish on the level-k grid
coarse = np.arange(9) / 8
full = wiener_eval(y, coarse)
trunc = wiener_eval(y[:8], coarse)
print()
print("difference on the 8-step grid after dropping terms 8..63:",
      np.abs(full - trunc).max())
print("coefficients that can move a path sampled at stride 1/8:",
      active_dimension(1 / 8))
