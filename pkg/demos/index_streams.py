"""Stream multi-indices in decreasing profit order and watch grids grow.

Each multi-index pins interpolation levels to a few parameter dimensions.
The stream yields them best-first, so every prefix is downward closed and
usable as an interpolation index set.  The two value models differ in how
much they reward activating a new dimension versus refining an old one.
"""

from sllg.collocation import doubling_grid_sizes
from sllg.indexset import (
    ProfitParams,
    index_to_line,
    make_profit,
    new_grid_points,
    quasi_optimal_stream,
)

for variant in ("improved", "basic"):
    params = ProfitParams(p=2, variant=variant)
    profit = make_profit(params)
    stream = quasi_optimal_stream(profit)

    print(f"--- {variant} value model ---")
    total = 0
    for rank in range(8):
        nu = next(stream)
        total += new_grid_points(nu, params.p)
        label = index_to_line(nu) or "origin"
        print(f"  #{rank}: {label:12s} profit {profit(nu):.3e}  grid size {total}")
    sizes = doubling_grid_sizes(200, params)
    print(f"  near-doubling grid sizes up to 200: {sizes}")
    print()
