"""Single-level versus multilevel collocation at matched counted cost.

The multilevel estimator spreads its collocation points over a ladder of
space-time resolutions: big grids on cheap coarse solves, a handful of
points on the expensive fine ones.  The single-level estimator pays the
finest resolution for every point.  Costs here are the counted solver
work tau^-1 h^-2 summed over samples, not wall clock.

Toy scale (K up to 2, 4 Monte Carlo draws); the acceptance-scale study is
"python3 -m sllg.cli conv-ml".
"""

from sllg import collocation as coll
from sllg.interp1d import NodeFamily1D

problem = coll.aligned_problem(dims=16)
fam = NodeFamily1D(p=2, sigma2=5.0)

K_MAX = 2
reference = coll.path_sampler(
    problem, coll.level_tau(K_MAX + 1), 1.0 / coll.level_mesh_n(K_MAX + 1)
)

print("K   single-level cost / error     multilevel cost / error")
for K in range(K_MAX + 1):
    lam = coll.quasi_optimal_prefix(4**K, strict=True)
    sl = coll.single_level(
        lam, coll.level_tau(K), coll.level_h(K), problem, family=fam
    )
    sl_err = coll.estimate_error_mc(sl, reference, n=4, dims=16, seed=9)

    ml = coll.multi_level(coll.ml_schedule(K), problem, family=fam)
    ml_err = coll.estimate_error_mc(ml, reference, n=4, dims=16, seed=9)

    sl_rep = sl.cost_report()
    ml_rep = ml.cost_report()
    print(f"{K}   {sl_rep.total:10.0f} / {sl_err:.4e}     "
          f"{ml_rep.total:10.0f} / {ml_err:.4e}")
    if K == K_MAX:
        print(f"\nfinest-level detail, K={K}:")
        print(f"  single-level grid sizes {sl_rep.grid_sizes}"
              f" at unit costs {sl_rep.sample_costs}")
        print(f"  multilevel grid sizes   {ml_rep.grid_sizes}"
              f" at unit costs {ml_rep.sample_costs}")
        print(f"  counted == sum(size * cost): "
              f"{ml_rep.total == ml_rep.modeled_total()}")
