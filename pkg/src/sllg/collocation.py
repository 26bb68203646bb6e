"""Single- and multi-level collocation drivers with counted sampling costs.

A Problem bundles the noise coefficient with an initial-state factory and
the ambient parameter dimension.  single_level interpolates full
trajectories over one space-time resolution; multi_level interpolates
trajectory differences across a ladder of resolutions and sums them.
All sampling goes through per-resolution caches, and every cache miss is
charged at tau^-1 h^-2, so reported costs are counted rather than modeled.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterator

import numpy as np

from .fem import Mesh2D, prolong_to
from .indexset import (
    IndexSet,
    MultiIndex,
    ProfitParams,
    make_profit,
    new_grid_points,
    quasi_optimal_stream,
)
from .interp1d import NodeFamily1D
from .llg import (
    NoiseCoefficient,
    Trajectory,
    coefficient_field,
    constant_field,
    example_coefficient,
    norm_L2t_H1x,
    sample_path,
)
from .sparsegrid import SparseGridInterpolant, build_interpolant, evaluate

__all__ = [
    "Problem",
    "relaxation_problem",
    "aligned_problem",
    "LevelSchedule",
    "CostReport",
    "CostCounter",
    "shared_mesh",
    "level_tau",
    "level_h",
    "level_mesh_n",
    "sample_cost",
    "achievable_sizes",
    "achievable_size",
    "largest_achievable",
    "quasi_optimal_prefix",
    "doubling_grid_sizes",
    "schedule_from_sizes",
    "ml_grid_sizing",
    "ml_schedule",
    "sl_grid_sizing",
    "single_level",
    "multi_level",
    "SingleLevelInterpolant",
    "MultiLevelInterpolant",
    "path_sampler",
    "mc_draws",
    "estimate_error_mc",
    "fit_power_law",
    "pilot_constants",
    "DEFAULT_FE_CONSTANT",
    "DEFAULT_SG_CONSTANT",
    "DEFAULT_SG_RATE",
]

# calibration defaults from short pilot convergence runs (see pilot_constants)
DEFAULT_FE_CONSTANT = 0.7510
DEFAULT_SG_CONSTANT = 0.1721
DEFAULT_SG_RATE = 0.4703


# ---------------------------------------------------------------------------
# problems and resolutions


@dataclass(frozen=True)
class Problem:
    """Noise coefficient, initial-state factory, and parameter dimension.

    initial_state maps a mesh to a unit nodal field; it is called once per
    resolution, so coarse levels start from their own nodal interpolant.
    dims fixes the length of Monte Carlo parameter draws; collocation grids
    may touch further dimensions, which samplers then extend on the fly.
    """

    coeff: NoiseCoefficient
    initial_state: Callable[[Mesh2D], np.ndarray]
    dims: int

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError(f"dims must be >= 1, got {self.dims}")


def relaxation_problem(dims: int = 128, scale: float = 1.0) -> Problem:
    """Constant initial state relaxing under the built-in noise field."""
    co = example_coefficient(scale=scale)
    return Problem(co, lambda mesh: constant_field(mesh, (0.0, 0.0, 1.0)), dims)


def aligned_problem(dims: int = 128, scale: float = 0.2) -> Problem:
    """Initial state aligned with the noise field, weak noise by default."""
    co = example_coefficient(scale=scale)
    return Problem(co, lambda mesh: coefficient_field(mesh, co), dims)


_MESH_CACHE: dict[int, Mesh2D] = {}


def shared_mesh(n: int) -> Mesh2D:
    if n not in _MESH_CACHE:
        _MESH_CACHE[n] = Mesh2D(n)
    return _MESH_CACHE[n]


def level_tau(k: int) -> float:
    """Time step of resolution level k."""
    return 2.0 ** -(k + 2)


def level_h(k: int) -> float:
    """Mesh width of resolution level k."""
    return 2.0**-k


def level_mesh_n(k: int) -> int:
    return 2**k


def sample_cost(tau: float, h: float) -> float:
    """Work units for one trajectory: steps times vertices, tau^-1 h^-2."""
    return (1.0 / tau) * (1.0 / h) ** 2


def _mesh_n_from_h(h: float) -> int:
    n = round(1.0 / h)
    if n < 1 or n & (n - 1) or n * h != 1.0:
        raise ValueError(f"mesh width must be an exact power-of-two fraction, got {h}")
    return n


# ---------------------------------------------------------------------------
# achievable grid sizes along the profit-ordered stream


def _default_params() -> ProfitParams:
    return ProfitParams()


def _stream_with_sizes(params: ProfitParams) -> Iterator[tuple[MultiIndex, int]]:
    """Yield (index, cumulative grid size) along the quasi-optimal stream."""
    total = 0
    for nu in quasi_optimal_stream(make_profit(params)):
        total += new_grid_points(nu, params.p)
        yield nu, total


def achievable_sizes(limit: int, params: ProfitParams | None = None) -> list[int]:
    """All realizable nested-grid sizes up to limit, in increasing order."""
    params = params or _default_params()
    out = []
    for _, size in _stream_with_sizes(params):
        if size > limit:
            break
        out.append(size)
    return out


def achievable_size(
    bound: float, params: ProfitParams | None = None, strict: bool = False
) -> int:
    """Smallest realizable grid size >= bound (or > bound when strict)."""
    params = params or _default_params()
    for _, size in _stream_with_sizes(params):
        if size > bound or (not strict and size == bound):
            return size
    raise RuntimeError("unreachable: the size stream is unbounded")


def largest_achievable(budget: int, params: ProfitParams | None = None) -> int:
    """Largest realizable grid size <= budget."""
    params = params or _default_params()
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    best = None
    for _, size in _stream_with_sizes(params):
        if size > budget:
            break
        best = size
    return best


def quasi_optimal_prefix(
    bound: float, params: ProfitParams | None = None, strict: bool = False
) -> IndexSet:
    """Shortest stream prefix whose grid size reaches the bound."""
    params = params or _default_params()
    members = []
    for nu, size in _stream_with_sizes(params):
        members.append(nu)
        if size > bound or (not strict and size == bound):
            return IndexSet(members, check=False)
    raise RuntimeError("unreachable: the size stream is unbounded")


def doubling_grid_sizes(max_points: int, params: ProfitParams | None = None) -> list[int]:
    """Realizable sizes at doubling thresholds 1, 2, 4, ... plus the largest
    one within max_points; used by the interpolation convergence study."""
    params = params or _default_params()
    if max_points < 1:
        raise ValueError(f"max_points must be >= 1, got {max_points}")
    sizes = []
    threshold = 1
    while threshold <= max_points:
        s = achievable_size(threshold, params)
        if s > max_points:
            break
        if not sizes or s > sizes[-1]:
            sizes.append(s)
        threshold *= 2
    tail = largest_achievable(max_points, params)
    if tail is not None and (not sizes or tail > sizes[-1]):
        sizes.append(tail)
    return sizes


# ---------------------------------------------------------------------------
# level schedules and sizing


@dataclass(frozen=True)
class LevelSchedule:
    """Index sets for the multilevel sum, coarsest term last.

    Term k interpolates the difference between resolutions K-k and K-k-1,
    so index_sets[0] pairs with the finest mesh.  The sets must be nested
    increasing; that makes coarse samples of one term reusable as fine
    samples of the next, which the cost accounting relies on.
    """

    index_sets: tuple[IndexSet, ...]

    def __post_init__(self):
        sets = tuple(self.index_sets)
        object.__setattr__(self, "index_sets", sets)
        if not sets:
            raise ValueError("schedule needs at least one index set")
        for a, b in zip(sets, sets[1:]):
            if not all(nu in b for nu in a):
                raise ValueError("index sets must be nested increasing")

    @property
    def K(self) -> int:
        return len(self.index_sets) - 1

    def tau(self, k: int) -> float:
        return level_tau(self._check(k))

    def h(self, k: int) -> float:
        return level_h(self._check(k))

    def mesh_n(self, k: int) -> int:
        return level_mesh_n(self._check(k))

    def _check(self, k: int) -> int:
        if not 0 <= k <= self.K:
            raise ValueError(f"level {k} outside 0..{self.K}")
        return k


@dataclass(frozen=True)
class CostReport:
    """Counted work of an approximation plus an optional error estimate.

    For nested schedules the counted total equals
    sum_k grid_sizes[k] * sample_costs[k] exactly; modeled_total exposes
    that product for the consistency check.
    """

    grid_sizes: tuple[int, ...]
    sample_costs: tuple[float, ...]
    total: float
    error: float | None = None

    def modeled_total(self) -> float:
        return float(sum(g * c for g, c in zip(self.grid_sizes, self.sample_costs)))

    def with_error(self, error: float) -> "CostReport":
        return replace(self, error=float(error))


@dataclass
class CostCounter:
    total: float = 0.0
    samples: int = 0

    def charge(self, cost: float) -> None:
        self.total += cost
        self.samples += 1


def ml_grid_sizing(
    K: int,
    c_fe: float = DEFAULT_FE_CONSTANT,
    c_sg: float = DEFAULT_SG_CONSTANT,
    r: float = DEFAULT_SG_RATE,
    *,
    params: ProfitParams | None = None,
    floor: int = 3,
    budget: int | None = None,
) -> tuple[int, ...]:
    """Smallest realizable grid sizes meeting the per-term accuracy split.

    Term k must satisfy size^-r <= c_fe / (c_sg (K+1)) * ratio_k, where
    ratio_k compares the finest resolution to the one the term lives on.
    Bounds are rounded up to sizes realizable by the profit-ordered nested
    sequence.  Terms past the first are floored at `floor` points so every
    difference gets a non-trivial grid.  A budget caps each size at the
    largest realizable value within it.
    """
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    if c_fe <= 0 or c_sg <= 0:
        raise ValueError("constants must be positive")
    if not 0.0 < r <= 0.5:
        raise ValueError(f"rate must lie in (0, 0.5], got {r}")
    params = params or _default_params()
    cap = largest_achievable(budget, params) if budget is not None else None
    if budget is not None and cap is None:
        raise ValueError(f"budget {budget} admits no realizable grid")
    c = c_fe / (c_sg * (K + 1))
    fine = level_tau(K) + level_h(K)
    sizes = []
    for k in range(K + 1):
        ratio = fine / (level_tau(K - k) + level_h(K - k))
        bound = (c * ratio) ** (-1.0 / r)
        if k >= 1:
            bound = max(bound, float(floor))
        size = achievable_size(bound, params)
        if cap is not None:
            size = min(size, cap)
        sizes.append(size)
    return tuple(sizes)


def sl_grid_sizing(K: int, params: ProfitParams | None = None) -> tuple[int, ...]:
    """Smallest realizable grid sizes strictly above 4^k for k = 0..K."""
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    params = params or _default_params()
    return tuple(achievable_size(4**k, params, strict=True) for k in range(K + 1))


def schedule_from_sizes(
    sizes, params: ProfitParams | None = None
) -> LevelSchedule:
    """Stream prefixes realizing the given sizes, as a nested schedule."""
    params = params or _default_params()
    targets = [int(s) for s in sizes]
    if any(a > b for a, b in zip(targets, targets[1:])):
        raise ValueError(f"sizes must be nondecreasing, got {targets}")
    want = sorted(set(targets))
    hit: dict[int, IndexSet] = {}
    members = []
    for nu, size in _stream_with_sizes(params):
        members.append(nu)
        if size == want[0]:
            hit[size] = IndexSet(list(members), check=False)
            want.pop(0)
            if not want:
                break
        elif size > want[0]:
            raise ValueError(f"size {want[0]} is not realizable by the stream")
    return LevelSchedule(tuple(hit[s] for s in targets))


def ml_schedule(
    K: int,
    c_fe: float = DEFAULT_FE_CONSTANT,
    c_sg: float = DEFAULT_SG_CONSTANT,
    r: float = DEFAULT_SG_RATE,
    *,
    params: ProfitParams | None = None,
    floor: int = 3,
    budget: int | None = None,
) -> LevelSchedule:
    params = params or _default_params()
    sizes = ml_grid_sizing(K, c_fe, c_sg, r, params=params, floor=floor, budget=budget)
    return schedule_from_sizes(sizes, params)


# ---------------------------------------------------------------------------
# samplers


def _trajectory_fetch(
    problem: Problem,
    tau: float,
    n: int,
    fam: NodeFamily1D,
    counter: CostCounter | None,
    cache: dict | None,
):
    """Grid point -> trajectory fields at one resolution, charged per miss."""
    mesh = shared_mesh(n)
    m0 = problem.initial_state(mesh)
    cost = sample_cost(tau, 1.0 / n)
    store: dict = {} if cache is None else cache

    def fetch(pt) -> np.ndarray:
        hit = store.get(pt)
        if hit is not None:
            return hit
        width = max(problem.dims, pt.max_dim + 1)
        y = pt.to_array(fam, width)
        fields = sample_path(y, tau, mesh, problem.coeff, m0).fields
        if counter is not None:
            counter.charge(cost)
        store[pt] = fields
        return fields

    return fetch


def _prolong_steps(fields: np.ndarray, n_from: int, n_to: int) -> np.ndarray:
    if n_from == n_to:
        return fields
    return np.stack([prolong_to(f, n_from, n_to) for f in fields])


# ---------------------------------------------------------------------------
# single level


@dataclass(frozen=True, eq=False)
class SingleLevelInterpolant:
    """Sparse-grid interpolant of whole trajectories at one resolution."""

    interp: SparseGridInterpolant
    problem: Problem
    tau: float
    mesh_n: int
    counted_cost: float

    @property
    def grid_size(self) -> int:
        return self.interp.grid_size

    @property
    def active_dimensions(self) -> int:
        return self.interp.index_set.support_size

    def evaluate(self, y) -> Trajectory:
        y = np.asarray(y, dtype=float)
        fields = evaluate(self.interp, y)
        return Trajectory(
            tau=self.tau, y=y, mesh=shared_mesh(self.mesh_n), coeff=None, fields=fields
        )

    def cost_report(self, error: float | None = None) -> CostReport:
        return CostReport(
            grid_sizes=(self.grid_size,),
            sample_costs=(sample_cost(self.tau, 1.0 / self.mesh_n),),
            total=self.counted_cost,
            error=error,
        )


def single_level(
    lam: IndexSet,
    tau: float,
    h: float,
    problem: Problem,
    *,
    family: NodeFamily1D | None = None,
    cache: dict | None = None,
    counter: CostCounter | None = None,
) -> SingleLevelInterpolant:
    """Interpolate y -> trajectory at fixed (tau, h) over the grid of lam.

    An external cache shares trajectories across nested grids at the same
    resolution; only cache misses are charged to the counter.
    """
    n = _mesh_n_from_h(h)
    fam = family or NodeFamily1D(2)
    counter = counter if counter is not None else CostCounter()
    before = counter.total
    fetch = _trajectory_fetch(problem, tau, n, fam, counter, cache)
    interp = build_interpolant(lam, fam, fetch)
    return SingleLevelInterpolant(interp, problem, tau, n, counter.total - before)


# ---------------------------------------------------------------------------
# multi level


@dataclass(frozen=True, eq=False)
class MultiLevelInterpolant:
    """Sum of interpolated trajectory differences across resolutions.

    Term k stores differences on mesh 2^(K-k) at the coarser of its two
    time steps.  Evaluation prolongs every term to the finest mesh and
    restricts to the coarsest time grid before summing.
    """

    schedule: LevelSchedule
    terms: tuple[SparseGridInterpolant, ...]
    problem: Problem
    counted_cost: float

    @property
    def K(self) -> int:
        return self.schedule.K

    @property
    def eval_tau(self) -> float:
        return level_tau(0)

    @property
    def eval_mesh_n(self) -> int:
        return level_mesh_n(self.K)

    @property
    def grid_sizes(self) -> tuple[int, ...]:
        return tuple(t.grid_size for t in self.terms)

    def evaluate(self, y) -> Trajectory:
        y = np.asarray(y, dtype=float)
        K = self.K
        n_target = self.eval_mesh_n
        steps = round(1.0 / self.eval_tau)
        mesh = shared_mesh(n_target)
        total = np.zeros((steps + 1, mesh.nv, 3))
        for k, interp in enumerate(self.terms):
            j = K - k
            arr = evaluate(interp, y)
            live_tau = level_tau(j - 1) if j >= 1 else level_tau(0)
            stride = round(self.eval_tau / live_tau)
            total += _prolong_steps(arr[::stride], level_mesh_n(j), n_target)
        return Trajectory(tau=self.eval_tau, y=y, mesh=mesh, coeff=None, fields=total)

    def cost_report(self, error: float | None = None) -> CostReport:
        K = self.K
        costs = tuple(
            sample_cost(level_tau(K - k), level_h(K - k)) for k in range(K + 1)
        )
        return CostReport(
            grid_sizes=self.grid_sizes,
            sample_costs=costs,
            total=self.counted_cost,
            error=error,
        )


def multi_level(
    schedule: LevelSchedule,
    problem: Problem,
    *,
    family: NodeFamily1D | None = None,
) -> MultiLevelInterpolant:
    """Build the multilevel interpolant for the given schedule.

    Per-resolution trajectory caches are shared between consecutive terms:
    the coarse samples of term k are the fine samples of term k+1, so with
    nested index sets each resolution is sampled exactly once per point.
    """
    fam = family or NodeFamily1D(2)
    K = schedule.K
    counter = CostCounter()
    caches: dict[int, dict] = {j: {} for j in range(K + 1)}
    terms = []
    for k, lam in enumerate(schedule.index_sets):
        j = K - k
        fine = _trajectory_fetch(
            problem, level_tau(j), level_mesh_n(j), fam, counter, caches[j]
        )
        if j == 0:
            sampler = fine
        else:
            coarse = _trajectory_fetch(
                problem, level_tau(j - 1), level_mesh_n(j - 1), fam, counter, caches[j - 1]
            )
            n_c, n_f = level_mesh_n(j - 1), level_mesh_n(j)

            def sampler(pt, _fine=fine, _coarse=coarse, _nc=n_c, _nf=n_f):
                return _fine(pt)[::2] - _prolong_steps(_coarse(pt), _nc, _nf)

        terms.append(build_interpolant(lam, fam, sampler))
    return MultiLevelInterpolant(schedule, tuple(terms), problem, counter.total)


# ---------------------------------------------------------------------------
# Monte Carlo error estimation


def path_sampler(
    problem: Problem, tau: float, h: float, cache: dict | None = None
) -> Callable[[np.ndarray], Trajectory]:
    """Memoized direct sampler y -> trajectory at fixed (tau, h)."""
    n = _mesh_n_from_h(h)
    mesh = shared_mesh(n)
    m0 = problem.initial_state(mesh)
    store: dict = {} if cache is None else cache

    def sample(y) -> Trajectory:
        y = np.asarray(y, dtype=float)
        key = (y.tobytes(), y.shape)
        if key not in store:
            store[key] = sample_path(y, tau, mesh, problem.coeff, m0)
        return store[key]

    return sample


def mc_draws(n: int, dims: int, seed: int) -> np.ndarray:
    """N i.i.d. standard normal parameter vectors, fixed by the seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.random.default_rng(seed).standard_normal((n, dims))


def _as_eval(obj) -> Callable[[np.ndarray], Trajectory]:
    if callable(obj):
        return obj
    ev = getattr(obj, "evaluate", None)
    if ev is None:
        raise TypeError(f"{obj!r} is neither callable nor has .evaluate")
    return ev


def estimate_error_mc(approx, reference, n: int, dims: int, seed: int) -> float:
    """Mean trajectory-distance between approx and reference over n draws.

    Both arguments map a parameter vector to a Trajectory (callables or
    objects with .evaluate).  Draws and summation order are fixed by the
    seed, so the estimate is deterministic.
    """
    a = _as_eval(approx)
    b = _as_eval(reference)
    total = 0.0
    for y in mc_draws(n, dims, seed):
        total += norm_L2t_H1x(a(y), b(y))
    return total / n


# ---------------------------------------------------------------------------
# constant calibration


def fit_power_law(x, y) -> tuple[float, float]:
    """Least-squares fit y ~ C * x^(-rate) on log-log data; (C, rate)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.shape != ly.shape or lx.size < 2:
        raise ValueError("need at least two matching samples")
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(math.exp(intercept)), float(-slope)


def pilot_constants(
    problem: Problem,
    *,
    fe_levels: tuple[int, ...] = (1, 2, 3),
    grid_bounds: tuple[int, ...] = (1, 3, 9, 17),
    n_mc: int = 8,
    seed: int = 0,
    params: ProfitParams | None = None,
) -> tuple[float, float, float]:
    """Fit (c_fe, c_sg, r) from two short convergence runs.

    The space-time constant comes from direct-sample errors against the
    next finer resolution, fitted against tau + h.  The grid constant and
    rate come from interpolation errors at a few nested grids on the
    coarsest resolution.
    """
    params = params or _default_params()
    draws_dims = problem.dims

    fe_x, fe_y = [], []
    for k in fe_levels:
        coarse = path_sampler(problem, level_tau(k), level_h(k))
        fine = path_sampler(problem, level_tau(k + 1), level_h(k + 1))
        fe_x.append(level_tau(k) + level_h(k))
        fe_y.append(estimate_error_mc(coarse, fine, n_mc, draws_dims, seed))
    c_fe, _ = fit_power_law(fe_x, fe_y)

    tau, h = level_tau(0), level_h(0)
    cache: dict = {}
    ref = path_sampler(problem, tau, h)
    sg_x, sg_y = [], []
    for bound in grid_bounds:
        lam = quasi_optimal_prefix(bound, params)
        sl = single_level(lam, tau, h, problem, cache=cache)
        sg_x.append(sl.grid_size)
        sg_y.append(estimate_error_mc(sl, ref, n_mc, draws_dims, seed))
    c_sg, r = fit_power_law(sg_x, sg_y)
    return c_fe, c_sg, min(max(r, 1e-6), 0.5)
