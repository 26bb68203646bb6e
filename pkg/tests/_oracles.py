"""Independent reference implementations used to pin library behavior.

Everything here is deliberately naive: recursive tensor-product
interpolation, explicit surplus sums, and exhaustive set generation.  The
library must match these on small cases.
"""

import itertools

import numpy as np

from sllg.indexset import ZERO, IndexSet, MultiIndex
from sllg.interp1d import NodeFamily1D, interpolate_1d, make_nodes

# pure-function memo: node tables depend only on (p, sigma2, level)
_NODE_TABLES: dict = {}


def _nodes(fam: NodeFamily1D, level: int):
    key = (fam.p, fam.sigma2, level)
    if key not in _NODE_TABLES:
        _NODE_TABLES[key] = make_nodes(fam, level)
    return _NODE_TABLES[key]


def tensor_interp(fam: NodeFamily1D, levels: dict, u, y: dict) -> float:
    """Full tensor-product interpolation of u at levels, evaluated at y.

    levels maps dimension -> level (level 0 = anchor the dimension at 0);
    u takes a dict dimension -> coordinate; y likewise.
    """
    dims = sorted(levels)

    def rec(rest, fixed):
        if not rest:
            return u(fixed)
        d = rest[0]
        lv = levels[d]
        if lv == 0:
            return rec(rest[1:], {**fixed, d: 0.0})
        nodes = _nodes(fam, lv)
        vals = np.array([rec(rest[1:], {**fixed, d: float(t)}) for t in nodes.points])
        return float(interpolate_1d(fam, nodes, vals, y.get(d, 0.0)))

    return rec(dims, {})


def surplus_eval(fam: NodeFamily1D, nu: MultiIndex, u, y: dict) -> float:
    """Hierarchical surplus of u at nu: tensor difference by inclusion-exclusion."""
    supp = nu.support
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(supp)):
        levels = {d: nu.level(d) - b for d, b in zip(supp, bits)}
        total += (-1) ** sum(bits) * tensor_interp(fam, levels, u, y)
    return total


def sparse_eval_bruteforce(fam: NodeFamily1D, lam: IndexSet, u, y: dict) -> float:
    """Sparse interpolant as an explicit sum of surpluses over the set."""
    return sum(surplus_eval(fam, nu, u, y) for nu in lam)


def all_downward_closed(ndims: int, max_level: int):
    """Every downward-closed subset of the level box {0..max_level}^ndims.

    Generated by depth-first closure growth; feasible only for tiny boxes.
    """
    box = [
        MultiIndex({d: l for d, l in enumerate(vec) if l})
        for vec in itertools.product(range(max_level + 1), repeat=ndims)
    ]
    box_set = set(box)
    results = []
    seen = set()

    def admissible(current, cand):
        return all(cand.minus(d) in current for d in cand.support)

    def grow(current, frontier):
        key = frozenset(current)
        if key in seen:
            return
        seen.add(key)
        results.append(IndexSet(sorted(current, key=lambda m: m.shortlex()), check=False))
        for cand in list(frontier):
            if cand in current:
                continue
            if admissible(current, cand):
                nxt = current | {cand}
                grow(nxt, frontier)

    grow(frozenset([ZERO]), box_set - {ZERO})
    return results


def random_downward_closed(rng: np.random.Generator, size: int, ndims: int, max_level: int):
    """Random downward-closed set grown by uniformly picking admissible neighbors."""
    members = {ZERO}
    while len(members) < size:
        frontier = set()
        for nu in members:
            for d in range(ndims):
                cand = nu.plus(d)
                if cand in members or cand.level(d) > max_level:
                    continue
                if all(cand.minus(j) in members for j in cand.support):
                    frontier.add(cand)
        if not frontier:
            break
        choices = sorted(frontier, key=lambda m: m.shortlex())
        members.add(choices[int(rng.integers(len(choices)))])
    return IndexSet(sorted(members, key=lambda m: m.shortlex()), check=True)


def eval_p1(mesh, u, points):
    """Evaluate a P1 nodal field at arbitrary points of the unit square.

    Locates the containing cell from the lattice structure, picks the
    triangle by comparing the fractional coordinates against the
    lower-left-to-upper-right split, and interpolates barycentrically.
    Independent of the assembly code under test.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    u = np.asarray(u, dtype=float)
    n = mesh.n
    side = n + 1
    out = []
    for x, y in points:
        cx = min(int(x * n), n - 1)
        cy = min(int(y * n), n - 1)
        fx = x * n - cx
        fy = y * n - cy
        v00 = cy * side + cx
        v10 = v00 + 1
        v01 = v00 + side
        v11 = v01 + 1
        if fy <= fx:  # below the diagonal of the cell
            val = (1 - fx) * u[v00] + (fx - fy) * u[v10] + fy * u[v11]
        else:
            val = (1 - fy) * u[v00] + (fy - fx) * u[v01] + fx * u[v11]
        out.append(val)
    return np.array(out)
