"""Sparse-grid interpolation of vector-space payloads over Gaussian parameters.

A downward-closed multi-index set, together with the nested 1D node
families, induces a sparse grid of collocation points and an interpolation
operator.  Evaluation uses the combination technique: the interpolant is a
signed sum of full tensor-product interpolants, with integer coefficients
obtained by inclusion-exclusion over the index set.  Points carry the exact
dyadic lattice preimages of their coordinates, so deduplication across
nested levels is exact set union rather than floating-point comparison.

Payloads only need addition and scalar multiplication; anything that
reshapes to a fixed float array works (scalars, fields, trajectories).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .indexset import ZERO, IndexSet, MultiIndex
from .interp1d import NodeFamily1D, Nodes1D, interval_weights, make_nodes


class SamplerError(RuntimeError):
    """A payload sampler failed; carries the grid point that triggered it."""

    def __init__(self, grid_point: "GridPoint", message: str = ""):
        self.grid_point = grid_point
        super().__init__(message or f"sampler failed at {grid_point!r}")


class GridPoint:
    """Collocation point, stored as exact lattice preimages per dimension.

    keys is a sorted tuple of (dimension, Fraction) pairs with the zero
    coordinate omitted: untouched dimensions sit at the level-0 node 0.
    Real coordinates are recovered through a family's transform.
    """

    __slots__ = ("keys", "_hash")

    def __init__(self, keys: Iterable[tuple[int, Fraction]] = ()):
        ks = tuple(sorted((int(d), Fraction(x)) for d, x in keys if x != 0))
        dims = [d for d, _ in ks]
        if len(set(dims)) != len(dims):
            raise ValueError("duplicate dimension in grid point")
        if any(d < 0 for d in dims) or any(abs(x) >= 1 for _, x in ks):
            raise ValueError("invalid grid point key")
        object.__setattr__(self, "keys", ks)
        object.__setattr__(self, "_hash", hash(ks))

    def __setattr__(self, *a):
        raise AttributeError("GridPoint is immutable")

    def coord(self, fam: NodeFamily1D, dim: int) -> float:
        for d, x in self.keys:
            if d == dim:
                return fam.transform(float(x))
        return 0.0

    def coords(self, fam: NodeFamily1D) -> dict[int, float]:
        return {d: fam.transform(float(x)) for d, x in self.keys}

    def to_array(self, fam: NodeFamily1D, ndims: int) -> np.ndarray:
        y = np.zeros(ndims)
        for d, x in self.keys:
            if d < ndims:
                y[d] = fam.transform(float(x))
        return y

    @property
    def max_dim(self) -> int:
        return self.keys[-1][0] if self.keys else -1

    def to_line(self) -> str:
        """Text form "dim:num/den,..."; the origin is the empty string."""
        return ",".join(f"{d}:{x}" for d, x in self.keys)

    @classmethod
    def from_line(cls, line: str) -> "GridPoint":
        line = line.strip()
        if not line:
            return ORIGIN
        entries = []
        for item in line.split(","):
            d, _, x = item.partition(":")
            entries.append((int(d), Fraction(x)))
        return cls(entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, GridPoint) and self.keys == other.keys

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "GridPoint") -> bool:
        return self.keys < other.keys

    def __repr__(self) -> str:
        return f"GridPoint({self.to_line()!r})"


ORIGIN = GridPoint(())


def enumerate_grid(lam: IndexSet, fam: NodeFamily1D) -> set[GridPoint]:
    """All collocation points of the index set: union of tensor node blocks.

    Nestedness of the 1D tables makes the union collapse duplicates exactly
    through the lattice keys.
    """
    tables: dict[int, Nodes1D] = {}
    points: set[GridPoint] = {ORIGIN}
    for nu in lam:
        if nu.is_zero:
            continue
        axes = []
        for d, l in nu.pairs:
            if l not in tables:
                tables[l] = make_nodes(fam, l)
            axes.append([(d, x) for x in tables[l].x_keys])
        for combo in itertools.product(*axes):
            points.add(GridPoint(combo))
    return points


def combination_coeffs(lam: IndexSet) -> dict[MultiIndex, int]:
    """Inclusion-exclusion coefficients c_nu of the combination technique.

    c_nu sums (-1)^|e| over binary vectors e with nu + e in the set.  The
    coefficients sum to 1 and vanish for indices whose forward neighbors
    are all present.
    """
    coeffs = {nu: 0 for nu in lam}
    for mu in lam:
        supp = mu.support
        for r in range(len(supp) + 1):
            for subset in itertools.combinations(supp, r):
                base = mu
                for d in subset:
                    base = base.minus(d)
                if base in coeffs:
                    coeffs[base] += (-1) ** r
    return coeffs


@dataclass
class SparseGridInterpolant:
    """Built sparse-grid interpolant over a fixed payload shape.

    combo_coeffs holds only the nonzero combination coefficients; samples
    maps every grid point to its payload.  points fixes the canonical
    (sorted) point order used by the sample matrix.
    """

    index_set: IndexSet
    family: NodeFamily1D
    combo_coeffs: dict[MultiIndex, int]
    samples: dict[GridPoint, np.ndarray]
    points: tuple[GridPoint, ...]
    payload_shape: tuple[int, ...]
    _nodes_cache: dict[int, Nodes1D] = field(default_factory=dict, repr=False)
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def grid_size(self) -> int:
        return len(self.points)

    @property
    def dims(self) -> int:
        return self.index_set.support_size

    def nodes_at(self, level: int) -> Nodes1D:
        if level not in self._nodes_cache:
            self._nodes_cache[level] = make_nodes(self.family, level)
        return self._nodes_cache[level]

    def sample_matrix(self) -> np.ndarray:
        if self._matrix is None:
            flat = [self.samples[pt].ravel() for pt in self.points]
            self._matrix = np.vstack(flat) if flat else np.zeros((0, 0))
        return self._matrix


def build_interpolant(
    lam: IndexSet,
    fam: NodeFamily1D,
    sampler: Callable[[GridPoint], object],
    cache: dict[GridPoint, np.ndarray] | None = None,
) -> SparseGridInterpolant:
    """Sample the grid and assemble the combination-technique interpolant.

    Args:
        lam: downward-closed index set.
        fam: 1D node family.
        sampler: pure map from grid point to payload; called once per point
            not already present in cache.
        cache: optional cross-call sample store; nested grids reuse entries.

    Raises:
        SamplerError: wrapping any exception a sampler raises, with the
            offending grid point attached.
    """
    points = tuple(sorted(enumerate_grid(lam, fam)))
    samples: dict[GridPoint, np.ndarray] = {}
    for pt in points:
        if cache is not None and pt in cache:
            samples[pt] = cache[pt]
            continue
        try:
            val = np.asarray(sampler(pt), dtype=float)
        except Exception as exc:
            raise SamplerError(pt, f"sampler failed at {pt!r}: {exc}") from exc
        samples[pt] = val
        if cache is not None:
            cache[pt] = val
    shapes = {v.shape for v in samples.values()}
    if len(shapes) > 1:
        raise ValueError(f"inconsistent payload shapes {shapes}")
    shape = shapes.pop() if shapes else ()
    combo = {nu: c for nu, c in combination_coeffs(lam).items() if c != 0}
    return SparseGridInterpolant(
        index_set=lam,
        family=fam,
        combo_coeffs=combo,
        samples=samples,
        points=points,
        payload_shape=shape,
    )


def _weight_rows(interp: SparseGridInterpolant, ys: np.ndarray) -> np.ndarray:
    """Per-query weights over the canonical point order: I[u](y) = W @ samples."""
    fam = interp.family
    p = fam.p
    Q = ys.shape[0]
    col = {pt.keys: i for i, pt in enumerate(interp.points)}
    W = np.zeros((Q, len(interp.points)))
    oned: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, tuple]] = {}
    for nu, c in interp.combo_coeffs.items():
        dims = nu.support
        if not dims:
            W[:, col[()]] += c
            continue
        per = []
        for d in dims:
            key = (d, nu.level(d))
            if key not in oned:
                nodes = interp.nodes_at(key[1])
                t = ys[:, d] if d < ys.shape[1] else np.zeros(Q)
                starts, w = interval_weights(fam, nodes, t)
                oned[key] = (starts, w, nodes.x_keys)
            per.append(oned[key])
        for offsets in itertools.product(range(p), repeat=len(dims)):
            wq = np.full(Q, float(c))
            for (_, w, _), k in zip(per, offsets):
                wq *= w[:, k]
            for q in range(Q):
                if wq[q] == 0.0:
                    continue
                key = tuple(
                    (d, xk[starts[q] + k])
                    for d, (starts, _, xk), k in zip(dims, per, offsets)
                    if xk[starts[q] + k] != 0
                )
                W[q, col[key]] += wq[q]
    return W


def evaluate_many(interp: SparseGridInterpolant, ys) -> np.ndarray:
    """Evaluate the interpolant at a batch of parameter vectors.

    ys has one row per query; columns beyond the active dimensions are
    ignored and missing columns are treated as zeros (the interpolant is
    constant in dimensions the index set never touches).
    """
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    W = _weight_rows(interp, ys)
    out = W @ interp.sample_matrix()
    return out.reshape((ys.shape[0],) + interp.payload_shape)


def evaluate(interp: SparseGridInterpolant, y) -> np.ndarray:
    """Evaluate the interpolant at one parameter vector."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        y = y[None]
    return evaluate_many(interp, y[None, :])[0]


def metadata_csv(interp: SparseGridInterpolant) -> str:
    """Per-member CSV: multi-index, combination coefficient, new points."""
    from .indexset import index_to_line, new_grid_points

    lines = ["multi_index,coefficient,new_points"]
    for nu in interp.index_set:
        c = interp.combo_coeffs.get(nu, 0)
        cell = index_to_line(nu)
        if "," in cell:
            cell = f'"{cell}"'
        lines.append(f"{cell},{c},{new_grid_points(nu, interp.family.p)}")
    return "\n".join(lines) + "\n"


_SAMPLES_MAGIC = "sllg-samples"


def save_samples(path, interp: SparseGridInterpolant, meta: Mapping | None = None) -> None:
    """Persist payload samples: one JSON header line, then raw float64 bytes.

    The binary body stores the sample matrix row-major in canonical point
    order, little-endian.
    """
    header = {
        "format": _SAMPLES_MAGIC,
        "version": 1,
        "payload_shape": list(interp.payload_shape),
        "points": [pt.to_line() for pt in interp.points],
        "dims": interp.dims,
        "meta": dict(meta or {}),
    }
    body = interp.sample_matrix().astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(body)


def load_samples(path) -> tuple[dict[GridPoint, np.ndarray], dict]:
    """Read a sample store written by save_samples."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != _SAMPLES_MAGIC:
            raise ValueError(f"not a {_SAMPLES_MAGIC} file")
        shape = tuple(header["payload_shape"])
        points = [GridPoint.from_line(line) for line in header["points"]]
        body = np.frombuffer(fh.read(), dtype="<f8")
    per = int(np.prod(shape, dtype=int)) if shape else 1
    if body.size != per * len(points):
        raise ValueError("sample payload size mismatch")
    mat = body.reshape(len(points), per)
    samples = {pt: mat[i].reshape(shape).copy() for i, pt in enumerate(points)}
    return samples, header.get("meta", {})
