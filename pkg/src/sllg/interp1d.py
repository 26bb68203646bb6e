"""Gaussian-weighted piecewise-polynomial interpolation on the real line.

Nodes are images of a dyadic lattice in (-1, 1) under the transform
phi(x) = alpha * erfinv(x) with alpha = sqrt(4 p / (1 - 1/sigma^2)).  The
lattice for level nu is x = k / 2^nu, so node sets are nested across levels
and symmetric about the origin.  Between consecutive main nodes the
interpolant is the degree-(p-1) Lagrange polynomial through the two
endpoints and p-2 extra interior nodes; outside the outermost main nodes
the boundary polynomials are extended.  This keeps the weighted L2 error
of the interpolant decaying like (m+1)^(-p) for smooth integrands even
though the domain is unbounded.

Values may be any vector-space payload (scalars, arrays, trajectories);
interpolation is linear in the values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf, erfc

_SQRT_PI_HALF = 0.8862269254527580136490837416705725913990  # sqrt(pi)/2

# rational approximation of the standard normal quantile (relative error
# below 1.2e-9 everywhere), used only to seed Newton iterations
_PROBIT_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_PROBIT_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_PROBIT_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_PROBIT_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)


def _polyval(coeffs: Sequence[float], x: np.ndarray) -> np.ndarray:
    out = np.full_like(x, coeffs[0])
    for c in coeffs[1:]:
        out = out * x + c
    return out


def erfinv(x):
    """Inverse error function, accurate to about 1e-15 on (-1, 1).

    A rational seed is polished by two Newton steps.  In the central range
    the residual erf(z) - x is used directly; in the tails the iteration is
    rewritten through erfc so that cancellation near |x| = 1 cannot destroy
    the correction (1 - |x| is exact in floating point for |x| >= 1/2).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if not np.all(np.abs(x) < 1.0):
        raise ValueError("erfinv requires |x| < 1")
    sign = np.sign(x)
    a = np.abs(x)
    q = 1.0 - a  # exact for a >= 0.5

    # seed: normal quantile at p = (1+a)/2, rescaled by 1/sqrt(2)
    z = np.empty_like(a)
    central = a <= 0.9515  # matches the quantile approximation's own split
    if np.any(central):
        qa = 0.5 * a[central]  # p - 1/2
        r = qa * qa
        z[central] = _polyval(_PROBIT_A, r) * qa / _polyval(_PROBIT_B + (1.0,), r)
    tail = ~central
    if np.any(tail):
        u = np.sqrt(-2.0 * np.log(0.5 * q[tail]))
        z[tail] = -_polyval(_PROBIT_C, u) / _polyval(_PROBIT_D + (1.0,), u)
    z /= np.sqrt(2.0)

    near = a <= 0.9
    far = ~near
    for _ in range(2):
        step = np.exp(z * z) * _SQRT_PI_HALF
        if np.any(near):
            z[near] -= (erf(z[near]) - a[near]) * step[near]
        if np.any(far):
            z[far] += (erfc(z[far]) - q[far]) * step[far]
    out = sign * z
    return float(out[0]) if scalar else out


def gauss_density(t, var: float = 1.0):
    """Centered Gaussian probability density with the given variance."""
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * t * t / var) / np.sqrt(2.0 * np.pi * var)


@dataclass(frozen=True)
class NodeFamily1D:
    """Parameters of the transformed node construction.

    p is the number of local nodes per interval (piecewise degree p-1);
    sigma2 is the variance of the auxiliary Gaussian weight governing the
    node spread.  alpha_const is derived, not passed.
    """

    p: int
    sigma2: float = 5.0
    alpha_const: float = field(init=False)

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.sigma2 <= 1.0:
            raise ValueError(f"sigma2 must exceed 1, got {self.sigma2}")
        alpha = np.sqrt(4.0 * self.p / (1.0 - 1.0 / self.sigma2))
        object.__setattr__(self, "alpha_const", float(alpha))

    def transform(self, x):
        """phi(x) = alpha * erfinv(x), mapping (-1, 1) onto the real line."""
        return self.alpha_const * erfinv(x)


def level_to_knots(nu: int) -> int:
    """Number of main nodes on level nu: m(nu) = 2^(nu+1) - 1."""
    if nu < 0:
        raise ValueError(f"level must be >= 0, got {nu}")
    return 2 ** (nu + 1) - 1


@dataclass(frozen=True)
class Nodes1D:
    """Node table for one level of one family.

    main holds the m level nodes; extras holds the p-2 interior nodes of
    each of the m-1 bounded intervals (row i belongs to [main[i], main[i+1]]).
    points is the strictly sorted union and is the ordering that value
    vectors must follow.  x_keys are the exact lattice preimages of points,
    usable as dictionary keys for cross-level node identification.
    """

    level: int
    main: np.ndarray
    extras: np.ndarray
    points: np.ndarray
    x_keys: tuple[Fraction, ...]

    @property
    def m(self) -> int:
        return self.main.size


def _lattice(level: int) -> list[Fraction]:
    m = level_to_knots(level)
    return [Fraction(2 * i, m + 1) - 1 for i in range(1, m + 1)]


def make_nodes(fam: NodeFamily1D, level: int) -> Nodes1D:
    """Build the level's node table under the family transform.

    Main nodes are phi(k / 2^level) for k = -(2^level - 1) .. 2^level - 1.
    Extra nodes subdivide each transformed interval equispaced in x, which
    for p = 3 lands on the midpoints, i.e. on the next level's main lattice.
    """
    if fam.sigma2 <= 1.0:
        raise ValueError("sigma2 must exceed 1")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    main_x = _lattice(level)
    p = fam.p
    xs: list[Fraction] = []
    for i, xm in enumerate(main_x):
        xs.append(xm)
        if i + 1 < len(main_x):
            width = main_x[i + 1] - xm
            xs.extend(xm + Fraction(k, p - 1) * width for k in range(1, p - 1))
    points = np.array([fam.transform(float(x)) for x in xs], dtype=float)
    if p == 2:
        main = points
        extras = np.zeros((len(main_x) - 1, 0))
    else:
        main = points[:: p - 1]
        extras = np.array(
            [points[i * (p - 1) + 1 : i * (p - 1) + p - 1] for i in range(len(main_x) - 1)]
        ).reshape(len(main_x) - 1, p - 2)
    return Nodes1D(level=level, main=main, extras=extras, points=points, x_keys=tuple(xs))


def eval_constant(values, t):
    """Interpolation with a single node: the constant function values[0]."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values)
    out = np.broadcast_to(v[0], t.shape + v[0].shape)
    return out.copy() if t.ndim else v[0]


def interval_weights(fam: NodeFamily1D, nodes: Nodes1D, t):
    """Lagrange weight matrix of the interpolant at query points t.

    Returns (idx, w) where idx[q] is the index into nodes.points of the
    first local node used by query q and w[q] are the p Lagrange weights,
    so that I[u](t_q) = sum_k w[q, k] * values[idx[q] + k].  Queries left
    of the first main node or right of the last reuse the boundary
    interval's polynomial.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p = fam.p
    m = nodes.m
    if m < 3:
        raise ValueError("need at least 3 main nodes; use eval_constant for level 0")
    iv = np.clip(np.searchsorted(nodes.main, t, side="right") - 1, 0, m - 2)
    start = iv * (p - 1)
    xloc = nodes.points[start[:, None] + np.arange(p)[None, :]]  # (Q, p)
    diff = t[:, None] - xloc  # (Q, p)
    ii = np.arange(p)
    denom = xloc[:, :, None] - xloc[:, None, :]  # (Q, p, p)
    denom[:, ii, ii] = 1.0
    # w_k = prod_{j != k} (t - x_j) / (x_k - x_j)
    numer = np.broadcast_to(diff[:, None, :], denom.shape).copy()
    numer[:, ii, ii] = 1.0
    w = np.prod(numer / denom, axis=2)
    return start, w


def interpolate_1d(fam: NodeFamily1D, nodes: Nodes1D, values, t):
    """Evaluate the piecewise Lagrange interpolant at t.

    Args:
        fam: node family (fixes p).
        nodes: node table from make_nodes; must have m >= 3 main nodes.
        values: payload array whose leading axis follows nodes.points.
        t: scalar or array of query points anywhere on the real line.

    Returns:
        Interpolated payload; leading axis matches t when t is an array.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != nodes.points.size:
        raise ValueError(
            f"value vector has {values.shape[0]} entries but the node table "
            f"has {nodes.points.size}"
        )
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    start, w = interval_weights(fam, nodes, t_arr)
    local = values[start[:, None] + np.arange(fam.p)[None, :]]  # (Q, p, ...)
    out = np.einsum("qk,qk...->q...", w, local)
    return out if np.ndim(t) else out[0]


def interp_at_level(fam: NodeFamily1D, level: int, u: Callable, t):
    """Apply the level's interpolation operator to a callable payload."""
    if level == 0:
        nodes = make_nodes(fam, 0)
        v0 = np.asarray(u(float(nodes.points[0])), dtype=float)
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            return v0
        return np.broadcast_to(v0, t_arr.shape + v0.shape).copy()
    nodes = make_nodes(fam, level)
    values = np.stack([np.asarray(u(float(y)), dtype=float) for y in nodes.points])
    return interpolate_1d(fam, nodes, values, t)


def detail_apply(fam: NodeFamily1D, level: int, u: Callable) -> Callable:
    """Detail operator: the increment between consecutive interpolation levels.

    Level 0 returns the constant u(0).  Level i >= 1 returns the function
    t -> I_{m(i)}[u](t) - I_{m(i-1)}[u](t) built from two nested node tables.
    """
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    if level == 0:
        return lambda t: interp_at_level(fam, 0, u, t)

    def delta(t):
        fine = interp_at_level(fam, level, u, t)
        coarse = interp_at_level(fam, level - 1, u, t)
        return fine - coarse

    return delta
