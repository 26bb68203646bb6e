"""Levy-Ciesielski parametrization of Brownian motion on [0, 1].

The Wiener process is expanded in the Faber-Schauder hat-function basis,

    W(y, t) = y_0 * t + sum_{l>=1} sum_{j=1..2^(l-1)} y_{l,j} * eta_{l,j}(t),

so that a path is identified with the real vector y of its hierarchical
coefficients.  With y_n i.i.d. standard normal this is the classical
midpoint-refinement construction of Brownian motion.  Functions here
evaluate the basis, convert between hierarchical (level, position) and
linear indices, evaluate W from a coefficient vector, extract coefficients
from dyadic path samples, and measure weighted parameter norms.

Time is fixed to the unit horizon; rescale externally for other horizons.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class HierIndex(NamedTuple):
    """Hierarchical basis label: level l >= 0 and position 1 <= j <= 2^(l-1).

    Level 0 has the single linear function eta_{0,1}(t) = t, so j = 1 there.
    """

    level: int
    position: int


def _check_hier(level: int, position: int) -> None:
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    n_positions = 1 if level == 0 else 2 ** (level - 1)
    if not 1 <= position <= n_positions:
        raise ValueError(
            f"position must be in [1, {n_positions}] on level {level}, got {position}"
        )


def linear_index(h: HierIndex) -> int:
    """Map (level, position) to the linear index n = floor(2^(l-1)) + j - 1."""
    level, position = h
    _check_hier(level, position)
    if level == 0:
        return 0
    return 2 ** (level - 1) + position - 1


def hier_index(n: int) -> HierIndex:
    """Map a linear index n >= 0 back to its (level, position) pair."""
    if n < 0:
        raise ValueError(f"linear index must be >= 0, got {n}")
    if n == 0:
        return HierIndex(0, 1)
    level = n.bit_length()  # n in [2^(l-1), 2^l) for l >= 1
    return HierIndex(level, n - 2 ** (level - 1) + 1)


def basis_support(h: HierIndex) -> tuple[float, float]:
    """Support interval of eta_{l,j}; the whole of [0,1] for level 0."""
    level, position = h
    _check_hier(level, position)
    if level == 0:
        return (0.0, 1.0)
    width = 2.0 ** -(level - 1)
    return ((position - 1) * width, position * width)


def basis_sup_norm(level: int) -> float:
    """Peak value of a level-l basis function: 1 for l = 0, else 2^(-(l+1)/2)."""
    if level == 0:
        return 1.0
    return 2.0 ** (-(level + 1) / 2)


def faber_schauder(h: HierIndex, t):
    """Evaluate the Faber-Schauder basis function eta_{l,j} at t.

    Args:
        h: hierarchical index (level, position).
        t: scalar or array of times in [0, 1].

    Returns:
        eta_{0,1}(t) = t on level 0; on level l >= 1 the rescaled hat
        2^(-(l-1)/2) * eta(2^(l-1) t - j + 1) with eta the unit hat that
        rises on [0, 1/2] and falls on [1/2, 1].  Zero outside the support.
    """
    level, position = h
    _check_hier(level, position)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("t must lie in [0, 1]")
    if level == 0:
        return t if t.ndim else float(t)
    u = 2.0 ** (level - 1) * t - (position - 1)
    hat = np.clip(np.minimum(u, 1.0 - u), 0.0, None)
    out = 2.0 ** (-(level - 1) / 2) * hat
    return out if out.ndim else float(out)


def truncation_level(n_params: int) -> int:
    """Smallest level L whose full expansion holds n_params coefficients."""
    if n_params < 1:
        raise ValueError("need at least one coefficient")
    return max(0, (n_params - 1).bit_length())


def wiener_eval(y, t):
    """Evaluate the truncated expansion W(y, t) = sum_n y_n eta_n(t).

    Only one basis function per level is active at any t, so the cost is
    O(L) per query point regardless of the truncation dimension.

    Args:
        y: coefficient vector indexed by the linear index (trailing zeros implied).
        t: scalar or array of times in [0, 1].

    Returns:
        W(y, t), scalar if t is scalar.
    """
    y = np.asarray(y, dtype=float)
    assert y.ndim == 1, "coefficient vector must be one-dimensional"
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("t must lie in [0, 1]")
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    w = (y[0] if y.size else 0.0) * t
    max_level = truncation_level(y.size) if y.size else 0
    for level in range(1, max_level + 1):
        base = 2 ** (level - 1)
        s = t * base
        j0 = np.minimum(s.astype(int), base - 1)  # active hat, 0-based
        u = s - j0
        hat = np.minimum(u, 1.0 - u)
        n = base + j0
        valid = n < y.size
        coeff = np.where(valid, y[np.minimum(n, y.size - 1)], 0.0)
        w = w + coeff * 2.0 ** (-(level - 1) / 2) * hat
    return float(w[0]) if scalar else w


def wiener_on_dyadic(y, level: int) -> np.ndarray:
    """Path values W(y, t_k) on the dyadic grid t_k = k * 2^(-level)."""
    t = np.arange(2**level + 1) / 2.0**level
    return np.atleast_1d(wiener_eval(y, t))


def lc_coefficients(w, L: int) -> np.ndarray:
    """Extract the first 2^L hierarchical coefficients from dyadic path values.

    Args:
        w: samples of W at t_k = k * 2^(-L_path), k = 0..2^L_path, with w[0] = 0.
        L: number of levels to extract; requires L <= L_path.

    Returns:
        Coefficient vector y of length 2^L.  The level-0 coefficient is W(1);
        on level l >= 1 each coefficient is the scaled midpoint deviation
        2^((l+1)/2) * (W(mid) - (W(a) + W(b)) / 2) over the support [a, b].
        Reconstruction through wiener_eval matches w at every dyadic point of
        level <= L exactly.
    """
    w = np.asarray(w, dtype=float)
    assert w.ndim == 1 and w.size >= 2, "need path values on a dyadic grid"
    n_steps = w.size - 1
    L_path = n_steps.bit_length() - 1
    if 2**L_path != n_steps:
        raise ValueError("path length must be 2^L_path + 1")
    if L > L_path:
        raise ValueError(f"requested {L} levels but the path resolves only {L_path}")
    y = np.empty(2**L if L > 0 else 1)
    y[0] = w[-1]
    for level in range(1, L + 1):
        stride = 2 ** (L_path - level + 1)  # support width in samples
        a = w[0:-1:stride]
        b = w[stride::stride]
        mid = w[stride // 2 :: stride][: a.size]
        base = 2 ** (level - 1)
        y[base : 2 * base] = 2.0 ** ((level + 1) / 2) * (mid - 0.5 * (a + b))
    return y


def param_norm_alpha(y, alpha: float = 0.0) -> float:
    """Weighted norm sum_l max_j |y_{l,j}| * 2^(-(1-alpha) l / 2).

    Small alpha weighs fine levels down faster; alpha must satisfy
    0 <= alpha < 1 for the weights to decay.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return 0.0
    total = abs(float(y[0]))
    max_level = truncation_level(y.size)
    for level in range(1, max_level + 1):
        base = 2 ** (level - 1)
        block = y[base : min(2 * base, y.size)]
        if block.size == 0:
            break
        total += np.max(np.abs(block)) * 2.0 ** (-(1.0 - alpha) * level / 2)
    return float(total)


def sample_gaussian_params(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one i.i.d. standard normal coefficient vector of the given dimension."""
    assert dim >= 1
    return rng.standard_normal(dim)


def active_dimension(tau: float) -> int:
    """Number of leading coefficients that can influence W at multiples of tau.

    For tau = 2^(-k), basis functions on levels above k vanish at every time
    step, so only the first 2^k coordinates matter.
    """
    k = round(-math.log2(tau))
    if not math.isclose(tau, 2.0**-k):
        raise ValueError("tau must be a dyadic step 2^(-k)")
    return 2**k
