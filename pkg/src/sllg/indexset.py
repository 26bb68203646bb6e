"""Multi-indices, downward-closed sets, and profit-driven set construction.

A multi-index assigns an interpolation level to finitely many parameter
dimensions.  Dimensions are the linear indices of the Brownian hat-function
expansion, so each dimension d carries a hierarchical level
ell(d) = ceil(log2(d+1)) that enters the profit formulas: coefficients on
deep hierarchical levels influence the path less, making refinement there
less valuable.  Index sets are built greedily, always selecting the
remaining multi-index of highest profit whose backward neighbors are all
selected; this keeps every prefix of the selection order downward-closed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator


class NonMonotoneProfitError(ValueError):
    """Raised when a dequeued multi-index has a higher profit than its parent."""


class MultiIndex:
    """Finitely supported map dimension -> level with all stored levels >= 1.

    Immutable and hashable.  Absent dimensions have level 0.
    """

    __slots__ = ("pairs", "_hash")

    def __init__(self, entries: Iterable[tuple[int, int]] | dict[int, int] = ()):
        if isinstance(entries, dict):
            items = entries.items()
        else:
            items = tuple(entries)
        pairs = tuple(sorted((int(d), int(l)) for d, l in items))
        seen = set()
        for d, l in pairs:
            if d < 0:
                raise ValueError(f"dimension must be >= 0, got {d}")
            if l < 1:
                raise ValueError(f"stored level must be >= 1, got {l} in dim {d}")
            if d in seen:
                raise ValueError(f"duplicate dimension {d}")
            seen.add(d)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_hash", hash(pairs))

    def __setattr__(self, *a):
        raise AttributeError("MultiIndex is immutable")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.pairs)

    @property
    def l1(self) -> int:
        return sum(l for _, l in self.pairs)

    @property
    def is_zero(self) -> bool:
        return not self.pairs

    @property
    def max_dim(self) -> int:
        """Largest active dimension; -1 for the zero index."""
        return self.pairs[-1][0] if self.pairs else -1

    def level(self, dim: int) -> int:
        for d, l in self.pairs:
            if d == dim:
                return l
        return 0

    def plus(self, dim: int) -> "MultiIndex":
        """Forward neighbor in the given dimension."""
        entries = dict(self.pairs)
        entries[dim] = entries.get(dim, 0) + 1
        return MultiIndex(entries)

    def minus(self, dim: int) -> "MultiIndex":
        """Backward neighbor in the given dimension; requires dim active."""
        entries = dict(self.pairs)
        if dim not in entries:
            raise KeyError(f"dimension {dim} not active")
        entries[dim] -= 1
        if entries[dim] == 0:
            del entries[dim]
        return MultiIndex(entries)

    def shortlex(self) -> tuple:
        """Tie-break key: total level first, then entry-wise lexicographic."""
        return (self.l1, self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndex) and self.pairs == other.pairs

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"MultiIndex({dict(self.pairs)!r})"


ZERO = MultiIndex()


def index_to_line(nu: MultiIndex) -> str:
    """Text form "dim:level,dim:level"; the zero index is the empty string."""
    return ",".join(f"{d}:{l}" for d, l in nu.pairs)


def index_from_line(line: str) -> MultiIndex:
    line = line.strip()
    if not line:
        return ZERO
    entries = []
    for item in line.split(","):
        d, _, l = item.partition(":")
        entries.append((int(d), int(l)))
    return MultiIndex(entries)


class IndexSet:
    """Finite downward-closed set of multi-indices containing the zero index.

    Membership order is preserved (construction order for built sets), so a
    prefix of an IndexSet built by profit expansion is again downward-closed.
    """

    __slots__ = ("members", "_set")

    def __init__(self, members: Iterable[MultiIndex], check: bool = True):
        members = tuple(members)
        mset = frozenset(members)
        if check:
            if len(mset) != len(members):
                raise ValueError("duplicate multi-indices")
            if ZERO not in mset:
                raise ValueError("index set must contain the zero index")
            for nu in members:
                for d in nu.support:
                    if nu.minus(d) not in mset:
                        raise ValueError(f"not downward-closed: missing {nu.minus(d)!r}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "_set", mset)

    def __setattr__(self, *a):
        raise AttributeError("IndexSet is immutable")

    def __contains__(self, nu: MultiIndex) -> bool:
        return nu in self._set

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __eq__(self, other) -> bool:
        return isinstance(other, IndexSet) and self._set == other._set

    def __hash__(self) -> int:
        return hash(self._set)

    def __repr__(self) -> str:
        return f"IndexSet({len(self.members)} members)"

    @property
    def support_size(self) -> int:
        """Number of active parameters: 1 + the largest dimension touched."""
        return max((nu.max_dim for nu in self.members), default=-1) + 1

    @property
    def max_level(self) -> int:
        return max((l for nu in self.members for _, l in nu.pairs), default=0)

    def to_text(self) -> str:
        """One multi-index per line in membership order."""
        return "\n".join(index_to_line(nu) for nu in self.members) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "IndexSet":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()  # trailing newline, not an extra zero index
        return cls(index_from_line(line) for line in lines)


def dim_level(dim: int) -> int:
    """Hierarchical level of a parameter dimension: ceil(log2(dim + 1))."""
    if dim < 0:
        raise ValueError(f"dimension must be >= 0, got {dim}")
    return int(dim).bit_length()


def work(nu: MultiIndex, p: int) -> float:
    """Work of refining to nu: prod over the support of p * 2^level."""
    out = 1.0
    for _, l in nu.pairs:
        out *= p * 2.0**l
    return out


def new_grid_points(nu: MultiIndex, p: int) -> int:
    """Number of grid points the index contributes beyond its backward closure.

    Each active dimension gains (p-1) * 2^level new 1D nodes relative to the
    previous level, so the tensor block contributes their product.
    """
    out = 1
    for _, l in nu.pairs:
        out *= (p - 1) * 2**l
    return out


@dataclass(frozen=True)
class ProfitParams:
    """Constants entering the profit formulas.

    variant selects the value model for level-1 entries: "basic" decays like
    2^(-ell/2) per activated dimension, "improved" like 2^(-3 ell/2).
    rho_scale multiplies every holomorphy radius (the epsilon of the basic
    model, gamma of the improved one); alpha shifts the radius exponents
    (the Hoelder exponent in the basic model, the tail parameter of the
    improved one).  Defaults reproduce the plain numeric profits.
    include_r_factor additionally multiplies each level-1 value by the count
    of same-hierarchical-level entries currently at level 1 (improved only).
    """

    p: int = 2
    variant: str = "improved"
    include_r_factor: bool = False
    c1: float = 1.0
    c2: float = 1.0
    rho_scale: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.variant not in ("basic", "improved"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.include_r_factor and self.variant == "basic":
            raise ValueError("the r factor belongs to the improved variant")

    @property
    def is_plain(self) -> bool:
        return (
            self.c1 == 1.0
            and self.c2 == 1.0
            and self.rho_scale == 1.0
            and self.alpha == 0.0
            and not self.include_r_factor
        )


def _plain_profit(nu: MultiIndex, p: int, one_weight: int) -> float:
    # Exact half-integer exponent arithmetic: mathematically equal profits
    # come out as identical floats, so ties are exact.
    s = 0  # log2 in units of 1/2
    for d, l in nu.pairs:
        ell = dim_level(d)
        if l == 1:
            s -= one_weight * ell
        else:
            s -= p * (2 * l + ell)
        s -= 2 * l
    return 2.0 ** (0.5 * s - len(nu.pairs) * math.log2(p))


def _general_profit(nu: MultiIndex, params: ProfitParams, one_exp: float) -> float:
    p = params.p
    if params.include_r_factor:
        r_count: dict[int, int] = {}
        for d, l in nu.pairs:
            if l == 1:
                ell = dim_level(d)
                r_count[ell] = r_count.get(ell, 0) + 1
    value = 1.0
    w = 1.0
    for d, l in nu.pairs:
        ell = dim_level(d)
        if l == 1:
            rho = params.rho_scale * 2.0 ** ((one_exp - params.alpha) * ell)
            if params.include_r_factor:
                rho /= r_count[ell]
            value *= params.c1 / rho
        else:
            rho = params.rho_scale * 2.0 ** ((0.5 - params.alpha) * ell)
            value *= params.c2 * (2.0**l * rho) ** (-p)
        w *= p * 2.0**l
    return value / w


def profit_basic(nu: MultiIndex, params: ProfitParams) -> float:
    """Profit under the basic value model (level-1 decay 2^(-ell/2))."""
    if params.variant != "basic":
        raise ValueError("params.variant must be 'basic'")
    if params.is_plain:
        return _plain_profit(nu, params.p, 1)
    return _general_profit(nu, params, 0.5)


def profit_improved(nu: MultiIndex, params: ProfitParams) -> float:
    """Profit under the improved value model (level-1 decay 2^(-3 ell/2))."""
    if params.variant != "improved":
        raise ValueError("params.variant must be 'improved'")
    if params.is_plain:
        return _plain_profit(nu, params.p, 3)
    return _general_profit(nu, params, 1.5)


def make_profit(params: ProfitParams) -> Callable[[MultiIndex], float]:
    """Bind a ProfitParams into a single-argument profit callable."""
    fn = profit_basic if params.variant == "basic" else profit_improved
    return lambda nu: fn(nu, params)


def quasi_optimal_stream(
    profit: Callable[[MultiIndex], float],
    max_dims: int | None = None,
    max_level: int | None = None,
) -> Iterator[MultiIndex]:
    """Yield multi-indices in decreasing-profit order, downward-closed prefixes.

    Best-first expansion: an index is enqueued once all its backward
    neighbors were yielded, so every prefix of the stream is a valid index
    set.  Ties are broken by the shortlex key.  New dimensions are activated
    in increasing order through their unit indices, which is exhaustive for
    profits that do not increase with the dimension number (true for the
    hierarchical families here).  A dequeued index whose profit exceeds its
    parent's signals a non-monotone profit and raises.

    max_dims / max_level truncate the search space (used for brute-force
    comparisons); None means unbounded.
    """
    # heap of (-profit, shortlex, index, -parent profit)
    start = ZERO
    heap = [(-profit(start), start.shortlex(), start, -math.inf)]
    pushed = {start}
    selected: set[MultiIndex] = set()
    fwd: dict[MultiIndex, set[int]] = {}

    def push(tau: MultiIndex, parent_neg: float) -> None:
        if tau in pushed:
            return
        if max_level is not None and any(l > max_level for _, l in tau.pairs):
            return
        pushed.add(tau)
        heapq.heappush(heap, (-profit(tau), tau.shortlex(), tau, parent_neg))

    while heap:
        neg_p, _, nu, parent_neg = heapq.heappop(heap)
        if neg_p < parent_neg:
            raise NonMonotoneProfitError(
                f"profit of {nu!r} ({-neg_p}) exceeds its parent's ({-parent_neg})"
            )
        selected.add(nu)
        for d in nu.support:
            fwd.setdefault(nu.minus(d), set()).add(d)
        yield nu

        if nu.is_zero:
            if max_dims is None or max_dims > 0:
                push(MultiIndex({0: 1}), neg_p)
            continue
        if len(nu.pairs) == 1 and nu.pairs[0][1] == 1:
            d = nu.pairs[0][0]
            if max_dims is None or d + 1 < max_dims:
                push(MultiIndex({d + 1: 1}), neg_p)
        # forward neighbors among already-active dimensions: nu + e_k is
        # admissible iff k lies in every fwd set of nu's backward neighbors
        sets = sorted((fwd.get(nu.minus(j), set()) for j in nu.support), key=len)
        candidates = set.intersection(*sets)
        for k in sorted(candidates):
            push(nu.plus(k), neg_p)


def build_quasi_optimal(
    profit: Callable[[MultiIndex], float],
    n: int,
    max_dims: int | None = None,
    max_level: int | None = None,
) -> IndexSet:
    """The n highest-profit multi-indices as a downward-closed IndexSet.

    Requires the profit to be non-increasing along forward neighbors; a
    detected violation raises NonMonotoneProfitError.  If the (truncated)
    search space holds fewer than n indices, all of them are returned.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    out = []
    for nu in quasi_optimal_stream(profit, max_dims=max_dims, max_level=max_level):
        out.append(nu)
        if len(out) == n:
            break
    return IndexSet(out, check=False)
