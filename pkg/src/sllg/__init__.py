"""Sparse-grid stochastic collocation for the stochastic Landau-Lifshitz-Gilbert equation.

Subpackages are organized bottom-up: `wiener` parametrizes Brownian paths by
hierarchical hat-function coefficients, `interp1d` provides weighted
piecewise-polynomial interpolation on the real line, `indexset` builds
quasi-optimal downward-closed multi-index sets, `sparsegrid` combines the
one-dimensional rules into sparse interpolants of path-dependent quantities,
`fem` and `llg` discretize the magnetization dynamics on the unit square, and
`collocation` assembles single-level and multilevel estimators.  `cli`
exposes the command line entry points.
"""

__version__ = "0.1.0"
