"""Sample-path solver for the random-coefficient Landau-Lifshitz-Gilbert equation.

The driving Wiener path is absorbed into the equation by a rotation
about the (unit) noise direction g, which turns the stochastic problem
into a PDE with a pathwise-smooth random coefficient. This module
implements the resulting operator algebra (G, exp(sG), the zero-order
coefficient operator), a first-order tangent-plane time stepper with P1
finite elements, the rotation back to the original unknown, and the
space-time norms used to compare trajectories.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix, diags
from scipy.sparse.linalg import gmres

from .fem import Mesh2D, exchange_energy, prolong_to
from .wiener import wiener_eval


class SolverError(RuntimeError):
    """Raised when the per-step linear solve fails to converge."""


@dataclass(frozen=True)
class NoiseCoefficient:
    """Noise direction g and model parameters.

    ``g``, ``grad_g``, ``lap_g`` are callables on points of the closed
    unit square: given an array of shape (..., 2) they return arrays of
    shape (..., 3), (..., 2, 3) and (..., 3) respectively. The rotation
    algebra requires |g| = 1 pointwise (g identically zero is also
    accepted; it switches the noise off). ``scale`` multiplies the
    driving path, so amplitude never lives in g itself.

    ``lam`` is the damping parameter entering the time stepper. ``lam1``
    and ``lam2`` weight the precession and damping terms of the strong
    form; the built-in stepper is derived for the default value 1 of
    both and rejects anything else.
    """

    g: Callable[[np.ndarray], np.ndarray]
    grad_g: Callable[[np.ndarray], np.ndarray]
    lap_g: Callable[[np.ndarray], np.ndarray]
    lam: float = 1.0
    lam1: float = 1.0
    lam2: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("damping parameter must be positive")


def example_coefficient(scale: float = 1.0, lam: float = 1.0) -> NoiseCoefficient:
    """Built-in smooth unit field: cosine profiles in x and y.

    g = (-cos(pi x1)/2, -cos(pi x2)/2, sqrt(1 - cos^2(pi x1)/4 - cos^2(pi x2)/4)).

    |g| = 1 everywhere and the normal derivative vanishes on the
    boundary of the square. Gradient and Laplacian are analytic.
    """

    def _parts(x):
        x = np.asarray(x, dtype=float)
        a = 0.5 * np.cos(np.pi * x[..., 0])
        b = 0.5 * np.cos(np.pi * x[..., 1])
        ap = -0.5 * np.pi * np.sin(np.pi * x[..., 0])
        bp = -0.5 * np.pi * np.sin(np.pi * x[..., 1])
        w = np.sqrt(1.0 - a * a - b * b)
        return a, b, ap, bp, w

    def g(x):
        a, b, _, _, w = _parts(x)
        return np.stack([-a, -b, w], axis=-1)

    def grad_g(x):
        a, b, ap, bp, w = _parts(x)
        zero = np.zeros_like(a)
        dx = np.stack([-ap, zero, -a * ap / w], axis=-1)
        dy = np.stack([zero, -bp, -b * bp / w], axis=-1)
        return np.stack([dx, dy], axis=-2)

    def lap_g(x):
        a, b, ap, bp, w = _parts(x)
        pi2 = np.pi * np.pi
        # second derivatives of the third component via a'' = -pi^2 a
        dxx = -(ap * ap - pi2 * a * a) / w - (a * ap) ** 2 / w**3
        dyy = -(bp * bp - pi2 * b * b) / w - (b * bp) ** 2 / w**3
        return np.stack([pi2 * a, pi2 * b, dxx + dyy], axis=-1)

    return NoiseCoefficient(g, grad_g, lap_g, lam=lam, scale=scale)


def constant_coefficient(
    direction=(0.0, 0.0, 1.0), scale: float = 1.0, lam: float = 1.0
) -> NoiseCoefficient:
    """Spatially constant g; its gradient and Laplacian vanish."""
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,):
        raise ValueError("direction must be a 3-vector")

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(d, x.shape[:-1] + (3,)).copy()

    def grad_g(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (2, 3))

    def lap_g(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (3,))

    return NoiseCoefficient(g, grad_g, lap_g, lam=lam, scale=scale)


def constant_field(mesh: Mesh2D, direction=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Nodal field with the same unit 3-vector at every vertex."""
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,) or not np.isclose(np.linalg.norm(d), 1.0):
        raise ValueError("direction must be a unit 3-vector")
    return np.tile(d, (mesh.nv, 1))


def coefficient_field(mesh: Mesh2D, coeff: NoiseCoefficient) -> np.ndarray:
    """Evaluate g at the mesh vertices, e.g. to use it as initial state."""
    vals = np.asarray(coeff.g(mesh.vertices), dtype=float)
    if vals.shape != (mesh.nv, 3):
        raise ValueError("coefficient returned a field of the wrong shape")
    return vals


# ---------------------------------------------------------------------------
# pointwise operator algebra


def _factor(x):
    arr = np.asarray(x, dtype=float)
    return arr[..., None] if arr.ndim else arr


def apply_G(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """G v = v x g, applied pointwise."""
    return np.cross(v, g)


def apply_exp_sG(s, v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Rotation exp(sG) v = v + sin(s) Gv + (1 - cos s) G^2 v.

    Exact for |g| = 1 (and trivially for g = 0). ``s`` may be a scalar
    or an array broadcastable against the point axes of ``v``.
    """
    gv = np.cross(v, g)
    ggv = np.cross(gv, g)
    sn = _factor(np.sin(s))
    om = _factor(1.0 - np.cos(np.asarray(s, dtype=float)))
    return v + sn * gv + om * ggv


def cal_C(v, grad_v, grad_g, lap_g):
    """Zero-order coupling operator: C v = v x lap_g + 2 sum_j d_j v x d_j g."""
    return np.cross(v, lap_g) + 2.0 * np.cross(grad_v, grad_g).sum(axis=-2)


def _grad_of_Gv(v, grad_v, g, grad_g):
    # product rule: d_j (v x g) = d_j v x g + v x d_j g
    return np.cross(grad_v, g[..., None, :]) + np.cross(v[..., None, :], grad_g)


def cal_E(s, v, grad_v, g, grad_g, lap_g):
    """E(s, v) = sin(s) C v + (1 - cos s) (CG + GC) v."""
    cv = cal_C(v, grad_v, grad_g, lap_g)
    gv = np.cross(v, g)
    cgv = cal_C(gv, _grad_of_Gv(v, grad_v, g, grad_g), grad_g, lap_g)
    gcv = np.cross(cv, g)
    sn = _factor(np.sin(s))
    om = _factor(1.0 - np.cos(np.asarray(s, dtype=float)))
    return sn * cv + om * (cgv + gcv)


def apply_Chat(s, v, grad_v, g, grad_g, lap_g):
    """Rotated coupling operator exp(-sG) E(s, v), written out as six terms.

    The six-term sum groups the trigonometric weights in front of fixed
    linear operators; an equivalent compact evaluation is
    ``apply_exp_sG(-s, cal_E(s, v, ...), g)``.
    """
    cv = cal_C(v, grad_v, grad_g, lap_g)
    gv = np.cross(v, g)
    cgv = cal_C(gv, _grad_of_Gv(v, grad_v, g, grad_g), grad_g, lap_g)
    gcv = np.cross(cv, g)
    mix = cgv + gcv
    g_mix = np.cross(mix, g)
    gg_mix = np.cross(g_mix, g)
    gg_cv = np.cross(gcv, g)
    sn = _factor(np.sin(s))
    om = _factor(1.0 - np.cos(np.asarray(s, dtype=float)))
    return (
        sn * cv
        + om * mix
        - sn * sn * gcv
        - sn * om * g_mix
        + om * sn * gg_cv
        + om * om * gg_mix
    )


# ---------------------------------------------------------------------------
# time stepping


class _BoundCoefficient:
    """Coefficient data evaluated once on a fixed mesh."""

    __slots__ = ("mesh", "coeff", "g_nodes", "g_cent", "grad_g_cent", "lap_g_cent")

    def __init__(self, mesh: Mesh2D, coeff: NoiseCoefficient):
        if (coeff.lam1, coeff.lam2) != (1.0, 1.0):
            raise ValueError("the built-in stepper is derived for lam1 = lam2 = 1")
        self.mesh = mesh
        self.coeff = coeff
        self.g_nodes = np.asarray(coeff.g(mesh.vertices), dtype=float)
        if self.g_nodes.shape != (mesh.nv, 3):
            raise ValueError("coefficient returned a field of the wrong shape")
        amp = np.linalg.norm(self.g_nodes, axis=1)
        unit = np.allclose(amp, 1.0, atol=1e-10)
        zero = float(amp.max(initial=0.0)) == 0.0
        if coeff.scale != 0.0 and not (unit or zero):
            raise ValueError("rotation algebra needs |g| = 1 (or g = 0) at the nodes")
        cent = mesh.centroids
        self.g_cent = np.asarray(coeff.g(cent), dtype=float)
        self.grad_g_cent = np.asarray(coeff.grad_g(cent), dtype=float)
        self.lap_g_cent = np.asarray(coeff.lap_g(cent), dtype=float)
        if self.g_cent.shape != (mesh.ne, 3):
            raise ValueError("coefficient returned a field of the wrong shape")
        if self.grad_g_cent.shape != (mesh.ne, 2, 3):
            raise ValueError("coefficient gradient has the wrong shape")
        if self.lap_g_cent.shape != (mesh.ne, 3):
            raise ValueError("coefficient Laplacian has the wrong shape")


def tangent_frames(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent plane at each vertex, shape (nv, 2, 3).

    The frame (t1, t2, m) is right-handed, so t1 x t2 = m.
    """
    m = np.asarray(m, dtype=float)
    ref = np.zeros_like(m)
    use_x = np.abs(m[:, 0]) <= 0.9
    ref[use_x, 0] = 1.0
    ref[~use_x, 1] = 1.0
    t1 = np.cross(m, ref)
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(m, t1)
    return np.stack([t1, t2], axis=1)


_BLOCK_ROW = np.array([[0, 0], [1, 1]])
_BLOCK_COL = np.array([[0, 1], [0, 1]])


def _tangent_matrix(mesh: Mesh2D, frames: np.ndarray, lam: float, tau: float):
    """System matrix in per-vertex tangent coordinates (2 unknowns per vertex).

    Zero-order terms (damping and the skew precession block) use the
    lumped mass; the exchange term couples frames across vertices
    through the scalar stiffness entries.
    """
    rows_a, cols_a, vals_a = mesh.stiffness_coo
    blocks = np.einsum("kab,kcb->kac", frames[rows_a], frames[cols_a])
    blocks *= (tau * vals_a)[:, None, None]
    rr = (2 * rows_a)[:, None, None] + _BLOCK_ROW
    cc = (2 * cols_a)[:, None, None] + _BLOCK_COL

    w = mesh.lumped_mass
    even = 2 * np.arange(mesh.nv)
    diag_rows = np.concatenate([even, even, even + 1, even + 1])
    diag_cols = np.concatenate([even, even + 1, even, even + 1])
    diag_vals = np.concatenate([lam * w, -w, w, lam * w])

    data = np.concatenate([blocks.ravel(), diag_vals])
    rows = np.concatenate([rr.ravel(), diag_rows])
    cols = np.concatenate([cc.ravel(), diag_cols])
    size = 2 * mesh.nv
    return coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()


_GMRES_RTOL = 1e-10
_GMRES_RESTART = 60
_GMRES_MAXITER = 50


def _solve_tangent(matrix, rhs):
    scale = matrix.diagonal()
    precond = diags(1.0 / scale)
    x, info = gmres(
        matrix,
        rhs,
        rtol=_GMRES_RTOL,
        atol=0.0,
        restart=_GMRES_RESTART,
        maxiter=_GMRES_MAXITER,
        M=precond,
    )
    if info != 0:
        raise SolverError(f"tangent-plane solve did not reach the residual target (info={info})")
    return x


def _step(m: np.ndarray, tau: float, s: float, data: _BoundCoefficient) -> np.ndarray:
    mesh = data.mesh
    frames = tangent_frames(m)
    matrix = _tangent_matrix(mesh, frames, data.coeff.lam, tau)

    rhs = -(mesh.stiffness @ m)
    tri = mesh.triangles
    v_cent = m[tri].mean(axis=1)
    grad_m = mesh.element_gradient(m)  # (ne, 2, 3)
    chat = apply_Chat(s, v_cent, grad_m, data.g_cent, data.grad_g_cent, data.lap_g_cent)
    scaled = chat * (mesh.areas / 3.0)[:, None]
    load = np.zeros((mesh.nv, 3))
    np.add.at(load, tri.ravel(), np.repeat(scaled, 3, axis=0))
    rhs = rhs + load

    b = np.einsum("iab,ib->ia", frames, rhs).ravel()
    vt = _solve_tangent(matrix, b)
    v = np.einsum("ia,iab->ib", vt.reshape(-1, 2), frames)

    z = m + tau * v
    zn = np.linalg.norm(z, axis=1)
    # |z|^2 = 1 + tau^2 |v|^2 by tangency, so z never vanishes
    assert zn.min() > 0.0
    return z / zn[:, None]


def step_tangent_plane(
    m: np.ndarray,
    t: float,
    tau: float,
    w_value: float,
    coeff: NoiseCoefficient,
    mesh: Mesh2D,
    data: Optional[_BoundCoefficient] = None,
) -> np.ndarray:
    """One step of the first-order tangent-plane scheme.

    Solves for the tangential update v (v . m = 0 at every vertex) from

        lam <v, phi> + <m x v, phi> + tau <grad v, grad phi>
            = -<grad m, grad phi> + <Chat(w, m), phi>

    for all tangent test fields phi, then renormalizes m + tau*v at the
    vertices. Only the exchange term is implicit; the coupling term is
    evaluated at the step's left endpoint through ``w_value`` (``t`` is
    bookkeeping only, the update is autonomous given ``w_value``).
    Zero-order products use the lumped mass, the coupling load a
    one-point centroid rule, and the exchange term exact P1 integrals.
    """
    if data is None:
        data = _BoundCoefficient(mesh, coeff)
    m = np.asarray(m, dtype=float)
    if m.shape != (mesh.nv, 3):
        raise ValueError("magnetization field has the wrong shape")
    del t
    return _step(m, tau, coeff.scale * w_value, data)


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-discrete magnetization path: fields[k] is the state at time k*tau."""

    tau: float
    y: Optional[np.ndarray]
    mesh: Mesh2D
    coeff: Optional[NoiseCoefficient]
    fields: np.ndarray  # (steps + 1, nv, 3)

    @property
    def steps(self) -> int:
        return self.fields.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.fields.shape[0]) * self.tau


def _dyadic_steps(tau: float) -> int:
    if not 0.0 < tau <= 1.0:
        raise ValueError("time step must lie in (0, 1]")
    steps = int(round(1.0 / tau))
    if steps & (steps - 1) or steps * tau != 1.0:
        raise ValueError("time step must be 2**-k for an integer k >= 0")
    return steps


def sample_path(
    y: np.ndarray,
    tau: float,
    mesh: Mesh2D,
    coeff: NoiseCoefficient,
    m0: np.ndarray,
) -> Trajectory:
    """Integrate one sample path for the parameter vector ``y``.

    The driving path is the hat-basis expansion with coefficients ``y``
    evaluated at the step times (all dyadic, so the evaluation is
    exact). Deterministic: identical inputs give bit-identical output.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    steps = _dyadic_steps(tau)
    m0 = np.asarray(m0, dtype=float)
    if m0.shape != (mesh.nv, 3):
        raise ValueError("initial state has the wrong shape")
    if np.abs(np.linalg.norm(m0, axis=1) - 1.0).max() > 1e-9:
        raise ValueError("initial state must have unit length at every vertex")
    data = _BoundCoefficient(mesh, coeff)
    times = np.arange(steps + 1) * tau
    w = wiener_eval(y, times)
    fields = np.empty((steps + 1, mesh.nv, 3))
    fields[0] = m0
    for k in range(steps):
        fields[k + 1] = _step(fields[k], tau, coeff.scale * w[k], data)
    return Trajectory(tau=tau, y=y.copy(), mesh=mesh, coeff=coeff, fields=fields)


def inverse_doss_sussmann(traj: Trajectory, y: Optional[np.ndarray] = None) -> Trajectory:
    """Rotate a trajectory back to the original unknown: M = exp(W(t) G) m."""
    if y is None:
        y = traj.y
    if y is None or traj.coeff is None:
        raise ValueError("trajectory does not carry parameters or a coefficient")
    y = np.asarray(y, dtype=float).reshape(-1)
    data = _BoundCoefficient(traj.mesh, traj.coeff)
    s = traj.coeff.scale * wiener_eval(y, traj.times)
    rotated = apply_exp_sG(s[:, None], traj.fields, data.g_nodes)
    return Trajectory(tau=traj.tau, y=y.copy(), mesh=traj.mesh, coeff=traj.coeff, fields=rotated)


def norm_L2t_H1x(a: Trajectory, b: Trajectory) -> float:
    """Space-time distance: rectangle rule in time of the H1 norm in space.

    Trajectories on different meshes must be nested; both are
    transferred to the finer mesh (the transfer reproduces the same
    piecewise-linear function). If the time steps differ, the finer
    trajectory is restricted to the coarser step sequence. The rule uses
    right endpoints, so the (identical or not) initial states never
    contribute.
    """
    fa, fb = a.fields, b.fields
    na, nb = a.mesh.n, b.mesh.n
    fine = a.mesh if na >= nb else b.mesh
    if na < nb:
        fa = np.stack([prolong_to(f, na, nb) for f in fa])
    elif nb < na:
        fb = np.stack([prolong_to(f, nb, na) for f in fb])

    tau = max(a.tau, b.tau)
    for f, t in ((fa, a.tau), (fb, b.tau)):
        ratio = int(round(tau / t))
        if ratio * t != tau or ratio & (ratio - 1):
            raise ValueError("time steps are not nested")
    fa = fa[:: int(round(tau / a.tau))]
    fb = fb[:: int(round(tau / b.tau))]
    if fa.shape != fb.shape:
        raise ValueError("trajectories cover different time ranges")

    d = (fa - fb)[1:]
    x = d.transpose(1, 0, 2).reshape(fine.nv, -1)
    total = tau * float(np.sum(x * (fine.h1_matrix @ x)))
    return np.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# diagnostics and on-disk formats


def trajectory_diagnostics(traj: Trajectory):
    """Rows (step, time, exchange energy, worst nodal deviation of |m| from 1)."""
    rows = []
    for k in range(traj.fields.shape[0]):
        f = traj.fields[k]
        energy = exchange_energy(traj.mesh, f)
        merr = float(np.abs(np.linalg.norm(f, axis=1) - 1.0).max())
        rows.append((k, k * traj.tau, energy, merr))
    return rows


def diagnostics_csv(traj: Trajectory) -> str:
    lines = ["step,time,energy,modulus_error"]
    for k, t, energy, merr in trajectory_diagnostics(traj):
        lines.append(f"{k},{float(t)!r},{float(energy)!r},{merr!r}")
    return "\n".join(lines) + "\n"


_HEADER = struct.Struct("<IdI")


def save_trajectory(path, traj: Trajectory) -> None:
    """Flat binary snapshot: header (n, tau, steps), then little-endian
    doubles, vertex-major within each stored state."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(traj.mesh.n, traj.tau, traj.steps))
        fh.write(np.ascontiguousarray(traj.fields, dtype="<f8").tobytes())


def load_trajectory(path) -> Trajectory:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated trajectory file")
    n, tau, steps = _HEADER.unpack_from(raw)
    mesh = Mesh2D(n)
    count = (steps + 1) * mesh.nv * 3
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != count:
        raise ValueError("trajectory file size does not match its header")
    fields = body.reshape(steps + 1, mesh.nv, 3).copy()
    return Trajectory(tau=tau, y=None, mesh=mesh, coeff=None, fields=fields)
