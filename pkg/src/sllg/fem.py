"""P1 finite elements on structured triangulations of the unit square.

Provides the mesh type, mass/stiffness assembly, element gradients,
nodal transfer between nested meshes, and the discrete norms used to
compare magnetization trajectories. Vector fields are plain arrays:
one row of length 3 per vertex.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix


class Mesh2D:
    """Uniform triangulation of [0,1]^2 with ``n`` squares per side.

    Vertices sit on a lattice with spacing ``h = 1/n`` and are numbered
    row by row, x fastest: vertex ``iy*(n+1) + ix`` is at ``(ix*h, iy*h)``.
    Each square splits into two congruent right triangles along the
    diagonal from its lower-left to its upper-right corner, so all
    angles are 45 or 90 degrees and the mesh is quasi-uniform by
    construction.
    """

    def __init__(self, n: int):
        n = int(n)
        if n < 1:
            raise ValueError("need at least one square per side")
        self.n = n
        self.h = 1.0 / n
        side = n + 1
        self.nv = side * side
        self.ne = 2 * n * n

        ii = np.arange(side)
        xx, yy = np.meshgrid(ii, ii)
        self.vertices = np.column_stack([xx.ravel(), yy.ravel()]) * self.h

        cx, cy = np.meshgrid(np.arange(n), np.arange(n))
        v00 = (cy * side + cx).ravel()
        v10 = v00 + 1
        v01 = v00 + side
        v11 = v01 + 1
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
        self.triangles = np.vstack([lower, upper])

        ix = self.vertices[:, 0]
        iy = self.vertices[:, 1]
        self.boundary_mask = (ix == 0.0) | (ix == 1.0) | (iy == 0.0) | (iy == 1.0)

    def __repr__(self) -> str:
        return f"Mesh2D(n={self.n})"

    @cached_property
    def _geometry(self):
        p = self.vertices[self.triangles]  # (ne, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        areas = 0.5 * np.abs(det)
        # gradient of the barycentric basis: rotate the opposite edge
        grads = np.empty((self.ne, 3, 2))
        for i in range(3):
            edge = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
            grads[:, i, 0] = -edge[:, 1]
            grads[:, i, 1] = edge[:, 0]
        grads /= det[:, None, None]
        return areas, grads

    @property
    def areas(self) -> np.ndarray:
        return self._geometry[0]

    @property
    def basis_gradients(self) -> np.ndarray:
        """Per-element gradients of the three nodal basis functions, (ne, 3, 2)."""
        return self._geometry[1]

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def _scatter(self, local: np.ndarray) -> csr_matrix:
        tri = self.triangles
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        mat = coo_matrix((local.ravel(), (rows, cols)), shape=(self.nv, self.nv))
        return mat.tocsr()

    @cached_property
    def mass(self) -> csr_matrix:
        """Consistent P1 mass matrix (exact element integrals)."""
        areas, _ = self._geometry
        local = (np.ones((3, 3)) + np.eye(3)) / 12.0
        return self._scatter(areas[:, None, None] * local)

    @cached_property
    def stiffness(self) -> csr_matrix:
        areas, grads = self._geometry
        local = np.einsum("e,eik,ejk->eij", areas, grads, grads)
        return self._scatter(local)

    @cached_property
    def stiffness_coo(self):
        """Stiffness entries as (rows, cols, values) for block expansion."""
        a = self.stiffness.tocoo()
        return a.row, a.col, a.data

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        """Row-sum (lumped) mass, one positive weight per vertex."""
        areas, _ = self._geometry
        w = np.zeros(self.nv)
        np.add.at(w, self.triangles.ravel(), np.repeat(areas / 3.0, 3))
        return w

    @cached_property
    def h1_matrix(self) -> csr_matrix:
        """Gram matrix of the full H1 inner product (mass plus stiffness)."""
        return (self.mass + self.stiffness).tocsr()

    def element_gradient(self, u: np.ndarray) -> np.ndarray:
        """Gradient of a P1 field, constant per element.

        ``u`` has shape (nv,) or (nv, c); the result has shape (ne, 2)
        or (ne, 2, c).
        """
        _, grads = self._geometry
        return np.einsum("eik,ei...->ek...", grads, u[self.triangles])


def prolong_field(u: np.ndarray, n_coarse: int) -> np.ndarray:
    """Nodal transfer from an n-squares mesh to the 2n refinement.

    Evaluates the piecewise-linear coarse field at the fine vertices:
    coarse vertices carry over, edge midpoints average their endpoints,
    and cell centers average the two ends of the split diagonal. The
    result represents the same continuous function on the finer mesh.
    """
    side_c = n_coarse + 1
    if u.shape[0] != side_c * side_c:
        raise ValueError("field size does not match the coarse mesh")
    rest = u.shape[1:]
    uc = u.reshape((side_c, side_c) + rest)
    side_f = 2 * n_coarse + 1
    uf = np.empty((side_f, side_f) + rest, dtype=u.dtype)
    uf[::2, ::2] = uc
    uf[::2, 1::2] = 0.5 * (uc[:, :-1] + uc[:, 1:])
    uf[1::2, ::2] = 0.5 * (uc[:-1, :] + uc[1:, :])
    uf[1::2, 1::2] = 0.5 * (uc[:-1, :-1] + uc[1:, 1:])
    return uf.reshape((side_f * side_f,) + rest)


def prolong_to(u: np.ndarray, n_coarse: int, n_fine: int) -> np.ndarray:
    """Transfer a nodal field across one or more nested refinements."""
    if n_fine < n_coarse or n_fine % n_coarse:
        raise ValueError("target mesh does not refine the source mesh")
    ratio = n_fine // n_coarse
    if ratio & (ratio - 1):
        raise ValueError("meshes are not nested: refinement ratio must be a power of two")
    n = n_coarse
    while n < n_fine:
        u = prolong_field(u, n)
        n *= 2
    return u


def h1_inner(mesh: Mesh2D, u: np.ndarray, v: np.ndarray) -> float:
    """Full H1 inner product, summed over vector components."""
    gu = mesh.h1_matrix @ u
    return float(np.sum(gu * v))


def h1_norm(mesh: Mesh2D, u: np.ndarray) -> float:
    return np.sqrt(max(h1_inner(mesh, u, u), 0.0))


def exchange_energy(mesh: Mesh2D, u: np.ndarray) -> float:
    """Dirichlet energy 0.5 * integral of |grad u|^2, exact for P1."""
    su = mesh.stiffness @ u
    return 0.5 * float(np.sum(su * u))
