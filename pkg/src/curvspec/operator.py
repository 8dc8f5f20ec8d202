"""P1 finite-element assembly of L = -Laplacian - (alpha |h|^2 + beta |H|^2).

The discrete eigenproblem is ``(S - Q) u = lambda M u`` with the cotangent
stiffness ``S``, the lumped mass ``M`` and the potential matrix ``Q``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.io import mmwrite

from .errors import DegenerateFace, ObtuseWarning, ZeroVector
from .mesh import MeshGeometry

OBTUSE_FRACTION = 0.3
DEGENERATE_FACE_RATIO = 1e-12


@dataclass(frozen=True)
class AssembledOperator:
    S: sparse.csr_matrix
    Q: sparse.csr_matrix
    M: sparse.csr_matrix
    alpha: float
    beta: float
    c: float
    q: np.ndarray  # sampled potential alpha |h|^2 + beta |H|^2 per vertex
    geometry: MeshGeometry
    lumped: bool = True

    @property
    def A(self) -> sparse.csr_matrix:
        """The symmetric operator matrix ``S - Q``."""
        return (self.S - self.Q).tocsr()

    @property
    def n(self) -> int:
        return self.S.shape[0]


def cotangent_weights(lengths: np.ndarray, areas: np.ndarray) -> np.ndarray:
    """(F, 3) cotangents of the corner angles from edge lengths alone."""
    l2 = lengths**2
    cot = np.empty_like(lengths)
    for i in range(3):
        cot[:, i] = (l2[:, (i + 1) % 3] + l2[:, (i + 2) % 3] - l2[:, i]) / (4 * areas)
    return cot


def stiffness_matrix(mg: MeshGeometry) -> sparse.csr_matrix:
    """Weak form of -Laplacian: ``S_ij = -(cot a_ij + cot b_ij) / 2``."""
    faces = mg.mesh.faces
    n = mg.mesh.n_vertices
    cot = cotangent_weights(mg.lengths, mg.face_areas)
    rows, cols, vals = [], [], []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        w = -0.5 * cot[:, i]  # edge (j, k) is opposite corner i
        rows += [faces[:, j], faces[:, k]]
        cols += [faces[:, k], faces[:, j]]
        vals += [w, w]
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    off = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    S = (off + sparse.diags(diag)).tocsr()
    S.sum_duplicates()
    S.eliminate_zeros()
    return S


def lumped_mass(mg: MeshGeometry) -> sparse.csr_matrix:
    return sparse.diags(mg.vertex_areas).tocsr()


def consistent_mass(mg: MeshGeometry, weights=None) -> sparse.csr_matrix:
    """Consistent P1 mass, optionally weighted by a P1-interpolated vertex field."""
    faces = mg.mesh.faces
    n = mg.mesh.n_vertices
    A = mg.face_areas
    rows, cols, vals = [], [], []
    if weights is None:
        for i in range(3):
            for j in range(3):
                rows.append(faces[:, i])
                cols.append(faces[:, j])
                vals.append(A / 6 if i == j else A / 12)
    else:
        w = np.asarray(weights)[faces]  # (F, 3)
        # integral of phi_i phi_j phi_k over a triangle: A/10, A/30, A/60
        for i in range(3):
            for j in range(3):
                acc = np.zeros_like(A)
                for k in range(3):
                    same = len({i, j, k})
                    acc += w[:, k] * {1: 1 / 10, 2: 1 / 30, 3: 1 / 60}[same]
                rows.append(faces[:, i])
                cols.append(faces[:, j])
                vals.append(A * acc)
    return sparse.coo_matrix((np.concatenate(vals),
                              (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n)).tocsr()


def potential(mg: MeshGeometry, alpha: float, beta: float) -> np.ndarray:
    return alpha * mg.normh2 + beta * mg.normH2


def assemble(mg: MeshGeometry, alpha: float, beta: float,
             lumped: bool = True, S: sparse.csr_matrix = None) -> AssembledOperator:
    """Assemble stiffness, potential and mass matrices.

    Parameters
    ----------
    mg : MeshGeometry
    alpha, beta : float
        Potential ``q = alpha |h|^2 + beta |H|^2`` sampled at the vertices.
    lumped : bool
        Barycentric lumped mass (default) or consistent mass for cross-checks.
    S : csr_matrix, optional
        Precomputed stiffness of the same mesh, reused in parameter sweeps.

    Warns
    -----
    ObtuseWarning
        When more than 30% of the interior edge weights are negative.
    """
    A = mg.face_areas
    if np.any(A < DEGENERATE_FACE_RATIO * np.mean(A)):
        raise DegenerateFace(f"{int(np.count_nonzero(A < DEGENERATE_FACE_RATIO * np.mean(A)))}"
                             " face(s) with vanishing area")
    if S is None:
        S = stiffness_matrix(mg)
        upper = sparse.triu(S, k=1)
        negative = upper.data > 1e-12 * np.max(np.abs(upper.data), initial=0.0)
        if upper.nnz and np.count_nonzero(negative) > OBTUSE_FRACTION * upper.nnz:
            warnings.warn("more than 30% of cotangent edge weights are negative",
                          ObtuseWarning, stacklevel=2)
    q = potential(mg, alpha, beta)
    if lumped:
        M = lumped_mass(mg)
        Q = sparse.diags(q * mg.vertex_areas).tocsr()
    else:
        M = consistent_mass(mg)
        Q = consistent_mass(mg, q)
    return AssembledOperator(S, Q, M, float(alpha), float(beta), mg.c, q, mg, lumped)


def rayleigh(opr: AssembledOperator, u) -> float:
    """Discrete Rayleigh quotient ``u^T (S - Q) u / u^T M u``."""
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise ZeroVector("Rayleigh quotient of the zero vector")
    return float(u @ (opr.S @ u) - u @ (opr.Q @ u)) / float(u @ (opr.M @ u))


def export_matrix_market(opr: AssembledOperator, prefix) -> list:
    """Write ``S``, ``Q`` and ``M`` as symmetric MatrixMarket coordinate files."""
    paths = []
    for name in ("S", "Q", "M"):
        path = f"{prefix}_{name}.mtx"
        mmwrite(path, sparse.coo_matrix(getattr(opr, name)), symmetry="symmetric",
                comment=f"alpha={opr.alpha!r} beta={opr.beta!r}")
        paths.append(path)
    return paths
