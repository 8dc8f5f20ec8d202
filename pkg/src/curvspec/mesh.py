"""Triangulations of sphere- and torus-type parameter domains.

Meshes keep two views of every face: vertex indices into the (wrapped) vertex
list, used for topology and assembly, and the face's corner positions
evaluated at unwrapped parameter values, used for all metric quantities. The
second view makes non-periodic charts of tori (the planar flat torus) give the
correct edge lengths across the gluing seam.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .catalog import CatalogEntry
from .errors import DomainMismatch, NotClosed
from .geometry import Immersion, SurfaceFields, surface_fields

# fixed generic rotation so that no icosphere vertex sits on a pole of the polar chart
_c, _s = np.cos, np.sin
_a, _b, _g = 0.31, 0.53, 0.17
_ICO_ROTATION = (
    np.array([[_c(_a), -_s(_a), 0], [_s(_a), _c(_a), 0], [0, 0, 1]])
    @ np.array([[1, 0, 0], [0, _c(_b), -_s(_b)], [0, _s(_b), _c(_b)]])
    @ np.array([[_c(_g), 0, _s(_g)], [0, 1, 0], [-_s(_g), 0, _c(_g)]])
)


@dataclass
class SurfaceMesh:
    immersion: Immersion
    params: np.ndarray  # (V, 2)
    positions: np.ndarray  # (V, D)
    faces: np.ndarray  # (F, 3)
    corner_params: np.ndarray  # (F, 3, 2), unwrapped
    corner_positions: np.ndarray  # (F, 3, D)
    identification: str
    level: int

    @property
    def n_vertices(self) -> int:
        return len(self.params)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


def _as_immersion(surface) -> Immersion:
    return surface.immersion if isinstance(surface, CatalogEntry) else surface


def icosahedron() -> Tuple[np.ndarray, np.ndarray]:
    """Unit icosahedron with outward-oriented faces."""
    t = (1 + np.sqrt(5)) / 2
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v, f


def subdivide(verts: np.ndarray, faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One step of 1-to-4 midpoint subdivision, midpoints pushed to the sphere."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = verts[uniq[:, 0]] + verts[uniq[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    nf = len(faces)
    m01, m12, m20 = (len(verts) + inv[k * nf:(k + 1) * nf] for k in range(3))
    a, b, c = faces.T
    new = np.concatenate([
        np.stack([a, m01, m20], 1), np.stack([b, m12, m01], 1),
        np.stack([c, m20, m12], 1), np.stack([m01, m12, m20], 1)])
    return np.vstack([verts, mid]), new


def icosphere(level: int) -> Tuple[np.ndarray, np.ndarray]:
    v, f = icosahedron()
    for _ in range(level):
        v, f = subdivide(v, f)
    return v, f


def mesh_sphere(surface: Union[Immersion, CatalogEntry], level: int) -> SurfaceMesh:
    """Icosphere of the given subdivision level pushed through a polar chart.

    Has ``10 * 4**level + 2`` vertices.
    """
    imm = _as_immersion(surface)
    if imm.identification != "sphere":
        raise DomainMismatch(
            f"mesh_sphere needs a sphere-type chart, got {imm.identification!r}")
    if level < 0:
        raise ValueError("level must be >= 0")
    p, faces = icosphere(level)
    p = p @ _ICO_ROTATION.T
    theta = np.arccos(np.clip(p[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)
    params = np.stack([theta, phi], 1)
    X = imm.position(theta, phi)
    return SurfaceMesh(imm, params, X, faces, params[faces], X[faces], "sphere", level)


def mesh_torus(surface: Union[Immersion, CatalogEntry], nu: int, nv: int,
               origin: Tuple[float, float] = (0.0, 0.0), level: int = -1) -> SurfaceMesh:
    """``nu x nv`` grid on the unit parameter square, two triangles per cell.

    Each cell is split along its shorter ambient diagonal (measured on the
    first cell); ``origin`` shifts the grid in parameter space.
    """
    imm = _as_immersion(surface)
    if imm.identification != "torus":
        raise DomainMismatch(
            f"mesh_torus needs a torus quotient chart, got {imm.identification!r}")
    if nu < 3 or nv < 3:
        raise ValueError("torus grids need nu, nv >= 3")
    s0, t0 = origin
    amb = imm.ambient
    I, J = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    I, J = I.ravel(), J.ravel()
    params = np.stack([(I + s0) / nu, (J + t0) / nv], 1)
    X = imm.position(params[:, 0], params[:, 1])

    def p(i, j):
        return np.stack([(i + s0) / nu, (j + t0) / nv], -1)

    corners0 = imm.position(*p(np.array([0, 1, 0, 1.0]), np.array([0, 0, 1, 1.0])).T)
    dd = corners0[1] - corners0[2]
    da = corners0[3] - corners0[0]
    short_bc = amb.inner(dd, dd) <= amb.inner(da, da)

    idx = lambda i, j: (i % nu) * nv + (j % nv)
    a, b, c, d = idx(I, J), idx(I + 1, J), idx(I, J + 1), idx(I + 1, J + 1)
    pa, pb, pc, pd = p(I, J), p(I + 1, J), p(I, J + 1), p(I + 1, J + 1)
    if short_bc:
        faces = np.concatenate([np.stack([a, b, c], 1), np.stack([b, d, c], 1)])
        cp = np.concatenate([np.stack([pa, pb, pc], 1), np.stack([pb, pd, pc], 1)])
    else:
        faces = np.concatenate([np.stack([a, b, d], 1), np.stack([a, d, c], 1)])
        cp = np.concatenate([np.stack([pa, pb, pd], 1), np.stack([pa, pd, pc], 1)])
    cX = imm.position(cp[..., 0], cp[..., 1])
    return SurfaceMesh(imm, params, X, faces, cp, cX, "torus", level)


def torus_grid_size(level: int) -> int:
    """Torus refinement level ``l`` is the ``2**l x 2**l`` grid."""
    return 2**level


def mesh_surface(surface: Union[Immersion, CatalogEntry], level: int) -> SurfaceMesh:
    """Mesh any supported catalog surface at an integer refinement level."""
    imm = _as_immersion(surface)
    if imm.identification == "sphere":
        return mesh_sphere(imm, level)
    if imm.identification == "torus":
        n = torus_grid_size(level)
        return mesh_torus(imm, n, n, level=level)
    raise DomainMismatch(
        f"no mesher for {imm.identification!r} charts (orientable meshes only)")


# ---------------------------------------------------------------------------
# topology


def edge_counts(faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unique undirected edges and the number of faces incident to each."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0, return_counts=True)


def euler_genus(mesh_or_faces) -> Tuple[int, int]:
    """Euler characteristic ``V - E + F`` and orientable genus ``(2 - chi) / 2``."""
    if isinstance(mesh_or_faces, SurfaceMesh):
        faces = mesh_or_faces.faces
    else:
        faces = np.asarray(mesh_or_faces)
    edges, counts = edge_counts(faces)
    if np.any(counts != 2):
        raise NotClosed(f"{int(np.count_nonzero(counts != 2))} edge(s) without "
                        "exactly two incident faces")
    V = len(np.unique(faces))
    chi = V - len(edges) + len(faces)
    return int(chi), (2 - int(chi)) // 2


def is_consistently_oriented(faces: np.ndarray) -> bool:
    """Every directed edge appears once, so neighbours traverse shared edges oppositely."""
    he = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return len(np.unique(he, axis=0)) == len(he)


# ---------------------------------------------------------------------------
# metric data


def edge_lengths(mesh: SurfaceMesh) -> np.ndarray:
    """(F, 3) ambient chord lengths; column i is the edge opposite corner i."""
    amb = mesh.immersion.ambient
    P = mesh.corner_positions
    out = np.empty(mesh.faces.shape)
    for i in range(3):
        d = P[:, (i + 2) % 3] - P[:, (i + 1) % 3]
        out[:, i] = np.sqrt(np.maximum(amb.inner(d, d), 0.0))
    return out


def triangle_areas(lengths: np.ndarray) -> np.ndarray:
    """Heron's formula in the numerically stable ordering of Kahan."""
    s = -np.sort(-lengths, axis=1)
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def corner_angles(lengths: np.ndarray) -> np.ndarray:
    """(F, 3) interior angles; column i is the angle at corner i."""
    out = np.empty(lengths.shape)
    for i in range(3):
        a = lengths[:, i]
        b = lengths[:, (i + 1) % 3]
        c = lengths[:, (i + 2) % 3]
        out[:, i] = np.arccos(np.clip((b * b + c * c - a * a) / (2 * b * c), -1, 1))
    return out


def angle_defects(mesh: SurfaceMesh) -> np.ndarray:
    ang = corner_angles(edge_lengths(mesh))
    total = np.bincount(mesh.faces.ravel(), weights=ang.ravel(),
                        minlength=mesh.n_vertices)
    return 2 * np.pi - total


@dataclass
class MeshGeometry:
    """Mesh together with sampled curvature and discrete areas."""

    mesh: SurfaceMesh
    normh2: np.ndarray
    normH2: np.ndarray
    K: np.ndarray
    lengths: np.ndarray  # (F, 3)
    face_areas: np.ndarray
    vertex_areas: np.ndarray  # barycentric lumping
    chi: int
    genus: int

    @property
    def total_area(self) -> float:
        return float(np.sum(self.face_areas))

    @property
    def c(self) -> float:
        return self.mesh.immersion.ambient.c

    @property
    def mesh_size(self) -> float:
        """Characteristic length sqrt(area / V)."""
        return float(np.sqrt(self.total_area / self.mesh.n_vertices))


def mesh_geometry(mesh: SurfaceMesh) -> MeshGeometry:
    """Sample curvature at vertices from the chart and compute discrete areas."""
    fields: SurfaceFields = surface_fields(mesh.immersion, mesh.params[:, 0],
                                           mesh.params[:, 1])
    L = edge_lengths(mesh)
    A = triangle_areas(L)
    va = np.bincount(mesh.faces.ravel(), weights=np.repeat(A / 3, 3),
                     minlength=mesh.n_vertices)
    chi, genus = euler_genus(mesh)
    if chi % 2:
        raise NotClosed(f"odd Euler characteristic {chi} on an orientable mesh")
    return MeshGeometry(mesh, np.asarray(fields.normh2), np.asarray(fields.normH2),
                        np.asarray(fields.K), L, A, va, chi, genus)


def sampled_gauss_bonnet(mg: MeshGeometry) -> float:
    """Sum of sampled K times lumped vertex area."""
    return float(np.dot(mg.K, mg.vertex_areas))


# ---------------------------------------------------------------------------
# OFF files


def write_off(mesh: SurfaceMesh, path) -> None:
    """Write ``OFF`` (3-d ambient coordinates) or ``nOFF`` (other dimensions)."""
    X = mesh.positions
    D = X.shape[1]
    with open(path, "w") as fh:
        if D == 3:
            fh.write("OFF\n")
        else:
            fh.write(f"nOFF\n{D}\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for row in X:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def read_off(path) -> Tuple[np.ndarray, np.ndarray]:
    """Vertices and triangles from an ``OFF``/``nOFF`` file written by :func:`write_off`."""
    with open(path) as fh:
        tokens = [ln.split("#")[0].split() for ln in fh]
    tokens = [t for t in tokens if t]
    head = tokens.pop(0)[0]
    D = 3
    if head == "nOFF":
        D = int(tokens.pop(0)[0])
    elif head != "OFF":
        raise ValueError(f"not an OFF file (header {head!r})")
    nv, nf = int(tokens[0][0]), int(tokens[0][1])
    verts = np.array([[float(x) for x in t[:D]] for t in tokens[1:1 + nv]])
    faces = np.array([[int(x) for x in t[1:4]] for t in tokens[1 + nv:1 + nv + nf]])
    return verts, faces
