"""Named surfaces with closed-form charts and, where known, exact invariants."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import UnknownCatalogName
from .geometry import AmbientSpace, Immersion, Jet

PI = np.pi


@dataclass(frozen=True)
class KnownData:
    """Exact values of a catalog surface; ``None`` where not available.

    ``eps`` is 2 for orientable and 1 for non-orientable surfaces, so that the
    Euler characteristic is ``2 - eps * genus`` (cross-cap count for the
    non-orientable case).
    """

    genus: int
    eps: int = 2
    area: Optional[float] = None
    normh2: Optional[float] = None
    normH2: Optional[float] = None
    K: Optional[float] = None
    lambda2_laplacian: Optional[float] = None

    @property
    def orientable(self) -> bool:
        return self.eps == 2

    @property
    def euler_characteristic(self) -> int:
        return 2 - self.eps * self.genus

    @property
    def constant_potential(self) -> bool:
        return self.normh2 is not None and self.normH2 is not None


@dataclass(frozen=True)
class CatalogEntry:
    """A catalog surface.

    ``immersed`` is False for charts that only realize the quotient surface
    intrinsically (the planar chart of a flat torus), where extrinsic
    statements about compact immersed surfaces do not apply.
    """

    name: str
    immersion: Immersion
    known: KnownData
    params: dict = field(default_factory=dict)
    immersed: bool = True

    @property
    def ambient(self) -> AmbientSpace:
        return self.immersion.ambient

    @property
    def kind(self) -> str:
        """``"sphere"`` or ``"torus"``: which mesher applies."""
        ident = self.immersion.identification
        return "torus" if ident == "torus" else ident


# ---------------------------------------------------------------------------
# charts built on the polar parametrization of the unit sphere

SPHERE_DOMAIN = ((0.0, PI), (0.0, 2 * PI))


def polar_jet(theta, phi):
    """Jet of the unit sphere polar chart (theta polar, phi azimuth)."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    z = np.zeros_like(theta)
    p = np.stack([st * cp, st * sp, ct], -1)
    pt = np.stack([ct * cp, ct * sp, -st], -1)
    pf = np.stack([-st * sp, st * cp, z], -1)
    ptf = np.stack([-ct * sp, ct * cp, z], -1)
    pff = np.stack([-st * cp, -st * sp, z], -1)
    return Jet(p, pt, pf, -p, ptf, pff)


def sphere_map_chart(F: Callable, ambient: AmbientSpace, identification="sphere"):
    """Chart ``F(p(theta, phi))`` for a smooth map ``F`` defined near S^2.

    ``F(p)`` must return ``(value, jacobian, hessian)`` with shapes
    ``(..., D)``, ``(..., D, 3)`` and ``(..., D, 3, 3)``.
    """

    def jet(u, v):
        pj = polar_jet(u, v)
        val, DF, D2F = F(pj.X)
        d1 = lambda a: np.einsum("...dk,...k->...d", DF, a)
        d2 = lambda a, b: np.einsum("...dkl,...k,...l->...d", D2F, a, b)
        return Jet(val, d1(pj.Xu), d1(pj.Xv),
                   d2(pj.Xu, pj.Xu) + d1(pj.Xuu),
                   d2(pj.Xu, pj.Xv) + d1(pj.Xuv),
                   d2(pj.Xv, pj.Xv) + d1(pj.Xvv))

    return Immersion(ambient, jet, SPHERE_DOMAIN, identification)


def _linear_map(A: np.ndarray, offset: Optional[np.ndarray] = None):
    """F(p) = offset + A p."""
    A = np.asarray(A, float)
    D = A.shape[0]
    off = np.zeros(D) if offset is None else np.asarray(offset, float)

    def F(p):
        val = off + p @ A.T
        DF = np.broadcast_to(A, p.shape[:-1] + A.shape)
        D2F = np.zeros(p.shape[:-1] + (D, 3, 3))
        return val, DF, D2F

    return F


def round_sphere(r: float = 1.0) -> CatalogEntry:
    imm = sphere_map_chart(_linear_map(r * np.eye(3)), AmbientSpace(0, 3))
    known = KnownData(genus=0, area=4 * PI * r * r, normh2=2 / r**2,
                      normH2=1 / r**2, K=1 / r**2, lambda2_laplacian=2 / r**2)
    return CatalogEntry("round_sphere", imm, known, {"r": r})


def geodesic_sphere(a: float, c: int = 0) -> CatalogEntry:
    """Geodesic sphere of area ``a`` in the 3-dimensional space form N^3(c)."""
    if a <= 0:
        raise ValueError("area must be positive")
    if c == 0:
        entry = round_sphere(np.sqrt(a / (4 * PI)))
    else:
        if c == 1:
            if a > 4 * PI:
                raise ValueError("geodesic spheres of S^3 have area <= 4 pi")
            rho = np.arcsin(np.sqrt(a / (4 * PI)))
            first, radial = np.cos(rho), np.sin(rho)
        elif c == -1:
            rho = np.arcsinh(np.sqrt(a / (4 * PI)))
            first, radial = np.cosh(rho), np.sinh(rho)
        else:
            raise ValueError(f"unsupported curvature {c}")
        A = np.vstack([np.zeros(3), radial * np.eye(3)])
        imm = sphere_map_chart(_linear_map(A, [first, 0, 0, 0]), AmbientSpace(c, 3))
        entry = CatalogEntry("geodesic_sphere", imm, KnownData(genus=0), {})
    s = 4 * PI / a
    known = KnownData(genus=0, area=a, normh2=2 * (s - c), normH2=s - c, K=s,
                      lambda2_laplacian=2 * s)
    return replace(entry, name="geodesic_sphere", known=known,
                   params={"a": a, "c": c})


def _monomials(max_degree):
    return [(i, j, d - i - j) for d in range(1, max_degree + 1)
            for i in range(d + 1) for j in range(d + 1 - i)]


def _polynomial(coeffs, exps):
    """Value, gradient and Hessian of sum c * x^i y^j z^k on (..., 3) points."""
    exps = np.asarray(exps)
    top = int(exps.max())

    def powers(x, e):
        # x^e and its first two derivatives from a table of integer powers
        table = [np.ones_like(x)]
        for _ in range(top):
            table.append(table[-1] * x)
        table = np.stack(table, -1)
        val = table[..., e]
        d1 = e * table[..., np.maximum(e - 1, 0)]
        d2 = e * (e - 1) * table[..., np.maximum(e - 2, 0)]
        return val, d1, d2

    def P(p):
        comps = [powers(p[..., k], exps[:, k]) for k in range(3)]
        val = np.zeros(p.shape[:-1])
        grad = np.zeros(p.shape)
        hess = np.zeros(p.shape + (3,))
        for a in range(3):
            others = [comps[b][0] for b in range(3) if b != a]
            grad[..., a] = (comps[a][1] * others[0] * others[1]) @ coeffs
            for b in range(a, 3):
                if a == b:
                    term = comps[a][2] * others[0] * others[1]
                else:
                    term = comps[a][1] * comps[b][1] * comps[3 - a - b][0]
                hess[..., a, b] = hess[..., b, a] = term @ coeffs
        val = (comps[0][0] * comps[1][0] * comps[2][0]) @ coeffs
        return val, grad, hess

    return P


def bump_function(seed: int, max_degree: int = 4):
    """Seeded smooth polynomial on S^2 scaled so that max |s| = 1 there."""
    rng = np.random.default_rng(seed)
    exps = _monomials(max_degree)
    coeffs = rng.standard_normal(len(exps))
    P = _polynomial(coeffs, exps)
    th, ph = np.meshgrid(np.linspace(0, PI, 201), np.linspace(0, 2 * PI, 400),
                         indexing="ij")
    peak = np.max(np.abs(P(polar_jet(th, ph).X)[0]))
    return _polynomial(coeffs / peak, exps)


MAX_BUMP_AMPLITUDE = 0.3


def bumpy_sphere(seed: int = 0, amplitude: float = 0.2, scale: float = 1.0) -> CatalogEntry:
    """Radial graph ``scale * (1 + amplitude * s(p)) p`` over the unit sphere."""
    if not 0 <= amplitude <= MAX_BUMP_AMPLITUDE:
        raise ValueError(f"amplitude must lie in [0, {MAX_BUMP_AMPLITUDE}]")
    s = bump_function(seed)
    eye = np.eye(3)

    def F(p):
        sv, sg, sh = s(p)
        r = 1 + amplitude * sv
        val = scale * r[..., None] * p
        DF = scale * (r[..., None, None] * eye
                      + amplitude * p[..., :, None] * sg[..., None, :])
        D2F = scale * amplitude * (
            eye[:, :, None] * sg[..., None, None, :]
            + eye[:, None, :] * sg[..., None, :, None]
            + p[..., :, None, None] * sh[..., None, :, :])
        return val, DF, D2F

    imm = sphere_map_chart(F, AmbientSpace(0, 3))
    return CatalogEntry("bumpy_sphere", imm, KnownData(genus=0),
                        {"seed": seed, "amplitude": amplitude, "scale": scale})


def veronese() -> CatalogEntry:
    """Veronese embedding of RP^2 in R^6 through its double cover S^2."""
    r2 = np.sqrt(2.0)
    D2 = np.zeros((6, 3, 3))
    D2[0, 0, 0] = D2[1, 1, 1] = D2[2, 2, 2] = 2.0
    for d, (i, j) in zip((3, 4, 5), ((0, 1), (0, 2), (1, 2))):
        D2[d, i, j] = D2[d, j, i] = r2

    def F(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        o = np.zeros_like(x)
        val = np.stack([x * x, y * y, z * z, r2 * x * y, r2 * x * z, r2 * y * z], -1)
        DF = np.stack([
            np.stack([2 * x, o, o], -1), np.stack([o, 2 * y, o], -1),
            np.stack([o, o, 2 * z], -1), np.stack([r2 * y, r2 * x, o], -1),
            np.stack([r2 * z, o, r2 * x], -1), np.stack([o, r2 * z, r2 * y], -1),
        ], -2)
        return val, DF, np.broadcast_to(D2, p.shape[:-1] + D2.shape)

    imm = sphere_map_chart(F, AmbientSpace(0, 6), identification="projective")
    known = KnownData(genus=1, eps=1, area=4 * PI, normh2=5.0, normH2=1.5, K=0.5,
                      lambda2_laplacian=3.0)
    return CatalogEntry("veronese", imm, known, {})


# ---------------------------------------------------------------------------
# tori on the unit parameter square

TORUS_DOMAIN = ((0.0, 1.0), (0.0, 1.0))


def circle_product_chart(radii, wave_vectors, ambient: AmbientSpace) -> Immersion:
    """Flat torus ``sum_j r_j (cos m_j.(s, t), sin m_j.(s, t))`` in R^(2J)."""
    radii = np.asarray(radii, float)
    m = np.asarray(wave_vectors, float)

    def jet(s, t):
        ph = s[..., None] * m[:, 0] + t[..., None] * m[:, 1]
        c, sn = radii * np.cos(ph), radii * np.sin(ph)
        inter = lambda a, b: np.stack([a, b], -1).reshape(ph.shape[:-1] + (-1,))
        X = inter(c, sn)
        d1 = lambda k: inter(-sn * m[:, k], c * m[:, k])
        d2 = lambda k, l: inter(-c * m[:, k] * m[:, l], -sn * m[:, k] * m[:, l])
        return Jet(X, d1(0), d1(1), d2(0, 0), d2(0, 1), d2(1, 1))

    return Immersion(ambient, jet, TORUS_DOMAIN, "torus")


def clifford_torus() -> CatalogEntry:
    imm = circle_product_chart([1 / np.sqrt(2)] * 2, [[2 * PI, 0], [0, 2 * PI]],
                               AmbientSpace(0, 4))
    known = KnownData(genus=1, area=2 * PI**2, normh2=4.0, normH2=1.0, K=0.0,
                      lambda2_laplacian=2.0)
    return CatalogEntry("clifford_torus", imm, known, {})


def equilateral_torus() -> CatalogEntry:
    """R^2 / Z(1, 0) + Z(1/2, sqrt(3)/2) in R^6, in lattice coordinates (s, t)."""
    # wave vectors of the three complex coordinates pulled back to (s, t)
    m = [[0, 2 * PI], [2 * PI, 0], [2 * PI, 2 * PI]]
    imm = circle_product_chart([1 / np.sqrt(3)] * 3, m, AmbientSpace(0, 6))
    known = KnownData(genus=1, area=4 * PI**2 / np.sqrt(3), normh2=4.0, normH2=1.0,
                      K=0.0, lambda2_laplacian=2.0)
    return CatalogEntry("equilateral_torus", imm, known,
                        {"lattice": [[1.0, 0.0], [0.5, np.sqrt(3) / 2]]})


def dual_lattice_eigenvalues(basis, count: int, reach: int = 6) -> np.ndarray:
    """Lowest Laplace eigenvalues ``4 pi^2 |k|^2`` of the flat torus R^2/L."""
    B = np.asarray(basis, float)
    dual = np.linalg.inv(B).T  # rows are dual basis vectors
    r = np.arange(-reach, reach + 1)
    ij = np.stack(np.meshgrid(r, r, indexing="ij"), -1).reshape(-1, 2)
    k = ij @ dual
    return np.sort(4 * PI**2 * np.sum(k * k, axis=1))[:count]


def flat_torus(basis=((1.0, 0.0), (0.0, 1.0))) -> CatalogEntry:
    """Planar chart ``(s b1 + t b2, 0)`` of the flat torus R^2 / (Z b1 + Z b2).

    The chart is not periodic; meshes glue it through the lattice quotient.
    """
    B = np.asarray(basis, float)

    def jet(s, t):
        xy = s[..., None] * B[0] + t[..., None] * B[1]
        X = np.concatenate([xy, np.zeros(s.shape + (1,))], -1)
        Xu = np.broadcast_to(np.append(B[0], 0.0), X.shape)
        Xv = np.broadcast_to(np.append(B[1], 0.0), X.shape)
        zero = np.zeros_like(X)
        return Jet(X, Xu, Xv, zero, zero, zero)

    imm = Immersion(AmbientSpace(0, 3), jet, TORUS_DOMAIN, "torus")
    lam2 = dual_lattice_eigenvalues(B, 2)[1]
    known = KnownData(genus=1, area=abs(np.linalg.det(B)), normh2=0.0, normH2=0.0,
                      K=0.0, lambda2_laplacian=lam2)
    return CatalogEntry("flat_torus", imm, known, {"basis": B.tolist()},
                        immersed=False)


# ---------------------------------------------------------------------------

CATALOG = {
    "round_sphere": round_sphere,
    "geodesic_sphere": geodesic_sphere,
    "clifford_torus": clifford_torus,
    "equilateral_torus": equilateral_torus,
    "flat_torus": flat_torus,
    "bumpy_sphere": bumpy_sphere,
    "veronese": veronese,
}


def catalog(name: str, **params) -> CatalogEntry:
    """Build the catalog surface ``name`` with keyword parameters."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise UnknownCatalogName(f"unknown catalog surface {name!r}; "
                                 f"known: {', '.join(sorted(CATALOG))}") from None
    return factory(**params)


def rescale(entry: CatalogEntry, t: float) -> CatalogEntry:
    """Euclidean homothety ``X -> t X`` with known data rescaled accordingly."""
    if entry.ambient.c != 0:
        raise ValueError("only Euclidean immersions can be rescaled by homothety")
    base = entry.immersion

    def jet(u, v):
        return Jet(*(t * a for a in base.jet(u, v)))

    k = entry.known
    f = lambda x, p: None if x is None else x * t**p
    known = replace(k, area=f(k.area, 2), normh2=f(k.normh2, -2),
                    normH2=f(k.normH2, -2), K=f(k.K, -2),
                    lambda2_laplacian=f(k.lambda2_laplacian, -2))
    params = dict(entry.params)
    params["rescale"] = params.get("rescale", 1.0) * t
    return replace(entry, immersion=replace(base, jet=jet), known=known, params=params)
