"""Immersed surfaces in space forms and their pointwise curvature.

An immersion is described by a parameter chart ``(u, v) -> X(u, v)`` into the
coordinate model of a space form of curvature ``c``:

* ``c = 0``: Euclidean space R^n,
* ``c = 1``: the unit sphere S^n inside R^(n+1),
* ``c = -1``: the upper sheet of the hyperboloid <X, X> = -1 inside
  Minkowski space R^(1,n) with signature (-, +, ..., +).

Charts supply the jet ``(X, X_u, X_v, X_uu, X_uv, X_vv)``. Catalog charts give it
in closed form; arbitrary user maps fall back to fourth-order central
differences validated at two step sizes.

All array routines are vectorized over leading axes; the last axis holds the
ambient coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh

from .errors import DegenerateImmersion, FiniteDifferenceUnstable

MODELS = ("euclidean", "sphere", "hyperboloid")
IDENTIFICATIONS = ("none", "torus", "sphere", "projective")

DEGENERACY_RATIO = 1e-14


@dataclass(frozen=True)
class AmbientSpace:
    """Simply connected space form N^n(c) in its linear coordinate model."""

    c: float = 0.0
    n: int = 3

    def __post_init__(self):
        if self.c not in (-1, 0, 1):
            raise ValueError(f"curvature must be -1, 0 or 1, got {self.c}")
        if self.n < 3:
            raise ValueError(f"ambient dimension must be >= 3, got {self.n}")

    @property
    def model(self) -> str:
        return {0: "euclidean", 1: "sphere", -1: "hyperboloid"}[int(self.c)]

    @property
    def coord_dim(self) -> int:
        """Number of coordinates of the linear model."""
        return self.n if self.c == 0 else self.n + 1

    @property
    def signature(self) -> np.ndarray:
        sig = np.ones(self.coord_dim)
        if self.c == -1:
            sig[0] = -1.0
        return sig

    def inner(self, a, b):
        """Ambient inner product along the last axis."""
        return np.sum(a * b * self.signature, axis=-1)

    def check_on_model(self, X, tol=1e-10):
        """True if the points ``X`` lie on the model hypersurface."""
        X = np.asarray(X, dtype=float)
        if self.c == 0:
            return True
        q = self.inner(X, X)
        if self.c == 1:
            return bool(np.all(np.abs(q - 1.0) <= tol))
        return bool(np.all(np.abs(q + 1.0) <= tol) and np.all(X[..., 0] > 0))


class Jet(NamedTuple):
    X: np.ndarray
    Xu: np.ndarray
    Xv: np.ndarray
    Xuu: np.ndarray
    Xuv: np.ndarray
    Xvv: np.ndarray


JetFunction = Callable[[np.ndarray, np.ndarray], Jet]


@dataclass(frozen=True)
class Immersion:
    """A parametrized surface in a space form.

    Parameters
    ----------
    ambient : AmbientSpace
    jet : callable
        ``jet(u, v)`` returning a :class:`Jet` with arrays of shape
        ``u.shape + (ambient.coord_dim,)``.
    domain : ((u0, u1), (v0, v1))
        Parameter rectangle.
    identification : str
        ``"none"``, ``"torus"`` (opposite sides glued), ``"sphere"`` (polar
        chart: u is the polar angle in [0, pi], v the azimuth in [0, 2 pi])
        or ``"projective"`` (polar chart covering RP^2 twice).
    derivatives : str
        ``"analytic"`` or ``"finite_difference"``.
    """

    ambient: AmbientSpace
    jet: JetFunction
    domain: Tuple[Tuple[float, float], Tuple[float, float]]
    identification: str = "none"
    derivatives: str = "analytic"

    def __post_init__(self):
        if self.identification not in IDENTIFICATIONS:
            raise ValueError(f"unknown identification {self.identification!r}")

    @property
    def cover_degree(self) -> int:
        """How many times the parameter domain covers the surface."""
        return 2 if self.identification == "projective" else 1

    def position(self, u, v):
        return self.jet(np.asarray(u, float), np.asarray(v, float)).X

    @classmethod
    def from_map(cls, X: Callable, ambient: AmbientSpace, domain,
                 identification: str = "none", step: float = 1e-4):
        """Wrap a plain map ``X(u, v)`` using finite-difference derivatives."""
        scale = max(domain[0][1] - domain[0][0], domain[1][1] - domain[1][0])
        jet = _FiniteDifferenceJet(X, step * scale)
        return cls(ambient, jet, tuple(map(tuple, domain)), identification,
                   derivatives="finite_difference")


# fourth-order central stencils
_D1 = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))  # / 12h
_D2 = ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0))  # / 12h^2


class _FiniteDifferenceJet:
    """Jet from a plain map; every call is checked against step ``2h``."""

    def __init__(self, fn, h, rtol=1e-5):
        self.fn = fn
        self.h = h
        self.rtol = rtol

    def _jet(self, u, v, h):
        f = lambda du, dv: np.asarray(self.fn(u + du, v + dv), dtype=float)
        X = f(0.0, 0.0)
        Xu = sum(w * f(k * h, 0.0) for k, w in _D1) / (12 * h)
        Xv = sum(w * f(0.0, k * h) for k, w in _D1) / (12 * h)
        Xuu = sum(w * f(k * h, 0.0) for k, w in _D2) / (12 * h * h)
        Xvv = sum(w * f(0.0, k * h) for k, w in _D2) / (12 * h * h)
        Xuv = sum(wi * wj * f(i * h, j * h) for i, wi in _D1 for j, wj in _D1)
        Xuv = Xuv / (144 * h * h)
        return Jet(X, Xu, Xv, Xuu, Xuv, Xvv)

    def __call__(self, u, v):
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        fine = self._jet(u, v, self.h)
        coarse = self._jet(u, v, 2 * self.h)
        for name, a, b in zip(Jet._fields[1:], fine[1:], coarse[1:]):
            scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
            if np.max(np.abs(a - b)) > self.rtol * scale:
                raise FiniteDifferenceUnstable(
                    f"{name} estimates at steps h and 2h disagree by more than "
                    f"{self.rtol:g} relative")
        return fine


# ---------------------------------------------------------------------------
# vectorized differential geometry


class SurfaceFields(NamedTuple):
    """Scalar curvature fields evaluated on an array of parameter points."""

    g: np.ndarray  # (..., 2, 2)
    det_g: np.ndarray
    normh2: np.ndarray
    normH2: np.ndarray
    K: np.ndarray


def _metric(jet: Jet, amb: AmbientSpace) -> np.ndarray:
    guu = amb.inner(jet.Xu, jet.Xu)
    guv = amb.inner(jet.Xu, jet.Xv)
    gvv = amb.inner(jet.Xv, jet.Xv)
    g = np.stack([np.stack([guu, guv], -1), np.stack([guv, gvv], -1)], -2)
    return g


def _check_metric(g):
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    tr = g[..., 0, 0] + g[..., 1, 1]
    bad = ~(det > DEGENERACY_RATIO * tr**2)
    if np.any(bad):
        raise DegenerateImmersion(
            f"pullback metric degenerate at {int(np.count_nonzero(bad))} point(s)")
    return det


def _second_fundamental_form(jet: Jet, amb: AmbientSpace, g, det):
    """Normal components h_uu, h_uv, h_vv, stacked as (..., 3, D)."""
    ginv = np.stack([np.stack([g[..., 1, 1], -g[..., 0, 1]], -1),
                     np.stack([-g[..., 0, 1], g[..., 0, 0]], -1)], -2)
    ginv = ginv / det[..., None, None]
    out = []
    for Xij in (jet.Xuu, jet.Xuv, jet.Xvv):
        rhs = np.stack([amb.inner(jet.Xu, Xij), amb.inner(jet.Xv, Xij)], -1)
        coef = np.einsum("...ab,...b->...a", ginv, rhs)
        h = Xij - coef[..., 0:1] * jet.Xu - coef[..., 1:2] * jet.Xv
        if amb.c != 0:
            # component along the position vector is normal to the space form
            along = amb.inner(Xij, jet.X) / amb.inner(jet.X, jet.X)
            h = h - along[..., None] * jet.X
        out.append(h)
    return np.stack(out, -2), ginv


def _fields_from_jet(jet: Jet, amb: AmbientSpace, full=False):
    g = _metric(jet, amb)
    det = _check_metric(g)
    hs, ginv = _second_fundamental_form(jet, amb, g, det)
    huu, huv, hvv = hs[..., 0, :], hs[..., 1, :], hs[..., 2, :]
    a, b, d = ginv[..., 0, 0], ginv[..., 0, 1], ginv[..., 1, 1]
    H = 0.5 * (a[..., None] * huu + 2 * b[..., None] * huv + d[..., None] * hvv)
    normH2 = amb.inner(H, H)
    # |h|^2 = g^ik g^jl <h_ij, h_kl>
    h = np.stack([np.stack([huu, huv], -2), np.stack([huv, hvv], -2)], -3)
    gram = np.einsum("...ijd,...kld->...ijkl", h * amb.signature, h)
    normh2 = np.einsum("...ik,...jl,...ijkl->...", ginv, ginv, gram)
    # Gauss equation for the tangent plane (sectional form)
    K = amb.c + (amb.inner(huu, hvv) - amb.inner(huv, huv)) / det
    fields = SurfaceFields(g, det, normh2, normH2, K)
    if full:
        return fields, h, H
    return fields


def surface_fields(imm: Immersion, u, v) -> SurfaceFields:
    """Evaluate metric and curvature scalars on arrays of parameter points."""
    jet = imm.jet(np.asarray(u, float), np.asarray(v, float))
    return _fields_from_jet(jet, imm.ambient)


# ---------------------------------------------------------------------------
# point operations


@dataclass
class PointGeometry:
    """First and second fundamental forms and curvature scalars at a point.

    ``h`` has shape (2, 2, D) with normal-vector values; ``principal`` and
    ``K_principal`` are only set in codimension one.
    """

    g: np.ndarray
    h: np.ndarray
    H: np.ndarray
    normH2: float
    normh2: float
    K: float
    principal: Optional[Tuple[float, float]] = None
    K_principal: Optional[float] = None


def pullback_metric(imm: Immersion, p) -> np.ndarray:
    """Induced metric ``g_ij = <d_i X, d_j X>`` at the parameter point ``p``."""
    jet = imm.jet(np.asarray(p[0], float), np.asarray(p[1], float))
    g = _metric(jet, imm.ambient)
    _check_metric(g)
    return g


def _unit_normal(jet: Jet, amb: AmbientSpace) -> np.ndarray:
    sig = amb.signature
    rows = [jet.Xu * sig, jet.Xv * sig]
    if amb.c != 0:
        rows.append(jet.X * sig)
    _, _, vt = np.linalg.svd(np.stack(rows))
    nu = vt[-1]
    return nu / np.sqrt(amb.inner(nu, nu))


def point_geometry(imm: Immersion, p) -> PointGeometry:
    """Curvature data of ``imm`` at a single parameter point ``p = (u, v)``."""
    amb = imm.ambient
    jet = imm.jet(np.asarray(p[0], float), np.asarray(p[1], float))
    fields, h, H = _fields_from_jet(jet, amb, full=True)
    pg = PointGeometry(g=fields.g, h=h, H=H, normH2=float(fields.normH2),
                       normh2=float(fields.normh2), K=float(fields.K))
    if amb.n == 3:
        nu = _unit_normal(jet, amb)
        b = np.einsum("ijd,d->ij", h * amb.signature, nu)
        kappa = eigh(b, fields.g, eigvals_only=True)
        pg.principal = (float(kappa[0]), float(kappa[1]))
        pg.K_principal = float(kappa[0] * kappa[1] + amb.c)
    return pg


def gauss_equation_residual(pg: PointGeometry, c: float) -> float:
    """``|h|^2 + 2K - 4|H|^2 - 2c``; in codimension one K comes from k1*k2 + c."""
    K = pg.K_principal if pg.K_principal is not None else pg.K
    return pg.normh2 + 2 * K - 4 * pg.normH2 - 2 * c


# ---------------------------------------------------------------------------
# integration

NAMED_FIELDS = ("one", "K", "normH2", "normh2", "willmore", "umbilicity")


def _named_integrand(name, fields: SurfaceFields, c):
    if name == "one":
        return np.ones_like(fields.K)
    if name == "K":
        return fields.K
    if name == "normH2":
        return fields.normH2
    if name == "normh2":
        return fields.normh2
    if name == "willmore":
        return fields.normH2 + c
    if name == "umbilicity":
        return fields.normh2 - 2 * fields.normH2
    raise ValueError(f"unknown field {name!r}; expected one of {NAMED_FIELDS}")


def integrate(imm: Immersion, f: Union[str, Callable], order: int = 4,
              panels: Tuple[int, int] = (64, 64)) -> float:
    """Integrate a scalar field against the induced area element.

    Parameters
    ----------
    f : str or callable
        Either one of ``"one"``, ``"K"``, ``"normH2"``, ``"normh2"``,
        ``"willmore"`` (|H|^2 + c) and ``"umbilicity"`` (|h|^2 - 2|H|^2), or a
        callable ``f(u, v)`` evaluated on arrays of parameter points.
    order : int
        Gauss-Legendre points per panel and direction.
    panels : (int, int)
        Number of panels along u and v.

    Returns
    -------
    float
        The integral over the surface (divided by the cover degree of the
        chart, so projective charts integrate over RP^2 once).
    """
    return integrate_many(imm, [f], order, panels)[0]


def integrate_many(imm: Immersion, fs: Sequence[Union[str, Callable]], order: int = 4,
                   panels: Tuple[int, int] = (64, 64)) -> List[float]:
    """Several integrals from one evaluation of the chart on the quadrature grid."""
    (u0, u1), (v0, v1) = imm.domain
    x, w = np.polynomial.legendre.leggauss(order)
    nu, nv = panels
    hu = (u1 - u0) / nu
    hv = (v1 - v0) / nv
    us = (u0 + hu * (np.arange(nu)[:, None] + 0.5 * (x + 1))).ravel()
    vs = (v0 + hv * (np.arange(nv)[:, None] + 0.5 * (x + 1))).ravel()
    wu = np.tile(w, nu) * hu / 2
    wv = np.tile(w, nv) * hv / 2
    U, V = np.meshgrid(us, vs, indexing="ij")
    jet = imm.jet(U, V)
    fields = _fields_from_jet(jet, imm.ambient)
    area_el = np.sqrt(fields.det_g)
    out = []
    for f in fs:
        if isinstance(f, str):
            vals = _named_integrand(f, fields, imm.ambient.c)
        else:
            vals = np.asarray(f(U, V), dtype=float)
        # fixed reduction order: rows then columns
        out.append(float(wu @ ((vals * area_el) @ wv)) / imm.cover_degree)
    return out


def integrate_with_error(imm: Immersion, f, order: int = 4,
                         panels: Tuple[int, int] = (64, 64)) -> Tuple[float, float]:
    """Integral on ``2 * panels`` and the change relative to ``panels``."""
    coarse = integrate(imm, f, order, panels)
    fine = integrate(imm, f, order, (2 * panels[0], 2 * panels[1]))
    return fine, abs(fine - coarse)
