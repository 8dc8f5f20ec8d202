"""Closed-form eigenvalue bounds for L = -Laplacian - (alpha |h|^2 + beta |H|^2).

Every bound is written for a surface of area ``a`` in the space form of
curvature ``c`` and compared against the geodesic sphere ``S(a)`` of the same
area, so no rescaling of immersions is needed. ``eps`` is 2 for orientable
surfaces and 1 otherwise; ``genus`` counts handles or cross-caps.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .catalog import CatalogEntry, rescale
from .eigensolve import LevelSpectra, extrapolate
from .errors import HypothesisViolated, NonOrientableNeedsClosedForm
from .geometry import gauss_equation_residual, integrate, integrate_many, point_geometry

PI = math.pi
FOUR_PI = 4 * PI

HOLDS = "holds"
HOLDS_WITHIN = "holds-within-uncertainty"
VIOLATION = "VIOLATION"

# conformal area of RP^2 (its unique conformal class)
RP2_CONFORMAL_AREA = 6 * PI


@dataclass(frozen=True)
class SphereReference:
    """Geodesic sphere of area ``a`` in N^3(c)."""

    a: float
    c: float = 0.0

    def lambda1(self, alpha: float, beta: float) -> float:
        return -(2 * alpha + beta) * (FOUR_PI / self.a - self.c)

    def lambda2(self, alpha: float, beta: float) -> float:
        return 2 * FOUR_PI / self.a + self.lambda1(alpha, beta)


@dataclass(frozen=True)
class ConformalAreaBounds:
    genus: int
    orientable: bool = True

    @property
    def lower(self) -> float:
        return FOUR_PI

    @property
    def upper(self) -> float:
        k = (self.genus + 3) // 2
        return (4 if self.orientable else 12) * PI * k


def _admissible(alpha, beta):
    if 4 * alpha + beta < 0:
        raise HypothesisViolated(f"4 alpha + beta = {4 * alpha + beta:g} < 0")


def lambda1_bound(genus: int, eps: int, a: float, c: float, alpha: float,
                  beta: float) -> float:
    """Upper bound ``lambda_1(S(a)) - (4 eps pi / a) alpha genus``."""
    _admissible(alpha, beta)
    return SphereReference(a, c).lambda1(alpha, beta) - 4 * eps * PI / a * alpha * genus


def lambda2_gap(genus: int, eps: int, a: float, c: float, alpha: float,
                beta: float) -> Optional[float]:
    """Upper bound on ``lambda_2(L_X) - lambda_2(L_S(a))``.

    Returns ``None`` when no case of the genus-dependent estimates applies.
    """
    _admissible(alpha, beta)
    s = 4 * alpha + beta
    g = genus
    f = FOUR_PI / a
    if eps == 2:
        if g == 0:
            return 0.0
        if s >= 2:
            return -f * eps * alpha * g
        if g % 2 == 0:
            return -f * (g / 2) * (8 * alpha + beta - 2)
        return -f * ((g + 1) / 2) * (4 * (2 * g + 1) / (g + 1) * alpha + beta - 2)
    if eps == 1:
        if g < 1:
            return None
        if s >= 2:
            return -f * alpha * g
        m = 3 * g + 4 if g % 2 == 0 else 3 * g + 5
        return -f * (m / 2) * ((4 + 2 * g / m) * alpha + beta - 2)
    raise ValueError(f"eps must be 1 or 2, got {eps}")


def lambda2_bound(genus, eps, a, c, alpha, beta) -> Optional[float]:
    gap = lambda2_gap(genus, eps, a, c, alpha, beta)
    return None if gap is None else SphereReference(a, c).lambda2(alpha, beta) + gap


def lambda1_conformal_bound(conformal_area, genus, eps, a, c, alpha, beta) -> float:
    """Constant trial function with ``int |H|^2 >= A_c - c a``."""
    _admissible(alpha, beta)
    return -(4 * alpha * PI * (eps * genus - 2) + 2 * c * alpha * a
             + (4 * alpha + beta) * (conformal_area - c * a)) / a


def lambda2_conformal_bound(conformal_area, genus, eps, a, c, alpha, beta) -> float:
    """``[(2 - 4a - b) A_c - 4 alpha pi (eps genus - 2) + (2 alpha + beta) c a] / a``."""
    _admissible(alpha, beta)
    return ((2 - 4 * alpha - beta) * conformal_area
            - 4 * alpha * PI * (eps * genus - 2) + (2 * alpha + beta) * c * a) / a


def corollary_bounds(genus: int) -> float:
    """Upper bound on the bifurcation value for orientable surfaces of a genus."""
    if genus < 0:
        raise ValueError("genus must be >= 0")
    if genus == 0:
        return 0.0
    if genus % 2 == 0:
        return 0.25
    return (genus + 1) / (4 * genus + 2)


# ---------------------------------------------------------------------------
# reports


@dataclass
class InequalityReport:
    predicate: str
    lhs: float
    rhs: float
    margin: float
    uncertainty: float
    verdict: str
    details: Dict = field(default_factory=dict)


def judge(predicate: str, lhs: float, rhs: float, uncertainty: float = 0.0,
          **details) -> InequalityReport:
    """Compare ``lhs <= rhs``; the uncertainty band gets a rounding floor."""
    margin = rhs - lhs
    floor = 1e-9 * (1 + abs(rhs))
    if margin >= 0:
        verdict = HOLDS
    elif margin >= -(uncertainty + floor):
        verdict = HOLDS_WITHIN
    else:
        verdict = VIOLATION
    return InequalityReport(predicate, float(lhs), float(rhs), float(margin),
                            float(uncertainty), verdict, details)


def surface_area(entry: CatalogEntry) -> float:
    if entry.known.area is not None:
        return float(entry.known.area)
    return integrate(entry.immersion, "one")


def normalize_area(entry: CatalogEntry, target: float = FOUR_PI) -> CatalogEntry:
    """Rescale a Euclidean surface to the given area."""
    scaled = rescale(entry, math.sqrt(target / surface_area(entry)))
    if scaled.known.area is None:
        scaled = replace(scaled, known=replace(scaled.known, area=float(target)))
    return scaled


def closed_form_spectrum(entry: CatalogEntry, alpha: float, beta: float):
    """``(lambda_1, lambda_2)`` for surfaces with constant |h|^2 and |H|^2."""
    k = entry.known
    if not (k.constant_potential and k.lambda2_laplacian is not None):
        return None
    q = alpha * k.normh2 + beta * k.normH2
    return -q, k.lambda2_laplacian - q


def _check_surface(entry: CatalogEntry, alpha, beta):
    _admissible(alpha, beta)
    if not entry.immersed:
        raise HypothesisViolated(f"{entry.name} chart is not a compact immersed surface")


def _bounds(entry, a, alpha, beta, which):
    k = entry.known
    c = entry.ambient.c
    if which == "lambda1":
        return lambda1_bound(k.genus, k.eps, a, c, alpha, beta)
    rhs = lambda2_bound(k.genus, k.eps, a, c, alpha, beta)
    if rhs is None:
        raise HypothesisViolated(f"no lambda_2 estimate applies to {entry.name}")
    return rhs


def _use_closed_form(entry, method):
    have = closed_form_spectrum(entry, 0.0, 0.0) is not None
    if method == "closed_form" and not have:
        raise ValueError(f"{entry.name} has no closed-form spectrum")
    if method == "fem" and not entry.known.orientable:
        raise NonOrientableNeedsClosedForm(entry.name)
    if method == "auto":
        if not entry.known.orientable:
            if not have:
                raise NonOrientableNeedsClosedForm(entry.name)
            return True
        return False
    return method == "closed_form"


DEFAULT_LEVELS = {"sphere": (3, 4, 5), "torus": (4, 5, 6)}


def default_levels(entry: CatalogEntry) -> Tuple[int, ...]:
    return DEFAULT_LEVELS[entry.kind]


def verify_inequality(entry: CatalogEntry, alpha: float, beta: float,
                      which: str = "lambda2", method: str = "auto",
                      levels: Sequence[int] = None,
                      cache: LevelSpectra = None) -> InequalityReport:
    """Check the lambda_1 or lambda_2 estimate on one surface.

    Parameters
    ----------
    entry : CatalogEntry
    alpha, beta : float
        Must satisfy ``4 alpha + beta >= 0``.
    which : {"lambda1", "lambda2"}
    method : {"auto", "fem", "closed_form"}
        ``"auto"`` uses finite elements for orientable surfaces and the closed
        form for non-orientable ones.
    levels : sequence of int, optional
        Refinement levels for extrapolation (defaults per surface type).
    """
    return verify_sweep(entry, [(alpha, beta)], (which,), method, levels, cache)[0]


def judge_estimates(entry: CatalogEntry, a: float, alpha: float, beta: float,
                    estimates: Dict[str, Tuple[float, float]],
                    which: Sequence[str] = ("lambda1", "lambda2"),
                    source: str = "fem") -> List[InequalityReport]:
    """Judge ``{"lambda1": (value, uncertainty), ...}`` against the estimates."""
    out = []
    for w in which:
        lhs, unc = estimates[w]
        rhs = _bounds(entry, a, alpha, beta, w)
        out.append(judge(f"{w}_bound", lhs, rhs, unc, surface=entry.name,
                         alpha=alpha, beta=beta, area=a, source=source))
    return out


def random_admissible_params(n: int, seed: int = 0, alpha_range=(-0.5, 1.5),
                             s_max: float = 4.0) -> List[Tuple[float, float]]:
    """``n`` random pairs with ``alpha`` uniform and ``4 alpha + beta`` uniform on [0, s_max]."""
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(*alpha_range, n)
    s = rng.uniform(0.0, s_max, n)
    return [(float(x), float(y - 4 * x)) for x, y in zip(alpha, s)]


def verify_sweep(entry: CatalogEntry, params: Iterable[Tuple[float, float]],
                 which: Sequence[str] = ("lambda1", "lambda2"), method: str = "auto",
                 levels: Sequence[int] = None, cache: LevelSpectra = None,
                 threads: int = 1) -> List[InequalityReport]:
    """Reports for every ``(alpha, beta)`` and predicate, sharing meshes."""
    params = [(float(a), float(b)) for a, b in params]
    for alpha, beta in params:
        _check_surface(entry, alpha, beta)
    for w in which:
        if w not in ("lambda1", "lambda2"):
            raise ValueError(f"unknown predicate {w!r}")
    closed = _use_closed_form(entry, method)
    a = surface_area(entry)
    if not closed and cache is None:
        cache = LevelSpectra(entry, levels or default_levels(entry))

    def one(ab):
        alpha, beta = ab
        if closed:
            vals = closed_form_spectrum(entry, alpha, beta)
            est = {"lambda1": (vals[0], 0.0), "lambda2": (vals[1], 0.0)}
            source = "closed_form"
        else:
            ex = extrapolate(entry, alpha, beta, 2, cache=cache)
            est = {"lambda1": (ex[0].value, ex[0].uncertainty),
                   "lambda2": (ex[1].value, ex[1].uncertainty)}
            source = "fem"
        return judge_estimates(entry, a, alpha, beta, est, which, source)

    if threads > 1 and len(params) > 1:
        with ThreadPoolExecutor(threads) as pool:
            chunks = list(pool.map(one, params))
    else:
        chunks = [one(ab) for ab in params]
    return [r for chunk in chunks for r in chunk]


def veronese_check(alpha: float, beta: float, entry: CatalogEntry = None):
    """Veronese eigenvalues against the RP^2 estimates.

    ``lambda_1 = -(5 alpha + 3/2 beta)`` and ``lambda_2 = 3 + lambda_1`` from
    |h|^2 = 5, |H|^2 = 3/2 and lambda_2(-Laplacian) = 3. The right-hand sides use
    the conformal area 6 pi of RP^2, which the Veronese surface attains, so the
    margins vanish; the general non-orientable estimates are reported in the
    details.
    """
    from .catalog import veronese

    _admissible(alpha, beta)
    entry = entry or veronese()
    k = entry.known
    lam1, lam2 = closed_form_spectrum(entry, alpha, beta)
    a, c = k.area, entry.ambient.c
    reports = []
    for name, lhs, bound, general in (
            ("veronese_lambda1", lam1, lambda1_conformal_bound, lambda1_bound(
                k.genus, k.eps, a, c, alpha, beta)),
            ("veronese_lambda2", lam2, lambda2_conformal_bound, lambda2_bound(
                k.genus, k.eps, a, c, alpha, beta))):
        rhs = bound(RP2_CONFORMAL_AREA, k.genus, k.eps, a, c, alpha, beta)
        reports.append(judge(name, lhs, rhs, 0.0, surface=entry.name, alpha=alpha,
                             beta=beta, general_bound=general,
                             general_margin=general - lhs))
    return tuple(reports)


# ---------------------------------------------------------------------------
# bifurcation value


@dataclass
class BifurcationResult:
    alphaX: float
    samples: List[Tuple[float, float]]
    method: str
    status: str  # "crossing", "no_crossing" or "not_eventually_negative"
    window: Tuple[float, float]
    window_certified: bool
    uncertainty: float = 0.0


def _normalized_gap_function(entry, method, levels, cache):
    """``f(alpha) = lambda_2(L_alpha) area - 4 pi (2 - 2 alpha)`` and its uncertainty."""
    a = surface_area(entry)
    if method == "closed_form":
        def f(alpha):
            return closed_form_spectrum(entry, alpha, 0.0)[1] * a - FOUR_PI * (2 - 2 * alpha), 0.0
        return f
    cache = cache or LevelSpectra(entry, levels or default_levels(entry))

    def f(alpha):
        ex = extrapolate(entry, alpha, 0.0, 2, cache=cache)[1]
        return ex.value * a - FOUR_PI * (2 - 2 * alpha), ex.uncertainty * a
    return f


def bifurcation_alpha(entry: CatalogEntry, method: str = "auto",
                      levels: Sequence[int] = None, grid: int = 256,
                      window: Tuple[float, float] = (0.0, 1.5), tol: float = None,
                      cache: LevelSpectra = None, threads: int = 1) -> BifurcationResult:
    """Smallest alpha beyond which ``lambda_2(L_alpha) area <= 4 pi lambda_2(L_S2, alpha)``.

    ``f`` is sampled on a uniform grid; the last sign change is refined by
    bisection (to ``tol``; 1e-6 numerically, 1e-14 in closed form). Values with
    ``f`` inside its uncertainty band count as non-positive. If ``f`` is still
    positive at the window end the window is doubled once. The tail beyond the
    window is not examined, which ``window_certified`` records.
    """
    if not entry.immersed:
        raise HypothesisViolated(f"{entry.name} chart is not a compact immersed surface")
    if not entry.known.orientable:
        raise NonOrientableNeedsClosedForm(entry.name)
    if method == "auto":
        method = "closed_form" if closed_form_spectrum(entry, 0, 0) else "numeric"
    if tol is None:
        tol = 1e-14 if method == "closed_form" else 1e-6
    f = _normalized_gap_function(entry, method, levels, cache)
    floor = 1e-12 * 8 * PI

    def sample(alphas):
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                return list(pool.map(f, alphas))
        return [f(x) for x in alphas]

    lo, hi = window
    alphas = np.linspace(lo, hi, grid)
    vals = sample(alphas)
    if vals[-1][0] > vals[-1][1] + floor:
        hi = 2 * hi
        extra = np.linspace(lo, hi, 2 * grid - 1)[grid:]
        alphas = np.concatenate([alphas, extra])
        vals += sample(extra)
    fv = np.array([v for v, _ in vals])
    unc = np.array([u for _, u in vals])
    positive = fv > unc + floor
    samples = [(float(x), float(y)) for x, y in zip(alphas, fv)]
    if positive[-1]:
        return BifurcationResult(float("nan"), samples, method,
                                 "not_eventually_negative", (lo, hi), False,
                                 float(np.max(unc)))
    if not positive.any():
        return BifurcationResult(0.0, samples, method, "no_crossing", (lo, hi), True,
                                 float(np.max(unc)))
    i = int(np.nonzero(positive)[0][-1])
    left, right = alphas[i], alphas[i + 1]
    while right - left > tol:
        mid = 0.5 * (left + right)
        if mid in (left, right):
            break
        if f(mid)[0] > 0:
            left = mid
        else:
            right = mid
    alphaX = 0.5 * (left + right)
    certified = bool(np.all(fv[alphas >= alphaX] <= unc[alphas >= alphaX] + floor))
    return BifurcationResult(float(alphaX), samples, method, "crossing", (lo, hi),
                             certified, float(np.max(unc)))


def clifford_alpha() -> float:
    return (PI - 2) / (2 * (PI - 1))


def equilateral_alpha() -> float:
    return (PI - math.sqrt(3)) / (2 * PI - math.sqrt(3))


# ---------------------------------------------------------------------------
# pointwise and integral identities


@dataclass
class IdentityReport:
    surface: str
    gauss_residual_max: float
    gauss_bonnet: float
    gauss_bonnet_expected: Optional[float]
    gauss_bonnet_relerr: Optional[float]
    willmore: Optional[float]
    willmore_excess: Optional[float]  # int (|H|^2 + c) - 4 pi
    area: float
    mean_normh2: float
    mean_normH2: float
    mean_K: float
    quadrature_error: float


def identity_checks(entry: CatalogEntry, n_points: int = 100, seed: int = 0,
                    order: int = 4, panels=(64, 64)) -> IdentityReport:
    """Gauss equation at random points plus Gauss-Bonnet and Willmore-Chen integrals."""
    imm = entry.immersion
    rng = np.random.default_rng(seed)
    (u0, u1), (v0, v1) = imm.domain
    us = rng.uniform(u0, u1, n_points)
    vs = rng.uniform(v0, v1, n_points)
    c = imm.ambient.c
    res = max(abs(gauss_equation_residual(point_geometry(imm, (u, v)), c))
              for u, v in zip(us, vs))
    area, gb, willmore, nh2, nH2 = integrate_many(
        imm, ["one", "K", "willmore", "normh2", "normH2"], order, panels)
    # quadrature error estimated against half as many panels
    coarse = integrate_many(imm, ["one", "K", "willmore"], order,
                            (max(panels[0] // 2, 1), max(panels[1] // 2, 1)))
    quad_err = max(abs(a - b) for a, b in zip((area, gb, willmore), coarse))
    k = entry.known
    gb_exp = 2 * PI * k.euler_characteristic
    rel = abs(gb - gb_exp) / abs(gb_exp) if gb_exp else abs(gb)
    if not entry.immersed:
        willmore = None
    return IdentityReport(
        surface=entry.name, gauss_residual_max=float(res), gauss_bonnet=gb,
        gauss_bonnet_expected=gb_exp, gauss_bonnet_relerr=float(rel),
        willmore=willmore,
        willmore_excess=None if willmore is None else willmore - FOUR_PI,
        area=area, mean_normh2=nh2 / area, mean_normH2=nH2 / area,
        mean_K=gb / area, quadrature_error=quad_err)
