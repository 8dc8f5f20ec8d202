"""Lowest eigenpairs of ``(S - Q) u = lambda M u`` and refinement extrapolation.

The iterative path is shift-invert Lanczos in the M inner product with full
reorthogonalization. Repeated eigenvalues are found by restarting from fresh
random vectors deflated against everything already locked; the run stops once a
restart finds nothing below the current k-th eigenvalue.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .errors import FactorizationFailed, NoConvergence, NonMonotoneConvergence
from .mesh import mesh_geometry, mesh_surface
from .operator import AssembledOperator, assemble, stiffness_matrix

DENSE_LIMIT = 2000
MAX_LANCZOS = 500
GROUP_RTOL = 1e-6


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]  # (n, k), M-orthonormal columns
    residuals: np.ndarray
    groups: List[List[int]]
    method: str
    shift: Optional[float] = None
    iterations: int = 0

    @property
    def ground_state_positive(self) -> bool:
        """First eigenvector has constant sign (up to rounding)."""
        if self.eigenvectors is None:
            return True
        u = self.eigenvectors[:, 0]
        u = u if u.sum() >= 0 else -u
        return bool(u.min() > -1e-10 * np.abs(u).max())


def multiplicity_groups(values, rtol: float = GROUP_RTOL) -> List[List[int]]:
    """Cluster sorted eigenvalues whose gaps are below ``rtol * (1 + |lambda|)``."""
    groups: List[List[int]] = []
    for i, lam in enumerate(values):
        if groups and abs(lam - values[groups[-1][-1]]) <= rtol * (1 + abs(lam)):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def residual_norms(A, M, lam, U) -> np.ndarray:
    MU = M @ U
    R = A @ U - MU * lam
    return np.linalg.norm(R, axis=0) / np.linalg.norm(MU, axis=0)


def _result(opr, lam, U, method, shift=None, iterations=0):
    order = np.argsort(lam, kind="stable")
    lam = np.asarray(lam)[order]
    U = U[:, order]
    # fix the sign convention: largest-magnitude component positive
    idx = np.argmax(np.abs(U), axis=0)
    U = U * np.sign(U[idx, np.arange(U.shape[1])])
    res = residual_norms(opr.A, opr.M, lam, U)
    return SpectrumResult(lam, U, res, multiplicity_groups(lam), method, shift, iterations)


def solve_dense(opr: AssembledOperator, k: int) -> SpectrumResult:
    """Reference solve with LAPACK on the dense generalized problem."""
    A = opr.A.toarray()
    M = opr.M.toarray()
    lam, U = linalg.eigh(A, M, subset_by_index=[0, k - 1])
    return _result(opr, lam, U, "dense")


def default_shift(opr: AssembledOperator) -> float:
    """``-max q - 1``: below the spectrum, since lambda_1 >= -max q."""
    return -float(np.max(opr.q)) - 1.0


def _factorize(A, M, sigma):
    """Sparse LDL^T-style factorization of ``A - sigma M`` with an inertia check."""
    K = (A - sigma * M).tocsc()
    try:
        lu = splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise FactorizationFailed(str(exc)) from None
    piv = lu.U.diagonal()
    # symmetric pivoting keeps the diagonal pivots congruent to the matrix
    if np.any(lu.perm_r != lu.perm_c) or np.any(piv <= 0):
        raise FactorizationFailed(f"A - sigma M not positive definite at sigma={sigma:g}")
    return lu


def _m_orthogonalize(w, Y, MY):
    if Y is not None and Y.shape[1]:
        for _ in range(2):
            w = w - Y @ (MY.T @ w)
    return w


def _lanczos_run(A, M, lu, sigma, want, locked, MY, rng, tol, maxiter):
    """One shift-invert Lanczos run on the M-complement of ``locked``.

    Returns converged Ritz pairs (lowest first) and the iteration count.
    """
    n = A.shape[0]
    maxiter = min(maxiter, n - (0 if locked is None else locked.shape[1]))
    V = np.zeros((n, maxiter + 1))
    MV = np.zeros((n, maxiter + 1))
    alpha = np.zeros(maxiter)
    beta = np.zeros(maxiter)
    w = _m_orthogonalize(rng.standard_normal(n), locked, MY)
    Mw = M @ w
    nrm = np.sqrt(w @ Mw)
    V[:, 0], MV[:, 0] = w / nrm, Mw / nrm
    converged = []
    j = 0
    for j in range(maxiter):
        w = lu.solve(MV[:, j])
        w = _m_orthogonalize(w, locked, MY)
        alpha[j] = MV[:, j] @ w
        w -= alpha[j] * V[:, j]
        if j:
            w -= beta[j - 1] * V[:, j - 1]
        for _ in range(2):  # full reorthogonalization
            w -= V[:, :j + 1] @ (MV[:, :j + 1].T @ w)
        Mw = M @ w
        b = np.sqrt(max(w @ Mw, 0.0))
        beta[j] = b
        exhausted = b <= 1e-14 * max(abs(alpha[j]), 1e-300)
        if not exhausted:
            V[:, j + 1], MV[:, j + 1] = w / b, Mw / b
        if j + 1 >= min(want, maxiter) and ((j + 1) % 5 == 0 or exhausted or j + 1 == maxiter):
            theta, s = linalg.eigh_tridiagonal(alpha[:j + 1], beta[:j])
            top = np.argsort(-theta)[:want]
            th = theta[top]
            if np.any(th <= 0):
                raise FactorizationFailed("non-positive Ritz value of the inverse")
            U = V[:, :j + 1] @ s[:, top]
            lam = sigma + 1.0 / th
            res = residual_norms(A, M, lam, U)
            ok = res <= tol * (1 + np.abs(lam))
            # accept the longest converged prefix from the bottom of the spectrum
            n_ok = int(np.argmin(ok)) if not ok.all() else len(ok)
            if n_ok == len(ok) or exhausted:
                converged = [(lam[i], U[:, i]) for i in range(n_ok)]
                return converged, j + 1
    raise NoConvergence(f"Lanczos did not converge within {maxiter} iterations")


def solve_lowest(opr: AssembledOperator, k: int, tol: float = 1e-9,
                 method: str = "lanczos", shift: Optional[float] = None,
                 seed: int = 0, maxiter: int = MAX_LANCZOS) -> SpectrumResult:
    """Lowest ``k`` eigenpairs of the assembled operator.

    Parameters
    ----------
    opr : AssembledOperator
    k : int
        Number of eigenpairs, ``1 <= k <= n / 4``.
    tol : float
        Convergence when every residual ``||A u - lambda M u|| / ||M u||`` is
        below ``tol * (1 + |lambda|)``.
    method : {"lanczos", "dense"}
        ``"lanczos"`` falls back to the dense solver when it fails to converge
        and the dimension is at most 2000.
    shift : float, optional
        Shift below the spectrum; defaults to ``-max q - 1``. A shift that does
        not give a definite factorization is doubled, at most three times.
    """
    n = opr.n
    if k < 1 or k > max(1, n // 4):
        raise ValueError(f"need 1 <= k <= n/4 (n={n}), got k={k}")
    if method == "dense":
        return solve_dense(opr, k)
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")

    A, M = opr.A, opr.M
    sigma = default_shift(opr) if shift is None else float(shift)
    for attempt in range(4):
        try:
            lu = _factorize(A, M, sigma)
            break
        except FactorizationFailed:
            if attempt == 3:
                raise
            sigma = 2 * sigma if sigma < 0 else -abs(sigma) - 1.0
    rng = np.random.default_rng(seed)
    locked_vals: List[float] = []
    locked = np.zeros((n, 0))
    MY = np.zeros((n, 0))
    iters = 0
    try:
        while True:
            want = max(1, k - len(locked_vals)) if len(locked_vals) < k else 1
            pairs, it = _lanczos_run(A, M, lu, sigma, want, locked, MY, rng, tol, maxiter)
            iters += it
            if not pairs:
                raise NoConvergence("Lanczos run produced no converged Ritz pair")
            kth = sorted(locked_vals)[k - 1] if len(locked_vals) >= k else np.inf
            if pairs[0][0] >= kth - tol * (1 + abs(kth)):
                break
            for lam, u in pairs:
                u = _m_orthogonalize(u, locked, MY)
                u = u / np.sqrt(u @ (M @ u))
                locked = np.column_stack([locked, u])
                MY = np.column_stack([MY, M @ u])
                locked_vals.append(lam)
            if locked.shape[1] >= n:
                break
    except NoConvergence:
        if n <= DENSE_LIMIT:
            return solve_dense(opr, k)
        raise
    order = np.argsort(locked_vals, kind="stable")[:k]
    U = locked[:, order]
    lam = np.array([(u @ (A @ u)) / (u @ (M @ u)) for u in U.T])
    return _result(opr, lam, U, "lanczos", sigma, iters)


# ---------------------------------------------------------------------------
# refinement extrapolation


@dataclass
class ExtrapolatedValue:
    index: int  # 1-based eigenvalue index
    group: List[int]  # 1-based indices averaged together
    levels: List[tuple]  # (mesh size h, eigenvalue)
    order: float
    value: float
    uncertainty: float
    flags: List[str] = field(default_factory=list)


def richardson(hs: Sequence[float], values: Sequence[float], expected_order: float = 2.0):
    """Fit ``lambda(h) = lambda* + C h^p`` through the last three levels.

    Returns ``(value, order, uncertainty, flags)``. When the fitted order lies
    outside [1.5, 2.5] the expected order is used instead and the result is
    flagged; the uncertainty is then the full gap to the last level.
    """
    hs = np.asarray(hs, float)
    y = np.asarray(values, float)
    flags: List[str] = []
    if len(y) < 3:
        raise ValueError("extrapolation needs at least three levels")
    h1, h2, h3 = hs[-3:]
    y1, y2, y3 = y[-3:]
    d1, d2 = y1 - y2, y2 - y3
    scale = 1 + abs(y3)
    if abs(d1) <= 1e-10 * scale and abs(d2) <= 1e-10 * scale:
        return float(y3), float("nan"), 0.0, ["mesh_independent"]
    if abs(d2) >= abs(d1) or d1 * d2 <= 0:
        flags.append("non_monotone")
        warnings.warn("successive refinement differences do not shrink",
                      NonMonotoneConvergence, stacklevel=3)
    p = float("nan")
    if d1 * d2 > 0 and abs(d2) < abs(d1):
        # (y1 - y2)/(y2 - y3) = (h1^p - h2^p)/(h2^p - h3^p)
        g = lambda q: (h1**q - h2**q) / (h2**q - h3**q) - d1 / d2
        try:
            p = brentq(g, 0.05, 12.0)
        except ValueError:
            p = float("nan")
    if np.isfinite(p) and 1.5 <= p <= 2.5:
        C = d2 / (h2**p - h3**p)
        value = y3 - C * h3**p
        unc = abs(y3 - value) / 2
    else:
        flags.append("order_out_of_range")
        q = expected_order
        C = d2 / (h2**q - h3**q)
        value = y3 - C * h3**q
        unc = max(abs(y3 - value), abs(d2))
    return float(value), float(p), float(unc), flags


class LevelSpectra:
    """Meshes, geometry and stiffness for a surface at several levels, cached."""

    def __init__(self, surface, levels: Sequence[int]):
        self.surface = surface
        self.levels = list(levels)
        self.geometries = [mesh_geometry(mesh_surface(surface, lv)) for lv in self.levels]
        self.stiffness = [stiffness_matrix(mg) for mg in self.geometries]

    @property
    def mesh_sizes(self) -> List[float]:
        return [mg.mesh_size for mg in self.geometries]

    def spectra(self, alpha, beta, k, method="lanczos") -> List[SpectrumResult]:
        return [solve_lowest(assemble(mg, alpha, beta, S=S), k, method=method)
                for mg, S in zip(self.geometries, self.stiffness)]


def extrapolate(surface, alpha: float, beta: float, k: int,
                levels: Sequence[int] = None, cache: LevelSpectra = None,
                spectra: List[SpectrumResult] = None) -> List[ExtrapolatedValue]:
    """Richardson-extrapolated ``lambda_1 .. lambda_k`` over refinement levels.

    Indices are tracked by the multiplicity groups of the finest level: each
    index is extrapolated from the group mean, so a degenerate cluster that
    is split on coarse meshes does not scramble the fit.
    """
    if cache is None:
        if levels is None or len(levels) < 3:
            raise ValueError("extrapolation needs at least three refinement levels")
        cache = LevelSpectra(surface, levels)
    if spectra is None:
        spectra = cache.spectra(alpha, beta, k)
    hs = cache.mesh_sizes
    finest = spectra[-1]
    out = []
    for group in finest.groups:
        vals = [float(np.mean(sp.eigenvalues[group])) for sp in spectra]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonMonotoneConvergence)
            value, p, unc, flags = richardson(hs, vals)
        if "non_monotone" in flags:
            warnings.warn(f"non-monotone convergence for eigenvalue group "
                          f"{[g + 1 for g in group]}", NonMonotoneConvergence,
                          stacklevel=2)
        for i in group:
            out.append(ExtrapolatedValue(
                index=i + 1, group=[g + 1 for g in group],
                levels=list(zip(hs, vals)), order=p, value=value,
                uncertainty=unc, flags=list(flags)))
    return out
