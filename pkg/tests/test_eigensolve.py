import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvspec import catalog
from curvspec.catalog import dual_lattice_eigenvalues
from curvspec.eigensolve import (LevelSpectra, default_shift, extrapolate,
                                 multiplicity_groups, richardson, solve_dense, solve_lowest)
from curvspec.errors import NonMonotoneConvergence
from curvspec.mesh import mesh_geometry, mesh_surface, mesh_torus
from curvspec.operator import assemble

PI = math.pi

SMALL_MESHES = [("round_sphere", {}, 2), ("round_sphere", {}, 3),
                ("bumpy_sphere", {"seed": 5, "amplitude": 0.3}, 3),
                ("clifford_torus", {}, 4), ("equilateral_torus", {}, 5),
                ("flat_torus", {"basis": ((1.0, 0.0), (0.3, 0.9))}, 5),
                ("geodesic_sphere", {"a": 6.0, "c": 1}, 3),
                ("geodesic_sphere", {"a": 30.0, "c": -1}, 3)]


def op(name, level, alpha=0.0, beta=0.0, **params):
    return assemble(mesh_geometry(mesh_surface(catalog(name, **params), level)), alpha, beta)


@pytest.mark.parametrize("name,params,level", SMALL_MESHES)
@pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (1.0, 0.0), (0.35, -0.6), (-0.2, 2.0)])
def test_lanczos_matches_dense(name, params, level, alpha, beta):
    opr = op(name, level, alpha, beta, **params)
    assert opr.n <= 2000
    k = 6
    a = solve_lowest(opr, k)
    b = solve_dense(opr, k)
    assert a.method == "lanczos"
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-8, rtol=0)


def test_result_invariants():
    opr = op("bumpy_sphere", 3, 0.4, 0.2, seed=2)
    res = solve_lowest(opr, 8)
    assert np.all(np.diff(res.eigenvalues) >= 0)
    assert np.all(res.residuals <= 1e-9 * (1 + np.abs(res.eigenvalues)) * 10)
    U = res.eigenvectors
    G = U.T @ (opr.M @ U)
    np.testing.assert_allclose(G, np.eye(8), atol=1e-8)
    assert res.ground_state_positive
    assert res.groups[0] == [0]


def test_sphere_multiplicities():
    res = solve_lowest(op("round_sphere", 3), 9)
    sizes = [len(g) for g in multiplicity_groups(res.eigenvalues, rtol=1e-2)]
    assert sizes == [1, 3, 5]


def test_kernel_is_constant():
    res = solve_lowest(op("bumpy_sphere", 2, seed=1), 1)
    assert abs(res.eigenvalues[0]) < 1e-9
    u = res.eigenvectors[:, 0]
    np.testing.assert_allclose(u, u.mean(), rtol=1e-6)


def test_clifford_alpha_one():
    res = solve_lowest(op("clifford_torus", 6, 1.0, 0.0), 2)
    assert res.eigenvalues[1] == pytest.approx(-2.0, rel=1e-2)


def test_k_bounds():
    opr = op("round_sphere", 0)
    with pytest.raises(ValueError):
        solve_lowest(opr, 4)
    with pytest.raises(ValueError):
        solve_lowest(opr, 0)
    assert len(solve_lowest(opr, 3).eigenvalues) == 3


@pytest.mark.parametrize("factor", [2.0, 10.0])
def test_shift_independence(factor):
    opr = op("equilateral_torus", 5, 0.6, 0.3)
    a = solve_lowest(opr, 5)
    b = solve_lowest(opr, 5, shift=factor * default_shift(opr))
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-8)


def test_illegal_shift_is_recovered():
    opr = op("round_sphere", 3, 1.0, 0.0)
    res = solve_lowest(opr, 4, shift=5.0)
    np.testing.assert_allclose(res.eigenvalues, solve_dense(opr, 4).eigenvalues, atol=1e-8)


@given(seed=st.integers(0, 2**32 - 1))
def test_relabeling_invariance(seed):
    mesh = mesh_surface(catalog("bumpy_sphere", seed=6), 2)
    perm = np.random.default_rng(seed).permutation(mesh.n_vertices)
    inv = np.argsort(perm)
    permuted = replace(mesh, params=mesh.params[perm], positions=mesh.positions[perm],
                       faces=inv[mesh.faces])
    a = solve_lowest(assemble(mesh_geometry(mesh), 0.5, 0.1), 6).eigenvalues
    b = solve_lowest(assemble(mesh_geometry(permuted), 0.5, 0.1), 6).eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_flat_torus_dual_lattice_64():
    basis = ((1.0, 0.0), (0.3, 0.9))
    mg = mesh_geometry(mesh_torus(catalog("flat_torus", basis=basis), 64, 64))
    res = solve_lowest(assemble(mg, 0, 0), 7)
    exact = dual_lattice_eigenvalues(basis, 7)
    assert abs(res.eigenvalues[0]) < 1e-8
    np.testing.assert_allclose(res.eigenvalues[1:], exact[1:], rtol=1e-2)


def test_dual_lattice_square():
    w = dual_lattice_eigenvalues(((1, 0), (0, 1)), 9)
    np.testing.assert_allclose(w, [0] + [4 * PI**2] * 4 + [8 * PI**2] * 4)


# ---------------------------------------------------------------------------
# extrapolation


def test_richardson_exact_second_order():
    hs = [0.4, 0.2, 0.1]
    vals = [3.0 + 2.0 * h**2 for h in hs]
    value, p, unc, flags = richardson(hs, vals)
    assert value == pytest.approx(3.0, abs=1e-12)
    assert p == pytest.approx(2.0, abs=1e-8)
    assert flags == []


def test_richardson_flags_wrong_order():
    hs = [0.4, 0.2, 0.1]
    vals = [1.0 + h**4 for h in hs]
    value, p, unc, flags = richardson(hs, vals)
    assert "order_out_of_range" in flags
    assert abs(value - 1.0) <= unc


def test_richardson_non_monotone_warns():
    with pytest.warns(NonMonotoneConvergence):
        _, _, _, flags = richardson([0.4, 0.2, 0.1], [1.0, 1.1, 1.05])
    assert "non_monotone" in flags


def test_richardson_mesh_independent():
    value, p, unc, flags = richardson([0.4, 0.2, 0.1], [2.0, 2.0, 2.0])
    assert (value, unc, flags) == (2.0, 0.0, ["mesh_independent"])


def test_richardson_needs_three_levels():
    with pytest.raises(ValueError):
        richardson([0.2, 0.1], [1.0, 1.0])


@given(lam=st.floats(-5, 5), C=st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3),
       p=st.floats(1.6, 2.4))
def test_richardson_recovers_power_laws(lam, C, p):
    hs = [0.3, 0.15, 0.075]
    vals = [lam + C * h**p for h in hs]
    value, order, unc, flags = richardson(hs, vals)
    assert value == pytest.approx(lam, abs=1e-8 * (1 + abs(C)))
    assert order == pytest.approx(p, abs=1e-6)


def test_sphere_lambda2_extrapolation():
    ex = extrapolate(catalog("round_sphere"), 0, 0, 5, levels=(3, 4, 5))
    lam2 = ex[1]
    assert lam2.group == [2, 3, 4]
    assert abs(lam2.value - 2.0) < 1e-3
    assert abs(lam2.value - 2.0) <= lam2.uncertainty + 1e-9
    assert [e.value for e in ex[1:4]] == [lam2.value] * 3


def test_flat_torus_extrapolation():
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonMonotoneConvergence)
        ex = extrapolate(catalog("flat_torus"), 0, 0, 3, levels=(4, 5, 6))
    assert abs(ex[1].value - 4 * PI**2) < 0.05
    assert 1.5 <= ex[1].order <= 2.5


def test_geodesic_sphere_equals_round_sphere():
    a = extrapolate(catalog("geodesic_sphere", a=4 * PI, c=0), 0.5, 0.5, 4, levels=(2, 3, 4))
    b = extrapolate(catalog("round_sphere"), 0.5, 0.5, 4, levels=(2, 3, 4))
    np.testing.assert_allclose([e.value for e in a], [e.value for e in b], atol=1e-10)


def test_extrapolate_needs_three_levels():
    with pytest.raises(ValueError):
        extrapolate(catalog("round_sphere"), 0, 0, 2, levels=(3, 4))


def test_level_cache_reuse():
    cache = LevelSpectra(catalog("equilateral_torus"), (3, 4, 5))
    a = extrapolate(None, 0.2, 0.0, 2, cache=cache)
    b = extrapolate(catalog("equilateral_torus"), 0.2, 0.0, 2, levels=(3, 4, 5))
    assert [e.value for e in a] == [e.value for e in b]


def test_lanczos_matches_arpack_beyond_dense_limit():
    from scipy.sparse.linalg import eigsh
    opr = op("bumpy_sphere", 4, 0.6, -0.5, seed=4)
    assert opr.n > 2000
    ours = solve_lowest(opr, 6).eigenvalues
    ref = np.sort(eigsh(opr.A.tocsc(), k=6, M=opr.M.tocsc(), sigma=default_shift(opr),
                        which="LM", return_eigenvectors=False))
    np.testing.assert_allclose(ours, ref, atol=1e-8)
