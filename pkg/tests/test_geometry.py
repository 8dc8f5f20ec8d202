import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvspec import catalog, rescale
from curvspec.errors import (DegenerateImmersion, FiniteDifferenceUnstable,
                             UnknownCatalogName)
from curvspec.geometry import (AmbientSpace, Immersion, gauss_equation_residual, integrate,
                               integrate_with_error, point_geometry, pullback_metric,
                               surface_fields)

from .conftest import SURFACES, build

PI = math.pi


def random_points(imm, n, rng):
    (u0, u1), (v0, v1) = imm.domain
    return zip(rng.uniform(u0, u1, n), rng.uniform(v0, v1, n))


# ---------------------------------------------------------------------------
# ambient spaces


@pytest.mark.parametrize("c,model,dim", [(0, "euclidean", 3), (1, "sphere", 4),
                                         (-1, "hyperboloid", 4)])
def test_ambient_models(c, model, dim):
    amb = AmbientSpace(c, 3)
    assert amb.model == model
    assert amb.coord_dim == dim


def test_ambient_rejects_bad_input():
    with pytest.raises(ValueError):
        AmbientSpace(2, 3)
    with pytest.raises(ValueError):
        AmbientSpace(0, 2)


def test_minkowski_inner_product():
    amb = AmbientSpace(-1, 3)
    x = np.array([math.cosh(0.7), math.sinh(0.7), 0.0, 0.0])
    assert amb.inner(x, x) == pytest.approx(-1.0)
    assert amb.check_on_model(x[None])
    assert not amb.check_on_model(-x[None])


# ---------------------------------------------------------------------------
# pullback metric examples


def test_metric_sphere_equator():
    g = pullback_metric(catalog("round_sphere").immersion, (PI / 2, 0.0))
    np.testing.assert_allclose(g, np.eye(2), atol=1e-15)


def test_metric_clifford_torus():
    g = pullback_metric(catalog("clifford_torus").immersion, (0.31, 0.77))
    np.testing.assert_allclose(g, 2 * PI**2 * np.eye(2), rtol=1e-14)


def test_metric_flat_torus_identity():
    g = pullback_metric(catalog("flat_torus").immersion, (0.2, 0.6))
    np.testing.assert_allclose(g, np.eye(2), atol=1e-15)


def test_degenerate_immersion_at_pole():
    with pytest.raises(DegenerateImmersion):
        pullback_metric(catalog("round_sphere").immersion, (0.0, 1.0))


# ---------------------------------------------------------------------------
# pointwise geometry


@pytest.mark.parametrize("name,normh2,normH2,K", [
    ("round_sphere", 2.0, 1.0, 1.0),
    ("clifford_torus", 4.0, 1.0, 0.0),
    ("veronese", 5.0, 1.5, 0.5),
])
def test_constant_curvature_examples(name, normh2, normH2, K, rng):
    imm = catalog(name).immersion
    for p in random_points(imm, 10, rng):
        pg = point_geometry(imm, p)
        assert pg.normh2 == pytest.approx(normh2, abs=1e-10)
        assert pg.normH2 == pytest.approx(normH2, abs=1e-10)
        assert pg.K == pytest.approx(K, abs=1e-10)


@pytest.mark.parametrize("c,a", [(1, 3.0), (1, 4 * PI), (0, 5.0), (-1, 2.0), (-1, 20.0)])
def test_geodesic_sphere_values(c, a, rng):
    imm = catalog("geodesic_sphere", a=a, c=c).immersion
    f = 4 * PI / a
    for p in random_points(imm, 5, rng):
        pg = point_geometry(imm, p)
        assert pg.normH2 == pytest.approx(f - c, abs=1e-10)
        assert pg.normh2 == pytest.approx(2 * (f - c), abs=1e-10)
        assert pg.K == pytest.approx(f, abs=1e-10)
        assert gauss_equation_residual(pg, c) == pytest.approx(0, abs=1e-10)


def test_residual_examples():
    from curvspec.geometry import PointGeometry
    unit = PointGeometry(np.eye(2), None, None, normH2=1.0, normh2=2.0, K=1.0)
    assert gauss_equation_residual(unit, 0) == 0
    torus = PointGeometry(np.eye(2), None, None, normH2=1.0, normh2=4.0, K=0.0)
    assert gauss_equation_residual(torus, 0) == 0


def test_gauss_equation_all_catalog_surfaces(any_surface, rng):
    imm = any_surface.immersion
    c = imm.ambient.c
    for p in random_points(imm, 100, rng):
        pg = point_geometry(imm, p)
        assert abs(gauss_equation_residual(pg, c)) < 1e-8
        assert pg.normh2 - 2 * pg.normH2 >= -1e-12


@pytest.mark.parametrize("label", ["round_sphere", "round_sphere_r2", "geodesic_sphere_s3",
                                   "geodesic_sphere_r3", "geodesic_sphere_h3"])
def test_spheres_are_umbilic(label, rng):
    imm = build(label).immersion
    for p in random_points(imm, 20, rng):
        pg = point_geometry(imm, p)
        assert abs(pg.normh2 - 2 * pg.normH2) < 1e-10


@given(seed=st.integers(0, 10_000), amp=st.floats(0.0, 0.3),
       u=st.floats(0.05, PI - 0.05), v=st.floats(0.0, 2 * PI))
def test_codimension_one_principal_curvatures(seed, amp, u, v):
    imm = catalog("bumpy_sphere", seed=seed, amplitude=amp).immersion
    pg = point_geometry(imm, (u, v))
    k1, k2 = pg.principal
    assert pg.normh2 == pytest.approx(k1**2 + k2**2, rel=1e-9, abs=1e-9)
    assert pg.normH2 == pytest.approx(0.25 * (k1 + k2) ** 2, rel=1e-9, abs=1e-9)
    assert pg.K == pytest.approx(pg.K_principal, abs=1e-8)


def test_principal_absent_in_higher_codimension():
    pg = point_geometry(catalog("clifford_torus").immersion, (0.1, 0.2))
    assert pg.principal is None


def test_known_values_match_geometry(any_surface, rng):
    k = any_surface.known
    imm = any_surface.immersion
    for p in random_points(imm, 10, rng):
        pg = point_geometry(imm, p)
        for name in ("normh2", "normH2", "K"):
            if getattr(k, name) is not None:
                assert getattr(pg, name) == pytest.approx(getattr(k, name), abs=1e-10)
    if k.area is not None:
        assert integrate(imm, "one") == pytest.approx(k.area, rel=1e-10)


def test_points_lie_on_the_model(any_surface, rng):
    imm = any_surface.immersion
    (u0, u1), (v0, v1) = imm.domain
    X = imm.position(rng.uniform(u0, u1, 50), rng.uniform(v0, v1, 50))
    assert imm.ambient.check_on_model(X, tol=1e-10)


# ---------------------------------------------------------------------------
# finite differences


def test_finite_difference_chart_matches_analytic(rng):
    exact = catalog("bumpy_sphere", seed=3, amplitude=0.25).immersion
    fd = Immersion.from_map(exact.position, exact.ambient, exact.domain, "sphere")
    assert fd.derivatives == "finite_difference"
    for p in random_points(exact, 20, rng):
        a, b = point_geometry(exact, p), point_geometry(fd, p)
        assert b.normh2 == pytest.approx(a.normh2, rel=1e-5)
        assert b.K == pytest.approx(a.K, rel=1e-5, abs=1e-5)
        assert abs(gauss_equation_residual(b, 0)) < 1e-4


def test_finite_difference_instability_detected():
    def rough(u, v):
        u, v = np.asarray(u), np.asarray(v)
        noise = 1e-9 * np.sin(1e7 * u) * np.cos(1e7 * v)
        return np.stack([u, v, noise + 0.1 * u * v], -1)

    imm = Immersion.from_map(rough, AmbientSpace(0, 3), ((0, 1), (0, 1)))
    with pytest.raises(FiniteDifferenceUnstable):
        point_geometry(imm, (0.4, 0.3))


# ---------------------------------------------------------------------------
# integration


def test_integrate_sphere_area_order8():
    area = integrate(catalog("round_sphere").immersion, "one", order=8)
    assert abs(area - 4 * PI) / (4 * PI) < 1e-8


def test_integrate_clifford_fields():
    imm = catalog("clifford_torus").immersion
    assert integrate(imm, "K") == pytest.approx(0.0, abs=1e-12)
    assert integrate(imm, "normH2") == pytest.approx(2 * PI**2, rel=1e-12)


def test_integrate_callable_matches_named():
    imm = catalog("bumpy_sphere", seed=2).immersion
    named = integrate(imm, "normH2")
    via = integrate(imm, lambda u, v: surface_fields(imm, u, v).normH2)
    assert via == pytest.approx(named, rel=1e-13)


def test_integration_error_estimate_shrinks():
    imm = catalog("bumpy_sphere", seed=5, amplitude=0.3).immersion
    value, err = integrate_with_error(imm, "willmore", panels=(16, 16))
    finer, err2 = integrate_with_error(imm, "willmore", panels=(32, 32))
    assert abs(finer - value) <= err + 1e-12
    assert err2 < err


def test_integration_is_bit_reproducible():
    imm = catalog("equilateral_torus").immersion
    assert integrate(imm, "willmore") == integrate(imm, "willmore")


@pytest.mark.parametrize("label", sorted(SURFACES))
def test_gauss_bonnet(label):
    e = build(label)
    expected = 2 * PI * e.known.euler_characteristic
    gb = integrate(e.immersion, "K")
    assert abs(gb - expected) <= 1e-6 * max(abs(expected), 1.0)


def test_veronese_integrals():
    imm = catalog("veronese").immersion
    area = integrate(imm, "one")
    assert area == pytest.approx(4 * PI, rel=1e-6)
    assert integrate(imm, "K") == pytest.approx(2 * PI, rel=1e-6)
    assert integrate(imm, "normh2") / area == pytest.approx(5.0, rel=1e-6)
    assert integrate(imm, "normH2") / area == pytest.approx(1.5, rel=1e-6)


@pytest.mark.parametrize("name,area", [("clifford_torus", 2 * PI**2),
                                       ("equilateral_torus", 4 * PI**2 / math.sqrt(3)),
                                       ("veronese", 4 * PI)])
def test_catalog_areas(name, area):
    assert integrate(catalog(name).immersion, "one") == pytest.approx(area, rel=1e-10)


@given(seed=st.integers(0, 100_000), amp=st.floats(0.0, 0.3))
def test_willmore_chen_bumpy(seed, amp):
    imm = catalog("bumpy_sphere", seed=seed, amplitude=amp).immersion
    assert integrate(imm, "willmore") >= 4 * PI - 1e-6


def test_willmore_equality_only_on_spheres(any_surface):
    if not any_surface.immersed:
        pytest.skip("flat chart is not an immersed closed surface")
    w = integrate(any_surface.immersion, "willmore")
    assert w >= 4 * PI - 1e-6
    is_sphere = any_surface.name in ("round_sphere", "geodesic_sphere")
    assert (abs(w - 4 * PI) <= 1e-6) == is_sphere


# ---------------------------------------------------------------------------
# catalog and scaling


def test_unknown_catalog_name():
    with pytest.raises(UnknownCatalogName):
        catalog("klein_bottle")
    with pytest.raises(KeyError):
        catalog("klein_bottle")


def test_bumpy_amplitude_cap():
    with pytest.raises(ValueError):
        catalog("bumpy_sphere", amplitude=0.31)


def test_bumpy_sphere_is_seed_deterministic():
    a = catalog("bumpy_sphere", seed=11).immersion.position(0.3, 1.2)
    b = catalog("bumpy_sphere", seed=11).immersion.position(0.3, 1.2)
    c = catalog("bumpy_sphere", seed=12).immersion.position(0.3, 1.2)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


@given(t=st.floats(0.25, 4.0), seed=st.integers(0, 1000))
def test_scale_laws(t, seed):
    e = catalog("bumpy_sphere", seed=seed)
    s = rescale(e, t)
    p = (1.1, 0.4)
    a, b = point_geometry(e.immersion, p), point_geometry(s.immersion, p)
    assert b.normh2 == pytest.approx(a.normh2 / t**2, rel=1e-10)
    assert b.K == pytest.approx(a.K / t**2, rel=1e-9, abs=1e-12)
    assert integrate(s.immersion, "one", panels=(16, 16)) == pytest.approx(
        t**2 * integrate(e.immersion, "one", panels=(16, 16)), rel=1e-12)


def test_rescale_requires_euclidean():
    with pytest.raises(ValueError):
        rescale(catalog("geodesic_sphere", a=3.0, c=1), 2.0)


def test_geodesic_sphere_euclidean_is_round_sphere():
    a = catalog("geodesic_sphere", a=4 * PI, c=0).immersion
    b = catalog("round_sphere").immersion
    np.testing.assert_allclose(a.position(0.7, 2.1), b.position(0.7, 2.1), atol=1e-15)
