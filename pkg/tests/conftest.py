import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from curvspec import catalog

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# label -> (catalog name, parameters)
SURFACES = {
    "round_sphere": ("round_sphere", {}),
    "round_sphere_r2": ("round_sphere", {"r": 2.0}),
    "geodesic_sphere_s3": ("geodesic_sphere", {"a": 3.0, "c": 1}),
    "geodesic_sphere_r3": ("geodesic_sphere", {"a": 7.0, "c": 0}),
    "geodesic_sphere_h3": ("geodesic_sphere", {"a": 20.0, "c": -1}),
    "clifford_torus": ("clifford_torus", {}),
    "equilateral_torus": ("equilateral_torus", {}),
    "flat_torus": ("flat_torus", {"basis": ((1.0, 0.0), (0.3, 0.9))}),
    "bumpy_sphere": ("bumpy_sphere", {"seed": 7, "amplitude": 0.2}),
    "veronese": ("veronese", {}),
}


def build(label):
    name, params = SURFACES[label]
    return catalog(name, **params)


@pytest.fixture(params=sorted(SURFACES))
def any_surface(request):
    return build(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
