"""Where does the Clifford torus stop beating the round sphere?

For L_alpha = -Laplacian - alpha |h|^2 the normalized gap

    f(alpha) = lambda_2(L_alpha) area - 4 pi (2 - 2 alpha)

is positive for small alpha and negative beyond a bifurcation value alpha_X.
On the flat tori in the catalog the potential is constant, so the closed form
and the finite-element value agree; both are computed here.
"""
import math

from curvspec import bifurcation_alpha, catalog

exact = {
    "clifford_torus": (math.pi - 2) / (2 * (math.pi - 1)),
    "equilateral_torus": (math.pi - math.sqrt(3)) / (2 * math.pi - math.sqrt(3)),
}

for name, target in exact.items():
    torus = catalog(name)
    closed = bifurcation_alpha(torus, method="closed_form")
    numeric = bifurcation_alpha(torus, method="numeric", levels=(3, 4, 5), grid=32)
    print(f"{name}")
    print(f"  closed form  alpha_X = {closed.alphaX:.15f}")
    print(f"  numeric      alpha_X = {numeric.alphaX:.8f}")
    print(f"  exact                  {target:.15f}")
    print("  alpha     f(alpha)")
    for a, f in closed.samples[::32]:
        print(f"  {a:6.3f}  {f:+10.4f}")
    print()

# the genus-zero case never crosses: the sphere is optimal for every alpha >= 0
sphere = bifurcation_alpha(catalog("bumpy_sphere", seed=3), method="numeric",
                           levels=(2, 3, 4), grid=8)
print(f"bumpy sphere: status {sphere.status}, alpha_X = {sphere.alphaX}")
