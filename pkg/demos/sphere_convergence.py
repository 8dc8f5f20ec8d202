"""Watch the P1 spectrum of the unit sphere converge to l(l+1).

Each icosphere level halves the mesh size. Generic P1 error decays like h^2,
but on the sphere lambda_2 superconverges (ratios well above four), which the
extrapolation flags as an out-of-range order. The degree-2 harmonics show the
textbook ratio of four.
"""
import numpy as np

from curvspec import catalog, extrapolate, mesh_geometry, mesh_surface, solve_lowest
from curvspec.operator import assemble

sphere = catalog("round_sphere")

print("level  vertices   h        lambda_2        error")
prev = None
for level in range(1, 6):
    mg = mesh_geometry(mesh_surface(sphere, level))
    lam = solve_lowest(assemble(mg, 0.0, 0.0), 9).eigenvalues
    err = lam[1] - 2.0
    ratio = "" if prev is None else f"  ratio {prev / err:.2f}"
    print(f"{level:5d}  {mg.mesh.n_vertices:8d}  {mg.mesh_size:.4f}  {lam[1]:.10f}  "
          f"{err:+.2e}{ratio}")
    prev = err

print("\nmultiplicities at level 5:", np.round(lam, 4))

ex = extrapolate(sphere, 0.0, 0.0, 9, levels=(3, 4, 5))
print("\nextrapolated (levels 3-5):")
for e in ex:
    print(f"  lambda_{e.index}: {e.value:.8f} +- {e.uncertainty:.1e}  order {e.order:.2f}"
          f"  {' '.join(e.flags)}")
print("exact values: 0, 2 (x3), 6 (x5)")
