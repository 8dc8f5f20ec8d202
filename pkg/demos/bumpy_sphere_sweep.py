"""Check the genus-zero eigenvalue bound on a few random spheres.

Every area-4pi sphere should satisfy lambda_2(L) <= 2 - 2 alpha - beta whenever
4 alpha + beta >= 0. The margin shrinks as the perturbation amplitude goes to
zero, where the bound is attained.
"""
from curvspec import catalog
from curvspec.theorems import normalize_area, random_admissible_params, verify_sweep

params = random_admissible_params(5, seed=1)
for amplitude in (0.05, 0.15, 0.3):
    for seed in range(2):
        surface = normalize_area(catalog("bumpy_sphere", seed=seed, amplitude=amplitude))
        reports = verify_sweep(surface, params, ("lambda2",), method="fem", levels=(2, 3, 4))
        worst = min(reports, key=lambda r: r.margin)
        print(f"amplitude {amplitude:.2f} seed {seed}: smallest margin {worst.margin:.4f} "
              f"(+- {worst.uncertainty:.1e}) at alpha={worst.details['alpha']:.3f}, "
              f"beta={worst.details['beta']:.3f}; verdicts "
              f"{sorted({r.verdict for r in reports})}")
