"""Density of the barycenter of a partly singular curve.

For t <= 1/2 the curve is the uniform law on [0, 1] (density 1); afterwards it
is a point mass at 1/2. Only half of the times carry a density, so the
barycenter density is at most K / m_K = 1 / (1/2) = 2.

On the uniform grid i/16 exactly half the nodes see the uniform law and the
barycenter is uniform on [1/4, 3/4], attaining the bound. The ``prefer_ak``
strategy moves node 9/16 back to the flagged time 1/2, so nine nodes carry a
density and the barycenter spreads out to density 16/9.
"""

from mkinf import check_density_bound, curve_barycenter, density_bound_curve
from mkinf.instances import half_ac_curve

curve = half_ac_curve(samples=16, atoms=200)
bound = density_bound_curve(curve.default_K(), curve.ak_fraction(), 1)
print(f"K = {curve.default_K()}, m_K = {curve.ak_fraction()}, bound = {bound}")
for strategy in ("uniform", "prefer_ak"):
    result, _, grid = curve_barycenter(curve, [16], strategy=strategy)
    report = check_density_bound(result, bound, cell_size=0.05)
    lo, hi = result.measure.points.min(), result.measure.points.max()
    print(
        f"{strategy:9s}: support [{lo:.4f}, {hi:.4f}], histogram maximum "
        f"{report.histogram_max:.4f}, bound satisfied: {report.satisfied}"
    )
