"""Curves, frames and spline carriers.

Every computation in tikcurve happens on a parametrized curve. This script
looks at the moving frame of the sine graph, fits cubic splines to it and
watches the approximation distance shrink with the knot step.
"""
import numpy as np

from tikcurve import fit_spline, frame_at, gamma, parameter_grid, sine_graph

curve = sine_graph()  # m(t) = (t, sin t) on [0, 2 pi]
t = parameter_grid(curve, 8)
fr = frame_at(curve, t)

# tangent and normal are unit and orthogonal at every node
print("|tau| - 1:", np.abs(np.linalg.norm(fr.tangent, axis=1) - 1).max())
print("tau . n  :", np.abs(np.einsum("ij,ij->i", fr.tangent, fr.normal)).max())
print("metric g :", np.round(fr.metric, 4))

# spline carriers with halving knot steps; the distance gamma is first order
# in h because the end rows only see second differences of the data
print("\n      h        gamma    ratio")
prev = None
for k in range(6):
    h = np.pi / 16 / 2**k
    g = gamma(curve, fit_spline(curve, h))
    ratio = "" if prev is None else f"{prev / g:7.3f}"
    print(f"{h:9.5f}  {g:9.3e}  {ratio}")
    prev = g

# the not-a-knot end condition is second order and reproduces cubics exactly
for end in ("second-difference", "not-a-knot"):
    g = [gamma(curve, fit_spline(curve, np.pi / 16 / 2**k, end_condition=end)) for k in range(3)]
    print(f"\n{end:>18}: successive ratios {np.round(np.array(g[:-1]) / g[1:], 2)}")
