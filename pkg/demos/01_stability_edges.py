"""
Stability edges of gradient descent and SAM
===========================================

Gradient descent with step size eta on a quadratic is stable exactly when the
curvature stays below 2/eta.  SAM evaluates the gradient at the uphill point
``w + rho g/|g|``; its one-step edge also depends on the gradient norm and is
always below 2/eta.  This script tabulates both and the ratio between them.
"""

import numpy as np

from samedge import EdgeReport, edge_ratio, gd_edge, sam_edge

# A single configuration, reported in full.
report = EdgeReport.compute(eta=0.1, rho=0.1, grad_norm=1.0)
print(report)

# The edge depends on (eta, rho, |g|) only through alpha = eta |g| / (2 rho),
# once it is measured in units of the GD edge.
print("\n  eta    rho    |g|     2/eta    SAM edge   ratio")
for eta in (0.3, 0.1, 0.03):
    for rho in (0.01, 0.1):
        for g in (0.01, 0.1, 1.0):
            e = sam_edge(eta, rho, g)
            print(f"{eta:5.2f} {rho:6.2f} {g:6.2f} {gd_edge(eta):9.3f} {e:10.4f} "
                  f"{e / gd_edge(eta):7.4f}")

# Limits of the ratio: it approaches 1 as alpha grows (small rho or large
# gradients) and vanishes like sqrt(alpha) as the gradient norm shrinks.
alphas = np.geomspace(1e-6, 1e6, 13)
print("\n   alpha      ratio    ratio/sqrt(alpha)")
for a in alphas:
    r = edge_ratio(a)
    print(f"{a:8.0e} {r:10.6f} {r / np.sqrt(a):12.6f}")
