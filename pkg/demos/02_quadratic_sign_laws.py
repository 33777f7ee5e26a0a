"""
One step on a quadratic: when does the loss go up?
==================================================

On ``l(w) = 0.5 w^T H w`` a single step changes the loss by a sum of one term
per eigen-direction.  With the gradient lined up with the top eigenvector,
the loss rises exactly when the top eigenvalue exceeds the stability edge:
2/eta for gradient descent, the SAM edge for SAM.  We check this by
simulation, compare the closed form against the simulated change, and locate
the edge by bisection without using its formula.
"""

import numpy as np

from samedge import sam_edge
from samedge.quadlab import (
    aligned_step_delta,
    closed_form_trial,
    edge_bisection_oracle,
    stable_interval,
    verify_gd_prop_sign,
    verify_prop_sign,
)

# Hand-checkable case: eta = rho = 0.1, |g| = 1 puts the SAM edge at exactly 10.
eta, rho, g = 0.1, 0.1, 1.0
print("SAM edge:", sam_edge(eta, rho, g))
for lam in (9.0, 9.99, 10.01, 11.0):
    print(f"  lambda = {lam:6.2f}   loss change = {aligned_step_delta(lam, eta, rho, g):+.3e}")

# The same crossing found by bisection over simulated steps.
print("bisection:", edge_bisection_oracle(eta, rho, g, tol=1e-12))

# Each eigen-direction contributes a decrease when its eigenvalue lies in an
# interval whose upper end is the SAM edge.
print("stable interval (lower, upper):", stable_interval(g, eta, rho))

# Randomised versions over many dimensions, step sizes and radii.
for report in (verify_gd_prop_sign(trials=5000, seed=0), verify_prop_sign(trials=5000, seed=0)):
    print(report.summary())

# Closed form versus simulation on quadratics with mixed-sign spectra.
rng = np.random.default_rng(0)
errors = []
for _ in range(500):
    closed, simulated = closed_form_trial(rng)
    errors.append(abs(closed - simulated) / abs(simulated))
print(f"closed form vs simulation: max relative error {max(errors):.2e}")
