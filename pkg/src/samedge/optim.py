"""Gradient descent and SAM steppers, plus the closed-form stability edges.

The SAM update is::

    w' = w - eta * grad(w + rho * g / ||g||),    g = grad(w)

With ``rho = 0`` it is plain gradient descent.  For a locally exact quadratic,
one GD step decreases the loss iff the curvature along the gradient stays
below ``2 / eta``; for SAM the threshold is

    (||g|| / (2 rho)) * (sqrt(1 + 8 rho / (eta ||g||)) - 1)

which depends on the gradient norm and is always below ``2 / eta``.
"""

import math
from dataclasses import dataclass

import numpy as np

from samedge.errors import ContractViolation, DivergedError, ZeroGradientError
from samedge.objectives import as_param_vector


@dataclass(frozen=True)
class OptimConfig:
    eta: float
    rho: float = 0.0
    max_steps: int = 1000
    # None lets the training harness pick a cap relative to the initial loss
    divergence_threshold: float = None

    def __post_init__(self):
        # eta == 0 is accepted so that frozen (no-op) steps can be expressed
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ContractViolation(f"eta must be non-negative and finite, got {self.eta}")
        if not (self.rho >= 0 and math.isfinite(self.rho)):
            raise ContractViolation(f"rho must be non-negative and finite, got {self.rho}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ContractViolation(f"max_steps must be a positive integer, got {self.max_steps}")
        if self.divergence_threshold is not None and not self.divergence_threshold > 0:
            raise ContractViolation(
                f"divergence_threshold must be positive, got {self.divergence_threshold}")


@dataclass(frozen=True)
class EdgeReport:
    gd_edge: float
    sam_edge: float
    alpha: float
    ratio: float

    @classmethod
    def compute(cls, eta, rho, grad_norm):
        gd = gd_edge(eta)
        sam = sam_edge(eta, rho, grad_norm)
        alpha = math.inf if rho == 0 else eta * grad_norm / (2.0 * rho)
        return cls(gd_edge=gd, sam_edge=sam, alpha=alpha, ratio=sam / gd)


def gd_edge(eta):
    if not eta > 0:
        raise ContractViolation(f"eta must be positive, got {eta}")
    return 2.0 / eta


def sam_edge(eta, rho, grad_norm):
    """SAM's edge of stability.

    Evaluated in the rationalised form ``(4/eta) / (sqrt(1 + 8 rho/(eta ||g||)) + 1)``,
    which equals the textbook expression but avoids the ``sqrt(1+x) - 1``
    cancellation.  ``rho = 0`` gives ``2 / eta`` (the continuous limit) and
    ``grad_norm = 0`` with ``rho > 0`` gives 0.
    """
    if not eta > 0:
        raise ContractViolation(f"eta must be positive, got {eta}")
    if not rho >= 0:
        raise ContractViolation(f"rho must be non-negative, got {rho}")
    if not grad_norm >= 0:
        raise ContractViolation(f"grad_norm must be non-negative, got {grad_norm}")
    if rho == 0:
        return 2.0 / eta
    if grad_norm == 0:
        return 0.0
    x = 8.0 * rho / (eta * grad_norm)
    return (4.0 / eta) / (math.sqrt(1.0 + x) + 1.0)


def edge_ratio(alpha):
    """Ratio of the SAM edge to ``2 / eta`` as a function of ``alpha = eta ||g|| / (2 rho)``.

    Equal to ``(alpha/2) (sqrt(1 + 4/alpha) - 1)``; tends to 1 as alpha grows
    and behaves like ``sqrt(alpha)`` as alpha shrinks.
    """
    if not alpha > 0:
        raise ContractViolation(f"alpha must be positive, got {alpha}")
    if math.isinf(alpha):
        return 1.0
    return 2.0 / (math.sqrt(1.0 + 4.0 / alpha) + 1.0)


def sam_direction(objective, w, g, rho):
    """Gradient at the uphill point ``w + rho g/||g||``.

    ``g`` is the :class:`~samedge.objectives.GradientInfo` at ``w``.  With
    ``rho = 0`` the gradient at ``w`` itself is returned unchanged.
    """
    if rho == 0:
        return g.grad
    if g.norm == 0:
        raise ZeroGradientError("SAM update undefined: gradient is zero")
    return objective.gradient(w + (rho / g.norm) * g.grad).grad


def _checked(step):
    if not np.all(np.isfinite(step)):
        raise DivergedError("non-finite gradient")
    return step


def gd_step(objective, w, config):
    """One GD step ``w - eta * grad(w)``; ``config.rho`` is ignored."""
    w = as_param_vector(w, objective.dim)
    g = objective.gradient(w)
    return w - config.eta * _checked(g.grad)


def sam_step(objective, w, config):
    """One SAM step.  Identical to :func:`gd_step` when ``config.rho == 0``."""
    w = as_param_vector(w, objective.dim)
    g = objective.gradient(w)
    return w - config.eta * _checked(sam_direction(objective, w, g, config.rho))
