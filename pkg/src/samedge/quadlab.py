"""One-step analysis of GD and SAM on exact quadratics.

On a quadratic with Hessian ``H = sum_i lam_i v_i v_i^T`` and gradient ``g`` at
the current point, one SAM step changes the loss by

    -eta * sum_i (v_i.g)^2 * a_i * (1 - eta * a_i * lam_i / 2),
    a_i = 1 + rho * lam_i / ||g||

The functions here evaluate that sum, classify the sign of each term, and
check the resulting sign laws against direct simulation with random
quadratics.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from samedge.errors import ContractViolation, ZeroGradientError
from samedge.objectives import QuadraticModel
from samedge.optim import OptimConfig, gd_edge, gd_step, sam_edge, sam_step

BOUNDARY_BAND = 1e-12


class TermSign(enum.Enum):
    POSITIVE = 1
    ZERO = 0
    NEGATIVE = -1


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order; ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def of(cls, hessian):
        lam, vecs = np.linalg.eigh(np.asarray(hessian, dtype=np.float64))
        order = np.argsort(lam)[::-1]
        return cls(eigenvalues=lam[order], eigenvectors=vecs[:, order])

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def closed_form_step_delta(eig, g, eta, rho):
    """Loss change of one SAM step (GD when ``rho == 0``) on the exact quadratic."""
    if not g.norm > 0:
        raise ZeroGradientError("closed form needs a nonzero gradient")
    lam = eig.eigenvalues
    proj = eig.eigenvectors.T @ g.grad
    a = 1.0 + rho * lam / g.norm
    return float(-eta * np.sum(proj * proj * a * (1.0 - 0.5 * eta * a * lam)))


def stable_interval(grad_norm, eta, rho):
    """Open interval of eigenvalues whose term in the loss-change sum is positive
    (given ``lam > -||g||/rho``).  The upper end is the SAM edge."""
    if not (grad_norm > 0 and eta > 0 and rho > 0):
        raise ContractViolation(
            f"grad_norm, eta and rho must be positive, got {grad_norm}, {eta}, {rho}")
    root = math.sqrt(1.0 + 8.0 * rho / (eta * grad_norm))
    lower = -(grad_norm / (2.0 * rho)) * (root + 1.0)
    return lower, sam_edge(eta, rho, grad_norm)


def term_sign(lam, grad_norm, eta, rho):
    """Sign of ``a * (1 - eta * a * lam / 2)`` with ``a = 1 + rho * lam / ||g||``.

    Decided by comparing ``lam`` with the three roots ``lower``, ``-||g||/rho``
    and ``upper``, which keeps boundary cases exact.  Note the product is
    positive below ``lower`` as well, where both factors are negative.
    """
    if not grad_norm > 0:
        raise ContractViolation(f"grad_norm must be positive, got {grad_norm}")
    if rho == 0:
        edge = gd_edge(eta)
        if lam == edge:
            return TermSign.ZERO
        return TermSign.POSITIVE if lam < edge else TermSign.NEGATIVE
    lower, upper = stable_interval(grad_norm, eta, rho)
    pole = -grad_norm / rho
    if lam in (lower, pole, upper):
        return TermSign.ZERO
    if lam < lower or pole < lam < upper:
        return TermSign.POSITIVE
    return TermSign.NEGATIVE


def random_psd(dim, rng, low=1e-2, high=1e2):
    """``Q diag(D) Q^T`` with ``Q`` from QR of a Gaussian matrix and ``D`` log-uniform."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    d = np.sort(np.exp(rng.uniform(math.log(low), math.log(high), size=dim)))[::-1]
    return EigenDecomposition(eigenvalues=d, eigenvectors=q)


def random_symmetric(dim, rng, scale=10.0):
    """Mixed-sign spectrum: eigenvalues uniform in ``[-scale, scale]``."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    d = np.sort(rng.uniform(-scale, scale, size=dim))[::-1]
    return EigenDecomposition(eigenvalues=d, eigenvectors=q)


def aligned_point(eig, grad_norm, minimizer, sign=1.0):
    """``w = minimizer + s v_1`` with ``|lam_1 s| = grad_norm``, so the gradient
    ``lam_1 s v_1`` is along the principal eigenvector."""
    s = sign * grad_norm / abs(eig.eigenvalues[0])
    return minimizer + s * eig.eigenvectors[:, 0]


def eta_for_sam_edge(edge, rho, grad_norm):
    """Step size whose SAM edge at ``(rho, grad_norm)`` equals ``edge``."""
    t = 1.0 + 2.0 * rho * edge / grad_norm
    return 8.0 * rho / (grad_norm * (t * t - 1.0))


@dataclass
class SignReport:
    name: str
    trials: int
    passed: int = 0
    excluded: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.mismatches

    def summary(self):
        status = "PASS" if self.ok else "FAIL"
        return (f"{self.name} {status} trials={self.trials} passed={self.passed} "
                f"excluded={self.excluded} mismatches={len(self.mismatches)}")


def _trial_rngs(seed, trials):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _sign_trial(rng, min_dim, max_dim, use_sam):
    dim = int(rng.integers(min_dim, max_dim + 1))
    eig = random_psd(dim, rng)
    lam1 = eig.eigenvalues[0]
    grad_norm = math.exp(rng.uniform(math.log(1e-2), math.log(10.0)))
    # put the edge within a factor of two of lam1 so both signs occur often
    edge = lam1 * math.exp(rng.uniform(-math.log(2.0), math.log(2.0)))
    if use_sam:
        rho = math.exp(rng.uniform(math.log(1e-3), math.log(1.0)))
        eta = eta_for_sam_edge(edge, rho, grad_norm)
        edge = sam_edge(eta, rho, grad_norm)
    else:
        rho = 0.0
        eta = 2.0 / edge
        edge = gd_edge(eta)
    minimizer = rng.standard_normal(dim)
    model = QuadraticModel.from_eigen(eig.eigenvalues, eig.eigenvectors, minimizer)
    w = aligned_point(eig, grad_norm, minimizer, sign=rng.choice([-1.0, 1.0]))
    config = OptimConfig(eta=eta, rho=rho)
    step = sam_step if use_sam else gd_step
    delta = model.loss(step(model, w, config)) - model.loss(w)
    return delta, np.sign(lam1 - edge), dict(dim=dim, lam1=lam1, eta=eta, rho=rho,
                                             grad_norm=grad_norm, delta=delta)


def _verify(name, trials, seed, min_dim, max_dim, use_sam):
    if trials < 1:
        raise ContractViolation(f"trials must be >= 1, got {trials}")
    report = SignReport(name=name, trials=trials)
    for rng in _trial_rngs(seed, trials):
        delta, predicted, info = _sign_trial(rng, min_dim, max_dim, use_sam)
        if abs(delta) < BOUNDARY_BAND:
            report.excluded += 1
        elif np.sign(delta) == predicted:
            report.passed += 1
        else:
            report.mismatches.append(info)
    return report


def verify_prop_sign(dim=(2, 16), trials=1000, seed=0):
    """Randomised check that one SAM step on a PSD quadratic, with the gradient
    along the principal eigenvector, changes the loss with the sign of
    ``lam_1 - sam_edge``.  ``dim`` is an int or an inclusive ``(lo, hi)`` range."""
    lo, hi = (dim, dim) if np.isscalar(dim) else dim
    return _verify("prop3_sign", trials, seed, lo, hi, use_sam=True)


def verify_gd_prop_sign(dim=(2, 16), trials=1000, seed=0):
    """As :func:`verify_prop_sign` for GD, against ``lam_1 - 2/eta``."""
    lo, hi = (dim, dim) if np.isscalar(dim) else dim
    return _verify("prop1_sign", trials, seed, lo, hi, use_sam=False)


def aligned_step_delta(lam, eta, rho, grad_norm):
    """Simulated one-step loss change on ``0.5 lam w^2`` at ``w = grad_norm / lam``."""
    model = QuadraticModel([[lam]])
    w = np.array([grad_norm / lam])
    w_next = sam_step(model, w, OptimConfig(eta=eta, rho=rho))
    return model.loss(w_next) - model.loss(w)


def edge_bisection_oracle(eta, rho, grad_norm, tol=1e-9):
    """Locate the curvature at which one aligned SAM step stops decreasing the
    loss, by bisection over simulated steps (no edge formula involved)."""
    if not tol > 0:
        raise ContractViolation(f"tol must be positive, got {tol}")
    lo, hi = 0.0, 2.0 / eta
    if aligned_step_delta(hi, eta, rho, grad_norm) <= 0:
        raise ContractViolation("bracketing failed: no loss increase at 2/eta")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if aligned_step_delta(mid, eta, rho, grad_norm) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ClosedFormReport:
    trials: int
    max_rel_error: float
    tolerance: float

    @property
    def ok(self):
        return self.max_rel_error <= self.tolerance

    def summary(self):
        status = "PASS" if self.ok else "FAIL"
        return (f"eq3_closed_form {status} trials={self.trials} "
                f"max_rel_error={self.max_rel_error:.3e} tol={self.tolerance:.0e}")


def closed_form_trial(rng, min_dim=1, max_dim=16):
    """Random mixed-spectrum quadratic and SAM config; returns ``(closed, simulated)``."""
    dim = int(rng.integers(min_dim, max_dim + 1))
    eig = random_symmetric(dim, rng)
    model = QuadraticModel(eig.reconstruct(), linear=rng.standard_normal(dim))
    eig = EigenDecomposition.of(model.hessian)
    w = rng.standard_normal(dim)
    eta = math.exp(rng.uniform(math.log(1e-3), math.log(1.0)))
    rho = float(rng.choice([0.0, math.exp(rng.uniform(math.log(1e-3), math.log(1.0)))]))
    g = model.gradient(w)
    closed = closed_form_step_delta(eig, g, eta, rho)
    # the loss difference of a quadratic, l(w + s) - l(w) = s . (g + H s / 2), evaluated
    # without subtracting two O(|w|^2) losses (which would swamp a small eta * |g|^2)
    s = sam_step(model, w, OptimConfig(eta=eta, rho=rho)) - w
    simulated = float(s @ (g.grad + 0.5 * (model.hessian @ s)))
    return closed, simulated


def verify_closed_form(trials=1000, seed=0, tol=1e-10):
    worst = 0.0
    for rng in _trial_rngs(seed, trials):
        closed, simulated = closed_form_trial(rng)
        worst = max(worst, abs(closed - simulated) / abs(simulated))
    return ClosedFormReport(trials=trials, max_rel_error=worst, tolerance=tol)


@dataclass
class BisectionReport:
    points: int
    max_rel_error: float
    tolerance: float

    @property
    def ok(self):
        return self.max_rel_error <= self.tolerance

    def summary(self):
        status = "PASS" if self.ok else "FAIL"
        return (f"edge_bisection {status} points={self.points} "
                f"max_rel_error={self.max_rel_error:.3e} tol={self.tolerance:.0e}")


def verify_edge_bisection(n=10, low=1e-3, high=1.0, tol=1e-6):
    """Compare :func:`edge_bisection_oracle` with :func:`sam_edge` on an
    ``n x n x n`` log-spaced grid of ``(eta, rho, grad_norm)``."""
    axis = np.geomspace(low, high, n)
    worst = 0.0
    for eta in axis:
        for rho in axis:
            for gn in axis:
                edge = sam_edge(eta, rho, gn)
                found = edge_bisection_oracle(eta, rho, gn, tol=1e-12 * 2.0 / eta)
                worst = max(worst, abs(found - edge) / edge)
    return BisectionReport(points=n ** 3, max_rel_error=worst, tolerance=tol)
