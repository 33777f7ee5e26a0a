"""Matrix-free estimation of the dominant Hessian eigenpairs, and gradient alignment.

Eigenpairs are found by Lanczos iteration on Hessian-vector products with full
reorthogonalisation; the Hessian is never formed.  "Dominant" means largest
in magnitude, with the sign of each eigenvalue kept.
"""

from dataclasses import dataclass

import numpy as np

from samedge.errors import ContractViolation, ZeroGradientError
from samedge.objectives import as_param_vector

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 200


@dataclass(frozen=True)
class SpectralEstimate:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # shape (k, d); row i pairs with eigenvalues[i]
    residuals: np.ndarray
    hvp_calls: int
    converged: bool

    @property
    def magnitudes(self):
        return np.abs(self.eigenvalues)

    @property
    def principal(self):
        return self.eigenvectors[0]


@dataclass(frozen=True)
class AlignmentRecord:
    align_iterate: float
    align_uphill: float


def _canonical_sign(v):
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
    return -v if v[nz[0]] < 0 else v


def _orthogonalize(u, basis):
    # two passes of classical Gram-Schmidt ("twice is enough")
    for _ in range(2):
        u = u - basis.T @ (basis @ u)
    return u


def _ritz(alpha, beta, k):
    m = len(alpha)
    T = np.diag(alpha)
    if m > 1:
        off = np.asarray(beta[:m - 1])
        T += np.diag(off, 1) + np.diag(off, -1)
    theta, S = np.linalg.eigh(T)
    order = np.argsort(-np.abs(theta), kind="stable")[:k]
    return theta[order], S[:, order]


def top_k_eigs(objective, w, k=3, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, seed=0):
    """Top-``k`` eigenpairs (by |eigenvalue|) of the Hessian of ``objective`` at ``w``.

    Lanczos runs for at most ``max_iters * k - k`` steps; ``k`` further HVPs
    measure the residuals ``||H v - lam v||`` of the returned pairs, so
    ``hvp_calls <= max_iters * k``.  If the budget runs out before every
    residual is below ``tol * max(1, |lam|)`` the best estimate is returned with
    ``converged=False``.  The Krylov start vector comes from ``seed``.
    """
    w = as_param_vector(w, objective.dim)
    d = objective.dim
    if not 1 <= k <= d:
        raise ContractViolation(f"k must be in [1, {d}], got {k}")
    if not tol > 0:
        raise ContractViolation(f"tol must be positive, got {tol}")
    if max_iters < 2:
        raise ContractViolation(f"max_iters must be >= 2, got {max_iters}")

    rng = np.random.default_rng(seed)
    max_basis = min(d, max_iters * k - k)
    Q = np.zeros((max_basis, d))
    alpha, beta = [], []
    calls = 0
    scale = 0.0

    q = rng.standard_normal(d)
    q /= np.linalg.norm(q)
    m = 0
    while m < max_basis:
        Q[m] = q
        u = objective.hvp(w, q)
        calls += 1
        a = float(q @ u)
        alpha.append(a)
        m += 1
        u = _orthogonalize(u, Q[:m])
        b = float(np.linalg.norm(u))
        scale = max(scale, abs(a), b)
        theta, S = _ritz(alpha, beta, k)
        if m >= k:
            est = b * np.abs(S[-1])
            if np.all(est <= 0.1 * tol * np.maximum(1.0, np.abs(theta))):
                break
        if m == max_basis:
            break
        if b <= 1e-12 * max(scale, 1.0):
            # invariant subspace: restart from a fresh direction orthogonal to it
            q = _orthogonalize(rng.standard_normal(d), Q[:m])
            q /= np.linalg.norm(q)
            beta.append(0.0)
        else:
            beta.append(b)
            q = u / b

    k_found = min(k, m)
    theta, S = _ritz(alpha, beta, k_found)
    vecs = S.T @ Q[:m]
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = np.array([_canonical_sign(v) for v in vecs])
    residuals = np.empty(k_found)
    for i in range(k_found):
        residuals[i] = np.linalg.norm(objective.hvp(w, vecs[i]) - theta[i] * vecs[i])
        calls += 1
    converged = k_found == k and bool(np.all(residuals <= tol * np.maximum(1.0, np.abs(theta))))
    return SpectralEstimate(eigenvalues=theta, eigenvectors=vecs, residuals=residuals,
                            hvp_calls=calls, converged=converged)


def operator_norm(estimate):
    if len(estimate.eigenvalues) == 0:
        raise ContractViolation("empty spectral estimate")
    return float(abs(estimate.eigenvalues[0]))


def alignment(g, v1):
    """Absolute cosine between ``g`` and ``v1``."""
    g = np.asarray(g, dtype=np.float64)
    v1 = np.asarray(v1, dtype=np.float64)
    ng, nv = np.linalg.norm(g), np.linalg.norm(v1)
    if ng == 0 or nv == 0:
        raise ContractViolation("alignment of a zero vector is undefined")
    return float(min(1.0, abs(g @ v1) / (ng * nv)))


def alignment_pair(objective, w, rho, v1):
    """Alignment of the iterate gradient and of the uphill (SAM) gradient with ``v1``."""
    g = objective.gradient(w)
    if g.norm == 0:
        raise ZeroGradientError("alignment needs a nonzero gradient")
    a_iter = alignment(g.grad, v1)
    if rho == 0:
        return AlignmentRecord(a_iter, a_iter)
    uphill = objective.gradient(w + (rho / g.norm) * g.grad).grad
    return AlignmentRecord(a_iter, alignment(uphill, v1))
