"""Differentiable objectives with exact gradients and Hessian-vector products.

Two families are provided:

* :class:`QuadraticModel` -- ``l(w) = c + b.w + 0.5 w.H.w`` with a constant Hessian.
* :class:`MlpModel` -- a fully connected network trained with the quadratic
  loss ``l(w) = (1/n) sum_i 0.5 * ||f(x_i; w) - y_i||^2`` (mean over examples,
  sum over outputs, one half in front).

Parameter vectors are flat ``float64`` arrays.  Objectives are immutable after
construction, so every method is a pure function of its arguments.
"""

from dataclasses import dataclass

import numpy as np

from samedge.errors import ContractViolation, DivergedError

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class GradientInfo:
    grad: np.ndarray
    norm: float

    @classmethod
    def from_grad(cls, grad):
        grad = np.asarray(grad, dtype=np.float64)
        return cls(grad=grad, norm=float(np.linalg.norm(grad)))


def as_param_vector(w, dim=None, name="w"):
    """Coerce ``w`` to a 1-D float64 array, checking its length against ``dim``."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ContractViolation(f"{name} must be one-dimensional, got shape {w.shape}")
    if w.size < 1:
        raise ContractViolation(f"{name} must have at least one entry")
    if dim is not None and w.size != dim:
        raise ContractViolation(f"{name} has dimension {w.size}, expected {dim}")
    return w


def _require_finite(w, name="w"):
    if not np.all(np.isfinite(w)):
        raise DivergedError(f"{name} contains non-finite entries")


class Objective:
    """Base class: subclasses provide ``dim``, ``loss``, ``gradient`` and ``hvp``."""

    dim: int

    def loss(self, w):
        raise NotImplementedError

    def gradient(self, w):
        raise NotImplementedError

    def loss_and_gradient(self, w):
        return self.loss(w), self.gradient(w)

    def hvp(self, w, v):
        raise NotImplementedError


class QuadraticModel(Objective):
    """Explicit quadratic ``c + b.w + 0.5 w.H.w``.

    Only the lower triangle of ``hessian`` is read; the full matrix is rebuilt
    from it so that symmetry holds exactly.
    """

    def __init__(self, hessian, linear=None, offset=0.0):
        hessian = np.atleast_2d(np.asarray(hessian, dtype=np.float64))
        if hessian.ndim != 2 or hessian.shape[0] != hessian.shape[1]:
            raise ContractViolation(f"hessian must be square, got shape {hessian.shape}")
        self.dim = hessian.shape[0]
        self._lower = np.tril(hessian)
        full = self._lower + self._lower.T
        full[np.diag_indices(self.dim)] = np.diag(self._lower)
        self._hessian = full
        self._hessian.setflags(write=False)
        if linear is None:
            linear = np.zeros(self.dim)
        self.linear = as_param_vector(linear, self.dim, "linear").copy()
        self.linear.setflags(write=False)
        self.offset = float(offset)

    @property
    def hessian(self):
        return self._hessian

    @property
    def lower_triangle(self):
        return self._lower

    @classmethod
    def from_eigen(cls, eigenvalues, eigenvectors, minimizer=None, min_value=0.0):
        """Build ``0.5 (w-m).H.(w-m) + min_value`` with ``H = V diag(lam) V^T``."""
        lam = np.asarray(eigenvalues, dtype=np.float64)
        vecs = np.asarray(eigenvectors, dtype=np.float64)
        hessian = (vecs * lam) @ vecs.T
        model = cls(hessian)
        if minimizer is None:
            return cls(model.hessian, offset=min_value)
        m = as_param_vector(minimizer, model.dim, "minimizer")
        hm = model.hessian @ m
        return cls(model.hessian, linear=-hm, offset=min_value + 0.5 * m @ hm)

    def loss(self, w):
        w = as_param_vector(w, self.dim)
        return float(self.offset + self.linear @ w + 0.5 * (w @ (self._hessian @ w)))

    def gradient(self, w):
        w = as_param_vector(w, self.dim)
        _require_finite(w)
        return GradientInfo.from_grad(self.linear + self._hessian @ w)

    def hvp(self, w, v):
        as_param_vector(w, self.dim)
        v = as_param_vector(v, self.dim, "v")
        return self._hessian @ v

    def minimizer(self):
        """Solve ``H w = -b``; only meaningful for nonsingular ``H``."""
        return np.linalg.solve(self._hessian, -self.linear)


def layer_shapes(widths):
    widths = tuple(int(x) for x in widths)
    if len(widths) < 2 or any(x < 1 for x in widths):
        raise ContractViolation(f"need at least two positive widths, got {widths}")
    return list(zip(widths[:-1], widths[1:]))


def param_count(widths):
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in layer_shapes(widths))


def unpack(widths, w):
    """Split a flat vector into ``[(W, b), ...]`` views; ``W`` is ``fan_in x fan_out``."""
    layers = []
    pos = 0
    for fan_in, fan_out in layer_shapes(widths):
        W = w[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = w[pos:pos + fan_out]
        pos += fan_out
        layers.append((W, b))
    if pos != w.size:
        raise ContractViolation(f"parameter vector has {w.size} entries, widths need {pos}")
    return layers


def pack(layers):
    return np.concatenate([np.concatenate([W.ravel(), b.ravel()]) for W, b in layers])


def glorot_init(widths, seed):
    """Glorot normal weights, variance ``2 / (fan_in + fan_out)``; zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in layer_shapes(widths):
        std = np.sqrt(2.0 / (fan_in + fan_out))
        layers.append((rng.normal(0.0, std, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return pack(layers)


def _act(name, z):
    # returns activation value and its first two derivatives
    if name == "tanh":
        t = np.tanh(z)
        d1 = 1.0 - t * t
        return t, d1, -2.0 * t * d1
    a = np.maximum(z, 0.0)
    d1 = (z > 0).astype(np.float64)
    return a, d1, np.zeros_like(z)


class MlpModel(Objective):
    """Fully connected network with hidden activation ``relu`` or ``tanh`` and a
    linear output layer, scored by the quadratic loss over a fixed dataset.

    The HVP is the exact (almost-everywhere, for relu) Hessian applied to a
    direction: a forward pass records a tape of per-layer pre-activations,
    then a forward-mode sweep differentiates the reverse sweep along ``v``.
    """

    def __init__(self, widths, inputs, targets, activation="tanh"):
        self.widths = tuple(int(x) for x in widths)
        layer_shapes(self.widths)
        if activation not in ACTIVATIONS:
            raise ContractViolation(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
        self.activation = activation
        inputs = np.asarray(inputs, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets[:, None]
        if inputs.ndim != 2 or inputs.shape[1] != self.widths[0]:
            raise ContractViolation(
                f"inputs must be n x {self.widths[0]}, got shape {inputs.shape}")
        if targets.shape != (inputs.shape[0], self.widths[-1]):
            raise ContractViolation(
                f"targets must be {inputs.shape[0]} x {self.widths[-1]}, got {targets.shape}")
        self.inputs = inputs
        self.targets = targets
        self.inputs.setflags(write=False)
        self.targets.setflags(write=False)
        self.n = inputs.shape[0]
        self.dim = param_count(self.widths)

    def subset(self, index):
        """The same architecture restricted to the examples in ``index``."""
        return MlpModel(self.widths, self.inputs[index], self.targets[index], self.activation)

    def _forward(self, w):
        layers = unpack(self.widths, w)
        a = self.inputs
        tape = []
        for i, (W, b) in enumerate(layers):
            z = a @ W + b
            if i + 1 < len(layers):
                out, d1, d2 = _act(self.activation, z)
            else:
                out, d1, d2 = z, None, None
            tape.append((a, z, d1, d2))
            a = out
        return layers, tape, a - self.targets

    def predict(self, w):
        w = as_param_vector(w, self.dim)
        _, _, resid = self._forward(w)
        return resid + self.targets

    def loss(self, w):
        w = as_param_vector(w, self.dim)
        _, _, resid = self._forward(w)
        return float(0.5 * np.sum(resid * resid) / self.n)

    def _backward(self, layers, tape, resid):
        delta = resid / self.n
        grads = [None] * len(layers)
        deltas = [None] * len(layers)
        for i in range(len(layers) - 1, -1, -1):
            a_prev = tape[i][0]
            deltas[i] = delta
            grads[i] = (a_prev.T @ delta, delta.sum(axis=0))
            if i > 0:
                delta = (delta @ layers[i][0].T) * tape[i - 1][2]
        return grads, deltas

    def loss_and_gradient(self, w):
        w = as_param_vector(w, self.dim)
        _require_finite(w)
        layers, tape, resid = self._forward(w)
        grads, _ = self._backward(layers, tape, resid)
        loss = float(0.5 * np.sum(resid * resid) / self.n)
        return loss, GradientInfo.from_grad(pack(grads))

    def gradient(self, w):
        return self.loss_and_gradient(w)[1]

    def hvp(self, w, v):
        w = as_param_vector(w, self.dim)
        v = as_param_vector(v, self.dim, "v")
        _require_finite(w)
        layers, tape, resid = self._forward(w)
        _, deltas = self._backward(layers, tape, resid)
        dirs = unpack(self.widths, v)
        n_layers = len(layers)

        # forward sweep: directional derivatives of pre-activations and activations
        r_z = []
        r_a = np.zeros_like(self.inputs)
        for i, ((W, _), (VW, Vb)) in enumerate(zip(layers, dirs)):
            a_prev = tape[i][0]
            rz = r_a @ W + a_prev @ VW + Vb
            r_z.append(rz)
            if i + 1 < n_layers:
                r_a = tape[i][2] * rz
        # reverse sweep differentiated along v
        r_delta = r_z[-1] / self.n
        out = [None] * n_layers
        for i in range(n_layers - 1, -1, -1):
            a_prev = tape[i][0]
            r_a_prev = tape[i - 1][2] * r_z[i - 1] if i > 0 else None
            delta = deltas[i]
            if r_a_prev is None:
                out[i] = (a_prev.T @ r_delta, r_delta.sum(axis=0))
                break
            out[i] = (r_a_prev.T @ delta + a_prev.T @ r_delta, r_delta.sum(axis=0))
            W, _ = layers[i]
            VW, _ = dirs[i]
            _, _, d1, d2 = tape[i - 1]
            back = delta @ W.T
            r_delta = (r_delta @ W.T + delta @ VW.T) * d1 + back * d2 * r_z[i - 1]
        return pack(out)
