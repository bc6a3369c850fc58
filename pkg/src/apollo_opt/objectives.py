"""Benchmark objectives: two classic analytic surfaces, a quadratic bowl
with optional gradient noise, and a small tanh classifier on a Gaussian
mixture. Every function returns (loss, gradient-or-gradients) so the
training loop never needs objective-specific plumbing.

All gradients here are exact closed forms; the test suite certifies each
one against central differences at randomly drawn points.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

__all__ = [
    "rosenbrock",
    "quadratic_bowl",
    "saddle_objective",
    "make_dataset",
    "init_mlp_params",
    "mlp_forward_backward",
    "Objective",
    "make_objective",
    "OBJECTIVES",
]


def rosenbrock(theta: np.ndarray) -> tuple[float, np.ndarray]:
    """Banana valley in any dimension >= 2, curvature factor 100.

    loss = sum_i 100*(x[i+1] - x[i]^2)^2 + (1 - x[i])^2

    Minimum 0 at the all-ones point. The classic start (-1.2, 1) gives
    loss 24.2.
    """
    x = np.asarray(theta, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ConfigError(f"rosenbrock needs a vector of length >= 2, got shape {x.shape}")
    a, b = x[:-1], x[1:]
    diff = b - a * a
    loss = float(np.sum(100.0 * diff * diff + (1.0 - a) ** 2))
    grad = np.zeros_like(x)
    grad[:-1] += -400.0 * a * diff - 2.0 * (1.0 - a)
    grad[1:] += 200.0 * diff
    return loss, grad


def quadratic_bowl(
    theta: np.ndarray,
    H: np.ndarray,
    noise_scale: float = 0.0,
    rng: np.random.Generator = None,
) -> tuple[float, np.ndarray]:
    """Axis-aligned quadratic 0.5 * sum(H * theta^2) with H > 0 elementwise.

    The loss is always the exact value; noise_scale > 0 adds independent
    standard normal draws times noise_scale to the gradient only, so the
    stochastic gradient stays unbiased. theta = [1, 1] with H = [1, 100]
    gives loss 50.5 and gradient [1, 100].
    """
    x = np.asarray(theta, dtype=np.float64)
    h = np.asarray(H, dtype=np.float64)
    if x.shape != h.shape:
        raise ConfigError(f"theta/H shape mismatch: {x.shape} vs {h.shape}")
    if np.any(h <= 0):
        raise ConfigError("curvature entries must all be positive")
    loss = 0.5 * float(np.sum(h * x * x))
    grad = h * x
    if noise_scale > 0.0:
        if rng is None:
            raise ConfigError("noise_scale > 0 requires an rng")
        grad = grad + noise_scale * rng.standard_normal(x.shape)
    return loss, grad


def saddle_objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
    """Two-dimensional saddle x^2 - y^2 + 0.1*y^4.

    The origin is a strict saddle; the minima sit at (0, +-sqrt(5)) with
    value -2.5, so any trajectory reaching loss < -1 has left the saddle
    region through the negative-curvature direction.
    """
    x = np.asarray(theta, dtype=np.float64)
    if x.shape != (2,):
        raise ConfigError(f"saddle objective is 2-d, got shape {x.shape}")
    u, v = x[0], x[1]
    loss = float(u * u - v * v + 0.1 * v ** 4)
    grad = np.array([2.0 * u, -2.0 * v + 0.4 * v ** 3], dtype=np.float64)
    return loss, grad


def make_dataset(
    n: int, dim: int, k: int, seed: int, spread: float = 2.5
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian mixture classification set: k unit-variance clusters whose
    means are drawn N(0, spread^2). Labels are uniform over classes.
    Fully determined by (n, dim, k, seed, spread).
    """
    if n <= 0 or dim <= 0 or k <= 1:
        raise ConfigError(f"need n > 0, dim > 0, k > 1, got ({n}, {dim}, {k})")
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, spread, size=(k, dim))
    labels = rng.integers(0, k, size=n)
    feats = means[labels] + rng.normal(0.0, 1.0, size=(n, dim))
    return feats, labels


def init_mlp_params(dim: int, hidden: int, k: int, seed: int) -> list:
    """One hidden tanh layer. Weights are N(0, 1/fan_in), biases zero.
    Groups in order: [W1, b1, W2, b2].
    """
    rng = np.random.default_rng(seed)
    return [
        rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, hidden)),
        np.zeros(hidden, dtype=np.float64),
        rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, k)),
        np.zeros(k, dtype=np.float64),
    ]


def mlp_forward_backward(
    params: list, X: np.ndarray, y: np.ndarray
) -> tuple[float, list]:
    """Mean cross-entropy of the one-hidden-layer tanh network plus exact
    gradients for all four groups.

    The softmax is computed with a per-row max shift. Loss is the mean
    over the batch, so duplicating every sample leaves both the loss and
    the gradients unchanged, and the gradient of a full pass equals the
    sample-count-weighted mean over any partition of the batch. With all
    weights zero the output is uniform and the loss is ln(k).
    """
    W1, b1, W2, b2 = params
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] != W1.shape[0]:
        raise ConfigError(
            f"input shape {X.shape} does not match first layer {W1.shape}"
        )
    if y.shape != (X.shape[0],):
        raise ConfigError(f"labels shape {y.shape} does not match batch {X.shape[0]}")
    z1 = X @ W1 + b1
    a1 = np.tanh(z1)
    z2 = a1 @ W2 + b2
    z2 = z2 - z2.max(axis=1, keepdims=True)
    ez = np.exp(z2)
    p = ez / ez.sum(axis=1, keepdims=True)
    n = X.shape[0]
    idx = np.arange(n)
    loss = float(-np.mean(np.log(p[idx, y] + 1e-300)))
    dz2 = p.copy()
    dz2[idx, y] -= 1.0
    dz2 /= n
    gW2 = a1.T @ dz2
    gb2 = dz2.sum(axis=0)
    da1 = dz2 @ W2.T
    dz1 = da1 * (1.0 - a1 * a1)
    gW1 = X.T @ dz1
    gb1 = dz1.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2]


class Objective:
    """Uniform protocol the training loop drives.

    init_params(seed) -> list of parameter groups
    loss_and_grads(params, rng) -> (loss, grads) for one step; stochastic
        objectives draw their noise or batch from rng
    full_loss(params) -> deterministic evaluation value
    """

    name = "objective"
    stochastic = False

    def init_params(self, seed: int) -> list:
        raise NotImplementedError

    def loss_and_grads(self, params: list, rng: np.random.Generator) -> tuple:
        raise NotImplementedError

    def full_loss(self, params: list) -> float:
        loss, _ = self.loss_and_grads(params, None)
        return loss


class RosenbrockObjective(Objective):
    name = "rosenbrock"

    def __init__(self, dim: int = 2, start: tuple = None):
        if dim < 2:
            raise ConfigError(f"rosenbrock dim must be >= 2, got {dim}")
        self.dim = dim
        if start is None:
            start = [-1.2] + [1.0] * (dim - 1)
        self.start = np.asarray(start, dtype=np.float64)
        if self.start.shape != (dim,):
            raise ConfigError(
                f"start shape {self.start.shape} does not match dim {dim}"
            )

    def init_params(self, seed: int) -> list:
        return [self.start.copy()]

    def loss_and_grads(self, params, rng=None):
        loss, g = rosenbrock(params[0])
        return loss, [g]


class QuadraticBowlObjective(Objective):
    name = "quadratic_bowl"

    def __init__(self, H=None, dim: int = 8, noise_scale: float = 0.0, start=None):
        if H is None:
            H = np.linspace(0.5, 5.0, dim)
        self.H = np.asarray(H, dtype=np.float64)
        if np.any(self.H <= 0):
            raise ConfigError("curvature entries must all be positive")
        self.noise_scale = float(noise_scale)
        self.stochastic = self.noise_scale > 0.0
        if start is None:
            start = np.ones_like(self.H)
        self.start = np.asarray(start, dtype=np.float64)
        if self.start.shape != self.H.shape:
            raise ConfigError(
                f"start shape {self.start.shape} does not match H {self.H.shape}"
            )

    def init_params(self, seed: int) -> list:
        return [self.start.copy()]

    def loss_and_grads(self, params, rng=None):
        scale = self.noise_scale if rng is not None else 0.0
        loss, g = quadratic_bowl(params[0], self.H, scale, rng)
        return loss, [g]

    def full_loss(self, params) -> float:
        loss, _ = quadratic_bowl(params[0], self.H)
        return loss


class SaddleObjective(Objective):
    name = "saddle"

    def __init__(self, start=(0.1, 0.1)):
        self.start = np.asarray(start, dtype=np.float64)
        if self.start.shape != (2,):
            raise ConfigError(f"saddle start must be 2-d, got {self.start.shape}")

    def init_params(self, seed: int) -> list:
        return [self.start.copy()]

    def loss_and_grads(self, params, rng=None):
        loss, g = saddle_objective(params[0])
        return loss, [g]


class MlpObjective(Objective):
    """Mixture classification with the one-hidden-layer network.

    batch_size 0 runs full batch (deterministic given the seed); a
    positive batch size samples indices with replacement from rng each
    step. full_loss always evaluates the whole dataset.
    """

    name = "mlp"

    def __init__(
        self,
        n: int = 512,
        dim: int = 10,
        k: int = 3,
        hidden: int = 16,
        data_seed: int = 7,
        batch_size: int = 0,
        spread: float = 2.5,
    ):
        if batch_size < 0:
            raise ConfigError(f"batch_size must be >= 0, got {batch_size}")
        self.X, self.y = make_dataset(n, dim, k, data_seed, spread)
        self.dim, self.k, self.hidden = dim, k, hidden
        self.batch_size = batch_size
        self.stochastic = batch_size > 0

    def init_params(self, seed: int) -> list:
        return init_mlp_params(self.dim, self.hidden, self.k, seed)

    def loss_and_grads(self, params, rng=None):
        if self.batch_size > 0 and rng is not None:
            idx = rng.integers(0, self.X.shape[0], size=self.batch_size)
            return mlp_forward_backward(params, self.X[idx], self.y[idx])
        return mlp_forward_backward(params, self.X, self.y)

    def full_loss(self, params) -> float:
        loss, _ = mlp_forward_backward(params, self.X, self.y)
        return loss


OBJECTIVES = {
    "rosenbrock": RosenbrockObjective,
    "quadratic_bowl": QuadraticBowlObjective,
    "saddle": SaddleObjective,
    "mlp": MlpObjective,
}


def make_objective(name: str, **kwargs) -> Objective:
    if name not in OBJECTIVES:
        raise ConfigError(
            f"unknown objective {name!r}; available: {sorted(OBJECTIVES)}"
        )
    return OBJECTIVES[name](**kwargs)
