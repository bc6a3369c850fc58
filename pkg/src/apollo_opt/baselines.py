"""Reference optimizers used as comparison points in the experiments.

Both are the textbook recipes: heavy-ball SGD with coupled L2, and the
decoupled-weight-decay variant of Adam. Kept deliberately plain so the
traces they produce are easy to audit by hand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteGradientError, ShapeMismatchError

__all__ = [
    "SgdConfig",
    "SgdState",
    "sgd_step",
    "AdamConfig",
    "AdamState",
    "adamw_step",
    "weight_decay_adjust",
    "SgdMomentum",
    "AdamW",
]


@dataclass(frozen=True)
class SgdConfig:
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")


@dataclass
class SgdState:
    v: np.ndarray
    t: int = 0

    @classmethod
    def zero(cls, shape) -> "SgdState":
        return cls(v=np.zeros(shape, dtype=np.float64), t=0)


def sgd_step(
    theta: np.ndarray,
    g: np.ndarray,
    state: SgdState,
    cfg: SgdConfig,
    lr: float = None,
) -> tuple[np.ndarray, SgdState]:
    """Heavy-ball update with L2 folded into the gradient.

    v_next = momentum * v + (g + weight_decay * theta)
    theta_next = theta - lr * v_next

    With zero momentum and decay this is plain gradient descent; at
    momentum mu the velocity on a constant gradient approaches
    g / (1 - mu), so the long-run step is lr/(1-mu) times the raw one.
    """
    if lr is None:
        lr = cfg.lr
    if lr <= 0:
        raise ConfigError(f"effective stepsize must be positive, got {lr}")
    if theta.shape != g.shape:
        raise ShapeMismatchError(theta.shape, g.shape, op="sgd_step")
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradientError(state.t)
    eff = g
    if cfg.weight_decay > 0.0:
        eff = g + cfg.weight_decay * theta
    v_next = cfg.momentum * state.v + eff
    theta_next = theta - lr * v_next
    return theta_next, SgdState(v=v_next, t=state.t + 1)


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 < self.beta1 < 1.0:
            raise ConfigError(f"beta1 must lie in (0, 1), got {self.beta1}")
        if not 0.0 < self.beta2 < 1.0:
            raise ConfigError(f"beta2 must lie in (0, 1), got {self.beta2}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zero(cls, shape) -> "AdamState":
        return cls(
            m=np.zeros(shape, dtype=np.float64),
            v=np.zeros(shape, dtype=np.float64),
            t=0,
        )


def adamw_step(
    theta: np.ndarray,
    g: np.ndarray,
    state: AdamState,
    cfg: AdamConfig,
    lr: float = None,
) -> tuple[np.ndarray, AdamState]:
    """Adam with decoupled weight decay.

    m and v are the usual first/second moment averages with bias
    correction; eps is added to the corrected root second moment. Decay
    shrinks the pre-step parameters by lr * weight_decay * theta, in
    parallel with the adaptive term, so at weight_decay == 0 this is
    exactly Adam and the first step has magnitude close to lr in every
    coordinate with a nonzero gradient.
    """
    if lr is None:
        lr = cfg.lr
    if lr <= 0:
        raise ConfigError(f"effective stepsize must be positive, got {lr}")
    if theta.shape != g.shape:
        raise ShapeMismatchError(theta.shape, g.shape, op="adamw_step")
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradientError(state.t)
    t_next = state.t + 1
    m_next = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v_next = cfg.beta2 * state.v + (1.0 - cfg.beta2) * (g * g)
    m_hat = m_next / (1.0 - cfg.beta1 ** t_next)
    v_hat = v_next / (1.0 - cfg.beta2 ** t_next)
    step = m_hat / (np.sqrt(v_hat) + cfg.eps)
    theta_next = theta - lr * step
    if cfg.weight_decay > 0.0:
        theta_next = theta_next - lr * cfg.weight_decay * theta
    return theta_next, AdamState(m=m_next, v=v_next, t=t_next)


def weight_decay_adjust(base_decay: float, lr_ratio: float) -> float:
    """Rescale a decay coefficient when the stepsize changes.

    The shrink applied per step is lr * decay, so keeping that product
    constant across a stepsize change means decay_new = base * ratio,
    where ratio = lr_old / lr_new. A 500x larger stepsize therefore
    pairs with a 500x smaller decay than the other way round: passing
    the ratio of old to new lr returns the coefficient that preserves
    the original per-step shrink.
    """
    if base_decay < 0:
        raise ConfigError(f"base_decay must be >= 0, got {base_decay}")
    if lr_ratio <= 0:
        raise ConfigError(f"lr_ratio must be positive, got {lr_ratio}")
    return base_decay * lr_ratio


class SgdMomentum:
    """Stateful multi-group wrapper over sgd_step."""

    def __init__(self, params: list, cfg: SgdConfig = None):
        self.cfg = cfg if cfg is not None else SgdConfig()
        self.params = [np.array(p, dtype=np.float64) for p in params]
        self.states = [SgdState.zero(p.shape) for p in self.params]

    @property
    def t(self) -> int:
        return self.states[0].t if self.states else 0

    def step(self, grads: list, lr: float = None) -> None:
        if len(grads) != len(self.params):
            raise ConfigError(
                f"group/gradient count mismatch: {len(self.params)} vs {len(grads)}"
            )
        out_p, out_s = [], []
        for theta, g, st in zip(self.params, grads, self.states):
            p2, s2 = sgd_step(theta, g, st, self.cfg, lr)
            out_p.append(p2)
            out_s.append(s2)
        self.params, self.states = out_p, out_s

    def state_dict(self) -> dict:
        return {"groups": [{"t": s.t, "v": s.v.copy()} for s in self.states]}

    def load_state_dict(self, payload: dict) -> None:
        groups = payload["groups"]
        if len(groups) != len(self.params):
            raise ConfigError(
                f"state has {len(groups)} groups, optimizer has {len(self.params)}"
            )
        self.states = [
            SgdState(
                v=np.asarray(r["v"], dtype=np.float64).reshape(p.shape),
                t=int(r["t"]),
            )
            for r, p in zip(groups, self.params)
        ]


class AdamW:
    """Stateful multi-group wrapper over adamw_step."""

    def __init__(self, params: list, cfg: AdamConfig = None):
        self.cfg = cfg if cfg is not None else AdamConfig()
        self.params = [np.array(p, dtype=np.float64) for p in params]
        self.states = [AdamState.zero(p.shape) for p in self.params]

    @property
    def t(self) -> int:
        return self.states[0].t if self.states else 0

    def step(self, grads: list, lr: float = None) -> None:
        if len(grads) != len(self.params):
            raise ConfigError(
                f"group/gradient count mismatch: {len(self.params)} vs {len(grads)}"
            )
        out_p, out_s = [], []
        for theta, g, st in zip(self.params, grads, self.states):
            p2, s2 = adamw_step(theta, g, st, self.cfg, lr)
            out_p.append(p2)
            out_s.append(s2)
        self.params, self.states = out_p, out_s

    def state_dict(self) -> dict:
        return {
            "groups": [
                {"t": s.t, "m": s.m.copy(), "v": s.v.copy()} for s in self.states
            ]
        }

    def load_state_dict(self, payload: dict) -> None:
        groups = payload["groups"]
        if len(groups) != len(self.params):
            raise ConfigError(
                f"state has {len(groups)} groups, optimizer has {len(self.params)}"
            )
        self.states = [
            AdamState(
                m=np.asarray(r["m"], dtype=np.float64).reshape(p.shape),
                v=np.asarray(r["v"], dtype=np.float64).reshape(p.shape),
                t=int(r["t"]),
            )
            for r, p in zip(groups, self.params)
        ]
