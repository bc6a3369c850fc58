"""Stepsize schedules: linear warmup followed by a decay policy.

Zero-initialized optimizer state has no closed-form bias correction for
the direction and curvature buffers, so the stepsize is ramped linearly
over the first updates instead. After warmup one of three decay policies
applies to the target stepsize:

  constant   - hold the target value
  milestone  - multiply by a factor at each listed step (factors compound)
  cosine     - half-cosine from the target down to a small positive floor

The cosine floor is 1e-8 rather than exactly zero so that the effective
stepsize stays positive at every step, which the training loop requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError

COSINE_FLOOR = 1e-8

_DECAYS = ("constant", "milestone", "cosine")


@dataclass(frozen=True)
class LrSchedule:
    """Warmup plus decay, mapping a 0-based step index to a stepsize.

    target_lr: the base stepsize reached at the end of warmup.
    warmup_steps: length of the linear ramp; 0 disables warmup.
    warmup_start: stepsize at step 0 when warming up.
    decay: one of 'constant', 'milestone', 'cosine'.
    milestones: (step, factor) pairs for the milestone policy.
    total_steps: horizon for the cosine policy.
    """

    target_lr: float
    warmup_steps: int = 0
    warmup_start: float = 0.0
    decay: str = "constant"
    milestones: tuple = field(default_factory=tuple)
    total_steps: int = 0

    def __post_init__(self):
        if self.target_lr <= 0:
            raise ConfigError(f"target_lr must be positive, got {self.target_lr}")
        if self.warmup_steps < 0:
            raise ConfigError("warmup_steps must be >= 0")
        if self.warmup_steps > 0 and self.warmup_start <= 0:
            raise ConfigError("warmup_start must be positive when warming up")
        if self.decay not in _DECAYS:
            raise ConfigError(f"decay must be one of {_DECAYS}, got {self.decay!r}")
        if self.decay == "cosine" and self.total_steps <= 0:
            raise ConfigError("cosine decay needs total_steps > 0")
        for ms in self.milestones:
            if len(ms) != 2 or ms[0] < 0 or ms[1] <= 0:
                raise ConfigError(f"bad milestone entry {ms!r}")


def lr_at(schedule: LrSchedule, t: int) -> float:
    """Effective stepsize at step t (t >= 0).

    During warmup the value interpolates linearly from warmup_start at
    step 0 to target_lr at step warmup_steps; the decay policy then
    applies to the target, with milestone factors compounding and the
    cosine phase measured from the end of warmup.
    """
    if t < 0:
        raise ConfigError(f"step index must be >= 0, got {t}")
    w = schedule.warmup_steps
    base = schedule.target_lr
    if w > 0 and t < w:
        return schedule.warmup_start + (base - schedule.warmup_start) * t / w
    if schedule.decay == "constant":
        return base
    if schedule.decay == "milestone":
        lr = base
        for step, factor in schedule.milestones:
            if t >= step:
                lr *= factor
        return lr
    # cosine: half period over the post-warmup span, floored
    span = max(schedule.total_steps - w, 1)
    frac = min(max((t - w) / span, 0.0), 1.0)
    lr = COSINE_FLOOR + (base - COSINE_FLOOR) * 0.5 * (1.0 + math.cos(math.pi * frac))
    return max(lr, COSINE_FLOOR)
