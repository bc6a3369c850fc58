"""Independent reference implementations used only for verification.

Nothing here imports the production math. Reductions are written as
explicit element loops on purpose: these functions exist to catch bugs
in the fast paths, so they share no code with them. Expect them to be
slow; they are run on small instances.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, InfeasibleSecantError, NonFiniteEvalError

__all__ = [
    "solve_weak_secant_lagrange",
    "solve_weak_secant_projected",
    "ema_direct",
    "finite_diff_grad",
    "compare_trajectories",
]


def _dot(a, b) -> float:
    total = 0.0
    for x, y in zip(a, b):
        total += float(x) * float(y)
    return total


def solve_weak_secant_lagrange(
    s: np.ndarray, y: np.ndarray, B_prev: np.ndarray
) -> np.ndarray:
    """Closed-form minimal-change diagonal satisfying s^T B s = s^T y.

    Minimizing the squared change sum((B - B_prev)^2) under that single
    scalar constraint gives, via the stationarity of the Lagrangian,

        B[i] = B_prev[i] + c * s[i]^2 / sum_j s[j]^4
        c    = s . y - s^T B_prev s

    A zero direction makes the constraint unsatisfiable for any
    right-hand side it does not already meet, and carries no update
    information either way, so it is rejected outright.
    """
    s = np.asarray(s, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    Bp = np.asarray(B_prev, dtype=np.float64).ravel()
    if not (s.size == y.size == Bp.size):
        raise ConfigError(
            f"size mismatch: s {s.size}, y {y.size}, B_prev {Bp.size}"
        )
    quart = 0.0
    for v in s:
        quart += float(v) ** 4
    if quart == 0.0:
        raise InfeasibleSecantError(
            "direction is zero: the weak secant constraint has no minimal-change solution"
        )
    sq = [float(v) * float(v) for v in s]
    c = _dot(s, y) - _dot(sq, Bp)
    out = np.empty_like(Bp)
    for i in range(Bp.size):
        out[i] = Bp[i] + c * sq[i] / quart
    return out


def solve_weak_secant_projected(
    s: np.ndarray,
    y: np.ndarray,
    B_prev: np.ndarray,
    step: float = 0.5,
    max_iters: int = 200_000,
    tol: float = 1e-15,
) -> np.ndarray:
    """Same problem solved numerically, as a cross-check on the closed form.

    Projected gradient descent on 0.5*sum((B - B_prev)^2) over the
    hyperplane {B : sum_i s_i^2 B_i = s . y}: move toward B_prev, then
    re-project. Starts from the hyperplane point nearest the origin.
    """
    s = np.asarray(s, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    Bp = np.asarray(B_prev, dtype=np.float64).ravel()
    if not (s.size == y.size == Bp.size):
        raise ConfigError(
            f"size mismatch: s {s.size}, y {y.size}, B_prev {Bp.size}"
        )
    sq = [float(v) * float(v) for v in s]
    aa = _dot(sq, sq)
    if aa == 0.0:
        raise InfeasibleSecantError(
            "direction is zero: the weak secant constraint has no minimal-change solution"
        )
    b = _dot(s, y)

    def project(vec):
        gap = b - _dot(sq, vec)
        coef = gap / aa
        return [vec[i] + coef * sq[i] for i in range(len(vec))]

    cur = project([0.0] * Bp.size)
    for _ in range(max_iters):
        moved = [cur[i] - step * (cur[i] - Bp[i]) for i in range(Bp.size)]
        nxt = project(moved)
        delta = 0.0
        for i in range(Bp.size):
            delta = max(delta, abs(nxt[i] - cur[i]))
        cur = nxt
        if delta < tol:
            break
    return np.array(cur, dtype=np.float64)


def ema_direct(grads: list, beta: float, upto: int = None) -> np.ndarray:
    """Bias-corrected moving average evaluated from its defining sum.

    m_t = sum_{i=1..t} beta^(t-i) * (1 - beta) * g_i / (1 - beta^t)

    grads holds g_1 .. g_n; upto selects t (defaults to n). t = 0 returns
    the zero start value.
    """
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"beta must lie in (0, 1), got {beta}")
    if not grads:
        raise ConfigError("need at least one gradient")
    t = len(grads) if upto is None else upto
    if not 0 <= t <= len(grads):
        raise ConfigError(f"upto must lie in [0, {len(grads)}], got {t}")
    first = np.asarray(grads[0], dtype=np.float64)
    if t == 0:
        return np.zeros_like(first)
    acc = np.zeros_like(first)
    for i in range(1, t + 1):
        gi = np.asarray(grads[i - 1], dtype=np.float64)
        if gi.shape != first.shape:
            raise ConfigError(
                f"gradient {i} has shape {gi.shape}, expected {first.shape}"
            )
        acc = acc + (beta ** (t - i)) * (1.0 - beta) * gi
    return acc / (1.0 - beta ** t)


def finite_diff_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at
    a time. Raises NonFiniteEvalError naming the offending coordinate if
    either probe comes back NaN/Inf.
    """
    if h <= 0:
        raise ConfigError(f"step h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        hi = flat.copy()
        lo = flat.copy()
        hi[i] += h
        lo[i] -= h
        fp = float(f(hi.reshape(x.shape)))
        fm = float(f(lo.reshape(x.shape)))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NonFiniteEvalError(
                f"objective returned a non-finite value probing coordinate {i}"
            )
        out[i] = (fp - fm) / (2.0 * h)
    return out.reshape(x.shape)


def _rel_dev(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    worst = 0.0
    for i in range(a.size):
        scale = max(1.0, abs(float(a[i])), abs(float(b[i])))
        worst = max(worst, abs(float(a[i]) - float(b[i])) / scale)
    return worst


def compare_trajectories(
    run_a: list,
    run_b: list,
    tol: float,
    state_ratio: float = None,
) -> dict:
    """Step-by-step deviation report between two recorded trajectories.

    Each run is a list of per-step records, dicts with key "theta" (a
    list of parameter arrays) and optionally "m", "d", "B" (lists of
    state arrays). Deviation per value pair is |a - b| / max(1, |a|, |b|).

    With state_ratio = c the runs are expected to be related by the
    stepsize/floor rescaling: identical parameters and m, while B in
    run_b is c times run_a's and the direction d is 1/c times it; the
    comparison applies those factors before measuring. Returns a dict
    with max_rel_dev, first_exceed_step (None if within tol throughout),
    steps compared, and ok.
    """
    if tol <= 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    if len(run_a) != len(run_b):
        raise ConfigError(
            f"trajectory length mismatch: {len(run_a)} vs {len(run_b)}"
        )
    worst = 0.0
    first_exceed = None
    for step_idx, (ra, rb) in enumerate(zip(run_a, run_b)):
        dev = 0.0
        for pa, pb in zip(ra["theta"], rb["theta"]):
            dev = max(dev, _rel_dev(pa, pb))
        if state_ratio is not None:
            c = float(state_ratio)
            for ma, mb in zip(ra.get("m", []), rb.get("m", [])):
                dev = max(dev, _rel_dev(ma, mb))
            for da, db in zip(ra.get("d", []), rb.get("d", [])):
                dev = max(dev, _rel_dev(np.asarray(da) / c, db))
            for Ba, Bb in zip(ra.get("B", []), rb.get("B", [])):
                dev = max(dev, _rel_dev(np.asarray(Ba) * c, Bb))
        if dev > tol and first_exceed is None:
            first_exceed = step_idx
        worst = max(worst, dev)
    return {
        "ok": first_exceed is None,
        "max_rel_dev": worst,
        "first_exceed_step": first_exceed,
        "steps": len(run_a),
    }
