import numpy as np
import pytest

from apollo_opt.errors import (
    ConfigError,
    InfeasibleSecantError,
    NonFiniteEvalError,
)
from apollo_opt.oracles import (
    compare_trajectories,
    ema_direct,
    finite_diff_grad,
    solve_weak_secant_lagrange,
    solve_weak_secant_projected,
)


# ------------------------------------------------------ closed-form secant


def test_lagrange_satisfies_constraint():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(1, 10))
        s = rng.normal(size=n)
        y = rng.normal(size=n)
        Bp = rng.normal(size=n)
        B = solve_weak_secant_lagrange(s, y, Bp)
        lhs = float(np.sum(s * s * B))
        rhs = float(np.dot(s, y))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs), abs(rhs))


def test_lagrange_already_feasible_means_no_change():
    s = np.array([1.0, 2.0])
    Bp = np.array([0.5, 0.25])
    # pick y so that s^T Bp s = s . y holds exactly: lhs = 0.5 + 1.0 = 1.5
    y = np.array([1.5, 0.0])
    B = solve_weak_secant_lagrange(s, y, Bp)
    assert np.array_equal(B, Bp)


def test_lagrange_worked_instance():
    s = np.array([1.0, 2.0])
    y = np.array([0.5, -1.0])
    Bp = np.array([0.2, 0.3])
    # c = s.y - s^T Bp s = -1.5 - 1.4 = -2.9, quart = 17
    B = solve_weak_secant_lagrange(s, y, Bp)
    assert B == pytest.approx([0.2 - 2.9 / 17.0, 0.3 - 2.9 * 4.0 / 17.0], rel=1e-12)


def test_lagrange_is_minimal_change():
    # any other feasible diagonal is at least as far from B_prev
    rng = np.random.default_rng(3)
    s = rng.normal(size=4)
    y = rng.normal(size=4)
    Bp = rng.normal(size=4)
    B = solve_weak_secant_lagrange(s, y, Bp)
    base = float(np.sum((B - Bp) ** 2))
    sq = s * s
    aa = float(np.dot(sq, sq))
    for _ in range(100):
        probe = rng.normal(size=4)
        # project the probe onto the constraint hyperplane
        gap = float(np.dot(s, y)) - float(np.dot(sq, probe))
        feas = probe + (gap / aa) * sq
        assert float(np.sum((feas - Bp) ** 2)) >= base - 1e-12


def test_lagrange_rejects_zero_direction_and_size_mismatch():
    with pytest.raises(InfeasibleSecantError):
        solve_weak_secant_lagrange(np.zeros(3), np.ones(3), np.ones(3))
    with pytest.raises(ConfigError):
        solve_weak_secant_lagrange(np.ones(2), np.ones(3), np.ones(2))


# ------------------------------------------------------- iterative secant


def test_projected_matches_lagrange():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 8))
        s = rng.normal(size=n)
        y = rng.normal(size=n)
        Bp = rng.normal(size=n)
        closed = solve_weak_secant_lagrange(s, y, Bp)
        iterative = solve_weak_secant_projected(s, y, Bp)
        assert np.max(np.abs(closed - iterative)) <= 1e-8 * max(
            1.0, float(np.max(np.abs(closed)))
        )


def test_projected_rejects_zero_direction():
    with pytest.raises(InfeasibleSecantError):
        solve_weak_secant_projected(np.zeros(2), np.ones(2), np.ones(2))


# ------------------------------------------------------------- average sum


def test_ema_direct_edge_cases():
    g = [np.array([2.0, -4.0])]
    assert np.array_equal(ema_direct(g, 0.9), g[0])
    assert np.array_equal(ema_direct(g, 0.9, upto=0), np.zeros(2))


def test_ema_direct_constant_stream():
    g = [np.array([1.5])] * 6
    out = ema_direct(g, 0.7)
    assert out[0] == pytest.approx(1.5, rel=1e-14)


def test_ema_direct_weights_sum_to_one():
    grads = [np.array([1.0])] * 9
    for beta in (0.3, 0.9, 0.99):
        for t in range(1, 10):
            out = ema_direct(grads, beta, upto=t)
            assert out[0] == pytest.approx(1.0, rel=1e-13)


def test_ema_direct_validation():
    with pytest.raises(ConfigError):
        ema_direct([], 0.9)
    with pytest.raises(ConfigError):
        ema_direct([np.ones(2)], 1.0)
    with pytest.raises(ConfigError):
        ema_direct([np.ones(2)], 0.9, upto=5)
    with pytest.raises(ConfigError):
        ema_direct([np.ones(2), np.ones(3)], 0.9)


# ------------------------------------------------------- finite differences


def test_finite_diff_linear_function():
    a = np.array([2.0, -3.0, 0.5])
    grad = finite_diff_grad(lambda x: float(np.dot(a, x)), np.array([1.0, 1.0, 1.0]))
    assert grad == pytest.approx(a, rel=1e-9)


def test_finite_diff_quadratic():
    H = np.array([1.0, 4.0])
    x = np.array([0.3, -0.7])
    grad = finite_diff_grad(lambda v: 0.5 * float(np.sum(H * v * v)), x)
    assert grad == pytest.approx(H * x, rel=1e-9)


def test_finite_diff_preserves_shape():
    x = np.ones((2, 2))
    grad = finite_diff_grad(lambda v: float(np.sum(v * v)), x)
    assert grad.shape == (2, 2)
    assert grad == pytest.approx(2.0 * x, rel=1e-9)


def test_finite_diff_validation_and_nonfinite():
    with pytest.raises(ConfigError):
        finite_diff_grad(lambda x: 0.0, np.ones(2), h=0.0)

    def bad(x):
        return float("nan") if x[1] != 1.0 else 1.0

    with pytest.raises(NonFiniteEvalError) as exc:
        finite_diff_grad(bad, np.ones(2))
    assert "coordinate 1" in str(exc.value)


# -------------------------------------------------- trajectory comparison


def _rec(thetas, **state):
    rec = {"theta": [np.asarray(t) for t in thetas]}
    for key, vals in state.items():
        rec[key] = [np.asarray(v) for v in vals]
    return rec


def test_compare_identical_runs():
    run = [_rec([np.array([1.0, 2.0])]), _rec([np.array([0.5, 1.5])])]
    out = compare_trajectories(run, run, tol=1e-12)
    assert out["ok"]
    assert out["max_rel_dev"] == 0.0
    assert out["first_exceed_step"] is None
    assert out["steps"] == 2


def test_compare_reports_first_exceed():
    base = np.array([1.0])
    run_a = [_rec([base]), _rec([base]), _rec([base])]
    run_b = [_rec([base]), _rec([base + 1e-3]), _rec([base])]
    out = compare_trajectories(run_a, run_b, tol=1e-6)
    assert not out["ok"]
    assert out["first_exceed_step"] == 1
    assert out["max_rel_dev"] == pytest.approx(1e-3 / 1.001, rel=1e-6)


def test_compare_applies_state_ratio():
    # run_b carries B scaled by c and d scaled by 1/c: with the ratio
    # passed in, the deviation collapses to zero
    c = 10.0
    d = np.array([0.5, -2.0])
    B = np.array([1.0, 3.0])
    run_a = [_rec([np.ones(2)], m=[np.ones(2)], d=[d], B=[B])]
    run_b = [_rec([np.ones(2)], m=[np.ones(2)], d=[d / c], B=[B * c])]
    out = compare_trajectories(run_a, run_b, tol=1e-12, state_ratio=c)
    assert out["ok"]
    naive = compare_trajectories(run_a, run_b, tol=1e-12)
    assert naive["ok"]  # without the ratio only theta is compared
    wrong = compare_trajectories(run_a, run_b, tol=1e-12, state_ratio=2.0)
    assert not wrong["ok"]


def test_compare_validation():
    run = [_rec([np.ones(2)])]
    with pytest.raises(ConfigError):
        compare_trajectories(run, run + run, tol=1e-6)
    with pytest.raises(ConfigError):
        compare_trajectories(run, run, tol=0.0)
