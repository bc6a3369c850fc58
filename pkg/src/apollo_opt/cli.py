"""Command line entry point.

    apollo-opt run <config> [--set key=value ...] [--out dir]
    apollo-opt sweep <config> --axis lr --values 0.1,0.3 [--set ...] [--out dir]
    apollo-opt verify
    apollo-opt plot trace.csv [trace2.csv ...] --out curves.svg

Exit status: 0 on success, 1 when a run diverged or a verification
check failed, 2 on bad usage or configuration. Output goes under --out
when given, else $APOLLO_OPT_OUT_ROOT, else ./runs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import oracles
from .apollo import ApolloConfig, ApolloState, apollo_step, compute_alpha, ema_update, rectify, update_diagonal
from .config import load_config
from .errors import ApolloOptError, ConfigError
from .objectives import (
    init_mlp_params,
    make_dataset,
    mlp_forward_backward,
    quadratic_bowl,
    rosenbrock,
    saddle_objective,
)
from .runner import run_experiment, run_sweep
from .schedule import LrSchedule, lr_at

__all__ = ["main", "run_verify_checks"]

ENV_OUT_ROOT = "APOLLO_OPT_OUT_ROOT"


def _out_root(arg_out: str) -> str:
    if arg_out:
        return arg_out
    return os.environ.get(ENV_OUT_ROOT, "runs")


def _dot(a, b) -> float:
    return float(np.dot(np.ravel(a), np.ravel(b)))


# ---------------------------------------------------------------- verify

def _check_secant_identity() -> str:
    """After one step, the refreshed curvature diagonal must satisfy
    d^T B_next d = -d^T (m_next - m) exactly when eps is zero."""
    rng = np.random.default_rng(11)
    cfg = ApolloConfig(eta=0.3, sigma=0.5, beta=0.9, eps=0.0)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        state = ApolloState(
            m=rng.normal(size=n), d=rng.normal(size=n), B=rng.normal(size=n),
            t=int(rng.integers(1, 50)),
        )
        theta = rng.normal(size=n)
        g = rng.normal(size=n)
        _, nxt = apollo_step(theta, g, state, cfg)
        lhs = _dot(state.d * state.d, nxt.B)
        rhs = -_dot(state.d, nxt.m - state.m)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    if worst > 1e-10:
        return f"identity residual {worst:.3e} exceeds 1e-10"
    return ""


def _check_least_change() -> str:
    """The production diagonal refresh must match the closed-form
    minimal-change solution, and the closed form must match an
    independent projected-gradient solve."""
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        d = rng.normal(size=n)
        y = rng.normal(size=n)
        B = rng.normal(size=n)
        alpha = compute_alpha(d, y, B, 0.0)
        B_prod = update_diagonal(B, alpha, d)
        eta = float(rng.uniform(0.1, 3.0))
        B_ref = oracles.solve_weak_secant_lagrange(-eta * d, eta * y, B)
        if np.max(np.abs(B_prod - B_ref)) > 1e-10:
            return f"closed form deviates {np.max(np.abs(B_prod - B_ref)):.3e}"
        B_num = oracles.solve_weak_secant_projected(-eta * d, eta * y, B)
        if np.max(np.abs(B_ref - B_num)) > 1e-8:
            return f"projected solve deviates {np.max(np.abs(B_ref - B_num)):.3e}"
    return ""


def _check_moving_average() -> str:
    rng = np.random.default_rng(13)
    for beta in (0.5, 0.9, 0.99):
        grads = [rng.normal(size=4) for _ in range(30)]
        m = np.zeros(4)
        for t, g in enumerate(grads):
            m = ema_update(m, g, beta, t)
            ref = oracles.ema_direct(grads, beta, upto=t + 1)
            if np.max(np.abs(m - ref)) > 1e-12:
                return f"beta={beta} deviates at t={t + 1}"
    return ""


def _check_gradients() -> str:
    rng = np.random.default_rng(14)
    probes = []
    x = rng.normal(size=4)
    probes.append(("valley", lambda v: rosenbrock(v)[0], x, rosenbrock(x)[1]))
    H = np.array([0.5, 2.0, 7.0])
    x2 = rng.normal(size=3)
    probes.append((
        "bowl", lambda v: quadratic_bowl(v, H)[0], x2, quadratic_bowl(x2, H)[1],
    ))
    x3 = rng.normal(size=2)
    probes.append(("saddle", lambda v: saddle_objective(v)[0], x3, saddle_objective(x3)[1]))
    for name, f, x0, analytic in probes:
        fd = oracles.finite_diff_grad(f, x0)
        err = np.max(np.abs(fd - analytic)) / max(1.0, float(np.max(np.abs(analytic))))
        if err > 1e-5:
            return f"{name} gradient off by {err:.3e}"
    X, y = make_dataset(16, 3, 2, seed=5)
    params = init_mlp_params(3, 4, 2, seed=6)
    _, grads = mlp_forward_backward(params, X, y)
    for gi in range(4):
        def f(v, gi=gi):
            trial = [p.copy() for p in params]
            trial[gi] = v.reshape(params[gi].shape)
            return mlp_forward_backward(trial, X, y)[0]
        fd = oracles.finite_diff_grad(f, params[gi].ravel())
        err = np.max(np.abs(fd.reshape(params[gi].shape) - grads[gi]))
        if err > 1e-5:
            return f"network group {gi} gradient off by {err:.3e}"
    return ""


def _check_rescaling() -> str:
    """Scaling stepsize and floor together by c (and the stabilizer by
    1/c, since it adds to a quantity that scales like 1/c) must leave
    the parameter trajectory unchanged."""
    H = np.linspace(0.5, 5.0, 8)
    theta0 = np.ones(8)
    c = 10.0
    runs = []
    for lr, sigma, eps in ((0.5, 1.0, 1e-4), (5.0, 10.0, 1e-5)):
        cfg = ApolloConfig(eta=lr, sigma=sigma, beta=0.9, eps=eps)
        theta = theta0.copy()
        state = ApolloState.zero(theta.shape)
        rec = []
        for _ in range(200):
            _, g = quadratic_bowl(theta, H)
            theta, state = apollo_step(theta, g, state, cfg)
            rec.append({"theta": [theta], "m": [state.m], "d": [state.d], "B": [state.B]})
        runs.append(rec)
    report = oracles.compare_trajectories(runs[0], runs[1], tol=1e-8, state_ratio=c)
    if not report["ok"]:
        return (
            f"trajectories deviate {report['max_rel_dev']:.3e} "
            f"from step {report['first_exceed_step']}"
        )
    return ""


def _check_schedule() -> str:
    sched = LrSchedule(target_lr=0.5, warmup_steps=100, warmup_start=0.01)
    if lr_at(sched, 0) != 0.01:
        return f"warmup start {lr_at(sched, 0)!r} != 0.01"
    if lr_at(sched, 50) != 0.255:
        return f"warmup midpoint {lr_at(sched, 50)!r} != 0.255"
    if lr_at(sched, 100) != 0.5:
        return f"warmup end {lr_at(sched, 100)!r} != 0.5"
    cos = LrSchedule(target_lr=0.5, decay="cosine", total_steps=1000)
    lows = [lr_at(cos, t) for t in range(0, 1001, 50)]
    if min(lows) < 1e-8:
        return f"cosine dipped below floor: {min(lows)!r}"
    return ""


def _check_rectify() -> str:
    rng = np.random.default_rng(15)
    for _ in range(50):
        n = int(rng.integers(1, 12))
        B = rng.normal(scale=2.0, size=n)
        sigma = float(rng.uniform(0.01, 1.5))
        D = rectify(B, sigma)
        if np.any(D < sigma):
            return "floor violated"
        mask = np.abs(B) >= sigma
        if not np.all(D[mask] == np.abs(B)[mask]):
            return "magnitude not preserved above floor"
        if not np.all(D[~mask] == sigma):
            return "floor not applied below it"
    return ""


VERIFY_CHECKS = [
    ("secant-identity", _check_secant_identity),
    ("curvature-least-change", _check_least_change),
    ("moving-average", _check_moving_average),
    ("gradient-check", _check_gradients),
    ("rescaling-invariance", _check_rescaling),
    ("schedule-anchors", _check_schedule),
    ("rectify-floor", _check_rectify),
]


def run_verify_checks(out=None) -> int:
    if out is None:
        out = sys.stdout  # resolve late so redirected stdout is honored
    failures = 0
    for name, check in VERIFY_CHECKS:
        try:
            detail = check()
        except Exception as exc:  # a crashed check is a failed check
            detail = f"raised {type(exc).__name__}: {exc}"
        if detail:
            failures += 1
            print(f"FAIL {name}: {detail}", file=out)
        else:
            print(f"PASS {name}", file=out)
    return failures


# ------------------------------------------------------------ commands

def _cmd_run(args) -> int:
    cfg = load_config(args.config, args.set)
    out_dir = cfg.out_dir or os.path.join(_out_root(args.out), cfg.name)
    summary = run_experiment(cfg, out_dir)
    print(f"wrote {out_dir}/summary.json")
    print(
        f"{cfg.name}: final loss mean {summary['final_loss_mean']!r}, "
        f"best {summary['best_loss_mean']!r}"
    )
    if summary.get("steps_to_threshold_mean") is not None:
        print(
            f"steps to threshold {cfg.threshold!r}: "
            f"mean {summary['steps_to_threshold_mean']!r}"
        )
    if summary["diverged"]:
        print("run diverged; trace truncated", file=sys.stderr)
        return 1
    return 0


def _parse_values(raw: str) -> list:
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(float(part))
        except ValueError:
            raise ConfigError(f"sweep value {part!r} is not a number") from None
    if not out:
        raise ConfigError("no sweep values given")
    return out


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.set)
    values = _parse_values(args.values)
    out_dir = cfg.out_dir or os.path.join(_out_root(args.out), f"{cfg.name}_sweep")
    summary = run_sweep(cfg, args.axis, values, out_dir)
    print(f"wrote {out_dir}/sweep_summary.json")
    for entry in summary["entries"]:
        s = entry["summary"]
        flag = " DIVERGED" if s["diverged"] else ""
        print(
            f"{args.axis}={entry['value']!r}: final loss mean "
            f"{s['final_loss_mean']!r}{flag}"
        )
    return 1 if summary["diverged"] else 0


def _cmd_verify(args) -> int:
    failures = run_verify_checks()
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return 1
    print("all checks passed")
    return 0


def _cmd_plot(args) -> int:
    from .plotting import plot_traces

    out = args.out or "traces.svg"
    plot_traces(args.traces, out, logy=not args.linear, title=args.title)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apollo-opt",
        description="diagonal quasi-Newton optimizer experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", nargs="?", default=None, help="flat key=value config file")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
    p_run.add_argument("--out", default=None, help="output root directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a config across axis values")
    p_sweep.add_argument("config", nargs="?", default=None)
    p_sweep.add_argument("--axis", required=True, help="config field to vary")
    p_sweep.add_argument("--values", required=True, help="comma separated numbers")
    p_sweep.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the reference cross-checks")
    p_verify.set_defaults(func=_cmd_verify)

    p_plot = sub.add_parser("plot", help="render trace CSVs to an SVG")
    p_plot.add_argument("traces", nargs="+", help="trace CSV files")
    p_plot.add_argument("--out", default=None, help="output SVG path")
    p_plot.add_argument("--linear", action="store_true", help="linear y axis")
    p_plot.add_argument("--title", default=None)
    p_plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed the message; its usage-error status is 2
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ApolloOptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
