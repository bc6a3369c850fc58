"""Experiment loop: seeded runs producing CSV traces and a JSON summary.

Conventions the tests rely on:

  * A trace row at step t describes the state after t updates, before
    update t is applied: loss is the deterministic evaluation value
    (full batch, noise off), grad_norm is the euclidean norm of that
    deterministic gradient. Rows appear at every log_interval multiple
    and always at the final step.
  * Logging never touches the run's random stream. Stochastic draws
    happen only inside the update path, so changing log_interval cannot
    change the trajectory.
  * Floats are written with repr, the shortest string that parses back
    to the same float64. Two runs of the same config differ at most in
    the elapsed_ms column.
  * Divergence (non-finite or huge evaluation loss, or a non-finite
    gradient) truncates the trace at the offending row and marks the
    summary; the caller decides the exit status.

Repeat i of a run uses seed = base_seed + i for both the parameter init
and the noise stream. Summary aggregates (mean/std over repeats) are
plain sum-based formulas so they can be recomputed exactly from the
per-seed values also stored in the summary.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from .apollo import Apollo, ApolloConfig, clip_by_global_norm
from .baselines import AdamConfig, AdamW, SgdConfig, SgdMomentum
from .checkpoint import save_checkpoint
from .config import ExperimentConfig, config_to_flat
from .errors import ConfigError, NonFiniteGradientError
from .objectives import make_objective
from .schedule import LrSchedule, lr_at

__all__ = [
    "CSV_HEADER",
    "TrainRecord",
    "RunResult",
    "make_optimizer",
    "make_schedule",
    "run_single",
    "run_experiment",
    "run_sweep",
    "summarize",
    "mean_std",
]

CSV_HEADER = "step,loss,effective_lr,grad_norm,elapsed_ms"

SWEEP_AXES = (
    "lr", "beta", "sigma", "eps", "weight_decay", "momentum",
    "beta1", "beta2", "clip_norm",
)


@dataclass
class TrainRecord:
    step: int
    loss: float
    effective_lr: float
    grad_norm: float
    elapsed_ms: float

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.step),
                repr(float(self.loss)),
                repr(float(self.effective_lr)),
                repr(float(self.grad_norm)),
                repr(float(self.elapsed_ms)),
            ]
        )


@dataclass
class RunResult:
    seed: int
    records: list
    final_loss: float
    best_loss: float
    steps_to_threshold: int
    steps_run: int
    diverged: bool
    diverged_at: int
    optimizer: object
    params: list


def make_optimizer(cfg: ExperimentConfig, params: list):
    """Optimizer instance for a config. Gradient clipping is applied by
    the loop itself so all three optimizers see identical gradients."""
    if cfg.optimizer == "apollo":
        ocfg = ApolloConfig(
            eta=cfg.lr,
            sigma=cfg.sigma,
            beta=cfg.beta,
            eps=cfg.eps,
            weight_decay=cfg.weight_decay,
            weight_decay_mode=cfg.weight_decay_mode,
            clip_norm=0.0,
        )
        return Apollo(params, ocfg)
    if cfg.optimizer == "sgd":
        return SgdMomentum(
            params,
            SgdConfig(
                lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay
            ),
        )
    if cfg.optimizer == "adamw":
        return AdamW(
            params,
            AdamConfig(
                lr=cfg.lr,
                beta1=cfg.beta1,
                beta2=cfg.beta2,
                eps=cfg.adam_eps,
                weight_decay=cfg.weight_decay,
            ),
        )
    raise ConfigError(f"unknown optimizer {cfg.optimizer!r}")


def make_schedule(cfg: ExperimentConfig) -> LrSchedule:
    return LrSchedule(
        target_lr=cfg.lr,
        warmup_steps=cfg.warmup_steps,
        warmup_start=cfg.warmup_start,
        decay=cfg.decay,
        milestones=cfg.milestones,
        total_steps=cfg.total_steps if cfg.total_steps > 0 else cfg.steps,
    )


def _grad_norm(grads: list) -> float:
    total = 0.0
    for g in grads:
        gf = np.asarray(g, dtype=np.float64).ravel()
        total += float(np.dot(gf, gf))
    return math.sqrt(total)


def run_single(cfg: ExperimentConfig, seed: int) -> RunResult:
    """One seeded optimization run. Returns the full record list plus
    summary fields; writes nothing."""
    objective = make_objective(cfg.objective, **cfg.objective_args)
    params = objective.init_params(seed)
    optimizer = make_optimizer(cfg, params)
    schedule = make_schedule(cfg)
    rng = np.random.default_rng(seed)

    records = []
    best = math.inf
    hit = -1
    diverged = False
    diverged_at = -1
    steps_run = 0
    t0 = time.perf_counter()

    def evaluate(step: int) -> float:
        loss, grads = objective.loss_and_grads(optimizer.params, None)
        rec = TrainRecord(
            step=step,
            loss=float(loss),
            effective_lr=lr_at(schedule, step),
            grad_norm=_grad_norm(grads),
            elapsed_ms=(time.perf_counter() - t0) * 1000.0,
        )
        records.append(rec)
        return float(loss)

    # overflow/invalid just mean the trajectory blew up; the divergence
    # check below reports that, so keep numpy quiet about it
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(cfg.steps + 1):
            if t % cfg.log_interval == 0 or t == cfg.steps:
                logged = evaluate(t)
                if not math.isfinite(logged) or logged > cfg.divergence_limit:
                    diverged = True
                    diverged_at = t
                    break
            if t == cfg.steps:
                break
            lr = lr_at(schedule, t)
            try:
                _, grads = objective.loss_and_grads(
                    optimizer.params, rng if objective.stochastic else None
                )
                grads = clip_by_global_norm(grads, cfg.clip_norm)
                optimizer.step(grads, lr)
            except NonFiniteGradientError:
                diverged = True
                diverged_at = t
                if not records or records[-1].step != t:
                    evaluate(t)
                break
            steps_run = t + 1
            if cfg.threshold is not None:
                full = objective.full_loss(optimizer.params)
                if full < best:
                    best = full
                if hit < 0 and full <= cfg.threshold:
                    hit = t + 1

    for rec in records:
        if rec.loss < best:
            best = rec.loss
    final = records[-1].loss if records else math.inf
    return RunResult(
        seed=seed,
        records=records,
        final_loss=final,
        best_loss=best,
        steps_to_threshold=hit if hit >= 0 else None,
        steps_run=steps_run,
        diverged=diverged,
        diverged_at=diverged_at if diverged else None,
        optimizer=optimizer,
        params=optimizer.params,
    )


def mean_std(values: list) -> tuple:
    """Population mean/std with plain sum formulas, so consumers can
    recompute them from the stored per-seed values bit for bit."""
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def summarize(cfg: ExperimentConfig, results: list) -> dict:
    finals = [r.final_loss for r in results]
    bests = [r.best_loss for r in results]
    mean_final, std_final = mean_std(finals)
    mean_best, std_best = mean_std(bests)
    per_seed = []
    for r in results:
        per_seed.append(
            {
                "seed": r.seed,
                "final_loss": r.final_loss,
                "best_loss": r.best_loss,
                "steps_to_threshold": r.steps_to_threshold,
                "steps_run": r.steps_run,
                "diverged": r.diverged,
                "diverged_at": r.diverged_at,
            }
        )
    hits = [r.steps_to_threshold for r in results]
    summary = {
        "name": cfg.name,
        "objective": cfg.objective,
        "optimizer": cfg.optimizer,
        "steps": cfg.steps,
        "repeats": cfg.repeats,
        "final_loss_mean": mean_final,
        "final_loss_std": std_final,
        "best_loss_mean": mean_best,
        "best_loss_std": std_best,
        "diverged": any(r.diverged for r in results),
        "per_seed": per_seed,
    }
    if cfg.threshold is not None:
        summary["threshold"] = cfg.threshold
        if all(h is not None for h in hits):
            m, s = mean_std([float(h) for h in hits])
            summary["steps_to_threshold_mean"] = m
            summary["steps_to_threshold_std"] = s
        else:
            summary["steps_to_threshold_mean"] = None
            summary["steps_to_threshold_std"] = None
    return summary


def _write_trace(path: str, records: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def _write_resolved(path: str, cfg: ExperimentConfig) -> None:
    flat = config_to_flat(cfg)
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in flat.items():
            if value is None:
                fh.write(f"{key} = none\n")
            elif isinstance(value, float):
                fh.write(f"{key} = {value!r}\n")
            else:
                fh.write(f"{key} = {value}\n")


def run_experiment(cfg: ExperimentConfig, out_dir: str) -> dict:
    """Run all repeats of a config, writing per-seed traces, the final
    optimizer states, the resolved config, and summary.json."""
    os.makedirs(out_dir, exist_ok=True)
    results = []
    for i in range(cfg.repeats):
        seed = cfg.seed + i
        result = run_single(cfg, seed)
        results.append(result)
        _write_trace(os.path.join(out_dir, f"trace_seed{seed}.csv"), result.records)
        save_checkpoint(
            os.path.join(out_dir, f"state_seed{seed}.json"),
            cfg.optimizer,
            result.optimizer.state_dict(),
            config=config_to_flat(cfg),
        )
    summary = summarize(cfg, results)
    _write_resolved(os.path.join(out_dir, "config.resolved"), cfg)
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
        fh.write("\n")
    return summary


def run_sweep(cfg: ExperimentConfig, axis: str, values: list, out_dir: str) -> dict:
    """One run_experiment per axis value, in subdirectories.

    Sweeping the stepsize keeps the per-step weight shrink lr*decay
    constant by rescaling weight_decay with the inverse stepsize ratio,
    so the sweep isolates the stepsize effect instead of silently
    changing the regularization strength with it.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(
            f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}"
        )
    if not values:
        raise ConfigError("sweep needs at least one value")
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for value in values:
        sub = dataclasses.replace(cfg, **{axis: value})
        if axis == "lr" and cfg.weight_decay > 0.0:
            sub = dataclasses.replace(
                sub, weight_decay=cfg.weight_decay * (cfg.lr / value)
            )
        sub_dir = os.path.join(out_dir, f"{axis}_{value!r}")
        summary = run_experiment(sub, sub_dir)
        entries.append({"value": value, "dir": sub_dir, "summary": summary})
    sweep_summary = {
        "name": cfg.name,
        "axis": axis,
        "values": list(values),
        "entries": entries,
        "diverged": any(e["summary"]["diverged"] for e in entries),
    }
    with open(os.path.join(out_dir, "sweep_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(sweep_summary, fh, indent=1)
        fh.write("\n")
    return sweep_summary
