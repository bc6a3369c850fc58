import json
import math
import os

import numpy as np
import pytest

from apollo_opt.apollo import Apollo
from apollo_opt.baselines import AdamW, SgdMomentum
from apollo_opt.config import ExperimentConfig, load_config
from apollo_opt.errors import ConfigError
from apollo_opt.runner import (
    CSV_HEADER,
    make_optimizer,
    mean_std,
    run_experiment,
    run_single,
    run_sweep,
    summarize,
)


def _bowl_cfg(**kwargs):
    base = dict(
        name="t",
        objective="quadratic_bowl",
        objective_args={"dim": 4},
        optimizer="apollo",
        lr=0.5,
        steps=40,
        log_interval=10,
    )
    base.update(kwargs)
    return ExperimentConfig(**base)


def test_make_optimizer_dispatch():
    params = [np.zeros(3)]
    assert isinstance(make_optimizer(_bowl_cfg(), params), Apollo)
    assert isinstance(make_optimizer(_bowl_cfg(optimizer="sgd"), params), SgdMomentum)
    assert isinstance(make_optimizer(_bowl_cfg(optimizer="adamw"), params), AdamW)


def test_run_records_at_interval_and_final():
    res = run_single(_bowl_cfg(steps=45, log_interval=10), seed=0)
    steps = [r.step for r in res.records]
    assert steps == [0, 10, 20, 30, 40, 45]
    assert all(a < b for a, b in zip(steps, steps[1:]))
    assert res.steps_run == 45
    assert not res.diverged


def test_run_bowl_loss_decreases():
    res = run_single(_bowl_cfg(steps=300, lr=0.2), seed=0)
    losses = [r.loss for r in res.records]
    assert losses[0] == pytest.approx(0.5 * float(np.sum(np.linspace(0.5, 5.0, 4))))
    assert losses[-1] < 1e-6 * losses[0]
    assert all(a >= b for a, b in zip(losses, losses[1:]))
    assert res.final_loss == losses[-1]
    assert res.best_loss <= min(losses)


def test_run_effective_lr_follows_schedule():
    cfg = _bowl_cfg(steps=20, log_interval=5, warmup_steps=10, warmup_start=0.05)
    res = run_single(cfg, seed=0)
    by_step = {r.step: r.effective_lr for r in res.records}
    assert by_step[0] == 0.05
    assert by_step[5] == 0.05 + (0.5 - 0.05) * 0.5
    assert by_step[10] == 0.5
    assert by_step[20] == 0.5


def test_threshold_steps_counted_after_each_update():
    cfg = _bowl_cfg(steps=200, threshold=1e-4)
    res = run_single(cfg, seed=0)
    assert res.steps_to_threshold is not None
    # replay: the hit step is the first update count with full loss under
    rerun = run_single(_bowl_cfg(steps=res.steps_to_threshold), seed=0)
    assert rerun.records[-1].loss <= 1e-4
    prev = run_single(_bowl_cfg(steps=res.steps_to_threshold - 1), seed=0)
    assert prev.records[-1].loss > 1e-4


def test_logging_interval_does_not_change_trajectory():
    # stochastic objective: draws must come only from update steps
    kwargs = dict(
        objective="mlp",
        objective_args={"n": 48, "dim": 4, "k": 2, "hidden": 4, "batch_size": 8},
        optimizer="apollo",
        lr=0.2,
        steps=30,
    )
    a = run_single(ExperimentConfig(name="a", log_interval=3, **kwargs), seed=1)
    b = run_single(ExperimentConfig(name="b", log_interval=7, **kwargs), seed=1)
    assert a.final_loss == b.final_loss
    for pa, pb in zip(a.params, b.params):
        assert np.array_equal(pa, pb)


def test_divergence_truncates_and_marks():
    # quadratic with a stepsize far beyond stability explodes fast
    cfg = _bowl_cfg(
        objective_args={"dim": 2, "H": [1.0, 50.0]},
        optimizer="sgd",
        lr=10.0,
        steps=400,
        log_interval=50,
        divergence_limit=1e6,
    )
    res = run_single(cfg, seed=0)
    assert res.diverged
    assert res.diverged_at is not None
    last = res.records[-1]
    assert last.step == res.diverged_at or not math.isfinite(last.loss) or last.loss > 1e6
    assert last.step <= 400
    assert res.steps_run < 400


def test_divergence_records_failing_row_on_nonfinite_gradient():
    cfg = _bowl_cfg(
        objective_args={"dim": 2, "H": [1.0, 50.0]},
        optimizer="sgd",
        lr=100.0,
        steps=400,
        log_interval=1000,  # no scheduled logging before the blowup
        divergence_limit=1e300,
    )
    res = run_single(cfg, seed=0)
    assert res.diverged
    assert res.records[-1].step == res.diverged_at


def test_mean_std_formulas():
    vals = [1.0, 2.0, 3.0, 4.0]
    m, s = mean_std(vals)
    assert m == sum(vals) / 4
    assert s == math.sqrt(sum((v - m) ** 2 for v in vals) / 4)
    m, s = mean_std([5.0])
    assert (m, s) == (5.0, 0.0)
    m, s = mean_std([])
    assert math.isnan(m) and math.isnan(s)


def test_summarize_recomputable_and_threshold_block():
    cfg = _bowl_cfg(steps=200, repeats=3, threshold=1e-3)
    results = [run_single(cfg, cfg.seed + i) for i in range(cfg.repeats)]
    summary = summarize(cfg, results)
    finals = [p["final_loss"] for p in summary["per_seed"]]
    m, s = mean_std(finals)
    assert summary["final_loss_mean"] == m
    assert summary["final_loss_std"] == s
    hits = [p["steps_to_threshold"] for p in summary["per_seed"]]
    assert all(h is not None for h in hits)
    assert summary["steps_to_threshold_mean"] == mean_std([float(h) for h in hits])[0]
    assert summary["threshold"] == 1e-3
    assert not summary["diverged"]


def test_run_experiment_writes_expected_files(tmp_path):
    out = str(tmp_path / "exp")
    cfg = _bowl_cfg(steps=20, repeats=2, seed=5)
    summary = run_experiment(cfg, out)
    for seed in (5, 6):
        assert os.path.exists(os.path.join(out, f"trace_seed{seed}.csv"))
        assert os.path.exists(os.path.join(out, f"state_seed{seed}.json"))
    assert os.path.exists(os.path.join(out, "config.resolved"))
    with open(os.path.join(out, "summary.json")) as fh:
        on_disk = json.load(fh)
    assert on_disk["final_loss_mean"] == summary["final_loss_mean"]
    assert [p["seed"] for p in on_disk["per_seed"]] == [5, 6]


def test_trace_file_format_and_float_roundtrip(tmp_path):
    out = str(tmp_path / "exp")
    cfg = _bowl_cfg(steps=20, log_interval=5)
    run_experiment(cfg, out)
    ref = run_single(cfg, seed=0)
    with open(os.path.join(out, "trace_seed0.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(ref.records)
    for line, rec in zip(lines[1:], ref.records):
        cells = line.split(",")
        assert int(cells[0]) == rec.step
        assert float(cells[1]) == rec.loss  # repr round-trips exactly
        assert float(cells[2]) == rec.effective_lr
        assert float(cells[3]) == rec.grad_norm


def test_resolved_config_roundtrips(tmp_path):
    out = str(tmp_path / "exp")
    cfg = _bowl_cfg(
        steps=20,
        warmup_steps=5,
        warmup_start=0.01,
        decay="milestone",
        milestones=((10, 0.1),),
        threshold=None,
    )
    run_experiment(cfg, out)
    rebuilt = load_config(os.path.join(out, "config.resolved"))
    assert rebuilt == cfg


def test_repeat_seeds_offset_from_base():
    cfg = _bowl_cfg(
        objective="mlp",
        objective_args={"n": 32, "dim": 4, "k": 2, "hidden": 4},
        steps=10,
        repeats=2,
        seed=3,
    )
    results = [run_single(cfg, cfg.seed + i) for i in range(2)]
    summary = summarize(cfg, results)
    assert [p["seed"] for p in summary["per_seed"]] == [3, 4]
    # different seeds give different inits, hence different finals
    assert results[0].final_loss != results[1].final_loss


def test_determinism_across_runs_except_timing():
    cfg = _bowl_cfg(
        objective="mlp",
        objective_args={"n": 48, "dim": 5, "k": 3, "hidden": 6, "batch_size": 8},
        lr=0.3,
        steps=25,
        log_interval=5,
    )
    a = run_single(cfg, seed=2)
    b = run_single(cfg, seed=2)
    assert len(a.records) == len(b.records)
    for ra, rb in zip(a.records, b.records):
        assert ra.step == rb.step
        assert ra.loss == rb.loss
        assert ra.effective_lr == rb.effective_lr
        assert ra.grad_norm == rb.grad_norm
    for pa, pb in zip(a.params, b.params):
        assert np.array_equal(pa, pb)


def test_sweep_single_value_matches_plain_run(tmp_path):
    out = str(tmp_path / "sweep")
    cfg = _bowl_cfg(steps=30)
    sweep = run_sweep(cfg, "lr", [0.5], out)
    assert sweep["values"] == [0.5]
    ref = run_single(cfg, seed=0)
    entry = sweep["entries"][0]
    assert entry["summary"]["final_loss_mean"] == ref.final_loss
    assert os.path.exists(os.path.join(out, "sweep_summary.json"))
    assert os.path.exists(os.path.join(entry["dir"], "trace_seed0.csv"))


def test_sweep_lr_rescales_weight_decay(tmp_path):
    out = str(tmp_path / "sweep")
    cfg = _bowl_cfg(steps=5, weight_decay=0.1, lr=0.5)
    sweep = run_sweep(cfg, "lr", [0.25, 0.5, 1.0], out)
    for entry in sweep["entries"]:
        sub = load_config(os.path.join(entry["dir"], "config.resolved"))
        # per-step shrink lr * decay stays at the base product
        assert sub.lr * sub.weight_decay == pytest.approx(0.5 * 0.1, rel=1e-12)


def test_sweep_other_axis_leaves_decay_alone(tmp_path):
    out = str(tmp_path / "sweep")
    cfg = _bowl_cfg(steps=5, weight_decay=0.1)
    sweep = run_sweep(cfg, "beta", [0.5, 0.9], out)
    for entry in sweep["entries"]:
        sub = load_config(os.path.join(entry["dir"], "config.resolved"))
        assert sub.weight_decay == 0.1


def test_sweep_stepsize_robustness_band(tmp_path, baselines):
    # moderate stepsize multiples {0.2x, 1x, 2x} land in a narrow final
    # loss band on the classification task; 10x sits outside it
    frozen = baselines["robustness"]
    cfg = ExperimentConfig(
        name="robust",
        objective="mlp",
        objective_args={
            "n": 512, "dim": 20, "k": 5, "hidden": 32, "spread": 1.2,
            "batch_size": 64, "data_seed": 7,
        },
        optimizer="apollo",
        lr=frozen["base_lr"],
        weight_decay=2.5e-4 / frozen["base_lr"],
        warmup_steps=20,
        warmup_start=0.08,
        steps=300,
        log_interval=50,
    )
    sweep = run_sweep(cfg, "lr", frozen["values"], str(tmp_path / "band"))
    finals = {e["value"]: e["summary"]["final_loss_mean"] for e in sweep["entries"]}
    assert not sweep["diverged"]
    band = frozen["band_max"]
    for value in frozen["values"][:3]:
        assert finals[value] <= band
    assert finals[frozen["values"][3]] > band


def test_sweep_validation(tmp_path):
    cfg = _bowl_cfg()
    with pytest.raises(ConfigError):
        run_sweep(cfg, "objective", ["mlp"], str(tmp_path))
    with pytest.raises(ConfigError):
        run_sweep(cfg, "lr", [], str(tmp_path))
