import pytest

from apollo_opt.config import (
    ExperimentConfig,
    build_config,
    config_to_flat,
    load_config,
    parse_assignment,
    parse_config_text,
    parse_value,
)
from apollo_opt.errors import ConfigError


def test_parse_value_types():
    assert parse_value("3") == 3
    assert isinstance(parse_value("3"), int)
    assert parse_value("0.5") == 0.5
    assert parse_value("1e-4") == 1e-4
    assert parse_value("true") is True
    assert parse_value("False") is False
    assert parse_value("none") is None
    assert parse_value(" cosine ") == "cosine"


def test_parse_assignment():
    assert parse_assignment("lr=0.5") == ("lr", "0.5")
    assert parse_assignment("name = a=b") == ("name", "a=b")
    with pytest.raises(ConfigError):
        parse_assignment("just-a-word")
    with pytest.raises(ConfigError):
        parse_assignment("=5")


def test_parse_config_text_comments_blanks_last_wins():
    text = """
# experiment header
lr = 0.1

steps=200
lr = 0.25
"""
    mapping = parse_config_text(text)
    assert mapping == {"lr": "0.25", "steps": "200"}


def test_parse_config_text_reports_line_number():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("lr=0.1\nbroken line\n")
    assert "line 2" in str(exc.value)


def test_build_config_types_and_defaults():
    cfg = build_config({"lr": "0.25", "steps": "50", "optimizer": "sgd"})
    assert cfg.lr == 0.25
    assert cfg.steps == 50
    assert cfg.optimizer == "sgd"
    assert cfg.objective == "rosenbrock"
    assert cfg.threshold is None


def test_build_config_unknown_key():
    with pytest.raises(ConfigError) as exc:
        build_config({"learning_rate": "0.1"})
    assert "learning_rate" in str(exc.value)


def test_build_config_routes_objective_args():
    cfg = build_config(
        {
            "objective": "mlp",
            "objective.n": "64",
            "objective.batch_size": "8",
            "objective.spread": "1.5",
        }
    )
    assert cfg.objective_args == {"n": 64, "batch_size": 8, "spread": 1.5}


def test_build_config_rejects_objective_args_key():
    with pytest.raises(ConfigError) as exc:
        build_config({"objective_args": "{}"})
    assert "objective.<name>" in str(exc.value)
    with pytest.raises(ConfigError):
        build_config({"objective.": "5"})


def test_milestones_parse_and_reject():
    cfg = build_config({"decay": "milestone", "milestones": "100:0.1,300:0.5"})
    assert cfg.milestones == ((100, 0.1), (300, 0.5))
    assert build_config({"milestones": ""}).milestones == ()
    with pytest.raises(ConfigError):
        build_config({"milestones": "100-0.1"})
    with pytest.raises(ConfigError):
        build_config({"milestones": "abc:0.1"})


def test_config_validation_errors():
    for mapping in (
        {"optimizer": "lbfgs"},
        {"objective": "unknown"},
        {"decay": "exp"},
        {"steps": "0"},
        {"repeats": "0"},
        {"log_interval": "0"},
        {"warmup_steps": "-1"},
        {"divergence_limit": "0"},
    ):
        with pytest.raises(ConfigError):
            build_config(mapping)


def test_load_config_overrides_win(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("lr = 0.1\nsteps = 100\nname = base\n")
    cfg = load_config(str(path), overrides=["lr=0.9", "seed=3"])
    assert cfg.lr == 0.9
    assert cfg.steps == 100
    assert cfg.seed == 3
    assert cfg.name == "base"


def test_load_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/path.cfg")


def test_load_config_overrides_only():
    cfg = load_config(None, overrides=["optimizer=adamw", "lr=0.01"])
    assert cfg.optimizer == "adamw"
    assert cfg.lr == 0.01


def test_flat_roundtrip_preserves_everything():
    cfg = ExperimentConfig(
        name="trip",
        objective="mlp",
        objective_args={"n": 64, "batch_size": 16},
        optimizer="apollo",
        lr=0.125,
        eps=1e-5,
        warmup_steps=20,
        warmup_start=0.001,
        decay="milestone",
        milestones=((100, 0.1), (200, 0.1)),
        steps=300,
        threshold=0.01,
        seed=5,
    )
    flat = config_to_flat(cfg)
    rebuilt = build_config({k: str(v) for k, v in flat.items()})
    assert rebuilt == cfg
