"""Experiment configuration: schema validation, defaults, file loading."""

import numpy as np
import pytest

from auvdepth.config import (ExperimentConfig, config_to_dict, default_config,
                             load_config, parse_config)


def test_empty_mapping_gives_defaults():
    cfg = parse_config({})
    assert cfg.task == "constant"
    assert cfg.seeds == (0,)
    assert cfg.trainer.gamma == 0.995
    assert cfg.env.z_ref == 8.0
    assert cfg.env.cost.rho1 == 1.0
    assert cfg.nmpc.horizon == 30
    assert len(cfg.lqi.q_diag) == 6


def test_default_config_matches_empty_parse():
    assert default_config() == parse_config({})


def test_nested_overrides_apply():
    cfg = parse_config({
        "task": "seafloor",
        "out_dir": "runs/exp9",
        "seeds": [3, 4],
        "env": {"window": 5, "safe_offset": 2.0,
                "cost": {"rho1": 0.5, "r1": 0.01},
                "profile": {"kind": "csv", "path": "floor.csv"}},
        "trainer": {"episodes": 17, "batch_size": 8},
        "nmpc": {"horizon": 12},
        "lqi": {"r_diag": [0.1, 0.1]},
    })
    assert cfg.task == "seafloor"
    assert cfg.out_dir == "runs/exp9"
    assert cfg.seeds == (3, 4)
    assert cfg.env.window == 5
    assert cfg.env.cost.rho1 == 0.5
    assert cfg.env.cost.rho2 == 2.0  # untouched default
    assert cfg.env.profile.kind == "csv"
    assert cfg.env.profile.path == "floor.csv"
    assert cfg.trainer.episodes == 17
    assert cfg.trainer.batch_size == 8
    assert cfg.nmpc.horizon == 12
    assert cfg.lqi.r_diag == (0.1, 0.1)


def test_unknown_top_level_key_rejected_with_name():
    with pytest.raises(ValueError, match="unknow|unknown") as info:
        parse_config({"trianer": {}})
    assert "trianer" in str(info.value)


def test_unknown_nested_key_reports_dotted_path():
    with pytest.raises(ValueError) as info:
        parse_config({"env": {"zref": 5.0}})
    assert "env.zref" in str(info.value)
    with pytest.raises(ValueError) as info:
        parse_config({"trainer": {"episodes": 10, "batchsize": 4}})
    assert "trainer.batchsize" in str(info.value)


def test_wrong_types_report_dotted_path():
    with pytest.raises(ValueError) as info:
        parse_config({"env": {"z_ref": "deep"}})
    assert "env.z_ref" in str(info.value)
    with pytest.raises(ValueError) as info:
        parse_config({"seeds": "all"})
    assert "seeds" in str(info.value)
    with pytest.raises(ValueError) as info:
        parse_config({"trainer": {"episodes": 2.5}})
    assert "trainer.episodes" in str(info.value)


def test_bad_task_lists_choices():
    with pytest.raises(ValueError) as info:
        parse_config({"task": "hover"})
    msg = str(info.value)
    assert "constant" in msg and "curved" in msg and "seafloor" in msg


def test_trainer_invariants_enforced_through_config():
    with pytest.raises(ValueError, match="discount"):
        parse_config({"trainer": {"gamma": 1.5}})


def test_hydro_overrides_validate_field_names():
    cfg = parse_config({"hydro": {"m": 31.0}})
    assert cfg.hydro == {"m": 31.0}
    with pytest.raises(ValueError) as info:
        parse_config({"hydro": {"mass": 31.0}})
    assert "hydro.mass" in str(info.value)


def test_profile_kinds_validated():
    cfg = parse_config({"env": {"profile": {
        "kind": "sinusoid", "depth": 10.0, "wavenumber": 0.0628}}})
    assert cfg.env.profile.depth == 10.0
    with pytest.raises(ValueError) as info:
        parse_config({"env": {"profile": {"kind": "spline"}}})
    assert "kind" in str(info.value)
    # csv profiles need a path
    with pytest.raises(ValueError, match="path"):
        parse_config({"env": {"profile": {"kind": "csv"}}})


def test_curved_task_requires_analytic_profile():
    with pytest.raises(ValueError, match="analytic|sinusoid"):
        parse_config({"task": "curved",
                      "env": {"profile": {"kind": "csv", "path": "f.csv"}}})
    # curved with a sinusoid is fine
    parse_config({"task": "curved",
                  "env": {"profile": {"kind": "sinusoid", "depth": 10.0,
                                      "wavenumber": 0.0628}}})


def test_tasks_needing_profiles_get_one_by_default():
    for task in ("curved", "seafloor"):
        cfg = parse_config({"task": task})
        assert cfg.env.profile is not None


def test_seeds_must_be_nonempty_integers():
    with pytest.raises(ValueError, match="seeds"):
        parse_config({"seeds": []})
    with pytest.raises(ValueError, match="seeds"):
        parse_config({"seeds": [1.5]})
    cfg = parse_config({"seeds": 7})  # single seed is promoted to a tuple
    assert cfg.seeds == (7,)


def test_config_dict_round_trip():
    cfg = parse_config({
        "task": "seafloor",
        "seeds": [1, 2, 3],
        "env": {"window": 7, "profile": {"kind": "csv", "path": "x.csv"},
                "cost": {"rho3": 0.1}},
        "trainer": {"episodes": 9, "adaptive": True},
        "hydro": {"m": 29.0},
        "nmpc": {"q_diag": [0.1, 0.1, 5.0, 1.0]},
    })
    again = parse_config(config_to_dict(cfg))
    assert again == cfg


def test_load_config_reads_yaml(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(
        "task: constant\n"
        "seeds: [5]\n"
        "trainer:\n"
        "  episodes: 12\n"
        "  critic_rate: 1.0e-4\n"
        "env:\n"
        "  z_ref: 6.5\n")
    cfg = load_config(path)
    assert cfg.seeds == (5,)
    assert cfg.trainer.episodes == 12
    assert cfg.trainer.critic_rate == pytest.approx(1e-4)
    assert cfg.env.z_ref == 6.5


def test_load_config_rejects_non_mapping(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("- just\n- a\n- list\n")
    with pytest.raises(ValueError, match="mapping"):
        load_config(path)


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_config(path) == default_config()
