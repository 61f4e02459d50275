import json

import pytest

from swmhd_lie.config import ConfigError, RunConfig


def test_defaults_and_merge():
    cfg = RunConfig().merged(g=1.0, seed=None, params={"span": [0, 1]})
    assert cfg.g == 1.0 and cfg.seed == 0
    assert cfg.params == {"span": [0, 1]}
    again = cfg.merged(params={"points": 5})
    assert again.params == {"span": [0, 1], "points": 5}


def test_load_and_reject(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"case": "full", "trials": 10}))
    assert RunConfig.load(path).trials == 10
    path.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(ConfigError):
        RunConfig.load(path)
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig.load(path)
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")
    with pytest.raises(ConfigError):
        RunConfig(trials=0)


def test_header_echoes_config():
    cfg = RunConfig(case="free")
    lines = cfg.header_lines("tables")
    assert lines[0] == "command: tables"
    echoed = json.loads(lines[1].split(": ", 1)[1])
    assert echoed == {k: v for k, v in cfg.to_dict().items() if k != "output_dir"}


def test_header_ignores_output_location():
    assert RunConfig(output_dir="a").header_lines("x") == RunConfig(output_dir="b").header_lines("x")
