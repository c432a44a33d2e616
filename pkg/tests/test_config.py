import pytest
from hypothesis import given, strategies as st

from g3.config import (PRESETS, RunConfig, dumps_config, load_config, parse_config_text,
                       preset_text, resolve)
from g3.errors import ConfigError


def test_parse_examples():
    text = "# comment\nT = 3.5\nwidth=64  # trailing\n\nlayer_norm = off\nmode = asymmetric\n"
    assert parse_config_text(text) == {"T": 3.5, "width": 64, "layer_norm": False,
                                       "mode": "asymmetric"}


def test_parse_errors():
    for text in ("T 3", "colour = red", "width = wide", "layer_norm = maybe"):
        with pytest.raises(ConfigError):
            parse_config_text(text)


def test_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("T = 2\nwidth = 32\n")
    cfg = resolve(path, {"width": "16", "seed": None})
    assert (cfg.T, cfg.width, cfg.seed) == (2.0, 16, RunConfig().seed)
    assert resolve().T == RunConfig().T


def test_presets_load():
    for name in PRESETS:
        cfg = resolve(name)
        assert cfg.mlp(8).n_max == 8
        assert load_config(name) == parse_config_text(preset_text(name))
    with pytest.raises(ConfigError):
        preset_text("trees")


def test_invalid_combinations_fail_early(tmp_path):
    for bad in ({"mode": "sideways"}, {"T": "-1"}, {"lr_decay": "1.5"},
                {"threshold_rule": "top"}, {"base_scale": "double"}, {"dtype": "int8"}):
        with pytest.raises(ConfigError):
            resolve(None, bad)
    with pytest.raises(ConfigError):
        resolve(tmp_path / "missing.cfg")


def test_replace_revalidates():
    cfg = resolve("sbm")
    assert cfg.replace(M=5).M == 5
    with pytest.raises(ConfigError):
        cfg.replace(mode="sideways")
    with pytest.raises(ConfigError):
        cfg.replace(colour="red")


@given(st.sampled_from(PRESETS), st.integers(1, 4096), st.floats(0.5, 50),
       st.booleans(), st.sampled_from(["value", "sparsity"]))
def test_dump_round_trips(preset, width, T, ln, rule):
    cfg = resolve(preset, {"width": width, "T": T, "layer_norm": ln, "threshold_rule": rule})
    assert resolve(None, parse_config_text(dumps_config(cfg))) == cfg
