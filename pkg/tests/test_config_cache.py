import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vpkit.cache import ArrayCache, atomic_write_text, cache_key
from vpkit.cli import wk_key
from vpkit.config import DEFAULTS, ConfigError, load_config, parse_config
from vpkit.constants import DEFAULT
from vpkit.twoloop import Numerics


def test_defaults():
    cfg = load_config(None)
    assert [s.name for s in cfg.systems] == ["U", "Pb"]
    assert [s.Z for s in cfg.systems] == [92, 82]
    assert cfg.systems[1].non_paper_input and not cfg.systems[0].non_paper_input
    assert cfg.numerics == Numerics()
    assert cfg.states == ("1s1/2", "2s1/2", "2p1/2")
    assert cfg.constants == DEFAULT


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"numerics": {"kappa_max": -1}},
    {"numerics": {"kappa_max": 0}},
    {"numerics": {"u_nodes": 1.5}},
    {"numerics": {"speed": 2}},
    {"systems": [{"Z": 92}]},
    {"systems": [{"Z": 92, "rms_fm": 5.0, "R0_fm": 7.0}]},
    {"systems": [{"Z": 0, "rms_fm": 5.0}]},
    {"systems": [{"Z": 92, "rms_fm": -5.0}]},
    {"outputs": {"formats": ["xml"]}},
    {"constants": {"alpha": 0.5}},
])
def test_invalid_config_rejected(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_non_mapping_rejected():
    with pytest.raises(ConfigError):
        parse_config([1, 2])


def test_radius_from_R0():
    cfg = parse_config({"systems": [{"name": "X", "Z": 50, "R0_fm": 7.0}]})
    assert cfg.systems[0].rms_fm == pytest.approx(math.sqrt(0.6) * 7.0, rel=1e-15)


def test_duplicate_names_rejected():
    with pytest.raises(ConfigError):
        parse_config({"systems": [{"name": "A", "Z": 50, "rms_fm": 5.0}, {"name": "A", "Z": 60, "rms_fm": 5.0}]})


@pytest.mark.parametrize("label", ["1p1/2", "2x", "3d"])
def test_bad_states_rejected(label):
    with pytest.raises(ConfigError):
        parse_config({"states": [label]})


def test_partial_numerics_merged_over_defaults():
    cfg = parse_config({"numerics": {"kappa_max": 4}})
    assert cfg.numerics.kappa_max == 4
    assert cfg.numerics.u_nodes == DEFAULTS["numerics"]["u_nodes"]


def test_yaml_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("states: ['1s']\nnumerics:\n  kappa_max: 3\n")
    cfg = load_config(p)
    assert cfg.states == ("1s",) and cfg.numerics.kappa_max == 3


def test_invalid_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("states: [1s\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


@given(st.dictionaries(st.text(min_size=1, max_size=5), st.integers(), min_size=1, max_size=6))
def test_cache_key_ignores_key_order(d):
    assert cache_key(d) == cache_key(dict(reversed(list(d.items()))))


def test_cache_key_depends_on_physics_inputs():
    spec = load_config(None).systems[0]
    base = wk_key(spec, Numerics(), DEFAULT)
    assert wk_key(spec, Numerics(kappa_max=11), DEFAULT) != base
    assert wk_key(spec, Numerics(u_nodes=65), DEFAULT) != base
    assert wk_key(spec, Numerics(k_nodes=800), DEFAULT) == base


def test_array_cache_round_trip(tmp_path):
    c = ArrayCache(tmp_path)
    key = cache_key({"x": 1})
    assert c.load(key) is None
    arr = np.linspace(0, 1, 7)
    c.store(key, {"a": arr}, {"n": 7, "q": [0.5]})
    arrays, meta = c.load(key)
    assert np.array_equal(arrays["a"], arr) and meta == {"n": 7, "q": [0.5]}


def test_disabled_cache(tmp_path):
    c = ArrayCache(tmp_path, enabled=False)
    c.store("ab", {"a": np.zeros(2)}, {})
    assert c.load("ab") is None
    assert not any(tmp_path.iterdir())


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "sub" / "f.txt"
    atomic_write_text(target, "one")
    atomic_write_text(target, "two")
    assert target.read_text() == "two"
    assert [p.name for p in target.parent.iterdir()] == ["f.txt"]
