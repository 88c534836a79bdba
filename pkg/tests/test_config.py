# tests/test_config.py

import numpy as np
import pytest

from kato_scat.config.models import RunConfig
from kato_scat.config.parser import ConfigParser, parse_intervals, split_list
from kato_scat.config.settings import ENVIRONMENT_KEYS, build_potential, load_config, load_potential_csv
from kato_scat.errors import ConfigError

RUN_FILE = """
# deep well run
[potential]
family = step
v0 = -3          # depth
a = 1

[grid]
n = 400
x-max = 20

[runtime]
threads = 2
"""


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for variable in ENVIRONMENT_KEYS:
        monkeypatch.delenv(variable, raising=False)


@pytest.fixture
def run_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(RUN_FILE, encoding="utf-8")
    return path


def test_parser_reads_sections():
    sections = ConfigParser().parse_text(RUN_FILE)
    assert sections["potential"] == {"family": "step", "v0": "-3", "a": "1"}
    assert sections["grid"] == {"n": "400", "x_max": "20"}


def test_parser_strips_quotes():
    sections = ConfigParser().parse_text('[potential]\ncsv = "data/well.csv"\n')
    assert sections["potential"]["csv"] == "data/well.csv"


@pytest.mark.parametrize("text", ["family = step\n", "[potential]\nthis is not a pair\n"])
def test_parser_rejects_bad_lines(text):
    with pytest.raises(ConfigError):
        ConfigParser().parse_text(text)


def test_parser_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        ConfigParser().parse_file(tmp_path / "absent.cfg")


def test_list_and_interval_values():
    assert split_list("2, 4  8,16") == ["2", "4", "8", "16"]
    assert parse_intervals("0:1:-3, 1:2.5:0.5:0.1") == [(0.0, 1.0, -3.0, 0.0), (1.0, 2.5, 0.5, 0.1)]
    with pytest.raises(ConfigError):
        parse_intervals("nothing here")


def test_defaults():
    config = load_config()
    assert config.command == "spectrum"
    assert config.potential.family == "step"
    assert config.grid.n == 2000
    assert config.lattice.big_lambda == 400.0
    assert config.evolution.t_ladder == [2.0, 4.0, 8.0, 16.0]
    assert config.runtime.threads == 1


def test_file_values(run_file):
    config = load_config(run_file, command="waveops")
    assert config.command == "waveops"
    assert config.potential.v0 == -3.0
    assert config.grid.n == 400
    assert config.grid.x_max == 20.0


def test_layer_precedence(run_file, monkeypatch):
    monkeypatch.setenv("KATO_SCAT_THREADS", "3")
    assert load_config().runtime.threads == 3
    assert load_config(run_file).runtime.threads == 2
    assert load_config(run_file, overrides={"runtime": {"threads": 4}}).runtime.threads == 4


def test_none_overrides_are_ignored(run_file):
    config = load_config(run_file, overrides={"grid": {"n": None}})
    assert config.grid.n == 400


def test_log_level_is_case_insensitive(monkeypatch):
    monkeypatch.setenv("KATO_SCAT_LOG_LEVEL", "debug")
    assert load_config().runtime.log_level == "DEBUG"


@pytest.mark.parametrize("overrides", [
    {"tolerances": {"grid": -1.0}},
    {"grid": {"n": 10}},
    {"potential": {"family": "square"}},
    {"potential": {"family": "stack"}},
    {"potential": {"family": "sampled", "csv": "missing.csv"}},
    {"plotting": {"colour": "red"}},
    {"grid": {"nodes": 100}},
    {"lattice": {"eps_ladder": "0.1, -0.05"}},
])
def test_invalid_configurations(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides)


def test_wavenumber_lists():
    config = load_config(overrides={"lattice": {"k_values": "0.5j, 1+1j"}})
    assert config.lattice.ks == [0.5j, 1 + 1j]


def test_canonical_json_skips_runtime():
    first = load_config(overrides={"runtime": {"threads": 1}})
    second = load_config(overrides={"runtime": {"threads": 8}})
    assert first.canonical_json() == second.canonical_json()
    assert RunConfig().canonical_json() == first.canonical_json()


@pytest.mark.parametrize("section, family, check", [
    ({"family": "zero"}, "zero", lambda v: v.is_zero),
    ({"family": "step", "v0": -3.0, "a": 1.0}, "stack", lambda v: v(np.array([0.5]))[0] == -3.0),
    ({"family": "stack", "intervals": "0:1:-1, 1:2:0:0.5"}, "stack", lambda v: v(np.array([1.5]))[0] == 0.5j),
    ({"family": "exponential", "amplitude_re": -2.0, "rate": 1.5}, "exponential",
     lambda v: v(np.array([0.0]))[0] == -2.0),
    ({"family": "gaussian", "amplitude_im": 1.0, "amplitude_re": 0.0}, "gaussian",
     lambda v: v(np.array([0.0]))[0] == 1j),
])
def test_build_potential(section, family, check):
    potential = build_potential(load_config(overrides={"potential": section}).potential)
    assert potential.family == family
    assert check(potential)


def test_sampled_potential_from_csv(tmp_path):
    path = tmp_path / "well.csv"
    path.write_text("# x, re, im\n0.0, -1.0, 0.5\n1.0, -0.5, 0.25\n2.0, -0.25, 0.0\n", encoding="utf-8")
    config = load_config(overrides={"potential": {"family": "sampled", "csv": path, "tail_rate": 2.0}})
    potential = build_potential(config.potential)
    assert potential(np.array([1.0]))[0] == pytest.approx(-0.5 + 0.25j)


def test_bad_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.0\n1.0\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_potential_csv(path, "exponential", 1.0)
