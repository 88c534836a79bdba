# tests/test_reporting.py

import csv
import json

import numpy as np
import pytest

from kato_scat.config.models import RunConfig
from kato_scat.errors import ConfigError
from kato_scat.evolution.nonstationary import NonstationaryResult
from kato_scat.reporting.csv_rows import csv_name, determinant_rows, jost_rows, trajectory_rows, write_csv
from kato_scat.reporting.records import Report, at_least, check, config_hash, dumps, flag, operator_key, to_jsonable
from kato_scat.spectrum.classifier import Verdict
from kato_scat.storage.result_store import ResultStore, dump_operator, read_operator_dump


def test_to_jsonable_handles_numeric_types():
    payload = {
        "k": 1 + 2j,
        "array": np.array([0.5, np.inf]),
        "count": np.int64(3),
        "flag": np.bool_(True),
        "verdict": Verdict.SIMILAR_TO_FREE,
        1: (np.complex128(-1j),),
    }
    assert to_jsonable(payload) == {
        "k": [1.0, 2.0],
        "array": [0.5, None],
        "count": 3,
        "flag": True,
        "verdict": "similar_to_free",
        "1": [[-0.0, -1.0]],
    }


def test_check_records():
    assert check(1e-4, 1e-3) == {"value": 1e-4, "tolerance": 1e-3, "passed": True}
    assert not check(float("nan"), 1.0)["passed"]
    assert at_least(2.5, 2.0)["passed"]
    assert not at_least(1.5, 2.0)["passed"]
    assert flag(False) == {"value": False, "passed": False}


def test_report_status_and_envelope():
    config = RunConfig(command="kato")
    passing = Report.build(config, {"moment": 0.95}, {"a": check(0.1, 1.0)})
    failing = Report.build(config, {}, {"a": check(0.1, 1.0), "b": flag(False)})
    assert passing.status == "pass"
    assert failing.status == "fail"
    assert passing.config_hash == config_hash(config)
    assert passing.config["potential"]["family"] == "step"
    assert "runtime" not in passing.config
    decoded = json.loads(passing.to_json())
    assert decoded["schema_version"] == "1.0"
    assert decoded["results"] == {"moment": 0.95}


def test_report_json_is_deterministic():
    config = RunConfig(command="jost")
    first = Report.build(config, {"z": 1j, "a": [1, 2]}).to_json()
    second = Report.build(config, {"a": [1, 2], "z": 1j}).to_json()
    assert first == second


def test_hashes_follow_the_config():
    base = RunConfig()
    deeper = RunConfig(potential={"v0": -3.0})
    assert len(config_hash(base)) == 12
    assert config_hash(base) != config_hash(deeper)
    # tolerances do not change the stored operators
    looser = RunConfig(tolerances={"completeness": 1e-2})
    assert operator_key(base) == operator_key(looser)
    assert operator_key(base) != operator_key(deeper)


def test_dumps_sorts_keys():
    assert dumps({"b": 1, "a": 2j}).index('"a"') < dumps({"b": 1, "a": 2j}).index('"b"')


def test_csv_rows(tmp_path):
    ks = np.array([0.5j, 1 + 1j])
    rows = list(jost_rows(ks, np.array([1.0, 2j]), np.array([0j, 1.0]), bounds=[(0.1, 0.2), (0.3, 0.4)]))
    assert rows[1] == {"k_re": 1.0, "k_im": 1.0, "e_re": 0.0, "e_im": 2.0, "de_re": 1.0, "de_im": 0.0,
                       "ratio_s": 0.3, "ratio_e": 0.4}

    table = [{"k": 1j, "jost": 0.5 + 0j, "det": 0.5 + 1e-9j, "relative_gap": 2e-9, "order": 2.0}]
    assert next(determinant_rows(table))["det_im"] == 1e-9

    ladder = NonstationaryResult("W", [2.0, 4.0], [1e-2, 5e-3])
    assert [row["t"] for row in trajectory_rows(ladder)] == [2.0, 4.0]
    assert ladder.monotone and ladder.final == 5e-3

    path = write_csv(tmp_path / "out" / csv_name("jost", "abc123"), rows)
    assert path.name == "jost-abc123.csv"
    with path.open(encoding="utf-8") as handle:
        read = list(csv.DictReader(handle))
    assert len(read) == 2
    assert float(read[0]["k_im"]) == 0.5


def test_result_store_round_trip(tmp_path, rng):
    store = ResultStore(tmp_path / "db" / "results.db")
    matrix = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    weights = rng.uniform(size=5)
    store.save_operator("abc", "W", matrix, weights, 20.0, "lattice01")
    loaded, loaded_weights, x_max, lattice_hash = store.load_operator("abc", "W")
    np.testing.assert_array_equal(loaded, matrix)
    np.testing.assert_array_equal(loaded_weights, weights)
    assert (x_max, lattice_hash) == (20.0, "lattice01")
    assert store.load_operator("abc", "Z") is None

    store.insert_report("abc", "waveops", "pass", {"n": 1})
    store.insert_report("abc", "waveops", "fail", {"n": 2})
    assert store.latest_report("abc", "waveops") == {"n": 2}
    assert store.latest_report("abc", "spectrum") is None
    store.close()


def test_operator_dump_round_trip(tmp_path, rng):
    matrix = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    path = dump_operator(tmp_path / "W-abc.bin", matrix, 12.5, "0123456789ab")
    loaded, x_max, lattice_hash = read_operator_dump(path)
    np.testing.assert_array_equal(loaded, matrix)
    assert x_max == 12.5
    assert lattice_hash == "0123456789ab"


def test_operator_dump_rejects_other_files(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"\0" * 64)
    with pytest.raises(ConfigError):
        read_operator_dump(path)
