import json

import numpy as np
import polars as pl
import pytest

from projects.ida_verify.src.core.errors import ConfigError
from projects.ida_verify.src.schemas.reports import WitnessReport
from projects.ida_verify.src.simulation.integrate import Trajectory
from projects.ida_verify.src.storage.results import ResultStore, to_jsonable, trajectory_frame


def small_trajectory():
    trajectory = Trajectory(
        times=np.array([0.0, 0.5, 1.0]),
        states=np.arange(18, dtype=float).reshape(3, 6),
        metadata={"energy": "Hd", "diverged": False},
    )
    trajectory.channels = {
        "zeta": np.zeros(3),
        "Hd": np.ones(3),
        "y_norm": np.full(3, 2.0),
    }
    trajectory.margins = np.full(3, 0.5)
    return trajectory


def test_trajectory_columns_are_ordered():
    frame = trajectory_frame(small_trajectory(), 2)
    assert frame.columns == [
        "t",
        "q1",
        "q2",
        "p1",
        "p2",
        "x_v1",
        "x_v2",
        "Hd",
        "y_norm",
        "margin",
        "zeta",
    ]
    assert frame["p1"].to_list() == [2.0, 8.0, 14.0]


def test_write_and_read_back(tmp_path):
    store = ResultStore(tmp_path / "out")
    store.write_json("report.json", {"witness": WitnessReport(available=False, reason="m = n")})
    store.write_rows("rows.csv", [{"sample": 0, "norm": 0.5}, {"sample": 1, "norm": 0.25}])
    csv_path, json_path = store.write_trajectory("trajectory_iwp", small_trajectory(), 2)

    assert store.read_json("report.json")["witness"]["reason"] == "m = n"
    assert pl.read_csv(store.path("rows.csv"))["norm"].to_list() == [0.5, 0.25]
    assert pl.read_csv(csv_path).height == 3
    assert json.loads(json_path.read_text())["energy"] == "Hd"
    assert set(store.digests()) == {
        "report.json",
        "rows.csv",
        "trajectory_iwp.csv",
        "trajectory_iwp.json",
    }
    assert store.read_json("missing.json") is None


def test_json_is_stable(tmp_path):
    store = ResultStore(tmp_path)
    store.write_json("a.json", {"b": np.float64(1.5), "a": np.arange(2)})
    assert store.path("a.json").read_text() == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5\n}\n'


def test_unreadable_results(tmp_path):
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ConfigError):
        ResultStore(tmp_path).read_json("broken.json")


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    store = ResultStore(blocker)
    with pytest.raises(ConfigError):
        store.write_json("x.json", {})
    assert store.result.failed


def test_to_jsonable_handles_numpy_and_paths(tmp_path):
    assert to_jsonable({"x": np.int64(3), "p": tmp_path, "t": (1, 2)}) == {
        "x": 3,
        "p": str(tmp_path),
        "t": [1, 2],
    }
