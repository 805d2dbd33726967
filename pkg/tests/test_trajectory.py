"""Trajectory parsing and controller replay metrics."""

import json

import numpy as np
import pytest

from telegrasp import TaskSet, WorkspaceBounds, load_trajectory, replay
from telegrasp.errors import DatasetError, DimensionMismatchError
from telegrasp.trajectory import write_report

from helpers import raw_model


def _write_frames(path, frames, meta=None):
    with open(path, "w") as fh:
        if meta is not None:
            fh.write(json.dumps({"meta": meta}) + "\n")
        for f in frames:
            fh.write(json.dumps(f) + "\n")


def _raw_frame(t, x, intent=None):
    frame = {"t": t, "features": {"values": list(np.atleast_1d(x).astype(float))}}
    if intent is not None:
        frame["intent"] = list(intent)
    return frame


@pytest.fixture()
def gentle_setup(gentle_1d):
    model, bounds = gentle_1d
    return model, bounds


class TestLoadTrajectory:
    def test_metadata_line(self, tmp_path):
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [0.1], [0.5, 0.5])],
                      meta={"task": "transfer", "operator": "op-1"})
        traj = load_trajectory(path)
        assert traj.task == "transfer"
        assert traj.operator == "op-1"
        assert len(traj.frames) == 1

    def test_timestamps_must_increase(self, tmp_path):
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [0.0]), _raw_frame(0.0, [0.1])])
        with pytest.raises(DatasetError, match="line 2.*increase"):
            load_trajectory(path)

    def test_dimension_change_names_line(self, tmp_path):
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [0.0]), _raw_frame(1.0, [0.1, 0.2])])
        with pytest.raises(DatasetError, match="line 2"):
            load_trajectory(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "traj.jsonl"
        path.write_text("")
        with pytest.raises(DatasetError, match="no frames"):
            load_trajectory(path)

    def test_structured_frames(self, tmp_path):
        path = tmp_path / "traj.jsonl"
        frame = {
            "t": 0.0,
            "features": {
                "position": [0.1, 0.2, 0.3],
                "orientation": [0.0, 0.0, 0.1],
                "apertures": [0.5, 0.6],
            },
        }
        _write_frames(path, [frame])
        traj = load_trajectory(path)
        assert traj.n_apertures == 2
        assert traj.d == 8


class TestReplay:
    def test_single_frame_zero_path(self, gentle_setup, tmp_path):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [0.4], [0.3, 0.7])])
        traj = load_trajectory(path)
        report = replay(traj, model, "intent_only", bounds)
        assert report.path_length == 0.0
        assert report.summary()["frames"] == 1

    def test_constant_frames_under_mimic(self, gentle_setup, tmp_path):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        frames = [_raw_frame(float(i), [0.8], [0.2, 0.9]) for i in range(5)]
        _write_frames(path, frames)
        report = replay(load_trajectory(path), model, "mimic", bounds)
        assert report.path_length == 0.0
        for sol in report.solutions:
            np.testing.assert_array_equal(sol.robot, [0.8])

    def test_knitro_follows_moving_operator_more_than_intent(
        self, gentle_setup, tmp_path
    ):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        xs = np.linspace(-0.5, 2.3, 12)
        frames = [_raw_frame(float(i), [x], [0.1, 0.9]) for i, x in enumerate(xs)]
        _write_frames(path, frames)
        traj = load_trajectory(path)
        # an identical "human" model makes the divergences collapse to the
        # clamp floor, i.e. the strongest possible elastic pull
        knitro = replay(traj, model, "knitro", bounds, human_model=model)
        intent = replay(traj, model, "intent_only", bounds)
        assert knitro.path_length >= intent.path_length

    def test_task_match_flag(self, gentle_setup, tmp_path):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [2.0], [0.0, 1.0])])
        report = replay(load_trajectory(path), model, "intent_only", bounds)
        assert report.summary()["final_task_match"] is True

    def test_intent_estimated_from_human_model(self, gentle_setup, tmp_path):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [1.95])])
        report = replay(load_trajectory(path), model, "intent_only", bounds,
                        human_model=model)
        # frame sits essentially at the second class mean
        assert int(np.argmax(report.solutions[0].p_h)) == 2

    def test_missing_intent_and_model_rejected(self, gentle_setup, tmp_path):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [0.5])])
        with pytest.raises(DatasetError, match="intent"):
            replay(load_trajectory(path), model, "intent_only", bounds)

    def test_dimension_mismatch_rejected(self, gentle_setup, tmp_path):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [0.5, 0.5], [0.5, 0.5])])
        with pytest.raises(DimensionMismatchError):
            replay(load_trajectory(path), model, "intent_only", bounds)

    def test_report_bytes_deterministic_without_timings(
        self, gentle_setup, tmp_path
    ):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        frames = [
            _raw_frame(float(i), [x], [0.3, 0.7])
            for i, x in enumerate(np.linspace(0.0, 2.0, 8))
        ]
        _write_frames(path, frames)
        traj = load_trajectory(path)
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        write_report(replay(traj, model, "knitro", bounds, human_model=model),
                     out_a, include_timings=False)
        write_report(replay(traj, model, "knitro", bounds, human_model=model),
                     out_b, include_timings=False)
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_report_document_shape(self, gentle_setup, tmp_path):
        model, bounds = gentle_setup
        path = tmp_path / "traj.jsonl"
        _write_frames(path, [_raw_frame(0.0, [0.4], [0.3, 0.7])],
                      meta={"task": "use", "operator": "op"})
        report = replay(load_trajectory(path), model, "intent_only", bounds)
        doc = report.to_dict()
        assert doc["schema_version"] == 1
        assert doc["mode"] == "intent_only"
        assert doc["metadata"] == {"task": "use", "operator": "op"}
        assert doc["summary"]["path_length"] == 0.0
        sol = doc["frames"][0]["solution"]
        assert set(sol) == {
            "robot", "objective", "intent_term", "mimic_term",
            "p_r", "p_h", "weights", "solver_meta",
        }
        assert sol["robot"] == {"values": [pytest.approx(sol["robot"]["values"][0])]}
