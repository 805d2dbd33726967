"""EM fitting, model invariants, and serialization."""

import json

import numpy as np
import pytest

from telegrasp import TaskSet, fit_em, load_dataset, load_model, save_model
from telegrasp.errors import DatasetError, ModelFormatError, SchemaVersionError
from telegrasp.model import Demonstration, FitConfig, write_dataset

from helpers import GRASP_TASKS, cluster_demos, structured_demos

TASKS_AB = TaskSet(["a", "b"])


def _point_demos(v, n, combination=1, embodiment="fx"):
    return [
        Demonstration(embodiment=embodiment, combination=combination,
                      features=np.asarray(v, dtype=float), trial_id=str(i))
        for i in range(n)
    ]


class TestFitEm:
    def test_degenerate_single_point_cluster(self):
        v = [0.3, -1.2, 0.8]
        model = fit_em(_point_demos(v, 50), TASKS_AB)
        assert len(model.classes) == 1
        c = model.classes[0]
        assert c.prior == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(c.mean, v, atol=1e-12)
        np.testing.assert_allclose(c.covariance, 1e-6 * np.eye(3), atol=1e-15)

    def test_priors_match_label_ratio_when_separated(self):
        rng = np.random.default_rng(10)
        demos = cluster_demos(rng, "fx", 1, [0.0, 0.0], 0.05, 30)
        demos += cluster_demos(rng, "fx", 2, [50.0, 50.0], 0.05, 90)
        model = fit_em(demos, TASKS_AB)
        np.testing.assert_allclose(model.priors, [0.25, 0.75], atol=1e-6)

    def test_mean_recovery_on_synthetic_draws(self):
        rng = np.random.default_rng(11)
        sigma, n = 0.3, 2000
        true_means = {1: np.array([0.0, 1.0]), 2: np.array([3.0, -1.0])}
        demos = []
        for combo, mean in true_means.items():
            demos += cluster_demos(rng, "fx", combo, mean, sigma, n)
        model = fit_em(demos, TASKS_AB)
        for c in model.classes:
            err = np.abs(c.mean - true_means[c.combination])
            assert np.all(err < 3.0 * sigma / np.sqrt(n))

    def test_log_likelihood_monotone(self):
        rng = np.random.default_rng(12)
        for trial in range(10):
            demos = []
            k = int(rng.integers(1, 4))
            for combo in range(1, k + 1):
                mean = rng.normal(0, 2, size=3)
                demos += cluster_demos(rng, "fx", combo, mean, 0.5, 40)
            model = fit_em(demos, TaskSet(["a", "b"]))
            lls = model.fit_meta.log_likelihoods
            diffs = np.diff(lls)
            assert np.all(diffs >= -1e-9), f"trial {trial}: {diffs.min()}"

    def test_responsibility_rows_sum_to_one(self):
        rng = np.random.default_rng(13)
        demos = cluster_demos(rng, "fx", 1, [0.0], 1.0, 25)
        demos += cluster_demos(rng, "fx", 2, [1.0], 1.0, 25)
        model = fit_em(demos, TASKS_AB)
        resp = np.asarray(model.fit_meta.responsibilities)
        np.testing.assert_allclose(resp.sum(axis=1), 1.0, atol=1e-12)

    def test_prior_normalization(self):
        rng = np.random.default_rng(14)
        demos = cluster_demos(rng, "fx", 1, [0.0], 1.0, 20)
        demos += cluster_demos(rng, "fx", 2, [0.5], 1.0, 30)
        demos += cluster_demos(rng, "fx", 3, [1.5], 1.0, 10)
        model = fit_em(demos, TASKS_AB)
        assert abs(float(model.priors.sum()) - 1.0) < 1e-10

    def test_covariance_floor(self):
        rng = np.random.default_rng(15)
        # rank-deficient cluster: second coordinate constant
        pts = np.stack([rng.normal(0, 1, 40), np.zeros(40)], axis=1)
        demos = [
            Demonstration("fx", 1, row, trial_id=str(i)) for i, row in enumerate(pts)
        ]
        model = fit_em(demos, TASKS_AB, FitConfig(eps_cov=1e-5))
        eig = np.linalg.eigvalsh(model.classes[0].covariance)
        assert eig.min() >= 1e-5 - 1e-12

    def test_small_class_gets_diagonal_covariance(self):
        rng = np.random.default_rng(16)
        demos = cluster_demos(rng, "fx", 1, [0.0, 0.0, 0.0], 1.0, 60)
        # 3 samples < d + 1 = 4 forces the diagonal fallback
        demos += cluster_demos(rng, "fx", 2, [5.0, 5.0, 5.0], 1.0, 3)
        model = fit_em(demos, TASKS_AB)
        cov = model.class_for(2).covariance
        off_diag = cov - np.diag(np.diag(cov))
        np.testing.assert_allclose(off_diag, 0.0, atol=1e-15)

    def test_deterministic(self):
        demos = structured_demos("human", seed=21)
        a = fit_em(demos, GRASP_TASKS, n_apertures=3)
        b = fit_em(structured_demos("human", seed=21), GRASP_TASKS, n_apertures=3)
        for ca, cb in zip(a.classes, b.classes):
            assert np.array_equal(ca.mean, cb.mean)
            assert np.array_equal(ca.covariance, cb.covariance)
            assert ca.prior == cb.prior
        assert a.fit_meta.log_likelihoods == b.fit_meta.log_likelihoods

    def test_weighted_samples_shift_priors(self):
        demos = _point_demos([0.0], 10, combination=1)
        heavy = _point_demos([5.0], 10, combination=2)
        for s in heavy:
            s.weight = 3.0
        model = fit_em(demos + heavy, TASKS_AB)
        np.testing.assert_allclose(model.priors, [0.25, 0.75], atol=1e-12)

    def test_empty_dataset_rejected(self):
        with pytest.raises(DatasetError, match="no demonstrations"):
            fit_em([], TASKS_AB)

    def test_mixed_dimensions_rejected(self):
        demos = _point_demos([0.0, 0.0], 5) + _point_demos([0.0], 1, combination=2)
        with pytest.raises(DatasetError, match="dimension"):
            fit_em(demos, TASKS_AB)

    def test_mixed_embodiments_rejected(self):
        demos = _point_demos([0.0], 3) + _point_demos([1.0], 3, embodiment="other")
        with pytest.raises(DatasetError, match="embodiment"):
            fit_em(demos, TASKS_AB)


class TestModelSerialization:
    def test_round_trip_bit_exact(self, tmp_path, structured_pair):
        robot, _, _ = structured_pair
        path = tmp_path / "robot.json"
        save_model(robot, path)
        loaded = load_model(path)
        assert loaded.embodiment == robot.embodiment
        assert loaded.tasks == robot.tasks
        assert loaded.d == robot.d
        assert loaded.n_apertures == robot.n_apertures
        for ca, cb in zip(robot.classes, loaded.classes):
            assert ca.combination == cb.combination
            assert ca.prior == cb.prior
            assert np.array_equal(ca.mean, cb.mean)
            assert np.array_equal(ca.covariance, cb.covariance)
        assert (
            loaded.fit_meta.final_log_likelihood
            == robot.fit_meta.final_log_likelihood
        )
        assert loaded.fit_meta.log_likelihoods == robot.fit_meta.log_likelihoods

    def test_round_trip_preserves_responsibilities(self, tmp_path):
        demos = _point_demos([0.0], 5) + _point_demos([2.0], 5, combination=2)
        model = fit_em(demos, TASKS_AB)
        path = tmp_path / "m.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.fit_meta.responsibilities == model.fit_meta.responsibilities

    def test_non_symmetric_covariance_rejected(self, tmp_path):
        demos = _point_demos([0.0, 1.0], 10)
        model = fit_em(demos, TASKS_AB)
        path = tmp_path / "m.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["classes"][0]["covariance"][0][1] += 1e-3
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="asymmetric"):
            load_model(path)

    def test_non_spd_covariance_rejected(self, tmp_path):
        demos = _point_demos([0.0, 1.0], 10)
        model = fit_em(demos, TASKS_AB)
        path = tmp_path / "m.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["classes"][0]["covariance"] = [[1.0, 2.0], [2.0, 1.0]]
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="positive definite"):
            load_model(path)

    def test_unknown_schema_version(self, tmp_path):
        demos = _point_demos([0.0], 10)
        model = fit_em(demos, TASKS_AB)
        path = tmp_path / "m.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["schema_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaVersionError) as err:
            load_model(path)
        assert "99" in str(err.value) and "1" in str(err.value)


class TestDatasetIO:
    def test_round_trip(self, tmp_path):
        demos = structured_demos("human", seed=30, n_per_class=5)
        path = tmp_path / "demos.jsonl"
        write_dataset(path, demos, GRASP_TASKS, n_apertures=3)
        loaded, tasks, n_ap = load_dataset(path, GRASP_TASKS)
        assert n_ap == 3
        assert len(loaded) == len(demos)
        for a, b in zip(demos, loaded):
            assert a.combination == b.combination
            np.testing.assert_allclose(a.features, b.features, atol=1e-15)

    def test_task_order_inferred_from_first_appearance(self, tmp_path):
        path = tmp_path / "demos.jsonl"
        lines = [
            {"embodiment": "fx", "combination": ["transfer"],
             "features": {"values": [0.0]}, "trial_id": "0"},
            {"embodiment": "fx", "combination": ["use", "transfer"],
             "features": {"values": [1.0]}, "trial_id": "1"},
        ]
        path.write_text("\n".join(json.dumps(l) for l in lines) + "\n")
        _, tasks, _ = load_dataset(path)
        assert tasks.names == ("transfer", "use")

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "demos.jsonl"
        path.write_text("")
        with pytest.raises(DatasetError, match="no demonstrations"):
            load_dataset(path)

    def test_mixed_dimension_names_line(self, tmp_path):
        path = tmp_path / "demos.jsonl"
        lines = [
            {"embodiment": "fx", "combination": ["a"], "features": {"values": [0.0, 1.0]}},
            {"embodiment": "fx", "combination": ["a"], "features": {"values": [0.0]}},
        ]
        path.write_text("\n".join(json.dumps(l) for l in lines) + "\n")
        with pytest.raises(DatasetError, match="line 2"):
            load_dataset(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "demos.jsonl"
        path.write_text('{"embodiment": "fx"}\nnot json\n')
        with pytest.raises(DatasetError, match="line 1|line 2"):
            load_dataset(path)

    def test_negative_weight_rejected(self, tmp_path):
        path = tmp_path / "demos.jsonl"
        line = {"embodiment": "fx", "combination": ["a"],
                "features": {"values": [0.0]}, "weight": -1.0}
        path.write_text(json.dumps(line) + "\n")
        with pytest.raises(DatasetError, match="negative weight"):
            load_dataset(path)

    def test_structured_features_are_canonicalized(self, tmp_path):
        path = tmp_path / "demos.jsonl"
        line = {
            "embodiment": "fx",
            "combination": ["a"],
            "features": {
                "position": [0.0, 0.0, 0.0],
                "orientation": [0.0, 0.0, 4.0],  # wraps to 4 - 2*pi
                "apertures": [1.5, -0.2],        # clamps into [0, 1]
            },
        }
        path.write_text(json.dumps(line) + "\n")
        demos, _, n_ap = load_dataset(path)
        assert n_ap == 2
        f = demos[0].features
        assert abs(f[5] - (4.0 - 2.0 * np.pi)) < 1e-12
        assert f[6] == 1.0 and f[7] == 0.0
