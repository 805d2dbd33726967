"""Closed-form divergence weights between embodiment populations."""

import csv
import json

import numpy as np
import pytest

from telegrasp import (
    TaskSet,
    kl_feature,
    kl_hand,
    kl_table,
    load_model,
    marginal_stats,
    save_model,
    weights_between,
)
from telegrasp.divergence import (
    ArbitrationWeights,
    feature_alignment,
    pooled_stats,
    write_kl_csv,
    write_kl_json,
)
from telegrasp.errors import (
    DimensionMismatchError,
    LayoutError,
    MissingCombinationError,
    WeightConfigError,
)

from helpers import raw_model


class TestKlFeature:
    def test_identical_populations(self):
        assert kl_feature((0.0, 1.0), (0.0, 1.0)) == 0.0
        assert kl_feature((3.2, 0.7), (3.2, 0.7)) < 1e-12

    def test_unit_mean_shift(self):
        assert kl_feature((0.0, 1.0), (1.0, 1.0)) == pytest.approx(0.5, abs=1e-12)

    def test_asymmetry_pair(self):
        wide_r = kl_feature((0.0, 1.0), (0.0, 2.0))
        narrow_r = kl_feature((0.0, 2.0), (0.0, 1.0))
        assert wide_r == pytest.approx(1.5 - np.log(2.0), abs=1e-12)   # 0.8069
        assert narrow_r == pytest.approx(np.log(2.0) - 0.375, abs=1e-12)  # 0.3181
        assert f"{wide_r:.4f}" == "0.8069"
        assert f"{narrow_r:.4f}" == "0.3181"

    def test_non_negative_fuzz(self):
        rng = np.random.default_rng(20)
        for _ in range(10_000):
            h = (rng.normal(0, 3), rng.uniform(0.05, 4.0))
            r = (rng.normal(0, 3), rng.uniform(0.05, 4.0))
            assert kl_feature(h, r) >= -1e-12

    def test_scale_invariance_mean_zero(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            sh, sr = rng.uniform(0.1, 2.0, size=2)
            c = rng.uniform(0.5, 10.0)
            base = kl_feature((0.0, sh), (0.0, sr))
            scaled = kl_feature((0.0, c * sh), (0.0, c * sr))
            assert scaled == pytest.approx(base, abs=1e-12)

    def test_non_positive_sigma_rejected(self):
        with pytest.raises(ValueError):
            kl_feature((0.0, 0.0), (0.0, 1.0))
        with pytest.raises(ValueError):
            kl_feature((0.0, 1.0), (0.0, -2.0))


class TestKlHand:
    def test_identical_gaussians(self):
        rng = np.random.default_rng(22)
        a = rng.normal(size=(3, 3))
        cov = a @ a.T + np.eye(3)
        mean = rng.normal(size=3)
        assert kl_hand((mean, cov), (mean, cov)) < 1e-12

    def test_mean_shift_identity_covariances(self):
        g = kl_hand((np.zeros(2), np.eye(2)), (np.array([1.0, 0.0]), np.eye(2)))
        assert g == pytest.approx(0.5, abs=1e-9)

    def test_reduces_to_feature_form_in_1d(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            mu_h, mu_r = rng.normal(0, 2, size=2)
            s_h, s_r = rng.uniform(0.1, 3.0, size=2)
            joint = kl_hand(([mu_h], [[s_h**2]]), ([mu_r], [[s_r**2]]))
            per_feature = kl_feature((mu_h, s_h), (mu_r, s_r))
            assert joint == pytest.approx(per_feature, abs=1e-12)

    def test_diagonal_case_sums_feature_divergences(self):
        rng = np.random.default_rng(24)
        d = 4
        for _ in range(50):
            mu_h = rng.normal(size=d)
            mu_r = rng.normal(size=d)
            var_h = rng.uniform(0.1, 2.0, size=d)
            var_r = rng.uniform(0.1, 2.0, size=d)
            joint = kl_hand((mu_h, np.diag(var_h)), (mu_r, np.diag(var_r)))
            total = sum(
                kl_feature((mu_h[i], np.sqrt(var_h[i])), (mu_r[i], np.sqrt(var_r[i])))
                for i in range(d)
            )
            assert joint == pytest.approx(total, abs=1e-10)

    def test_non_negative_fuzz(self):
        rng = np.random.default_rng(25)
        for _ in range(2000):
            d = int(rng.integers(1, 5))
            a = rng.normal(size=(d, d))
            b = rng.normal(size=(d, d))
            cov_h = a @ a.T + 0.1 * np.eye(d)
            cov_r = b @ b.T + 0.1 * np.eye(d)
            g = kl_hand((rng.normal(size=d), cov_h), (rng.normal(size=d), cov_r))
            assert g >= -1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kl_hand((np.zeros(2), np.eye(2)), (np.zeros(3), np.eye(3)))

    def test_non_spd_rejected(self):
        with pytest.raises(ValueError):
            kl_hand((np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]])),
                    (np.zeros(2), np.eye(2)))


class TestMarginalStats:
    def test_single_class_verbatim(self, two_class_1d):
        model, _ = two_class_1d
        mean, cov = marginal_stats(model, 1)
        np.testing.assert_array_equal(mean, model.class_for(1).mean)
        np.testing.assert_array_equal(cov, model.class_for(1).covariance)

    def test_per_feature_sigma_is_sqrt_diagonal(self, structured_pair):
        robot, _, _ = structured_pair
        mean, cov = marginal_stats(robot, 1)
        sigmas = np.sqrt(np.diag(cov))
        for i in range(robot.d):
            assert sigmas[i] == pytest.approx(np.sqrt(cov[i, i]), abs=0.0)
            assert sigmas[i] > 0.0

    def test_matches_model_file_round_trip(self, tmp_path, structured_pair):
        robot, _, _ = structured_pair
        path = tmp_path / "robot.json"
        save_model(robot, path)
        doc = json.loads(path.read_text())
        mean, cov = marginal_stats(robot, doc["classes"][0]["combination"])
        np.testing.assert_array_equal(mean, np.array(doc["classes"][0]["mean"]))
        np.testing.assert_array_equal(cov, np.array(doc["classes"][0]["covariance"]))
        reloaded = load_model(path)
        mean2, cov2 = marginal_stats(reloaded, doc["classes"][0]["combination"])
        np.testing.assert_array_equal(mean, mean2)
        np.testing.assert_array_equal(cov, cov2)

    def test_missing_combination(self, two_class_1d):
        model, _ = two_class_1d
        with pytest.raises(MissingCombinationError):
            marginal_stats(model, 3)

    def test_pooled_fallback(self, two_class_1d):
        model, _ = two_class_1d
        mean, cov = marginal_stats(model, 3, pooled_fallback=True)
        pm, pc = pooled_stats(model)
        np.testing.assert_array_equal(mean, pm)
        np.testing.assert_array_equal(cov, pc)

    def test_pooled_moments_match_mixture(self):
        # two-component mixture moments computed by hand
        model = raw_model(combos=[1, 2], means=[[0.0], [2.0]],
                          covs=[[[1.0]], [[4.0]]], priors=[0.25, 0.75],
                          tasks=TaskSet(["a", "b"]))
        mean, cov = pooled_stats(model)
        assert mean[0] == pytest.approx(1.5, abs=1e-15)
        expected_var = 0.25 * (1.0 + 1.5**2) + 0.75 * (4.0 + 0.5**2)
        assert cov[0, 0] == pytest.approx(expected_var, abs=1e-12)


class TestWeightsBetween:
    def test_identical_models_fully_clamped_low(self, structured_pair):
        robot, _, _ = structured_pair
        w = weights_between(robot, robot, 1)
        np.testing.assert_allclose(w.lam, 0.0, atol=1e-9)
        assert abs(w.gamma) < 1e-9
        np.testing.assert_allclose(w.clamped_lambda, 1e-3, atol=0.0)
        assert w.clamped_gamma == 1e-3

    def test_lambda_matches_per_feature_marginals(self, structured_pair):
        robot, human, _ = structured_pair
        w = weights_between(human, robot, 1)
        mu_h, cov_h = marginal_stats(human, 1)
        mu_r, cov_r = marginal_stats(robot, 1)
        for i in range(robot.d):
            expected = kl_feature(
                (mu_h[i], np.sqrt(cov_h[i, i])), (mu_r[i], np.sqrt(cov_r[i, i]))
            )
            assert w.lam[i] == pytest.approx(expected, abs=1e-12)
        expected_gamma = kl_hand((mu_h, cov_h), (mu_r, cov_r))
        assert w.gamma == pytest.approx(expected_gamma, abs=1e-12)

    def test_clamping_range(self):
        w = ArbitrationWeights.from_raw([0.0, 5.0, np.inf], 1e9)
        np.testing.assert_array_equal(w.clamped_lambda, [1e-3, 5.0, 1e3])
        assert w.clamped_gamma == 1e3

    def test_negative_divergence_rejected(self):
        with pytest.raises(WeightConfigError):
            ArbitrationWeights.from_raw([-0.5], 1.0)

    def test_unmapped_apertures_get_w_max(self):
        rng = np.random.default_rng(26)

        def structured(embodiment, f):
            d = 6 + f
            a = rng.normal(size=(d, d))
            model = raw_model(
                combos=[1], means=[rng.normal(size=d)],
                covs=[a @ a.T + np.eye(d)], priors=[1.0],
                tasks=TaskSet(["a"]), embodiment=embodiment,
            )
            model.n_apertures = f
            return model

        human = structured("human", 5)
        robot = structured("two-finger", 2)
        # only robot aperture 0 has a declared human counterpart
        w = weights_between(human, robot, 1, aperture_pairs=[(0, 0)])
        assert np.isinf(w.lam[7])
        assert w.clamped_lambda[7] == 1e3
        assert np.all(np.isfinite(w.lam[:7]))

    def test_unequal_layouts_need_declared_map(self):
        a = raw_model(combos=[1], means=[[0.0]], covs=[[[1.0]]],
                      priors=[1.0], tasks=TaskSet(["a"]), embodiment="a")
        b = raw_model(combos=[1], means=[[0.0, 0.0]], covs=[np.eye(2)],
                      priors=[1.0], tasks=TaskSet(["a"]), embodiment="b")
        with pytest.raises(LayoutError):
            feature_alignment(a, b)


class TestKlTable:
    def test_identical_models_zero_matrix(self, two_class_1d):
        model, _ = two_class_1d
        clone = raw_model(
            combos=model.combinations,
            means=[c.mean for c in model.classes],
            covs=[c.covariance for c in model.classes],
            priors=[c.prior for c in model.classes],
            tasks=model.tasks, embodiment="clone",
        )
        ids, table = kl_table([model, clone], 1)
        np.testing.assert_allclose(table, 0.0, atol=1e-12)

    def test_zero_diagonal_exact(self, nested_models):
        ids, table = kl_table(list(nested_models), 1)
        assert np.all(np.diag(table) == 0.0)

    def test_nested_pair_asymmetry(self, nested_models):
        narrow, _, wide = nested_models
        ids, table = kl_table([narrow, wide], 1)
        i, j = ids.index("narrow"), ids.index("wide")
        # the simple model reads cheaply from the rich model, not vice versa
        assert table[i, j] < table[j, i]
        assert table[i, j] > 0.0

    def test_entries_match_elementwise_calls(self, nested_models):
        models = list(nested_models)
        ids, table = kl_table(models, 1)
        for i, mi in enumerate(models):
            for j, mj in enumerate(models):
                if i == j:
                    continue
                expected = kl_hand(
                    (mj.classes[0].mean, mj.classes[0].covariance),
                    (mi.classes[0].mean, mi.classes[0].covariance),
                )
                assert table[i, j] == pytest.approx(expected, abs=1e-12)

    def test_three_models_shape(self, nested_models):
        ids, table = kl_table(list(nested_models), 1)
        assert table.shape == (3, 3)
        assert len(ids) == 3

    def test_needs_two_models(self, nested_models):
        with pytest.raises(ValueError):
            kl_table([nested_models[0]], 1)

    def test_mismatched_layouts_error_without_map(self, nested_models):
        narrow, _, _ = nested_models
        odd = raw_model(combos=[1], means=[[0.0, 0.0, 0.0]],
                        covs=[np.eye(3)], priors=[1.0],
                        tasks=TaskSet(["a"]), embodiment="odd")
        with pytest.raises(LayoutError):
            kl_table([narrow, odd], 1)

    def test_csv_and_json_output(self, tmp_path, nested_models):
        ids, table = kl_table(list(nested_models), 1)
        csv_path = tmp_path / "kl.csv"
        json_path = tmp_path / "kl.json"
        write_kl_csv(csv_path, ids, table)
        write_kl_json(json_path, ids, table, combination=1, task_names=["a"])
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [""] + ids
        assert [r[0] for r in rows[1:]] == ids
        for i, row in enumerate(rows[1:]):
            np.testing.assert_allclose(
                [float(v) for v in row[1:]], table[i], atol=0.0
            )
        doc = json.loads(json_path.read_text())
        assert doc["ids"] == ids
        np.testing.assert_allclose(np.array(doc["matrix"]), table, atol=0.0)
