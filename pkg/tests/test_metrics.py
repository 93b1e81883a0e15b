import numpy as np
import pytest

from core.errors import ConfigurationError, DataError, UndefinedMetricError
from core.metrics import (
    BASE_COLUMNS,
    ConfusionMatrix,
    MiouCurve,
    coding_gain,
    compression_ratio,
    confusion_update,
    curves_from_results,
    iou_per_class,
    k_for_ratio,
    miou,
    read_results,
    result_row,
    write_results,
)


def brute_force_iou(pred, gt, n_cls):
    out = []
    valid = gt != 255
    for c in range(n_cls):
        p = (pred == c) & valid
        g = (gt == c) & valid
        union = np.sum(p | g)
        out.append(np.sum(p & g) / union if union else np.nan)
    return np.array(out)


class TestConfusion:
    def test_single_class(self):
        cm = confusion_update(ConfusionMatrix(2), np.zeros(100, int), np.zeros(100, int))
        assert cm.counts[0, 0] == 100 and cm.total == 100

    def test_all_ignore(self):
        cm = ConfusionMatrix(3).update(np.zeros((4, 4), int), np.full((4, 4), 255))
        assert cm.total == 0

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            ConfusionMatrix(2).update(np.zeros(3, int), np.zeros(4, int))

    def test_out_of_range_class(self):
        with pytest.raises(DataError):
            ConfusionMatrix(2).update(np.array([2]), np.array([0]))

    def test_merge_is_sum(self):
        rng = np.random.default_rng(0)
        preds = [rng.integers(0, 4, (8, 8)) for _ in range(3)]
        gts = [rng.integers(0, 4, (8, 8)) for _ in range(3)]
        whole = ConfusionMatrix(4).update(np.concatenate(preds), np.concatenate(gts))
        merged = ConfusionMatrix(4)
        for p, g in zip(preds, gts):
            merged = merged.merge(ConfusionMatrix(4).update(p, g))
        assert np.array_equal(whole.counts, merged.counts)

    def test_merge_rejects_other_class_count(self):
        with pytest.raises(DataError):
            ConfusionMatrix(2).merge(ConfusionMatrix(3))


class TestIoU:
    def test_two_by_two(self):
        cm = ConfusionMatrix(2).update(np.array([[0, 0], [1, 1]]), np.array([[0, 1], [1, 1]]))
        iou = iou_per_class(cm)
        assert iou[0] == pytest.approx(0.5)
        assert iou[1] == pytest.approx(2 / 3)
        assert miou(cm) == pytest.approx(0.5833, abs=1e-4)

    def test_perfect(self):
        labels = np.array([[0, 1], [2, 2]])
        cm = ConfusionMatrix(4).update(labels, labels)
        iou = iou_per_class(cm)
        assert np.all(iou[:3] == 1.0)
        assert np.isnan(iou[3])
        assert miou(cm) == 1.0

    def test_disjoint(self):
        cm = ConfusionMatrix(2).update(np.ones(4, int), np.zeros(4, int))
        assert miou(cm, [0]) == 0.0

    def test_all_undefined(self):
        with pytest.raises(UndefinedMetricError):
            miou(ConfusionMatrix(3))

    def test_restricted_classes(self):
        cm = ConfusionMatrix(2).update(np.array([[0, 0], [1, 1]]), np.array([[0, 1], [1, 1]]))
        assert miou(cm, [1]) == pytest.approx(2 / 3)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            pred = rng.integers(0, 5, (16, 16))
            gt = rng.integers(0, 5, (16, 16))
            gt[rng.random((16, 16)) < 0.1] = 255
            cm = ConfusionMatrix(5).update(pred, gt)
            np.testing.assert_array_equal(iou_per_class(cm), brute_force_iou(pred, gt, 5))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        pred = rng.integers(0, 4, (16, 16))
        gt = rng.integers(0, 4, (16, 16))
        perm = np.array([2, 0, 3, 1])
        a = ConfusionMatrix(4).update(pred, gt)
        b = ConfusionMatrix(4).update(perm[pred], perm[gt])
        np.testing.assert_allclose(iou_per_class(b)[perm], iou_per_class(a))
        assert miou(a) == pytest.approx(miou(b))


class TestCompressionRatio:
    @pytest.mark.parametrize("K, R", [(256, 3.0), (64, 12.0), (16, 48.0), (768, 1.0)])
    def test_standard_k_values(self, K, R):
        assert compression_ratio(1024, 2048, K) == R
        assert k_for_ratio(R) == K

    def test_independent_of_size(self):
        assert compression_ratio(64, 64, 32) == compression_ratio(512, 1024, 32) == 24.0

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            compression_ratio(64, 64, 0)
        with pytest.raises(ConfigurationError):
            compression_ratio(60, 64, 8)
        with pytest.raises(ConfigurationError):
            k_for_ratio(5.0)


class TestCodingGain:
    def _curve(self, shift=0.0, scheme="a"):
        snr = [1.0, 4.0, 7.0, 10.0, 13.0, 16.0, 19.0]
        return MiouCurve(scheme=scheme, snr_db=[s + shift for s in snr],
                         miou=[0.1, 0.3, 0.5, 0.6, 0.65, 0.68, 0.7])

    def test_identical(self):
        assert coding_gain(self._curve(), self._curve(), 0.6) == 0.0

    def test_shifted(self):
        a = self._curve(0.0)
        b = self._curve(6.0, "b")
        assert coding_gain(a, b, 0.6) == pytest.approx(6.0)
        assert coding_gain(b, a, 0.6) == pytest.approx(-6.0)

    def test_interpolation(self):
        assert self._curve().snr_at(0.55) == pytest.approx(8.5)

    def test_target_not_reached_names_curve(self):
        with pytest.raises(UndefinedMetricError, match="slow"):
            coding_gain(self._curve(), self._curve(scheme="slow"), 0.9)

    def test_snr_must_increase(self):
        with pytest.raises(ValueError):
            MiouCurve(scheme="x", snr_db=[1.0, 1.0], miou=[0.1, 0.2])


class TestResultsCsv:
    def test_schema_and_round_trip(self, tmp_path):
        names = ["background", "car"]
        cm = ConfusionMatrix(2).update(np.array([[0, 0], [1, 1]]), np.array([[0, 1], [1, 1]]))
        rows = [result_row("vis-semcom", 50.0, 24.0, snr, cm, names) for snr in (1.0, 4.0)]
        path = write_results(rows, tmp_path / "results.csv", names)
        df = read_results(path)
        assert list(df.columns) == BASE_COLUMNS + ["iou_background", "iou_car"]
        assert len(df) == 2
        assert df["miou"].iloc[0] == pytest.approx(0.583333, abs=1e-6)
        curves = curves_from_results(df)
        assert len(curves) == 1 and curves[0].snr_db == [1.0, 4.0]

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("scheme,miou\nx,0.5\n")
        with pytest.raises(DataError):
            read_results(path)
