"""Loading, normalization, windowing, and the synthetic generator."""

import numpy as np
import pytest

from adclust.data import (SynthSpec, TimeSeriesDataset, apply_normalizer, fit_normalizer,
                          invert_normalizer, load_csv, make_windows, save_csv,
                          synth_dataset)
from adclust.errors import ConfigError


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2\n3,4\n5,6\n")
        ds = load_csv(p)
        assert ds.length == 3 and ds.dim == 2
        np.testing.assert_array_equal(ds.values, [[1, 2], [3, 4], [5, 6]])

    def test_with_labels(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2,0\n3,4,1\n5,6,0\n")
        ds = load_csv(p, has_labels=True)
        assert ds.dim == 2
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,x\n")
        with pytest.raises(ConfigError, match="non-numeric"):
            load_csv(p)

    def test_ragged_rows(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(ConfigError, match="ragged"):
            load_csv(p)

    def test_label_outside_01(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2,2\n")
        with pytest.raises(ConfigError, match="label"):
            load_csv(p, has_labels=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path):
        ds = synth_dataset(SynthSpec(length=50, dim=3, anomaly_ratio=0.1, seed=3))
        p = tmp_path / "rt.csv"
        save_csv(p, ds, with_labels=True)
        back = load_csv(p, has_labels=True)
        np.testing.assert_array_equal(back.values, ds.values)
        np.testing.assert_array_equal(back.labels, ds.labels)


class TestNormalizer:
    def test_symmetric_channel(self):
        ds = TimeSeriesDataset(values=np.array([[0.0], [2.0]]))
        stats = fit_normalizer(ds)
        assert stats.mean[0] == 1.0 and stats.std[0] == 1.0
        out = apply_normalizer(ds, stats)
        np.testing.assert_allclose(out.values[:, 0], [-1.0, 1.0])

    def test_constant_channel_floored(self):
        ds = TimeSeriesDataset(values=np.full((3, 1), 5.0))
        stats = fit_normalizer(ds)
        out = apply_normalizer(ds, stats)
        np.testing.assert_allclose(out.values, 0.0)

    def test_train_stats_on_test(self):
        train = TimeSeriesDataset(values=np.array([[0.0], [2.0]]))
        stats = fit_normalizer(train)
        test = TimeSeriesDataset(values=np.array([[3.0]]))
        out = apply_normalizer(test, stats)
        assert out.values[0, 0] == pytest.approx(2.0)

    def test_self_normalization_is_standard(self):
        rng = np.random.default_rng(0)
        ds = TimeSeriesDataset(values=rng.normal(3.0, 2.5, size=(500, 4)))
        stats = fit_normalizer(ds)
        out = apply_normalizer(ds, stats)
        assert np.all(np.abs(out.values.mean(axis=0)) < 1e-9)
        np.testing.assert_allclose(out.values.std(axis=0), 1.0, atol=1e-9)

    def test_round_trip_inversion(self):
        rng = np.random.default_rng(1)
        ds = TimeSeriesDataset(values=rng.normal(size=(100, 2)) * 7 + 2)
        stats = fit_normalizer(ds)
        back = invert_normalizer(apply_normalizer(ds, stats), stats)
        assert np.all(np.abs(back.values - ds.values)
                      <= 1e-9 * np.maximum(np.abs(ds.values), 1.0))

    def test_too_short(self):
        ds = TimeSeriesDataset(values=np.array([[1.0]]))
        with pytest.raises(ConfigError):
            fit_normalizer(ds)


class TestWindows:
    def test_counting_formula(self):
        ds = TimeSeriesDataset(values=np.zeros((250, 1)))
        ws = make_windows(ds, 100, 100)
        assert [w.start for w in ws] == [0, 100]

    def test_exact_fit(self):
        ds = TimeSeriesDataset(values=np.zeros((100, 1)))
        assert len(make_windows(ds, 100, 1)) == 1

    def test_enumerated_starts(self):
        ds = TimeSeriesDataset(values=np.zeros((5, 1)))
        ws = make_windows(ds, 2, 1)
        assert [w.start for w in ws] == [0, 1, 2, 3]

    def test_window_too_large(self):
        ds = TimeSeriesDataset(values=np.zeros((5, 1)))
        with pytest.raises(ConfigError):
            make_windows(ds, 6, 1)

    @pytest.mark.parametrize("win,stride", [(3, 3), (3, 5), (4, 2)])
    def test_cover_and_overlap(self, win, stride):
        ds = TimeSeriesDataset(values=np.zeros((20, 1)))
        ws = make_windows(ds, win, stride)
        assert len(ws) == (20 - win) // stride + 1
        covered = set()
        overlapped = False
        for w in ws:
            span = set(range(w.start, w.start + w.length))
            overlapped = overlapped or bool(covered & span)
            covered |= span
        assert max(covered) < 20
        assert overlapped == (stride < win)


class TestSynth:
    def test_deterministic(self):
        spec = SynthSpec(length=300, dim=2, anomaly_ratio=0.1, seed=7)
        a = synth_dataset(spec)
        b = synth_dataset(spec)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_label_budget(self):
        ds = synth_dataset(SynthSpec(length=1000, dim=1, anomaly_ratio=0.1, seed=1))
        assert 80 <= ds.labels.sum() <= 120

    def test_injected_points_stand_out(self):
        spec = SynthSpec(length=500, dim=1, anomaly_ratio=0.1, seed=5, noise=0.0)
        ds = synth_dataset(spec)
        clean = synth_dataset(SynthSpec(length=500, dim=1, anomaly_ratio=0.0,
                                        seed=5, noise=0.0))
        delta = np.abs(ds.values - clean.values)[:, 0]
        anom = ds.labels == 1
        assert np.all(delta[anom] >= 3.0 * spec.amplitude)
        # labels and injected segments coincide exactly
        np.testing.assert_array_equal(anom, delta > 0)

    def test_ratio_validation(self):
        with pytest.raises(ConfigError):
            SynthSpec(length=100, anomaly_ratio=0.6)
        with pytest.raises(ConfigError):
            SynthSpec(length=100, anomaly_ratio=-0.1)

    def test_clean_series_has_no_positive_labels(self):
        ds = synth_dataset(SynthSpec(length=200, dim=2, anomaly_ratio=0.0, seed=2))
        assert ds.labels.sum() == 0
