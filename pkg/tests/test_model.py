"""Model artifact: exact round-trips, versioning, validation."""

import json

import numpy as np
import pytest

from adclust.data import NormalizationStats, TimeSeriesDataset
from adclust.embed import EmbedderConfig
from adclust.errors import ConfigError
from adclust.model import ModelState, load_model, save_model
from adclust.score import score_single


def make_model(seed=0):
    rng = np.random.default_rng(seed)
    config = EmbedderConfig(kind="dilated_rnn", input_dim=2, hidden_dim=4,
                            layers=2, dilations=(1, 2))
    params = []
    for i in range(2):
        in_dim = 2 if i == 0 else 4
        layer = {}
        for name in ("wz", "wr", "wn"):
            layer[name] = rng.normal(size=(4, in_dim))
        for name in ("uz", "ur", "un"):
            layer[name] = rng.normal(size=(4, 4))
        for name in ("bz", "br", "bn"):
            layer[name] = rng.normal(size=4)
        params.append(layer)
    return ModelState(
        mode="single",
        embedder=config,
        params=params,
        centers=rng.normal(size=(1, 4)),
        nu=0.7312528515,
        radius_sq=1.25e-3,
        normalizer=NormalizationStats(mean=rng.normal(size=2),
                                      std=np.abs(rng.normal(size=2)) + 0.5),
        config_echo={"window": 20, "seed": seed},
    )


class TestArtifact:
    def test_exact_round_trip(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.json"
        save_model(path, model)
        back = load_model(path)
        assert back.mode == model.mode
        assert back.embedder == model.embedder
        assert back.nu == model.nu
        assert back.radius_sq == model.radius_sq
        np.testing.assert_array_equal(back.centers, model.centers)
        for la, lb in zip(model.params, back.params):
            for name in la:
                np.testing.assert_array_equal(la[name], lb[name])
        np.testing.assert_array_equal(back.normalizer.mean, model.normalizer.mean)

    def test_scores_identical_after_reload(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.json"
        save_model(path, model)
        back = load_model(path)
        ds = TimeSeriesDataset(values=np.random.default_rng(1).normal(size=(50, 2)))
        a = score_single(ds, model)
        b = score_single(ds, back)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_save_is_byte_deterministic(self, tmp_path):
        model = make_model()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_model(p1, model)
        save_model(p2, model)
        assert p1.read_bytes() == p2.read_bytes()

    def test_version_mismatch_rejected(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.json"
        save_model(path, model)
        payload = json.loads(path.read_text())
        payload["format_version"] = 99
        path.write_text(json.dumps(payload))
        with pytest.raises(ConfigError, match="format_version"):
            load_model(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json at all {")
        with pytest.raises(ConfigError):
            load_model(path)

    def test_mode_validation(self):
        with pytest.raises(ConfigError):
            ModelState(mode="other", embedder=EmbedderConfig(), params=[],
                       centers=np.zeros((1, 2)), nu=0.5, radius_sq=0.0)
