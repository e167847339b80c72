"""Experiment recipes: stand-in generators and dataset/model assembly."""

import numpy as np
import pytest

from labelvar.data import write_mnist_idx
from labelvar.errors import ConfigurationError
from labelvar.models import LinearBinaryModel, MlpModel
from labelvar.recipes import (
    Boundary2DConfig,
    ColoredMulticlassConfig,
    DefC1Config,
    RECIPE_DEFAULTS,
    SpuriousBinaryConfig,
    _class_glyph,
    build_experiment,
    synthetic_cifar_standin,
    synthetic_digits_standin,
)


class TestCifarStandin:
    def test_shape_and_signal_layout(self):
        ds = synthetic_cifar_standin(d=64, n=200, signal_dims=8, seed=0)
        assert ds.d == 64 and ds.n == 200 and ds.binary
        signed = ds.features[:, 1:9] * ds.labels[:, None]
        assert signed.min() >= -2.0 and signed.max() <= 4.0
        # Column 0 carries no label information (pure noise).
        assert abs(np.corrcoef(ds.features[:, 0], ds.labels)[0, 1]) < 0.2

    def test_needs_room_for_noise_column(self):
        with pytest.raises(ConfigurationError):
            synthetic_cifar_standin(d=8, n=10, signal_dims=8, seed=0)


class TestDigitsStandin:
    def test_shape(self):
        ds = synthetic_digits_standin(30, seed=0)
        assert (ds.n, ds.height, ds.width, ds.channels, ds.k) == (30, 28, 28, 1, 10)

    def test_glyphs_are_disjoint_across_classes(self):
        masks = [_class_glyph(c).ravel() for c in range(10)]
        for a in range(10):
            for b in range(a + 1, 10):
                assert not np.any(masks[a] & masks[b])

    def test_foreground_brighter_than_any_background_color(self):
        ds = synthetic_digits_standin(20, seed=1)
        fg = ds.pixels[ds.pixels > 0]
        assert fg.min() >= 64

    def test_deterministic(self):
        a = synthetic_digits_standin(15, seed=3)
        b = synthetic_digits_standin(15, seed=3)
        assert np.array_equal(a.pixels, b.pixels)
        assert np.array_equal(a.labels, b.labels)


class TestBuildExperiment:
    def test_defc1(self):
        exp = build_experiment("defC1", DefC1Config(n=100, test_n=50), data_seed=0)
        assert isinstance(exp.model, LinearBinaryModel)
        assert exp.train.n == 100 and exp.test.n == 50

    def test_boundary2d(self):
        exp = build_experiment("boundary2d", Boundary2DConfig(n=40, test_n=20), data_seed=1)
        assert exp.train.d == 2

    def test_spurious_binary_standin(self):
        cfg = SpuriousBinaryConfig(standin_d=33, standin_n=120, standin_test_n=60)
        exp = build_experiment("spurious_binary", cfg, data_seed=0)
        # First column of train is the injected gamma * y feature.
        assert np.allclose(exp.train.features[:, 0], 0.1 * exp.train.labels)
        # Test set keeps its natural first column (no injection).
        assert not np.allclose(exp.test.features[:, 0], 0.1 * exp.test.labels)

    def test_colored_multiclass_standin(self):
        cfg = ColoredMulticlassConfig(hidden=8, standin_n=60, standin_test_n=30)
        exp = build_experiment("colored_multiclass", cfg, data_seed=0)
        assert isinstance(exp.model, MlpModel)
        assert exp.model.k == 10
        assert exp.train.features.max() <= 1.0  # pixels scaled by 255

    def test_colored_idx_path_matches_standin(self, tmp_path):
        """Writing the stand-in to IDX files and loading them back must feed
        the pipeline byte-identical data."""
        data_seed = 123
        base = ColoredMulticlassConfig(hidden=4, standin_n=40, standin_test_n=20)
        write_mnist_idx(synthetic_digits_standin(40, seed=data_seed),
                        tmp_path / "tri.idx", tmp_path / "trl.idx")
        write_mnist_idx(synthetic_digits_standin(20, seed=data_seed + 10_000_019),
                        tmp_path / "tei.idx", tmp_path / "tel.idx")
        from dataclasses import replace
        file_cfg = replace(base,
                           train_images=str(tmp_path / "tri.idx"),
                           train_labels=str(tmp_path / "trl.idx"),
                           test_images=str(tmp_path / "tei.idx"),
                           test_labels=str(tmp_path / "tel.idx"))
        direct = build_experiment("colored_multiclass", base, data_seed, init_seed=0)
        via_files = build_experiment("colored_multiclass", file_cfg, data_seed, init_seed=0)
        assert np.array_equal(direct.train.features, via_files.train.features)
        assert np.array_equal(direct.test.features, via_files.test.features)
        assert np.array_equal(direct.train.labels, via_files.train.labels)

    def test_unknown_experiment(self):
        with pytest.raises(ConfigurationError):
            build_experiment("imagenet", DefC1Config(), data_seed=0)

    def test_defaults_table_covers_experiments(self):
        for name, cfg in RECIPE_DEFAULTS.items():
            assert name in ("defC1", "boundary2d", "spurious_binary",
                            "colored_multiclass")
