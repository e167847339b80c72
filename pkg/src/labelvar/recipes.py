"""Named experiment recipes: data builders and model factories for the
sweep harness.

Recipes that reproduce image experiments run on real MNIST / CIFAR binaries
when paths are supplied and otherwise on synthetic stand-ins with the same
dimensionality, so both code paths stay exercised.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .data import (
    Dataset,
    ImageDataset,
    SyntheticConfig,
    colorize_backgrounds,
    image_to_dataset,
    inject_spurious_dim,
    load_cifar10_binary,
    load_mnist_idx,
    sample_boundary_2d,
    sample_lowvar_highvar,
    select_binary_classes,
    standardize_channels,
)
from .errors import ConfigurationError
from .models import LinearBinaryModel, MlpModel, Model

CIFAR_DIM = 3072
MNIST_SIDE = 28


@dataclass(frozen=True)
class DefC1Config:
    """Half-constant / half-uniform synthetic distribution."""

    d: int = 10
    n: int = 5000
    test_n: int = 5000
    gamma: float = 0.1
    high_range: tuple[float, float] = (1.0, 100.0)
    lowvar_noise: float = 0.0


@dataclass(frozen=True)
class Boundary2DConfig:
    n: int = 500
    test_n: int = 2000


@dataclass(frozen=True)
class SpuriousBinaryConfig:
    """Binary image task with the first feature replaced by gamma * y in train."""

    train_paths: tuple[str, ...] = ()
    test_paths: tuple[str, ...] = ()
    neg_class: int = 0
    pos_class: int = 1
    gamma: float = 0.1
    n_cap: int = 10000
    standin_d: int = CIFAR_DIM
    standin_n: int = 10000
    standin_test_n: int = 4000
    standin_signal_dims: int = 8


@dataclass(frozen=True)
class ColoredMulticlassConfig:
    """10-class grayscale digits with class-colored backgrounds, permuted at test."""

    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    # Background colors must stay much dimmer than foreground strokes, or
    # the color shortcut dominates all three regularizers. 10 classes need
    # max_intensity >= 3 (palette size is max_intensity^3).
    max_intensity: int = 3
    color_seed: int = 1234
    hidden: int = 2048
    n_cap: int = 10000
    test_cap: int = 4000
    standin_n: int = 10000
    standin_test_n: int = 4000


RecipeConfig = DefC1Config | Boundary2DConfig | SpuriousBinaryConfig | ColoredMulticlassConfig

RECIPE_DEFAULTS: dict[str, RecipeConfig] = {
    "defC1": DefC1Config(),
    "boundary2d": Boundary2DConfig(),
    "spurious_binary": SpuriousBinaryConfig(),
    "colored_multiclass": ColoredMulticlassConfig(),
}


def synthetic_cifar_standin(d: int, n: int, signal_dims: int, seed: int) -> Dataset:
    """CIFAR-shaped binary stand-in: a small block of noisy label-scaled
    signal dims (Uniform([-2y, 4y]), so each dim is individually unreliable)
    plus bounded noise everywhere else.

    Column 0 is pure noise so that the spurious injection (train only)
    carries all the class information there."""
    if signal_dims + 1 > d:
        raise ConfigurationError("signal_dims must leave room for the noise column")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n) * 2 - 1
    x = rng.uniform(-1.0, 1.0, size=(n, d))
    x[:, 1:1 + signal_dims] = rng.uniform(-2.0, 4.0, size=(n, signal_dims)) * y[:, None]
    return Dataset(features=x, labels=y, k=2, name=f"cifar_standin(d={d},n={n},seed={seed})")


_GLYPH_SIDE = 12


def _class_glyph(cls: int, k: int = 10) -> np.ndarray:
    """Deterministic 12x12 binary glyph per class.

    Glyphs occupy disjoint pixel sets (a class-specific slice of a fixed
    permutation of the cells), so each foreground pixel identifies exactly
    one class."""
    cells = np.random.default_rng(900).permutation(_GLYPH_SIDE * _GLYPH_SIDE)
    per = (_GLYPH_SIDE * _GLYPH_SIDE) // k
    glyph = np.zeros(_GLYPH_SIDE * _GLYPH_SIDE, dtype=bool)
    glyph[cells[cls * per:(cls + 1) * per]] = True
    return glyph.reshape(_GLYPH_SIDE, _GLYPH_SIDE)


def synthetic_digits_standin(n: int, seed: int, k: int = 10) -> ImageDataset:
    """MNIST-shaped grayscale stand-in: one fixed glyph per class, placed
    near the center (small jitter) with a random per-image foreground
    intensity. The wide intensity range makes the foreground a bright but
    high-variance feature per class, while remaining trivially separable."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, k, size=n)
    pixels = np.zeros((n, MNIST_SIDE * MNIST_SIDE), dtype=np.uint8)
    center = (MNIST_SIDE - _GLYPH_SIDE) // 2
    glyphs = [_class_glyph(c) for c in range(k)]
    for i in range(n):
        img = np.zeros((MNIST_SIDE, MNIST_SIDE), dtype=np.uint8)
        r = center + rng.integers(-2, 3)
        c = center + rng.integers(-2, 3)
        intensity = rng.integers(64, 256)
        patch = glyphs[labels[i]] * intensity
        img[r:r + _GLYPH_SIDE, c:c + _GLYPH_SIDE] = patch.astype(np.uint8)
        pixels[i] = img.ravel()
    return ImageDataset(pixels=pixels, labels=labels, k=k,
                        height=MNIST_SIDE, width=MNIST_SIDE, channels=1)


def _scale_pixels(ds: Dataset) -> Dataset:
    """Map raw pixel features to [0, 1] by dividing by 255.

    Plain scaling (no mean/std normalization) preserves the magnitude gap
    between bright foreground strokes and deliberately dim background
    colors; per-channel standardization would erase it."""
    from dataclasses import replace
    return replace(ds, features=ds.features / 255.0, name=f"{ds.name}+scaled")


def _subsample(ds: Dataset, cap: int, rng: np.random.Generator) -> Dataset:
    if ds.n <= cap:
        return ds
    idx = rng.choice(ds.n, size=cap, replace=False)
    from dataclasses import replace
    return replace(ds, features=ds.features[idx], labels=ds.labels[idx])


@lru_cache(maxsize=8)
def _load_cifar_binary_pair(train_paths: tuple, test_paths: tuple,
                            neg_class: int, pos_class: int) -> tuple[Dataset, Dataset]:
    train_img = load_cifar10_binary(list(train_paths))
    test_img = load_cifar10_binary(list(test_paths))
    return (
        select_binary_classes(train_img, neg_class, pos_class),
        select_binary_classes(test_img, neg_class, pos_class),
    )


@lru_cache(maxsize=4)
def _load_mnist_pair(train_images: str, train_labels: str,
                     test_images: str, test_labels: str) -> tuple[ImageDataset, ImageDataset]:
    return (
        load_mnist_idx(train_images, train_labels),
        load_mnist_idx(test_images, test_labels),
    )


@dataclass
class ExperimentData:
    train: Dataset
    test: Dataset
    model: Model


def build_experiment(experiment: str, cfg: RecipeConfig, data_seed: int,
                     init_seed: int = 0) -> ExperimentData:
    """Materialize train/test datasets and a fresh model for one sweep cell."""
    if experiment == "defC1":
        assert isinstance(cfg, DefC1Config)
        base = dict(d=cfg.d, gamma=cfg.gamma, high_range=cfg.high_range,
                    lowvar_noise=cfg.lowvar_noise)
        train = sample_lowvar_highvar(SyntheticConfig(n=cfg.n, seed=data_seed, **base))
        test = sample_lowvar_highvar(SyntheticConfig(n=cfg.test_n, seed=data_seed + 10_000_019, **base))
        return ExperimentData(train, test, LinearBinaryModel.init(cfg.d, seed=init_seed))

    if experiment == "boundary2d":
        assert isinstance(cfg, Boundary2DConfig)
        train = sample_boundary_2d(cfg.n, seed=data_seed)
        test = sample_boundary_2d(cfg.test_n, seed=data_seed + 10_000_019)
        return ExperimentData(train, test, LinearBinaryModel.init(2, seed=init_seed))

    if experiment == "spurious_binary":
        assert isinstance(cfg, SpuriousBinaryConfig)
        rng = np.random.default_rng(data_seed)
        if cfg.train_paths:
            if not cfg.test_paths:
                raise ConfigurationError("spurious_binary with real data needs test_paths")
            train, test = _load_cifar_binary_pair(
                tuple(cfg.train_paths), tuple(cfg.test_paths),
                cfg.neg_class, cfg.pos_class,
            )
            d = train.d
        else:
            train = synthetic_cifar_standin(cfg.standin_d, cfg.standin_n,
                                            cfg.standin_signal_dims, seed=data_seed)
            test = synthetic_cifar_standin(cfg.standin_d, cfg.standin_test_n,
                                           cfg.standin_signal_dims, seed=data_seed + 10_000_019)
            d = cfg.standin_d
        train = _subsample(train, cfg.n_cap, rng)
        train, test, _ = standardize_channels(train, test, channels=3)
        # Injection happens after standardization so gamma is not rescaled.
        train = inject_spurious_dim(train, cfg.gamma)
        return ExperimentData(train, test, LinearBinaryModel.init(d, seed=init_seed))

    if experiment == "colored_multiclass":
        assert isinstance(cfg, ColoredMulticlassConfig)
        rng = np.random.default_rng(data_seed)
        if cfg.train_images:
            train_img, test_img = _load_mnist_pair(
                cfg.train_images, cfg.train_labels, cfg.test_images, cfg.test_labels)
        else:
            train_img = synthetic_digits_standin(cfg.standin_n, seed=data_seed)
            test_img = synthetic_digits_standin(cfg.standin_test_n, seed=data_seed + 10_000_019)
        train_img = colorize_backgrounds(train_img, cfg.max_intensity, permute=False,
                                         seed=cfg.color_seed)
        test_img = colorize_backgrounds(test_img, cfg.max_intensity, permute=True,
                                        seed=cfg.color_seed)
        train = _scale_pixels(_subsample(image_to_dataset(train_img), cfg.n_cap, rng))
        test = _scale_pixels(_subsample(image_to_dataset(test_img), cfg.test_cap, rng))
        model = MlpModel.init(train.d, cfg.hidden, k=10, seed=init_seed)
        return ExperimentData(train, test, model)

    raise ConfigurationError(f"unknown experiment {experiment!r}")
