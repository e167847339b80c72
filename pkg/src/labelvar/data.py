"""Synthetic distributions, adversarial transforms, and binary dataset loaders.

Conventions used throughout:

- Feature matrices are float64 with shape (n, d); labels are int64.
- Binary datasets carry labels in {-1, +1} and k == 2; multiclass datasets
  carry labels in [0, k).
- ``low_var_dims`` holds 0-based column indices of the designated
  low-variance feature set.
- Multi-channel image pixels are stored planar (all of channel 0, then
  channel 1, ...), matching the CIFAR-10 binary layout.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DataFormatError

MNIST_IMAGE_MAGIC = 2051
MNIST_LABEL_MAGIC = 2049
CIFAR_RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixel bytes


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with integer labels and provenance metadata."""

    features: np.ndarray
    labels: np.ndarray
    k: int
    low_var_dims: frozenset[int] = frozenset()
    name: str = ""

    def __post_init__(self):
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "low_var_dims", frozenset(int(i) for i in self.low_var_dims))
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ConfigurationError(f"features must be a non-empty 2-D matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ConfigurationError("labels length must match feature rows")
        if self.k < 2:
            raise ConfigurationError("k must be at least 2")
        if self.k == 2:
            if not np.all(np.isin(labels, (-1, 1))):
                raise ConfigurationError("binary datasets (k=2) require labels in {-1, +1}")
        else:
            if labels.min() < 0 or labels.max() >= self.k:
                raise ConfigurationError(f"labels must lie in [0, {self.k})")
        if any(i < 0 or i >= self.d for i in self.low_var_dims):
            raise ConfigurationError("low_var_dims out of range")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def binary(self) -> bool:
        return self.k == 2

    @property
    def high_var_dims(self) -> frozenset[int]:
        return frozenset(range(self.d)) - self.low_var_dims


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the half-constant / half-uniform synthetic distribution.

    The first floor(d/2) dimensions equal ``gamma * y`` exactly (optionally
    blurred by centered uniform noise of width ``lowvar_noise``); the rest
    are i.i.d. uniform on the label-scaled ``high_range`` interval.
    """

    d: int
    n: int
    gamma: float
    high_range: tuple[float, float] = (1.0, 100.0)
    seed: int = 0
    lowvar_noise: float = 0.0

    def validate(self):
        lo, hi = self.high_range
        if self.d < 2:
            raise ConfigurationError(f"d must be >= 2, got {self.d}")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be > 0, got {self.gamma}")
        if not (0 < lo < hi):
            raise ConfigurationError(f"high_range must satisfy 0 < lo < hi, got {self.high_range}")
        if self.lowvar_noise < 0:
            raise ConfigurationError("lowvar_noise must be >= 0")


@dataclass(frozen=True)
class ImageDataset:
    """Raw uint8 image data with integer labels."""

    pixels: np.ndarray
    labels: np.ndarray
    k: int
    height: int
    width: int
    channels: int

    def __post_init__(self):
        pixels = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.uint8))
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "labels", labels)
        expected = self.height * self.width * self.channels
        if pixels.ndim != 2 or pixels.shape[1] != expected:
            raise ConfigurationError(
                f"pixel buffer has {pixels.shape} but expected row length {expected}"
            )
        if labels.shape != (pixels.shape[0],):
            raise ConfigurationError("labels length must match pixel rows")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ConfigurationError(f"labels must lie in [0, {self.k})")

    @property
    def n(self) -> int:
        return self.pixels.shape[0]


def sample_lowvar_highvar(cfg: SyntheticConfig) -> Dataset:
    """Draw n points from the half-constant / half-uniform distribution."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.high_range
    n_low = cfg.d // 2
    y = rng.integers(0, 2, size=cfg.n) * 2 - 1
    x = np.empty((cfg.n, cfg.d), dtype=np.float64)
    x[:, :n_low] = cfg.gamma * y[:, None]
    if cfg.lowvar_noise > 0:
        half = cfg.lowvar_noise / 2.0
        x[:, :n_low] += rng.uniform(-half, half, size=(cfg.n, n_low))
    # Uniform([lo*y, hi*y]) with endpoints normalized for y = -1.
    x[:, n_low:] = rng.uniform(lo, hi, size=(cfg.n, cfg.d - n_low)) * y[:, None]
    return Dataset(
        features=x,
        labels=y,
        k=2,
        low_var_dims=frozenset(range(n_low)),
        name=f"lowvar_highvar(d={cfg.d},gamma={cfg.gamma},n={cfg.n},seed={cfg.seed})",
    )


def sample_boundary_2d(n: int, seed: int = 0) -> Dataset:
    """2-D distribution: x1 ~ Uniform([y, 10y]), x2 fixed at 0.1*y."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n) * 2 - 1
    x = np.empty((n, 2), dtype=np.float64)
    x[:, 0] = rng.uniform(1.0, 10.0, size=n) * y
    x[:, 1] = 0.1 * y
    return Dataset(
        features=x, labels=y, k=2, low_var_dims=frozenset({1}),
        name=f"boundary2d(n={n},seed={seed})",
    )


def inject_spurious_dim(ds: Dataset, gamma: float) -> Dataset:
    """Replace the first feature column with gamma * y; leave the rest untouched."""
    if not ds.binary:
        raise ConfigurationError("inject_spurious_dim requires a binary dataset")
    features = ds.features.copy()
    features[:, 0] = gamma * ds.labels
    return replace(
        ds,
        features=features,
        low_var_dims=frozenset({0}),
        name=f"{ds.name}+spurious(gamma={gamma})",
    )


def _make_palette(k: int, max_intensity: int, seed: int) -> np.ndarray:
    """k distinct RGB triples with every channel in [1, max_intensity]."""
    if max_intensity < 1 or max_intensity > 255:
        raise ConfigurationError("max_intensity must be in [1, 255]")
    if k > max_intensity ** 3:
        raise ConfigurationError(
            f"cannot build {k} distinct colors with channels in [1, {max_intensity}]"
        )
    rng = np.random.default_rng(seed)
    seen: set[tuple[int, int, int]] = set()
    palette = []
    while len(palette) < k:
        color = tuple(int(c) for c in rng.integers(1, max_intensity + 1, size=3))
        if color not in seen:
            seen.add(color)
            palette.append(color)
    return np.array(palette, dtype=np.uint8)


def colorize_backgrounds(
    ds: ImageDataset, max_intensity: int, permute: bool, seed: int = 0
) -> ImageDataset:
    """Turn a grayscale dataset into RGB with class-colored backgrounds.

    Foreground pixels (grayscale > 0) replicate their value across all three
    channels; background pixels (exactly 0) take a per-class color. With
    ``permute`` the class-to-color assignment is composed with a cyclic shift
    by one, so no class keeps the color it had with ``permute=False``.
    """
    if ds.channels != 1:
        raise ConfigurationError("colorize_backgrounds requires grayscale input (channels == 1)")
    palette = _make_palette(ds.k, max_intensity, seed)
    assignment = np.arange(ds.k)
    if permute:
        assignment = (assignment + 1) % ds.k
    gray = ds.pixels  # (n, H*W)
    foreground = gray > 0
    colors = palette[assignment[ds.labels]]  # (n, 3)
    planes = []
    for c in range(3):
        plane = np.where(foreground, gray, colors[:, c, None])
        planes.append(plane)
    rgb = np.concatenate(planes, axis=1).astype(np.uint8)
    return ImageDataset(
        pixels=rgb, labels=ds.labels, k=ds.k,
        height=ds.height, width=ds.width, channels=3,
    )


def _read_be_u32(buf: bytes, offset: int, path: str, what: str) -> int:
    if offset + 4 > len(buf):
        raise DataFormatError(f"{path}: truncated while reading {what}")
    return struct.unpack_from(">I", buf, offset)[0]


def load_mnist_idx(images_path, labels_path) -> ImageDataset:
    """Parse the big-endian IDX image/label file pair."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    img_buf = images_path.read_bytes()
    magic = _read_be_u32(img_buf, 0, str(images_path), "magic")
    if magic != MNIST_IMAGE_MAGIC:
        raise DataFormatError(f"{images_path}: bad magic {magic} (expected {MNIST_IMAGE_MAGIC})")
    n = _read_be_u32(img_buf, 4, str(images_path), "image count")
    height = _read_be_u32(img_buf, 8, str(images_path), "row count")
    width = _read_be_u32(img_buf, 12, str(images_path), "column count")
    expected = 16 + n * height * width
    if len(img_buf) < expected:
        raise DataFormatError(
            f"{images_path}: truncated pixel data ({len(img_buf)} bytes, expected {expected})"
        )
    pixels = np.frombuffer(img_buf, dtype=np.uint8, count=n * height * width, offset=16)
    pixels = pixels.reshape(n, height * width)

    lbl_buf = labels_path.read_bytes()
    magic = _read_be_u32(lbl_buf, 0, str(labels_path), "magic")
    if magic != MNIST_LABEL_MAGIC:
        raise DataFormatError(f"{labels_path}: bad magic {magic} (expected {MNIST_LABEL_MAGIC})")
    n_labels = _read_be_u32(lbl_buf, 4, str(labels_path), "label count")
    if len(lbl_buf) < 8 + n_labels:
        raise DataFormatError(
            f"{labels_path}: truncated label data ({len(lbl_buf)} bytes, expected {8 + n_labels})"
        )
    if n_labels != n:
        raise DataFormatError(
            f"image count {n} does not match label count {n_labels}"
        )
    labels = np.frombuffer(lbl_buf, dtype=np.uint8, count=n_labels, offset=8).astype(np.int64)
    k = 10 if labels.size == 0 else max(10, int(labels.max()) + 1)
    return ImageDataset(pixels=pixels, labels=labels, k=k, height=height, width=width, channels=1)


def write_mnist_idx(ds: ImageDataset, images_path, labels_path):
    """Write a grayscale dataset back out in IDX format."""
    if ds.channels != 1:
        raise ConfigurationError("IDX export supports grayscale only")
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", MNIST_IMAGE_MAGIC, ds.n, ds.height, ds.width))
        f.write(ds.pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", MNIST_LABEL_MAGIC, ds.n))
        f.write(ds.labels.astype(np.uint8).tobytes())


def load_cifar10_binary(paths: Sequence) -> ImageDataset:
    """Concatenate CIFAR-10 binary batch files (3073-byte records)."""
    all_pixels = []
    all_labels = []
    for path in paths:
        buf = Path(path).read_bytes()
        if len(buf) % CIFAR_RECORD_BYTES != 0:
            raise DataFormatError(
                f"{path}: size {len(buf)} is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        n = len(buf) // CIFAR_RECORD_BYTES
        records = np.frombuffer(buf, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
        all_labels.append(records[:, 0].astype(np.int64))
        all_pixels.append(records[:, 1:])
    if not all_pixels:
        raise ConfigurationError("load_cifar10_binary needs at least one path")
    pixels = np.concatenate(all_pixels, axis=0)
    labels = np.concatenate(all_labels, axis=0)
    if labels.size and labels.max() >= 10:
        raise DataFormatError(f"label byte {labels.max()} out of range for CIFAR-10")
    return ImageDataset(pixels=pixels, labels=labels, k=10, height=32, width=32, channels=3)


def select_binary_classes(ds: ImageDataset, neg_class: int, pos_class: int) -> Dataset:
    """Keep two classes, relabel to -1/+1, and cast pixels to float64."""
    if neg_class == pos_class:
        raise ConfigurationError("neg_class and pos_class must differ")
    for cls in (neg_class, pos_class):
        if not np.any(ds.labels == cls):
            raise ConfigurationError(f"class {cls} not present in dataset")
    mask = (ds.labels == neg_class) | (ds.labels == pos_class)
    features = ds.pixels[mask].astype(np.float64)
    labels = np.where(ds.labels[mask] == pos_class, 1, -1)
    return Dataset(
        features=features, labels=labels, k=2,
        name=f"binary({neg_class}->-1,{pos_class}->+1)",
    )


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel train statistics used for standardization."""

    mean: np.ndarray
    std: np.ndarray
    constant_channels: tuple[int, ...] = ()


def standardize_channels(
    train: Dataset, test: Dataset, channels: int
) -> tuple[Dataset, Dataset, ChannelStats]:
    """Standardize both sets to train per-channel mean 0 / std 1.

    Columns are interpreted planar: channel c owns columns
    [c*d/channels, (c+1)*d/channels). Zero-variance channels keep divisor 1
    and are flagged in the returned stats.
    """
    if train.d != test.d:
        raise ConfigurationError("train and test dimensionality must agree")
    if train.d % channels != 0:
        raise ConfigurationError(f"d={train.d} not divisible by channels={channels}")
    per = train.d // channels
    mean = np.empty(channels)
    std = np.empty(channels)
    constant = []
    for c in range(channels):
        block = train.features[:, c * per:(c + 1) * per]
        mean[c] = block.mean()
        s = block.std()
        if s == 0.0:
            constant.append(c)
            s = 1.0
        std[c] = s

    def transform(ds: Dataset, tag: str) -> Dataset:
        features = ds.features.copy()
        for c in range(channels):
            sl = slice(c * per, (c + 1) * per)
            features[:, sl] = (features[:, sl] - mean[c]) / std[c]
        return replace(ds, features=features, name=f"{ds.name}+standardized[{tag}]")

    stats = ChannelStats(mean=mean, std=std, constant_channels=tuple(constant))
    return transform(train, "train"), transform(test, "test"), stats


def image_to_dataset(ds: ImageDataset) -> Dataset:
    """Flatten an image dataset into a float feature matrix (planar columns)."""
    return Dataset(
        features=ds.pixels.astype(np.float64),
        labels=ds.labels,
        k=ds.k,
        name=f"image(h={ds.height},w={ds.width},c={ds.channels})",
    )


def export_csv(ds: Dataset, path):
    """Write a dataset as CSV: d feature columns plus a label column."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"x{i}" for i in range(ds.d)] + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([f"{v:.17g}" for v in row] + [str(int(label))])


def import_csv(path, k: int = 2, low_var_dims: frozenset[int] = frozenset()) -> Dataset:
    """Read a dataset written by :func:`export_csv`."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty CSV")
        if not header or header[-1] != "label":
            raise DataFormatError(f"{path}: expected final column 'label'")
        d = len(header) - 1
        features = []
        labels = []
        for i, row in enumerate(reader):
            if len(row) != d + 1:
                raise DataFormatError(f"{path}: row {i} has {len(row)} fields, expected {d + 1}")
            features.append([float(v) for v in row[:d]])
            labels.append(int(row[d]))
    if not features:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(
        features=np.array(features), labels=np.array(labels), k=k,
        low_var_dims=low_var_dims, name=str(path),
    )
