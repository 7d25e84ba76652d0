"""Deterministic stand-in networks for desk-scale export runs.

No pretrained weights ship with (or are downloaded by) this package. Each
backbone is a fixed feature extractor followed by a projection whose weights
are derived from the backbone name, so the same name always produces the
same tensors, bit for bit, on any machine. Real networks can be added to the
registry without touching the export pipeline.
"""

import hashlib

import numpy as np

from .errors import ConfigError

_FEATURE_DIM = 73  # 8x8 luminance grid + channel moments + gradient energies
_GRID = 8


def _gen(*parts) -> np.random.Generator:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        tag = b"i" if isinstance(p, int) else b"s"
        data = str(p).encode("utf-8")
        h.update(tag + len(data).to_bytes(4, "little") + data)
    return np.random.Generator(np.random.Philox(int.from_bytes(h.digest(), "little")))


def image_features(img: np.ndarray) -> np.ndarray:
    """Fixed 73-dim descriptor of an HxWxC uint8 image."""
    px = img.astype(np.float64)
    if px.shape[2] == 1:
        px = np.repeat(px, 3, axis=2)
    lum = px.mean(axis=2) / 255.0
    grid = np.empty((_GRID, _GRID))
    for i, rows in enumerate(np.array_split(lum, _GRID, axis=0)):
        for j, block in enumerate(np.array_split(rows, _GRID, axis=1)):
            grid[i, j] = block.mean() if block.size else 0.0
    moments = np.concatenate([px.mean(axis=(0, 1)) / 255.0, px.std(axis=(0, 1)) / 255.0])
    grad_h = np.abs(np.diff(lum, axis=1)).mean() if lum.shape[1] > 1 else 0.0
    grad_v = np.abs(np.diff(lum, axis=0)).mean() if lum.shape[0] > 1 else 0.0
    aspect = img.shape[1] / img.shape[0]
    return np.concatenate([grid.ravel(), moments, [grad_h, grad_v, aspect]])


def _parse_dim(name: str, prefix: str) -> int:
    suffix = name[len(prefix) :]
    try:
        d = int(suffix)
    except ValueError:
        raise ConfigError(f"backbone {name!r}: bad width suffix {suffix!r}") from None
    if not 4 <= d <= 1024:
        raise ConfigError(f"backbone {name!r}: width {d} outside [4, 1024]")
    return d


class ImageBackbone:
    """Feature descriptor followed by a name-seeded Gaussian projection."""

    def __init__(self, name: str):
        self.name = name
        self.dim = _parse_dim(name, "gistproj-")
        g = _gen(name, "projection", _FEATURE_DIM, self.dim)
        self._proj = g.normal(0.0, 1.0, size=(_FEATURE_DIM, self.dim)) / np.sqrt(_FEATURE_DIM)
        self._center = g.normal(0.0, 0.25, size=_FEATURE_DIM)

    def embed(self, img: np.ndarray) -> np.ndarray:
        z = (image_features(img) - self._center) @ self._proj
        return z.astype(np.float32)


class TextBackbone:
    """Bag of hashed-token vectors; one embedding per label name."""

    def __init__(self, name: str):
        self.name = name
        self.dim = _parse_dim(name, "hashbow-")

    def embed(self, text: str) -> np.ndarray:
        tokens = text.lower().split()
        if not tokens:
            raise ConfigError(f"cannot embed empty text {text!r}")
        acc = np.zeros(self.dim)
        for t in tokens:
            acc += _gen(self.name, "token", t).normal(0.0, 1.0, size=self.dim)
        return (acc / len(tokens)).astype(np.float32)


class ClassifierBackbone:
    """Image features through a name-seeded K-class linear head."""

    def __init__(self, name: str, classes: int):
        if classes < 2:
            raise ConfigError(f"classifier needs >= 2 classes, got {classes}")
        self.name = name
        self.dim = _parse_dim(name, "linprobe-")
        self.classes = classes
        self._encoder = ImageBackbone(f"gistproj-{self.dim}")
        g = _gen(name, "head", classes, self.dim)
        self._head = g.normal(0.0, 1.0, size=(self.dim, classes)) / np.sqrt(self.dim)
        self._bias = g.normal(0.0, 0.1, size=classes)

    def logits(self, img: np.ndarray) -> np.ndarray:
        z = self._encoder.embed(img).astype(np.float64)
        return (z @ self._head + self._bias).astype(np.float32)


def image_backbone(name: str) -> ImageBackbone:
    if not name.startswith("gistproj-"):
        raise ConfigError(f"unknown image backbone {name!r} (expected gistproj-<width>)")
    return ImageBackbone(name)


def text_backbone(name: str) -> TextBackbone:
    if not name.startswith("hashbow-"):
        raise ConfigError(f"unknown text backbone {name!r} (expected hashbow-<width>)")
    return TextBackbone(name)


def classifier_backbone(name: str, classes: int) -> ClassifierBackbone:
    if not name.startswith("linprobe-"):
        raise ConfigError(f"unknown classifier backbone {name!r} (expected linprobe-<width>)")
    return ClassifierBackbone(name, classes)
