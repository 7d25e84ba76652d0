"""Image corruption operators and corrupted/clean mixture construction.

Six corruption kinds, severities 1..5, each with a fixed parameter table
chosen so perceptual strength rises with severity. All randomness comes
from counter-based streams keyed by (seed, image_id), so outputs are
byte-identical across runs and independent of processing order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, IoError, MissingImage, NonCleanInput, UnknownKind
from .images import ImageBuffer, decode_pnm, encode_pnm
from .rng import keyed_stream, stream_key
from .tensorio import CLEAN, DatasetManifest, ManifestEntry

__all__ = [
    "KIND_PARAMS",
    "KINDS",
    "CorruptionSpec",
    "MixturePolicy",
    "apply_corruption",
    "build_mixture",
    "corrupt_dataset",
    "corrupted_count",
    "resolve_image_path",
]

# severity-indexed parameter tables (index 0 -> severity 1)
KIND_PARAMS: dict[str, tuple[float, ...]] = {
    "gaussian_noise": (8.0, 13.0, 18.0, 26.0, 38.0),  # sigma, 8-bit units
    "shot_noise": (60.0, 25.0, 12.0, 5.0, 3.0),  # photons at full scale
    "gaussian_blur": (1.0, 2.0, 3.0, 4.0, 6.0),  # radius, px
    "contrast": (0.75, 0.5, 0.4, 0.3, 0.15),  # scale factor about the mean
    "brightness": (25.0, 45.0, 65.0, 85.0, 110.0),  # additive offset
    "pixelate": (2.0, 3.0, 4.0, 6.0, 8.0),  # block size, px
}
KINDS: tuple[str, ...] = tuple(sorted(KIND_PARAMS))


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int
    seed: int

    def __post_init__(self):
        if self.kind not in KIND_PARAMS:
            raise UnknownKind(f"unknown corruption kind {self.kind!r}")
        if not isinstance(self.severity, int) or not 1 <= self.severity <= 5:
            raise InputError(f"severity must be in 1..5, got {self.severity!r}")

    @property
    def param(self) -> float:
        return KIND_PARAMS[self.kind][self.severity - 1]


def _quantize(arr: np.ndarray) -> np.ndarray:
    # clamp to [0, 255] then round half away from zero (values are >= 0 here)
    return np.floor(np.clip(arr, 0.0, 255.0) + 0.5).astype(np.uint8)


def _blur_1d(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    half = len(kernel) // 2
    pads = [(0, 0)] * arr.ndim
    pads[axis] = (half, half)
    padded = np.pad(arr, pads, mode="edge")
    out = np.zeros_like(arr)
    view = np.moveaxis(padded, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    n = dst.shape[0]
    for i, k in enumerate(kernel):
        dst += k * view[i : i + n]
    return out


def apply_corruption(img: ImageBuffer, spec: CorruptionSpec) -> ImageBuffer:
    """Return a corrupted copy; dimensions and channel count are preserved."""
    rng = keyed_stream(spec.seed, "corrupt", spec.kind, spec.severity)
    arr = img.data.astype(np.float64)
    p = spec.param
    if spec.kind == "gaussian_noise":
        arr = arr + rng.normal(0.0, p, size=arr.shape)
    elif spec.kind == "shot_noise":
        arr = rng.poisson(arr / 255.0 * p).astype(np.float64) * (255.0 / p)
    elif spec.kind == "gaussian_blur":
        half = int(math.ceil(3.0 * p))
        t = np.arange(-half, half + 1, dtype=np.float64)
        kernel = np.exp(-0.5 * (t / p) ** 2)
        kernel /= kernel.sum()
        arr = _blur_1d(_blur_1d(arr, kernel, axis=0), kernel, axis=1)
    elif spec.kind == "contrast":
        mean = arr.mean()
        arr = (arr - mean) * p + mean
    elif spec.kind == "brightness":
        arr = arr + p
    elif spec.kind == "pixelate":
        b = int(min(p, img.width, img.height))
        for r0 in range(0, img.height, b):
            for c0 in range(0, img.width, b):
                block = arr[r0 : r0 + b, c0 : c0 + b]
                arr[r0 : r0 + b, c0 : c0 + b] = block.mean(axis=(0, 1))
    else:  # pragma: no cover - guarded by CorruptionSpec
        raise UnknownKind(spec.kind)
    return ImageBuffer(_quantize(arr))


@dataclass(frozen=True)
class MixturePolicy:
    """Which kinds/severities to draw from and what fraction to corrupt."""

    corruptions: tuple[str, ...]
    severities: tuple[int, ...]
    p_c: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "corruptions", tuple(self.corruptions))
        object.__setattr__(self, "severities", tuple(int(s) for s in self.severities))
        for k in self.corruptions:
            if k not in KIND_PARAMS:
                raise UnknownKind(f"unknown corruption kind {k!r}")
        if len(set(self.corruptions)) != len(self.corruptions):
            raise InputError("duplicate corruption kinds")
        for s in self.severities:
            if not 1 <= s <= 5:
                raise InputError(f"severity must be in 1..5, got {s}")
        if len(set(self.severities)) != len(self.severities):
            raise InputError("duplicate severities")
        if not 0.0 <= self.p_c <= 1.0:
            raise InputError(f"p_c must be in [0, 1], got {self.p_c}")
        if self.p_c > 0.0 and (not self.corruptions or not self.severities):
            raise InputError("p_c > 0 requires at least one corruption kind and severity")


def corrupted_count(n: int, p_c: float) -> int:
    """Number of corrupted entries: p_c * n rounded half up."""
    return int(math.floor(p_c * n + 0.5))


def build_mixture(manifest: DatasetManifest, policy: MixturePolicy) -> DatasetManifest:
    """Assign corruptions to an all-clean manifest.

    Exactly ``corrupted_count(n, p_c)`` entries are corrupted: each image
    draws a selection score from its own (seed, image_id)-keyed stream and
    the lowest scores are corrupted, so membership is order-independent.
    Kind and severity are drawn independently and uniformly from the
    policy's (sorted) lists by the same per-image stream. Entry order and
    the image_id multiset are preserved.
    """
    for e in manifest:
        if e.corruption != CLEAN:
            raise NonCleanInput(f"{e.image_id}: input manifest must be all-clean")
    n = len(manifest)
    k = corrupted_count(n, policy.p_c)
    kinds = tuple(sorted(policy.corruptions))
    sevs = tuple(sorted(policy.severities))

    draws = []
    for e in manifest:
        g = keyed_stream(policy.seed, "mixture", e.image_id)
        u = g.random()
        if kinds and sevs:
            kind = kinds[int(g.integers(0, len(kinds)))]
            sev = sevs[int(g.integers(0, len(sevs)))]
        else:
            kind, sev = CLEAN, 0
        draws.append((u, e.image_id, kind, sev))

    chosen_idx = sorted(range(n), key=lambda i: (draws[i][0], draws[i][1]))[:k]
    chosen = set(chosen_idx)
    entries = []
    for i, e in enumerate(manifest):
        if i in chosen:
            _, _, kind, sev = draws[i]
            entries.append(ManifestEntry(e.image_id, e.path, e.label, kind, sev))
        else:
            entries.append(e)
    return DatasetManifest(entries)


def resolve_image_path(root: str | Path | None, path: str) -> Path:
    """Absolute manifest paths resolve as-is, relative ones against root."""
    p = Path(path)
    if p.is_absolute() or root is None:
        return p
    return Path(root) / p


def corrupt_dataset(
    manifest: DatasetManifest,
    policy: MixturePolicy,
    in_dir: str | Path,
    out_dir: str | Path,
) -> DatasetManifest:
    """Materialize a mixture: corrupt selected images and write them out.

    Corrupted files land under out_dir mirroring each entry's relative
    path, and those entries' manifest paths are rewritten to the written
    location; clean entries keep their path verbatim (p_c = 0 writes
    nothing). Per-image corruption noise is keyed by (seed, image_id).
    """
    mix = build_mixture(manifest, policy)
    out_entries = []
    for e in mix:
        if e.corruption == CLEAN:
            out_entries.append(e)
            continue
        src = resolve_image_path(in_dir, e.path)
        if not src.is_file():
            raise MissingImage(str(src))
        try:
            img = decode_pnm(src.read_bytes())
        except OSError as err:
            raise IoError(f"reading {src}: {err}") from err
        image_seed = stream_key(policy.seed, "image", e.image_id) & (2**63 - 1)
        corrupted = apply_corruption(img, CorruptionSpec(e.corruption, e.severity, image_seed))
        dst = Path(out_dir) / e.path
        try:
            dst.parent.mkdir(parents=True, exist_ok=True)
            dst.write_bytes(encode_pnm(corrupted))
        except OSError as err:
            raise IoError(f"writing {dst}: {err}") from err
        out_entries.append(ManifestEntry(e.image_id, str(dst), e.label, e.corruption, e.severity))
    return DatasetManifest(out_entries)
