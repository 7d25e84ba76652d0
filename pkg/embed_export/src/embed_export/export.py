"""The three export pipelines: image embeddings, text weights, logits."""

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backbones import classifier_backbone, image_backbone, text_backbone
from .errors import ConfigError
from .interchange import (
    ManifestRow,
    atomic_write_bytes,
    correctness_payload,
    load_manifest,
    metadata_payload,
    npy_payload,
    read_pnm,
    resolve_image,
)

_PLACEHOLDERS = ("{}", "<token>")


@dataclass(frozen=True)
class ExportJob:
    manifest: str | Path
    backbone: str
    out: str | Path
    images_root: str | Path | None = None
    template: str | None = None
    batch_size: int = 64
    device: str = "cpu"
    out_correctness: str | Path | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.device != "cpu":
            raise ConfigError(f"unsupported device {self.device!r}")


def apply_template(template: str, name: str) -> str:
    for ph in _PLACEHOLDERS:
        if ph in template:
            return template.replace(ph, name)
    raise ConfigError(f"template {template!r} has no {{}} or <token> placeholder")


def _batches(rows: list[ManifestRow], size: int):
    for i in range(0, len(rows), size):
        yield rows[i : i + size]


def _write_tensor(arr: np.ndarray, out: str | Path, meta: dict) -> dict:
    payload = npy_payload(arr)
    meta = dict(meta, rows=arr.shape[0], dim=arr.shape[1], dtype="float32",
                sha256=hashlib.sha256(payload).hexdigest())
    atomic_write_bytes(payload, out)
    atomic_write_bytes(metadata_payload(meta), f"{out}.json")
    return meta


def export_image_embeddings(job: ExportJob) -> np.ndarray:
    """Embed every manifest image, row-aligned; no normalization applied."""
    rows = load_manifest(job.manifest)
    net = image_backbone(job.backbone)
    chunks = []
    for batch in _batches(rows, job.batch_size):
        chunks.append(
            np.stack([net.embed(read_pnm(resolve_image(job.images_root, r.path))) for r in batch])
        )
    emb = np.concatenate(chunks, axis=0)
    _write_tensor(emb, job.out, {"backbone": net.name, "device": job.device,
                                 "preprocessing": "binary PNM, uint8, maxval 255"})
    return emb


def export_text_weights(names: list[str], template: str, backbone: str, out: str | Path) -> np.ndarray:
    """One embedding per class name with the prompt template applied."""
    if len(set(names)) != len(names):
        raise ConfigError("duplicate label names")
    if not names:
        raise ConfigError("no label names given")
    net = text_backbone(backbone)
    weights = np.stack([net.embed(apply_template(template, n)) for n in names])
    _write_tensor(weights, out, {"backbone": net.name, "template": template})
    return weights


def export_logits_and_correctness(job: ExportJob) -> tuple[np.ndarray, np.ndarray]:
    """Pre-softmax logits plus correct = 1{argmax == manifest label}."""
    if job.out_correctness is None:
        raise ConfigError("logit export needs an out_correctness path")
    rows = load_manifest(job.manifest)
    classes = max(r.label for r in rows) + 1
    net = classifier_backbone(job.backbone, classes)
    chunks = []
    for batch in _batches(rows, job.batch_size):
        chunks.append(
            np.stack([net.logits(read_pnm(resolve_image(job.images_root, r.path))) for r in batch])
        )
    logits = np.concatenate(chunks, axis=0)
    labels = np.array([r.label for r in rows])
    correct = (np.argmax(logits, axis=1) == labels).astype(np.int64)
    _write_tensor(logits, job.out, {"backbone": net.name, "classes": classes,
                                    "device": job.device,
                                    "preprocessing": "binary PNM, uint8, maxval 255"})
    atomic_write_bytes(correctness_payload(rows, net.name, correct), job.out_correctness)
    return logits, correct
