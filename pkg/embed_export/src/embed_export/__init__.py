"""Interchange-format exporter: embeddings, text weights, logits, correctness."""

from .backbones import (
    ClassifierBackbone,
    ImageBackbone,
    TextBackbone,
    classifier_backbone,
    image_backbone,
    image_features,
    text_backbone,
)
from .errors import ConfigError, ExportError, ImageError, ManifestError
from .export import (
    ExportJob,
    apply_template,
    export_image_embeddings,
    export_logits_and_correctness,
    export_text_weights,
)
from .interchange import (
    ManifestRow,
    atomic_write_bytes,
    correctness_payload,
    load_manifest,
    npy_payload,
    read_pnm,
    resolve_image,
)

__version__ = "0.1.0"

__all__ = [
    "ClassifierBackbone",
    "ConfigError",
    "ExportError",
    "ExportJob",
    "ImageBackbone",
    "ImageError",
    "ManifestError",
    "ManifestRow",
    "TextBackbone",
    "apply_template",
    "atomic_write_bytes",
    "classifier_backbone",
    "correctness_payload",
    "export_image_embeddings",
    "export_logits_and_correctness",
    "export_text_weights",
    "image_backbone",
    "image_features",
    "load_manifest",
    "npy_payload",
    "read_pnm",
    "resolve_image",
    "text_backbone",
]
