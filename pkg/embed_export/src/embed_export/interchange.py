"""Readers and writers for the audit toolkit's interchange formats.

The exporter talks to the auditing side only through files: JSONL dataset
manifests in, NPY float32 tensors and correctness CSVs out. The formats are
implemented here against their documented layout, not by importing the
consumer.
"""

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ImageError, ManifestError

MANIFEST_FIELDS = ("image_id", "path", "label", "corruption", "severity")
CORRECTNESS_HEADER = ("image_id", "corruption", "severity", "model", "correct")


@dataclass(frozen=True)
class ManifestRow:
    image_id: str
    path: str
    label: int
    corruption: str
    severity: int


def load_manifest(path: str | Path) -> list[ManifestRow]:
    """Parse a JSONL manifest, preserving row order."""
    rows = []
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise ManifestError(f"cannot open manifest {path}: {e}") from None
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise ManifestError(f"{path}:{line_no}: not valid JSON") from None
            if not isinstance(obj, dict) or set(obj) != set(MANIFEST_FIELDS):
                raise ManifestError(f"{path}:{line_no}: expected fields {list(MANIFEST_FIELDS)}")
            if not isinstance(obj["label"], int) or isinstance(obj["label"], bool) or obj["label"] < 0:
                raise ManifestError(f"{path}:{line_no}: label must be a non-negative int")
            rows.append(
                ManifestRow(
                    str(obj["image_id"]),
                    str(obj["path"]),
                    obj["label"],
                    str(obj["corruption"]),
                    int(obj["severity"]),
                )
            )
    if not rows:
        raise ManifestError(f"{path}: empty manifest")
    return rows


def resolve_image(root: str | Path | None, path: str) -> Path:
    p = Path(path)
    if p.is_absolute() or root is None:
        return p
    return Path(root) / p


def read_pnm(path: str | Path) -> np.ndarray:
    """Read a binary P5/P6 image with maxval <= 255 as an HxWxC uint8 array."""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise ImageError(f"cannot read image {path}: {e}") from None
    fields: list[bytes] = []
    pos = 0
    # header is exactly four whitespace-separated fields
    while len(fields) < 4 and pos < len(blob):
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    if len(fields) < 4:
        raise ImageError(f"{path}: truncated PNM header")
    magic = fields[0]
    if magic not in (b"P5", b"P6"):
        raise ImageError(f"{path}: unsupported magic {magic!r}")
    try:
        width, height, maxval = (int(f) for f in fields[1:4])
    except ValueError:
        raise ImageError(f"{path}: non-numeric header field") from None
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise ImageError(f"{path}: bad dimensions or maxval")
    channels = 3 if magic == b"P6" else 1
    payload = blob[pos + 1 : pos + 1 + width * height * channels]
    if len(payload) != width * height * channels:
        raise ImageError(f"{path}: truncated pixel data")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)


def atomic_write_bytes(payload: bytes, path: str | Path) -> None:
    """Write via a temp file in the target directory plus rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def npy_payload(arr: np.ndarray) -> bytes:
    """Serialize a 2-D float32 array as NPY v1.0 bytes."""
    import io

    if arr.ndim != 2 or arr.dtype != np.float32:
        raise ValueError(f"expected 2-D float32, got {arr.dtype} with {arr.ndim} dims")
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr))
    return buf.getvalue()


def correctness_payload(rows: list[ManifestRow], model: str, correct: np.ndarray) -> bytes:
    """Render the correctness CSV for manifest rows, aligned by position."""
    lines = [",".join(CORRECTNESS_HEADER)]
    for row, c in zip(rows, correct):
        for field in (row.image_id, row.corruption, model):
            if "," in field or "\n" in field or "\r" in field:
                raise ManifestError(f"field {field!r} contains a delimiter")
        lines.append(",".join((row.image_id, row.corruption, str(row.severity), model, str(int(c)))))
    return ("\n".join(lines) + "\n").encode("utf-8")


def metadata_payload(meta: dict) -> bytes:
    return (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode("utf-8")
