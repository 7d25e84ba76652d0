"""Interchange I/O: float32 tensors, dataset manifests, score/correctness tables.

Wire formats
------------
Tensors   NPY version 1.0, dtype ``<f4``, C order, 1-D or 2-D shape. 1-D
          payloads are ingested as a single row. The writer emits the same
          bytes numpy's own writer would for a 2-D ``<f4`` array: magic,
          version (1, 0), little-endian uint16 header length, ASCII dict
          header space-padded so the payload starts on a 64-byte boundary,
          terminated by a newline.
Manifests JSONL, one entry per line with exactly the fields image_id, path,
          label, corruption, severity. (image_id, corruption, severity) is
          unique; severity == 0 if and only if corruption == "clean".
Scores    CSV ``image_id,corruption,severity,metric,value``; values are
          written with 9 significant digits, which round-trips any value
          that is exact at 9 significant decimal digits (all of float32).
Correct.  CSV ``image_id,corruption,severity,model,correct`` with correct
          in {0, 1}.

All text files use ``\\n`` line endings; rewriting the same data is
byte-identical.
"""
from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    AlignmentError,
    BadMagic,
    DuplicateKey,
    InputError,
    MalformedLine,
    MalformedRow,
    NonFiniteValue,
    SeverityMismatch,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedOrder,
)

__all__ = [
    "TensorF32",
    "ManifestEntry",
    "DatasetManifest",
    "ScoreRecord",
    "ScoreTable",
    "CorrectnessRecord",
    "CorrectnessTable",
    "parse_npy",
    "write_npy",
    "load_npy",
    "save_npy",
    "load_manifest",
    "write_manifest",
    "load_scores",
    "write_scores",
    "load_correctness",
    "write_correctness",
    "check_alignment",
    "format_value",
]

_MAGIC = b"\x93NUMPY"
_VERSION = b"\x01\x00"
_HEADER_ALIGN = 64

SEVERITY_MIN, SEVERITY_MAX = 0, 5
CLEAN = "clean"


# --------------------------------------------------------------------------
# tensors
# --------------------------------------------------------------------------

class TensorF32:
    """A dense 2-D float32 matrix with row-major layout."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray, permissive: bool = False):
        arr = np.asarray(data)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise InputError(f"TensorF32 is 2-D, got {arr.ndim}-D")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        if not permissive and arr.size and not np.isfinite(arr).all():
            raise NonFiniteValue("tensor contains NaN or infinity")
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TensorF32):
            return NotImplemented
        return self.data.shape == other.data.shape and self.data.tobytes() == other.data.tobytes()

    def __hash__(self):  # tensors are mutable through .data; don't hash
        raise TypeError("TensorF32 is unhashable")

    def __repr__(self) -> str:
        return f"TensorF32(rows={self.rows}, cols={self.cols})"


def parse_npy(buf: bytes, permissive: bool = False) -> TensorF32:
    """Parse NPY v1.0 bytes into a TensorF32.

    Only little-endian float32, C order, 1-D or 2-D shapes are accepted.
    Never reads past the header-declared payload length; trailing bytes are
    ignored. Non-finite values raise NonFiniteValue unless ``permissive``.
    """
    if len(buf) < len(_MAGIC) or buf[: len(_MAGIC)] != _MAGIC:
        raise BadMagic("bad magic: not an NPY stream")
    if len(buf) < 10:
        raise TruncatedPayload("header: stream ends before version/length")
    if buf[6:8] != _VERSION:
        raise BadMagic(f"version: only 1.0 supported, got {buf[6]}.{buf[7]}")
    (hlen,) = struct.unpack("<H", buf[8:10])
    if len(buf) < 10 + hlen:
        raise TruncatedPayload(f"header: declared {hlen} bytes, have {len(buf) - 10}")
    try:
        header = ast.literal_eval(buf[10 : 10 + hlen].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as e:
        raise BadMagic(f"header: not a literal dict ({e})") from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise BadMagic(f"header: unexpected keys {sorted(header) if isinstance(header, dict) else header}")
    if header["descr"] != "<f4":
        raise UnsupportedDtype(f"descr: only '<f4' supported, got {header['descr']!r}")
    if header["fortran_order"] is not False:
        raise UnsupportedOrder(f"fortran_order: only C order supported, got {header['fortran_order']!r}")
    shape = header["shape"]
    if (
        not isinstance(shape, tuple)
        or not shape
        or len(shape) > 2
        or not all(isinstance(d, int) and d >= 0 for d in shape)
    ):
        raise UnsupportedOrder(f"shape: only 1-D or 2-D supported, got {shape!r}")
    rows, cols = (1, shape[0]) if len(shape) == 1 else shape
    count = rows * cols
    payload = buf[10 + hlen : 10 + hlen + 4 * count]
    if len(payload) < 4 * count:
        raise TruncatedPayload(f"payload: need {4 * count} bytes for shape {shape}, have {len(payload)}")
    arr = np.frombuffer(payload, dtype="<f4", count=count).reshape(rows, cols)
    return TensorF32(arr.copy(), permissive=permissive)


def write_npy(t: TensorF32) -> bytes:
    """Serialize a TensorF32 to NPY v1.0 bytes (byte-stable)."""
    head = f"{{'descr': '<f4', 'fortran_order': False, 'shape': {t.data.shape!r}, }}"
    pad = -(10 + len(head) + 1) % _HEADER_ALIGN
    head = head + " " * pad + "\n"
    return _MAGIC + _VERSION + struct.pack("<H", len(head)) + head.encode("ascii") + t.data.tobytes(order="C")


def load_npy(path: str | Path, permissive: bool = False) -> TensorF32:
    return parse_npy(Path(path).read_bytes(), permissive=permissive)


def save_npy(t: TensorF32, path: str | Path) -> None:
    Path(path).write_bytes(write_npy(t))


def check_alignment(t: TensorF32, manifest: "DatasetManifest") -> None:
    """Raise AlignmentError unless tensor rows match manifest length."""
    if t.rows != len(manifest):
        raise AlignmentError(f"tensor has {t.rows} rows, manifest has {len(manifest)} entries")


# --------------------------------------------------------------------------
# manifests
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    path: str
    label: int
    corruption: str
    severity: int

    def key(self) -> tuple[str, str, int]:
        return (self.image_id, self.corruption, self.severity)


def _check_entry(e: ManifestEntry) -> None:
    if not isinstance(e.image_id, str) or not e.image_id:
        raise InputError("image_id must be a non-empty string")
    if not isinstance(e.path, str) or not e.path:
        raise InputError("path must be a non-empty string")
    if isinstance(e.label, bool) or not isinstance(e.label, int) or e.label < 0:
        raise InputError(f"label must be a non-negative int, got {e.label!r}")
    if not isinstance(e.corruption, str) or not e.corruption:
        raise InputError("corruption must be a non-empty string")
    if isinstance(e.severity, bool) or not isinstance(e.severity, int):
        raise InputError(f"severity must be an int, got {e.severity!r}")
    if not SEVERITY_MIN <= e.severity <= SEVERITY_MAX:
        raise InputError(f"severity {e.severity} outside [{SEVERITY_MIN}, {SEVERITY_MAX}]")
    if (e.severity == 0) != (e.corruption == CLEAN):
        raise SeverityMismatch(
            f"{e.image_id}: severity {e.severity} with corruption {e.corruption!r}"
        )


class DatasetManifest:
    """Ordered list of manifest entries with unique (image_id, corruption, severity)."""

    def __init__(self, entries: Iterable[ManifestEntry]):
        self.entries: list[ManifestEntry] = list(entries)
        seen: set[tuple[str, str, int]] = set()
        for e in self.entries:
            _check_entry(e)
            k = e.key()
            if k in seen:
                raise DuplicateKey(f"duplicate manifest key {k}")
            seen.add(k)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> ManifestEntry:
        return self.entries[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DatasetManifest):
            return NotImplemented
        return self.entries == other.entries

    def id_to_label(self) -> dict[str, int]:
        """Map image_id -> label; raises if an id carries conflicting labels."""
        out: dict[str, int] = {}
        for e in self.entries:
            if e.image_id in out and out[e.image_id] != e.label:
                raise InputError(f"conflicting labels for image_id {e.image_id!r}")
            out[e.image_id] = e.label
        return out


_MANIFEST_FIELDS = ("image_id", "path", "label", "corruption", "severity")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load a JSONL manifest; line numbers in errors are 1-based."""
    entries = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedLine(line_no, f"invalid JSON: {e.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedLine(line_no, "entry is not an object")
            if set(obj) != set(_MANIFEST_FIELDS):
                raise MalformedLine(
                    line_no,
                    f"expected fields {list(_MANIFEST_FIELDS)}, got {sorted(obj)}",
                )
            try:
                entry = ManifestEntry(**{k: obj[k] for k in _MANIFEST_FIELDS})
                _check_entry(entry)
            except (InputError, SeverityMismatch) as e:
                if isinstance(e, SeverityMismatch):
                    raise
                raise MalformedLine(line_no, str(e)) from None
            entries.append(entry)
    return DatasetManifest(entries)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for e in manifest:
            fh.write(
                json.dumps(
                    {
                        "image_id": e.image_id,
                        "path": e.path,
                        "label": e.label,
                        "corruption": e.corruption,
                        "severity": e.severity,
                    },
                    separators=(", ", ": "),
                )
                + "\n"
            )


# --------------------------------------------------------------------------
# score and correctness tables
# --------------------------------------------------------------------------

def format_value(v: float) -> str:
    """Format a float with exactly 9 significant digits, positional."""
    if not np.isfinite(v):
        raise NonFiniteValue(f"cannot serialize {v!r}")
    mant, _, exp = f"{float(v):.8e}".partition("e")
    neg = mant.startswith("-")
    digits = mant.lstrip("-").replace(".", "")
    point = 1 + int(exp)
    if point <= 0:
        out = "0." + "0" * (-point) + digits
    elif point >= len(digits):
        out = digits + "0" * (point - len(digits))
    else:
        out = digits[:point] + "." + digits[point:]
    return ("-" if neg else "") + out


@dataclass(frozen=True)
class ScoreRecord:
    image_id: str
    corruption: str
    severity: int
    metric: str
    value: float

    def key(self) -> tuple[str, str, int, str]:
        return (self.image_id, self.corruption, self.severity, self.metric)


@dataclass(frozen=True)
class CorrectnessRecord:
    image_id: str
    corruption: str
    severity: int
    model: str
    correct: int

    def key(self) -> tuple[str, str, int, str]:
        return (self.image_id, self.corruption, self.severity, self.model)


class _Table:
    record_cls: type
    header: tuple[str, ...]

    def __init__(self, records):
        self.records = list(records)
        seen = set()
        for r in self.records:
            self._check(r)
            k = r.key()
            if k in seen:
                raise DuplicateKey(f"duplicate key {k}")
            seen.add(k)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        return self.records == other.records

    @staticmethod
    def _check_common(image_id: str, corruption: str, severity: int) -> None:
        if not image_id:
            raise InputError("image_id must be non-empty")
        if isinstance(severity, bool) or not isinstance(severity, int):
            raise InputError(f"severity must be an int, got {severity!r}")
        if not SEVERITY_MIN <= severity <= SEVERITY_MAX:
            raise InputError(f"severity {severity} outside [{SEVERITY_MIN}, {SEVERITY_MAX}]")
        if (severity == 0) != (corruption == CLEAN):
            raise SeverityMismatch(f"severity {severity} with corruption {corruption!r}")


class ScoreTable(_Table):
    header = ("image_id", "corruption", "severity", "metric", "value")

    def _check(self, r: ScoreRecord) -> None:
        self._check_common(r.image_id, r.corruption, r.severity)
        if not r.metric:
            raise InputError("metric must be non-empty")
        if not np.isfinite(r.value):
            raise NonFiniteValue(f"score {r.key()} is not finite")


class CorrectnessTable(_Table):
    header = ("image_id", "corruption", "severity", "model", "correct")

    def _check(self, r: CorrectnessRecord) -> None:
        self._check_common(r.image_id, r.corruption, r.severity)
        if not r.model:
            raise InputError("model must be non-empty")
        if r.correct not in (0, 1) or isinstance(r.correct, bool):
            raise InputError(f"correct must be 0 or 1, got {r.correct!r}")


def _write_csv(table, path: str | Path, render_last) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(table.header) + "\n")
        for r in table:
            name = r.key()[3]  # metric or model column
            for f in (r.image_id, r.corruption, name):
                if "," in f or "\n" in f or "\r" in f:
                    raise InputError(f"field {f!r} contains a delimiter")
            fh.write(",".join((r.image_id, r.corruption, str(r.severity), name, render_last(r))) + "\n")


def write_scores(table: ScoreTable, path: str | Path) -> None:
    _write_csv(table, path, lambda r: format_value(r.value))


def write_correctness(table: CorrectnessTable, path: str | Path) -> None:
    _write_csv(table, path, lambda r: str(r.correct))


def _read_rows(path: str | Path, header: tuple[str, ...]):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first.split(",") != list(header):
            raise MalformedRow(1, f"expected header {','.join(header)!r}, got {first!r}")
        for row_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise MalformedRow(row_no, f"expected {len(header)} fields, got {len(parts)}")
            yield row_no, parts


def _parse_severity(row_no: int, s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise MalformedRow(row_no, f"bad severity {s!r}") from None


def load_scores(path: str | Path) -> ScoreTable:
    records = []
    for row_no, (image_id, corruption, sev, metric, value) in _read_rows(path, ScoreTable.header):
        try:
            v = float(value)
        except ValueError:
            raise MalformedRow(row_no, f"bad value {value!r}") from None
        if not np.isfinite(v):
            raise MalformedRow(row_no, f"non-finite value {value!r}")
        records.append(ScoreRecord(image_id, corruption, _parse_severity(row_no, sev), metric, v))
    return ScoreTable(records)


def load_correctness(path: str | Path) -> CorrectnessTable:
    records = []
    for row_no, (image_id, corruption, sev, model, correct) in _read_rows(path, CorrectnessTable.header):
        if correct not in ("0", "1"):
            raise MalformedRow(row_no, f"correct must be 0 or 1, got {correct!r}")
        records.append(
            CorrectnessRecord(image_id, corruption, _parse_severity(row_no, sev), model, int(correct))
        )
    return CorrectnessTable(records)
