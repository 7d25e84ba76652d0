"""Binary PNM images, Rec. 601 luminance, and anisotropic total variation."""
from __future__ import annotations

import numpy as np

from .errors import BadFormat, InputError, TruncatedPixels, UnsupportedMaxval

__all__ = ["ImageBuffer", "decode_pnm", "encode_pnm", "to_luminance", "total_variation"]

_WS = b" \t\r\n"


class ImageBuffer:
    """8-bit image, shape (height, width, channels), channels in {1, 3}."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.asarray(data)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise InputError(f"image must be (h, w, 1|3), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"image must be at least 1x1, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise InputError(f"image dtype must be uint8, got {arr.dtype}")
        self.data = np.ascontiguousarray(arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.data.shape == other.data.shape and self.data.tobytes() == other.data.tobytes()

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"


def _token(buf: bytes, i: int) -> tuple[bytes, int]:
    while i < len(buf) and buf[i] in _WS:
        i += 1
    j = i
    while j < len(buf) and buf[j] not in _WS:
        j += 1
    if j == i:
        raise BadFormat("header: truncated before all fields were read")
    return buf[i:j], j


def _int_token(buf: bytes, i: int, what: str) -> tuple[int, int]:
    tok, i = _token(buf, i)
    if not tok.isdigit():
        raise BadFormat(f"header: {what} is not a decimal integer: {tok!r}")
    return int(tok), i


def decode_pnm(buf: bytes) -> ImageBuffer:
    """Decode binary PGM (P5) or PPM (P6) with maxval 255.

    The header is magic, width, height, maxval separated by whitespace,
    with exactly one whitespace byte between maxval and the pixel payload.
    Comments are not supported. Bytes past the declared payload are ignored.
    """
    if len(buf) < 2 or buf[:2] not in (b"P5", b"P6"):
        raise BadFormat(f"not a binary PGM/PPM stream: {buf[:2]!r}")
    channels = 1 if buf[:2] == b"P5" else 3
    width, i = _int_token(buf, 2, "width")
    height, i = _int_token(buf, i, "height")
    maxval, i = _int_token(buf, i, "maxval")
    if width < 1 or height < 1:
        raise BadFormat(f"header: bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxval(f"maxval must be 255, got {maxval}")
    if i >= len(buf) or buf[i] not in _WS:
        raise BadFormat("header: expected single whitespace after maxval")
    payload = buf[i + 1 :]
    need = width * height * channels
    if len(payload) < need:
        raise TruncatedPixels(f"need {need} pixel bytes, have {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8, count=need).reshape(height, width, channels)
    return ImageBuffer(arr.copy())


def encode_pnm(img: ImageBuffer) -> bytes:
    """Encode to binary PGM/PPM; decode(encode(x)) == x."""
    magic = b"P5" if img.channels == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (img.width, img.height)
    return header + img.data.tobytes()


def to_luminance(img: ImageBuffer) -> ImageBuffer:
    """Rec. 601 luminance as a 1-channel buffer; gray input returned as is.

    Computed in integer arithmetic ((299 R + 587 G + 114 B + 500) // 1000)
    so the half-away-from-zero rounding holds exactly for every 8-bit input.
    """
    if img.channels == 1:
        return img
    rgb = img.data.astype(np.int32)
    y1000 = 299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2]
    return ImageBuffer(((y1000 + 500) // 1000).astype(np.uint8))


def total_variation(img: ImageBuffer) -> float:
    """Anisotropic total variation of the luminance channel.

    Sum of absolute differences over horizontally and vertically adjacent
    pixel pairs, normalized by 255 and by pixel count; range [0, 2).
    """
    lum = to_luminance(img).data[:, :, 0].astype(np.int64)
    horiz = np.abs(lum[:, 1:] - lum[:, :-1]).sum()
    vert = np.abs(lum[1:, :] - lum[:-1, :]).sum()
    return float(int(horiz + vert) / (255.0 * lum.shape[0] * lum.shape[1]))
