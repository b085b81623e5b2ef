"""Grayscale raster ingestion: decoding, luminance conversion, resizing.

Intensities are kept as float64 in [0, 255] from decode onward. The
edge-enhancing diffusion scheme needs fractional updates, so nothing is
ever quantized back to 8 bits between processing stages; 8/16-bit
quantization happens only on explicit PGM export.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InvalidDimensions, MalformedFile, UnsupportedFormat

# ITU-R BT.601 luminance weights, the conventional choice for legacy
# grayscale face datasets.
LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114

_MIN_DIM = 3  # smallest output size for which the 4-neighbor stencil has interior points


@dataclass(frozen=True)
class GrayImage:
    """Single-channel intensity raster, row-major float64."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"expected a non-empty 2-D raster, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("raster contains non-finite values")
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class Clip:
    """Ordered frame sequence for one sample; a still image is a 1-frame clip."""

    frames: tuple[GrayImage, ...]
    source_id: str
    label: str | None = field(default=None)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("clip must contain at least one frame")
        w, h = frames[0].width, frames[0].height
        for k, f in enumerate(frames):
            if f.width != w or f.height != h:
                raise ValueError(
                    f"frame {k} is {f.width}x{f.height}, expected {w}x{h}"
                )
        if self.label is not None and self.label not in ("live", "fake"):
            raise ValueError(f"label must be 'live', 'fake' or None, got {self.label!r}")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)


def decode_image(data: bytes, format: str) -> GrayImage:
    """Decode encoded image bytes into a GrayImage.

    Color inputs are converted to luminance with BT.601 weights; 16-bit
    inputs are rescaled to [0, 255]. Only PGM (binary P5) and PNG are
    supported.
    """
    kind = format.strip().lower()
    if kind == "pgm":
        return _decode_pgm(data)
    if kind == "png":
        return _decode_png(data)
    raise UnsupportedFormat(f"unsupported image format {format!r}")


def encode_pgm(img: GrayImage, maxval: int = 255) -> bytes:
    """Encode a GrayImage as binary PGM (P5).

    maxval 255 writes one byte per pixel; maxval 65535 writes big-endian
    16-bit samples with intensities scaled from [0, 255] to [0, 65535].
    Integer-valued rasters round-trip bit-exactly through maxval 255.
    """
    if maxval not in (255, 65535):
        raise ValueError(f"maxval must be 255 or 65535, got {maxval}")
    header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    scaled = img.pixels * (maxval / 255.0)
    quantized = np.rint(np.clip(scaled, 0, maxval))
    if maxval == 255:
        raster = quantized.astype(np.uint8).tobytes()
    else:
        raster = quantized.astype(">u2").tobytes()
    return header + raster


def resize(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Bilinear resize with edge clamping.

    Sampling uses the pixel-center convention, so resizing to the input
    dimensions is a bit-identical copy and constants stay constant.
    """
    if out_w < _MIN_DIM or out_h < _MIN_DIM:
        raise InvalidDimensions(f"output size {out_w}x{out_h} is below {_MIN_DIM}x{_MIN_DIM}")
    src = img.pixels
    in_h, in_w = src.shape

    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (in_w / out_w) - 0.5
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (in_h / out_h) - 0.5
    sx = np.clip(sx, 0.0, in_w - 1.0)
    sy = np.clip(sy, 0.0, in_h - 1.0)

    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = sx - x0
    fy = (sy - y0)[:, None]

    top = src[y0[:, None], x0] * (1.0 - fx) + src[y0[:, None], x1] * fx
    bottom = src[y1[:, None], x0] * (1.0 - fx) + src[y1[:, None], x1] * fx
    return GrayImage(top * (1.0 - fy) + bottom * fy)


def _decode_pgm(data: bytes) -> GrayImage:
    if not data.startswith(b"P5"):
        raise MalformedFile("not a binary PGM (missing P5 magic)")
    try:
        fields, offset = _pgm_header_fields(data)
    except (ValueError, IndexError) as exc:
        raise MalformedFile(f"bad PGM header: {exc}") from exc
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedFile(f"bad PGM dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise MalformedFile(f"PGM maxval {maxval} out of range")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    count = width * height
    raster = data[offset : offset + count * dtype.itemsize]
    if len(raster) != count * dtype.itemsize:
        raise MalformedFile("PGM raster truncated")
    values = np.frombuffer(raster, dtype=dtype).astype(np.float64).reshape(height, width)
    if maxval != 255:
        values = values * (255.0 / maxval)
    return GrayImage(values)


def _pgm_header_fields(data: bytes) -> tuple[tuple[int, int, int], int]:
    """Parse width/height/maxval after the P5 magic, honoring # comments.

    Returns the fields and the byte offset of the raster (one whitespace
    byte after maxval, per the netpbm convention).
    """
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol == -1:
                raise ValueError("unterminated comment")
            pos = eol + 1
            continue
        m = re.match(rb"\d+", data[pos:])
        if not m:
            raise ValueError("missing numeric header field")
        fields.append(int(m.group(0)))
        pos += m.end()
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ValueError("missing whitespace before raster")
    return (fields[0], fields[1], fields[2]), pos + 1


def _decode_png(data: bytes) -> GrayImage:
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            gray = _to_luminance(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise MalformedFile(f"undecodable PNG: {exc}") from exc
    return GrayImage(gray)


def _to_luminance(im: Image.Image) -> np.ndarray:
    mode = im.mode
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        return np.asarray(im, dtype=np.float64) * (255.0 / 65535.0)
    if mode == "L":
        return np.asarray(im, dtype=np.float64)
    if mode == "LA":
        return np.asarray(im, dtype=np.float64)[:, :, 0]
    if mode == "P":
        im = im.convert("RGBA")
        mode = "RGBA"
    if mode in ("RGB", "RGBA"):
        arr = np.asarray(im, dtype=np.float64)
        return LUMA_R * arr[..., 0] + LUMA_G * arr[..., 1] + LUMA_B * arr[..., 2]
    raise MalformedFile(f"unsupported PNG pixel mode {mode!r}")
