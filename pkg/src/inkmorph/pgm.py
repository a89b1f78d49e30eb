"""Binary PGM (P5, maxval 255) I/O for ink-signed images.

Byte v maps to v/127.5 - 1 on load, so 255 (white) is ink = +1 by default;
pass ``invert=True`` to treat black as ink.  Saving clamps to [-1, 1] and
rounds half up, so load -> save round-trips byte-exactly.
"""

from __future__ import annotations

import numpy as np

from .image_core import as_image

__all__ = ["PgmError", "load_pgm", "save_pgm"]


class PgmError(Exception):
    """Malformed or unsupported PGM content."""


def _tokens(buf: bytes):
    """Yield (token, end_offset) for whitespace-separated header tokens, skipping # comments."""
    i = 0
    n = len(buf)
    while i < n:
        c = buf[i : i + 1]
        if c in b" \t\r\n":
            i += 1
            continue
        if c == b"#":
            j = buf.find(b"\n", i)
            i = n if j < 0 else j + 1
            continue
        j = i
        while j < n and buf[j : j + 1] not in b" \t\r\n":
            j += 1
        yield buf[i:j], j
        i = j


def load_pgm(path, *, invert: bool = False) -> np.ndarray:
    """Read a binary PGM file into an ink-signed [-1, 1] image."""
    with open(path, "rb") as fh:
        buf = fh.read()

    fields: list[bytes] = []
    end = 0
    for tok, end in _tokens(buf):
        fields.append(tok)
        if len(fields) == 4:
            break
    if len(fields) < 4:
        raise PgmError(f"{path}: truncated PGM header")
    if fields[0] != b"P5":
        raise PgmError(f"{path}: expected binary PGM magic P5, got {fields[0]!r}")
    try:
        width, height, maxval = (int(f) for f in fields[1:4])
    except ValueError:
        raise PgmError(f"{path}: non-numeric PGM header fields") from None
    if width < 1 or height < 1:
        raise PgmError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise PgmError(f"{path}: only maxval 255 is supported, got {maxval}")

    data = buf[end + 1 :]  # single whitespace byte separates header from raster
    if len(data) < width * height:
        raise PgmError(f"{path}: raster truncated ({len(data)} of {width * height} bytes)")
    raw = np.frombuffer(data[: width * height], dtype=np.uint8).reshape(height, width)
    values = (255 - raw) if invert else raw
    return values.astype(np.float64) / 127.5 - 1.0


def save_pgm(path, image, *, invert: bool = False) -> None:
    """Write an image as binary PGM, clamping to [-1, 1] and rounding half up."""
    img = as_image(image)
    scaled = (np.clip(img, -1.0, 1.0) + 1.0) * 127.5
    values = np.floor(scaled + 0.5).astype(np.uint8)
    if invert:
        values = 255 - values
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes())
