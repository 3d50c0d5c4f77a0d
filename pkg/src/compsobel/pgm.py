"""Binary PGM (P5) reading and writing, 8-bit only."""
from __future__ import annotations

import os

import numpy as np


class PgmFormatError(ValueError):
    pass


_WHITESPACE = b" \t\n\r\v\f"


def _tokens(data: bytes, count: int):
    """First ``count`` header tokens and the offset of the raster.

    '#' starts a comment running to the end of the line.  Exactly one
    whitespace byte separates the last token from the pixel data.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                end = data.find(b"\n", pos)
                pos = n if end < 0 else end + 1
            else:
                pos += 1
        if pos >= n:
            raise PgmFormatError("truncated header")
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    if pos >= n or data[pos] not in _WHITESPACE:
        raise PgmFormatError("missing whitespace before raster")
    return tokens, pos + 1


def parse_pgm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P5"):
        raise PgmFormatError("not a binary PGM (missing P5 magic)")
    tokens, offset = _tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PgmFormatError(f"non-numeric header field in {tokens[1:]!r}") from None
    if width <= 0 or height <= 0:
        raise PgmFormatError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise PgmFormatError(f"maxval {maxval} unsupported (only 255)")
    raster = data[offset:offset + width * height]
    if len(raster) != width * height:
        raise PgmFormatError(
            f"raster holds {len(raster)} bytes, expected {width * height}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def format_pgm(image) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM holds a single 2D channel")
    if img.size and (img.min() < 0 or img.max() > 255):
        raise ValueError("pixel values exceed 8 bits")
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.astype(np.uint8).tobytes()


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def write_pgm(path: str | os.PathLike, image) -> None:
    with open(path, "wb") as fh:
        fh.write(format_pgm(image))
