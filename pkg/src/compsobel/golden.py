"""Integer 2D-convolution reference for the Sobel detector.

Everything here uses wide exact integers (int64) and plain sliding dot
products; nothing is shared with the bit-level datapath apart from the
parameter types.  Results carry a zero-filled one-pixel border.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np


class ImageError(ValueError):
    """Image is undersized or not 8-bit."""


class Norm(str, Enum):
    L2 = "l2"
    L1 = "l1"


@dataclass(frozen=True)
class EdgeParams:
    norm: Norm = Norm.L2
    threshold: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "norm", Norm(self.norm))
        if self.threshold is not None and not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold {self.threshold} outside 0..255")


@dataclass(frozen=True)
class Kernel3x3:
    rows: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.rows)
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("kernel must be 3x3")
        if any(not -8 <= v <= 8 for r in rows for v in r):
            raise ValueError("kernel coefficients must lie in [-8, 8]")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def outer(cls, col: Sequence[int], row: Sequence[int]) -> "Kernel3x3":
        return cls(tuple(tuple(c * r for r in row) for c in col))

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.int64)


def sobel_kernels() -> Tuple[Kernel3x3, Kernel3x3]:
    """Horizontal-gradient and vertical-gradient Sobel kernels."""
    sx = Kernel3x3(((-1, 0, 1), (-2, 0, 2), (-1, 0, 1)))
    sy = Kernel3x3(((-1, -2, -1), (0, 0, 0), (1, 2, 1)))
    return sx, sy


def check_image(image) -> np.ndarray:
    """Return ``image`` as a 2D int64 array, validating size and 8-bit range."""
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ImageError(f"expected a 2D grayscale image, got shape {arr.shape}")
    if arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ImageError(f"image {arr.shape[1]}x{arr.shape[0]} is smaller than 3x3")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ImageError(f"pixels must be integers, got {arr.dtype}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ImageError("pixels must be 8-bit (0..255)")
    return arr.astype(np.int64)


def _correlate_interior(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    h, w = img.shape
    out = np.zeros((h, w), dtype=np.int64)
    acc = out[1:-1, 1:-1]
    for r in range(3):
        for c in range(3):
            if k[r, c]:
                acc += k[r, c] * img[r:h - 2 + r, c:w - 2 + c]
    return out


def convolve2d(image, kernel: Kernel3x3) -> np.ndarray:
    """Sliding dot product (correlation, no kernel flip) over interior pixels."""
    return _correlate_interior(check_image(image), kernel.as_array())


def separable_convolve(image, col: Sequence[int], row: Sequence[int],
                       order: str = "col-first") -> np.ndarray:
    """Two 1D passes equivalent to ``convolve2d(image, Kernel3x3.outer(col, row))``.

    ``order`` is ``"col-first"`` (vertical pass, then horizontal) or
    ``"row-first"``.
    """
    img = check_image(image)
    h, w = img.shape
    col = [int(v) for v in col]
    row = [int(v) for v in row]
    if len(col) != 3 or len(row) != 3:
        raise ValueError("separable factors must be 3-vectors")

    def vertical(src):
        return sum(col[r] * src[r:src.shape[0] - 2 + r, :] for r in range(3))

    def horizontal(src):
        return sum(row[c] * src[:, c:src.shape[1] - 2 + c] for c in range(3))

    if order == "col-first":
        inner = horizontal(vertical(img))
    elif order == "row-first":
        inner = vertical(horizontal(img))
    else:
        raise ValueError(f"unknown order {order!r}")
    out = np.zeros((h, w), dtype=np.int64)
    out[1:-1, 1:-1] = inner
    return out


def _isqrt_map(values: np.ndarray) -> np.ndarray:
    flat = [math.isqrt(int(v)) for v in values.ravel()]
    return np.array(flat, dtype=np.int64).reshape(values.shape)


def sobel_golden(image, params: EdgeParams = EdgeParams()) -> np.ndarray:
    """Reference edge image: uint8, same shape as the input, zero border."""
    img = check_image(image)
    sx, sy = sobel_kernels()
    gx = convolve2d(img, sx)
    gy = convolve2d(img, sy)
    if params.norm is Norm.L2:
        mag = _isqrt_map(gx * gx + gy * gy)
    else:
        mag = np.abs(gx) + np.abs(gy)
    mag = np.minimum(mag, 255)
    if params.threshold is not None:
        mag = np.where(mag >= params.threshold, 255, 0)
    out = np.zeros(img.shape, dtype=np.uint8)
    out[1:-1, 1:-1] = mag[1:-1, 1:-1]
    return out


def op_count(n: int) -> int:
    """Multiplications plus additions for one n x n convolution output."""
    if n < 1:
        raise ValueError("kernel size must be at least 1")
    return 2 * n * n - 1
