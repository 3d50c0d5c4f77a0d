"""Streaming Sobel datapath: pixel cache, per-cycle gradient datapaths, output stages.

Two engines share the same gate-level arithmetic:

* :class:`StreamingPipeline` clocks one event at a time through a
  :class:`PixelCache` (two RAM line buffers plus a 3x3 register window) and
  the side-cache chains.  ``process_stream`` and the CLI trace use it.
* ``process_frame`` (default ``engine="vector"``) replays the same cache as
  a delay line over the whole raster stream and evaluates the datapath on
  numpy arrays, bit position by bit position.  It exists because a
  cycle-by-cycle Python loop cannot push a 512x512 frame in under a second.

Widths: pixels are 8 bits, column sums 10 bits unsigned, column differences
9 bits two's complement, gradients 11 bits two's complement.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Tuple, Union

import numpy as np

from .carrysave import (
    lookahead_add_words,
    mask,
    p2pp_words,
    ppn_words,
    ripple_add_words,
    sign_extend,
    to_signed,
)
from .golden import EdgeParams, ImageError, Norm, check_image, sobel_kernels

PIXEL_BITS = 8
COLSUM_BITS = 10
COLDIFF_BITS = 9
DATA_BITS = 11
GRADIENT_LIMIT = 1020


class Variant(str, Enum):
    ADDER_TREE = "adder-tree"
    SEPARATED = "separated"
    COMPRESSOR = "compressor"
    LOOKAHEAD_COMPRESSOR = "lookahead-compressor"

    @property
    def cached(self) -> bool:
        return self is not Variant.ADDER_TREE

    @property
    def label(self) -> str:
        return {
            Variant.ADDER_TREE: "Adder Tree",
            Variant.SEPARATED: "Separated",
            Variant.COMPRESSOR: "Compressor",
            Variant.LOOKAHEAD_COMPRESSOR: "Look-Ahead Compressor",
        }[self]


class FramingError(ValueError):
    pass


class StreamStateError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# stream events
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Pixel:
    value: int

    def __post_init__(self):
        if not 0 <= self.value <= 255:
            raise ValueError(f"pixel value {self.value} is not 8-bit")


@dataclass(frozen=True)
class HBlank:
    pass


@dataclass(frozen=True)
class VBlank:
    pass


@dataclass(frozen=True)
class EndOfFrame:
    pass


HBLANK = HBlank()
VBLANK = VBlank()
END_OF_FRAME = EndOfFrame()

StreamEvent = Union[Pixel, HBlank, VBlank, EndOfFrame]


def frame_events(image, hblank: int = 0, vblank: int = 0,
                 end_of_frame: bool = True) -> Iterator[StreamEvent]:
    """Raster-order events for one frame, with optional blanking runs.

    ``hblank`` HBlank events follow every line; ``vblank`` VBlank events
    follow the last line.
    """
    img = np.asarray(image)
    for row in img:
        for p in row:
            yield Pixel(int(p))
        for _ in range(hblank):
            yield HBLANK
    for _ in range(vblank):
        yield VBLANK
    if end_of_frame:
        yield END_OF_FRAME


# --------------------------------------------------------------------------
# pixel cache
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Window3x3:
    """Rows top to bottom (a b c / d e f / g h i); ``i`` is the newest pixel."""

    a: int
    b: int
    c: int
    d: int
    e: int
    f: int
    g: int
    h: int
    i: int

    @classmethod
    def from_rows(cls, rows) -> "Window3x3":
        (a, b, c), (d, e, f), (g, h, i) = rows
        return cls(a, b, c, d, e, f, g, h, i)

    def rows(self):
        return ((self.a, self.b, self.c), (self.d, self.e, self.f),
                (self.g, self.h, self.i))


class PixelCache:
    """Two-line streaming cache feeding a 3x3 register window.

    Pixels travel i -> h -> g -> line buffer -> f -> e -> d -> line buffer
    -> c -> b -> a.  Each line buffer is ``line_width - 3`` deep, so the
    window always spans three consecutive image rows.
    """

    def __init__(self, line_width: int):
        if line_width < 3:
            raise ValueError("line width must be at least 3")
        self.line_width = line_width
        self.clear()

    def clear(self):
        depth = self.line_width - 3
        self.line_upper = deque([0] * depth)
        self.line_lower = deque([0] * depth)
        self.regs = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
        self.count = 0
        self.since_hblank = 0
        self.hblank_seen = False
        self.flushed = False

    @property
    def buffered_bits(self) -> int:
        return (len(self.line_upper) + len(self.line_lower) + 9) * PIXEL_BITS

    @property
    def position(self) -> Tuple[int, int]:
        """(row, column) of the newest pixel."""
        n = self.count - 1
        return n // self.line_width, n % self.line_width

    @property
    def column_ready(self) -> bool:
        """The right-hand window column holds three vertically aligned pixels."""
        return self.count >= 2 * self.line_width + 1

    @property
    def window_valid(self) -> bool:
        return (self.count >= 2 * self.line_width + 3
                and (self.count - 1) % self.line_width >= 2)

    def registers(self) -> Window3x3:
        return Window3x3.from_rows(self.regs)

    def _shift(self, value: int):
        top, mid, bot = self.regs
        self.line_upper.append(mid[0])
        from_upper = self.line_upper.popleft()
        self.line_lower.append(bot[0])
        from_lower = self.line_lower.popleft()
        self.regs = [[top[1], top[2], from_upper],
                     [mid[1], mid[2], from_lower],
                     [bot[1], bot[2], value]]

    def push(self, event: StreamEvent) -> Optional[Window3x3]:
        if isinstance(event, Pixel):
            if self.flushed:
                raise StreamStateError("pixel received after end of frame; clear first")
            if self.hblank_seen and self.since_hblank >= self.line_width:
                raise FramingError(
                    f"more than {self.line_width} pixels between horizontal blanks")
            self._shift(event.value)
            self.count += 1
            self.since_hblank += 1
            return self.registers() if self.window_valid else None
        if isinstance(event, HBlank):
            in_line = self.count % self.line_width
            if in_line or (self.hblank_seen and self.since_hblank not in (0, self.line_width)):
                raise FramingError(
                    f"horizontal blank after {in_line or self.since_hblank} pixels of a "
                    f"{self.line_width}-pixel line")
            self.since_hblank = 0
            self.hblank_seen = True
            return None
        if isinstance(event, VBlank):
            if self.count % self.line_width:
                raise FramingError("vertical blank in the middle of a line")
            return None
        if isinstance(event, EndOfFrame):
            self.clear()
            self.flushed = True
            return None
        raise TypeError(f"not a stream event: {event!r}")


# --------------------------------------------------------------------------
# side caches and gradient datapaths
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SideCaches:
    """Newest-first chains: column sums (Gx path) and column differences (Gy path)."""

    colsum: Tuple[int, ...] = ()
    coldiff: Tuple[int, ...] = ()

    def colsum_at(self, age: int) -> int:
        return self.colsum[age]

    def coldiff_at(self, age: int) -> int:
        return self.coldiff[age]

    def with_colsum(self, u: int) -> "SideCaches":
        return SideCaches((u,) + self.colsum[:1], self.coldiff)

    def with_coldiff(self, v: int) -> "SideCaches":
        return SideCaches(self.colsum, (v,) + self.coldiff[:1])


def _carry_propagate(variant: Variant):
    if variant is Variant.LOOKAHEAD_COMPRESSOR:
        return lookahead_add_words
    return ripple_add_words


def _record(probe, key, value):
    if probe is not None:
        probe[key] = value


def column_sum(c, f, i, variant: Variant, probe=None):
    """u = c + 2f + i as a 10-bit word (int or array)."""
    if variant is Variant.SEPARATED:
        t, _ = ripple_add_words(c, f << 1, 0, COLSUM_BITS)
        u, _ = ripple_add_words(t, i, 0, COLSUM_BITS)
        return u
    s, k = p2pp_words(c, f, i, DATA_BITS)
    _record(probe, "colsum.p2pp", (s, k))
    u, _ = _carry_propagate(variant)(s, k, 0, DATA_BITS)
    return u & mask(COLSUM_BITS)


def column_diff(i, c):
    """v = i - c as a 9-bit two's-complement word (int or array)."""
    v, _ = ripple_add_words(i, ~c & mask(COLDIFF_BITS), 1, COLDIFF_BITS)
    return v


def gx_value(c, f, i, u_now, u_old, variant: Variant, probe=None):
    m = mask(DATA_BITS)
    if variant is Variant.SEPARATED:
        r, _ = ripple_add_words(u_now, ~u_old & m, 1, DATA_BITS)
    else:
        s, k = p2pp_words(c, f, i, DATA_BITS)
        s2, k2 = ppn_words(s, k, u_old, DATA_BITS)
        _record(probe, "gx.p2pp", (s, k))
        _record(probe, "gx.ppn", (s2, k2))
        r, _ = _carry_propagate(variant)(s2, k2, 0, DATA_BITS)
    _record(probe, "gx.word", r)
    return to_signed(r, DATA_BITS)


def gy_value(v_now, v_prev, v_prevprev, variant: Variant, probe=None):
    m = mask(DATA_BITS)
    x = sign_extend(v_now, COLDIFF_BITS, DATA_BITS)
    y = sign_extend(v_prev, COLDIFF_BITS, DATA_BITS)
    z = sign_extend(v_prevprev, COLDIFF_BITS, DATA_BITS)
    if variant is Variant.SEPARATED:
        t, _ = ripple_add_words(x, (y << 1) & m, 0, DATA_BITS)
        r, _ = ripple_add_words(t, z, 0, DATA_BITS)
    else:
        s, k = p2pp_words(x, y, z, DATA_BITS)
        _record(probe, "gy.p2pp", (s, k))
        r, _ = _carry_propagate(variant)(s, k, 0, DATA_BITS)
    _record(probe, "gy.word", r)
    return to_signed(r, DATA_BITS)


def _tree_gradient(pixels, kernel):
    # Un-optimised 9-leaf tree: zero leaves stay in, negative leaves are
    # negated by invert-plus-one before entering the tree.
    m = mask(DATA_BITS)
    leaves = []
    for coef, p in zip((v for row in kernel.rows for v in row), pixels):
        mag = abs(coef)
        leaf = p << 1 if mag == 2 else (p if mag == 1 else p * 0)
        if coef < 0:
            leaf, _ = ripple_add_words(~leaf & m, 0, 1, DATA_BITS)
        leaves.append(leaf)
    while len(leaves) > 1:
        nxt = [ripple_add_words(leaves[j], leaves[j + 1], 0, DATA_BITS)[0]
               for j in range(0, len(leaves) - 1, 2)]
        if len(leaves) % 2:
            nxt.append(leaves[-1])
        leaves = nxt
    return to_signed(leaves[0], DATA_BITS)


def adder_tree_gradients(window: Window3x3):
    """(gx, gy) straight from the nine window pixels."""
    sx, sy = sobel_kernels()
    pixels = [v for row in window.rows() for v in row]
    return _tree_gradient(pixels, sx), _tree_gradient(pixels, sy)


def gx_datapath(window: Window3x3, caches: SideCaches, variant: Variant, probe=None):
    """Horizontal gradient for one cycle.

    Returns ``(gx, caches)``; ``gx`` is None while fewer than two column
    sums are cached.  Reads c, f, i and a single cached column sum.
    """
    variant = Variant(variant)
    if not variant.cached:
        return adder_tree_gradients(window)[0], caches
    c, f, i = window.c, window.f, window.i
    u_now = column_sum(c, f, i, variant, probe)
    _record(probe, "colsum", u_now)
    gx = None
    if len(caches.colsum) == 2:
        gx = gx_value(c, f, i, u_now, caches.colsum_at(1), variant, probe)
    return gx, caches.with_colsum(u_now)


def gy_datapath(window: Window3x3, caches: SideCaches, variant: Variant, probe=None):
    """Vertical gradient for one cycle; reads i, c and two cached column differences."""
    variant = Variant(variant)
    if not variant.cached:
        return adder_tree_gradients(window)[1], caches
    v_now = column_diff(window.i, window.c)
    _record(probe, "coldiff", v_now)
    gy = None
    if len(caches.coldiff) == 2:
        gy = gy_value(v_now, caches.coldiff_at(0), caches.coldiff_at(1), variant, probe)
    return gy, caches.with_coldiff(v_now)


# --------------------------------------------------------------------------
# output stages
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientSample:
    gx: int
    gy: int

    def __post_init__(self):
        for name in ("gx", "gy"):
            v = getattr(self, name)
            if not -GRADIENT_LIMIT <= v <= GRADIENT_LIMIT:
                raise ValueError(f"{name}={v} outside +/-{GRADIENT_LIMIT}")


def _isqrt_array(v: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    r -= (r * r > v).astype(np.int64)
    r += ((r + 1) * (r + 1) <= v).astype(np.int64)
    return r


def magnitude_map(gx, gy, norm: Norm = Norm.L2) -> np.ndarray:
    gx = np.asarray(gx, dtype=np.int64)
    gy = np.asarray(gy, dtype=np.int64)
    if Norm(norm) is Norm.L2:
        mag = _isqrt_array(gx * gx + gy * gy)
    else:
        mag = np.abs(gx) + np.abs(gy)
    return np.minimum(mag, 255)


def magnitude(g: GradientSample, norm: Norm = Norm.L2) -> int:
    if Norm(norm) is Norm.L2:
        return min(math.isqrt(g.gx * g.gx + g.gy * g.gy), 255)
    return min(abs(g.gx) + abs(g.gy), 255)


def threshold(m: int, t: int) -> int:
    return 255 if m >= t else 0


def _finish(mag, params: EdgeParams):
    if params.threshold is None:
        return mag
    return np.where(mag >= params.threshold, 255, 0)


# --------------------------------------------------------------------------
# cycle-level pipeline
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeSample:
    frame: int
    y: int
    x: int
    gx: int
    gy: int
    value: int


class StreamingPipeline:
    """Pixel cache plus one variant's datapath, clocked one event at a time.

    ``probe``, when given, is called as ``probe(cycle, cache, record)`` for
    every emitted sample, where ``record`` maps datapath node names to raw
    words captured during that cycle.
    """

    def __init__(self, line_width: int, variant: Variant = Variant.LOOKAHEAD_COMPRESSOR,
                 params: EdgeParams = EdgeParams(), probe=None):
        self.variant = Variant(variant)
        self.params = params
        self.cache = PixelCache(line_width)
        self.side = SideCaches()
        self.frame = 0
        self.cycles = 0
        self.probe = probe

    def feed(self, event: StreamEvent) -> Optional[EdgeSample]:
        if isinstance(event, EndOfFrame):
            self.cache.push(event)
            self.cache.clear()
            self.side = SideCaches()
            self.frame += 1
            return None
        window = self.cache.push(event)
        if not isinstance(event, Pixel):
            return None
        self.cycles += 1
        row, col = self.cache.position
        if col == 0:
            self.side = SideCaches()
        record = {} if self.probe is not None else None
        gx = gy = None
        if self.variant.cached and self.cache.column_ready:
            regs = self.cache.registers()
            gx, self.side = gx_datapath(regs, self.side, self.variant, record)
            gy, self.side = gy_datapath(regs, self.side, self.variant, record)
        if window is None:
            return None
        if not self.variant.cached:
            gx, gy = adder_tree_gradients(window)
        g = GradientSample(gx, gy)
        value = magnitude(g, self.params.norm)
        if self.params.threshold is not None:
            value = threshold(value, self.params.threshold)
        if self.probe is not None:
            record["window"] = window
            record["side"] = self.side
            self.probe(self.cycles - 1, self.cache, record)
        return EdgeSample(self.frame, row - 1, col - 1, gx, gy, value)


def process_stream(events: Iterable[StreamEvent], width: int,
                   variant: Variant = Variant.LOOKAHEAD_COMPRESSOR,
                   params: EdgeParams = EdgeParams()) -> Iterator[EdgeSample]:
    """Edge samples for an event stream; frames are separated by EndOfFrame."""
    pipe = StreamingPipeline(width, variant, params)
    for event in events:
        sample = pipe.feed(event)
        if sample is not None:
            yield sample


# --------------------------------------------------------------------------
# frame engine
# --------------------------------------------------------------------------

@dataclass
class EdgeImage:
    pixels: np.ndarray
    gx: np.ndarray
    gy: np.ndarray
    variant: Variant
    cycles: int
    first_output_cycle: int
    samples: int = field(default=0)


def _vector_gradients(img: np.ndarray, variant: Variant):
    h, w = img.shape
    stream = img.ravel().astype(np.int64)
    n = np.arange(2 * w, h * w)
    valid = n % w >= 2
    nv = n[valid]

    def tap(delay, idx=n):
        return stream[idx - delay]

    if variant.cached:
        c, f, i = tap(2 * w), tap(w), tap(0)
        u = column_sum(c, f, i, variant)
        v = column_diff(i, c)
        j = np.nonzero(valid)[0]
        gx = gx_value(c[j], f[j], i[j], u[j], u[j - 2], variant)
        gy = gy_value(v[j], v[j - 1], v[j - 2], variant)
    else:
        sx, sy = sobel_kernels()
        delays = (2 * w + 2, 2 * w + 1, 2 * w, w + 2, w + 1, w, 2, 1, 0)
        pixels = [tap(d, nv) for d in delays]
        gx = _tree_gradient(pixels, sx)
        gy = _tree_gradient(pixels, sy)
    return nv // w - 1, nv % w - 1, gx, gy


def _stream_gradients(img: np.ndarray, variant: Variant):
    pipe = StreamingPipeline(img.shape[1], variant)
    ys, xs, gxs, gys = [], [], [], []
    for event in frame_events(img):
        s = pipe.feed(event)
        if s is not None:
            ys.append(s.y)
            xs.append(s.x)
            gxs.append(s.gx)
            gys.append(s.gy)
    return (np.array(ys, dtype=np.int64), np.array(xs, dtype=np.int64),
            np.array(gxs, dtype=np.int64), np.array(gys, dtype=np.int64))


def process_frame(image, variant: Variant = Variant.LOOKAHEAD_COMPRESSOR,
                  params: EdgeParams = EdgeParams(), engine: str = "vector") -> EdgeImage:
    """Run one frame through the pipeline; the one-pixel border is zero."""
    img = check_image(image)
    variant = Variant(variant)
    if engine == "vector":
        ys, xs, gx, gy = _vector_gradients(img, variant)
    elif engine == "stream":
        ys, xs, gx, gy = _stream_gradients(img, variant)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    h, w = img.shape
    gx_map = np.zeros((h, w), dtype=np.int64)
    gy_map = np.zeros((h, w), dtype=np.int64)
    gx_map[ys, xs] = gx
    gy_map[ys, xs] = gy
    out = np.zeros((h, w), dtype=np.uint8)
    out[ys, xs] = _finish(magnitude_map(gx, gy, params.norm), params)
    return EdgeImage(out, gx_map, gy_map, variant, cycles=h * w,
                     first_output_cycle=2 * w + 2, samples=len(ys))


__all__ = [
    "Variant", "Pixel", "HBLANK", "VBLANK", "END_OF_FRAME", "HBlank", "VBlank",
    "EndOfFrame", "Window3x3", "PixelCache", "SideCaches", "GradientSample",
    "EdgeSample", "EdgeImage", "StreamingPipeline", "FramingError",
    "StreamStateError", "ImageError", "frame_events", "gx_datapath", "gy_datapath",
    "adder_tree_gradients", "magnitude", "magnitude_map", "threshold",
    "process_frame", "process_stream",
]
