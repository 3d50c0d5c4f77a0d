"""Analytical FPGA cost model for the four datapath variants.

Counts follow the logic-element (LE) mapping of a 4-input-LUT device in
arithmetic mode:

* a 4:2 compressor bit-slice takes three LEs (chain init, P2PP, PPN; the
  chain terminator doubles as the next init), a lone 3:2 layer two;
* a carry-propagate adder takes one LE per bit, plus one LE per split for
  the look-ahead carry predictor;
* line buffers live in RAM-based shift registers ("dedicated" bits), not LEs;
* carry chains live in 16-LE columns; a path that spills into the next
  column pays a global-routing penalty.

Timing is reported as LE levels on the longest register-to-register path.
Absolute frequency is not modelled.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

from .datapath import Variant

COLUMN_LES = 16
CROSSING_PENALTY = 3

# Per-variant control/addressing LEs (row/column counters, enables, tap
# muxing).  Not derivable from the datapath structure; calibrated once
# against published Cyclone IV fitter totals for 512x512x8 and kept here.
CONTROL_LES = {
    Variant.ADDER_TREE: 0,
    Variant.SEPARATED: 138,
    Variant.COMPRESSOR: 74,
    Variant.LOOKAHEAD_COMPRESSOR: 93,
}

# Pixels per line moved between the RAM line buffers and LE registers,
# relative to the (W - 3)-deep baseline, plus extra dedicated bits.
LINE_TAP_OFFSET = {
    Variant.ADDER_TREE: -1,
    Variant.SEPARATED: 1,
    Variant.COMPRESSOR: 0,
    Variant.LOOKAHEAD_COMPRESSOR: 0,
}
EXTRA_DEDICATED_BITS = {
    Variant.ADDER_TREE: 0,
    Variant.SEPARATED: 0,
    Variant.COMPRESSOR: 0,
    Variant.LOOKAHEAD_COMPRESSOR: 14,  # calibrated, no structural breakdown
}

# Reference figures for comparison (512x512, 8-bit, Cyclone IV).
# None marks values the source does not report.
PAPER_REFERENCE = {
    "gumstix-dsp": dict(label="Gumstix DSP", fmax_mhz=43.02, total_les=None,
                        luts=None, logic_registers=None, dedicated_bits=None),
    "sobel-reference": dict(label="Sobel reference design", fmax_mhz=169.12,
                            total_les=2543, luts=None, logic_registers=None,
                            dedicated_bits=None),
    "canny-reference": dict(label="Canny reference design", fmax_mhz=264.00,
                            total_les=1530, luts=None, logic_registers=None,
                            dedicated_bits=None),
    Variant.ADDER_TREE.value: dict(label="Adder Tree", fmax_mhz=172.83, total_les=258,
                                   luts=223, logic_registers=115, dedicated_bits=8128),
    Variant.SEPARATED.value: dict(label="Separated", fmax_mhz=235.18, total_les=272,
                                  luts=180, logic_registers=190, dedicated_bits=8160),
    Variant.COMPRESSOR.value: dict(label="Compressor", fmax_mhz=321.89, total_les=243,
                                   luts=231, logic_registers=100, dedicated_bits=8144),
    Variant.LOOKAHEAD_COMPRESSOR.value: dict(label="Look-Ahead Compressor",
                                             fmax_mhz=338.41, total_les=260, luts=240,
                                             logic_registers=105, dedicated_bits=8158),
}


@dataclass(frozen=True)
class DesignParams:
    width: int = 512
    height: int = 512
    bpp: int = 8
    datapath_width: int = 11
    variant: Variant = Variant.COMPRESSOR

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.width < 3 or self.height < 3:
            raise ValueError("image must be at least 3x3")
        if self.bpp < 1:
            raise ValueError("bits per pixel must be positive")
        if self.datapath_width < self.bpp + 3:
            raise ValueError("datapath width must be at least bpp + 3")
        if self.datapath_width > 32:
            raise ValueError("datapath width above 32 bits")

    @property
    def colsum_width(self) -> int:
        return self.bpp + 2

    @property
    def coldiff_width(self) -> int:
        return self.bpp + 1


@dataclass(frozen=True)
class ResourceReport:
    variant: Variant
    total_les: int
    luts: int
    logic_registers: int
    dedicated_bits: int
    line_buffer_bits: int
    path_levels: int
    column_crossings: int

    def as_dict(self) -> Dict[str, object]:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d


@dataclass(frozen=True)
class _Stage:
    name: str
    levels: int
    chain_les: int  # physical LEs occupied by the longest carry chain on the path

    @property
    def crossings(self) -> int:
        return 1 if self.chain_les > COLUMN_LES else 0


def _datapath_luts(p: DesignParams) -> int:
    dw, cw, vw = p.datapath_width, p.colsum_width, p.coldiff_width
    v = p.variant
    if v is Variant.ADDER_TREE:
        # 9 leaves -> 8 two-operand adders per direction
        return 2 * 8 * dw
    if v is Variant.SEPARATED:
        return (2 * cw + dw) + (vw + 2 * dw)
    gx = 3 * dw + dw + dw        # 4:2 compressor, start-of-pipeline add, final add
    gy = vw + 2 * dw + dw        # difference, 3:2 layer, final add
    luts = gx + gy
    if v is Variant.LOOKAHEAD_COMPRESSOR:
        luts += 3                # one predictor per split adder
    return luts


def _registers(p: DesignParams):
    """(unpacked, packable) logic registers."""
    window = 9 * p.bpp + max(0, -LINE_TAP_OFFSET[p.variant]) * 2 * p.bpp
    outputs = 2 * p.datapath_width
    packable = outputs
    if p.variant.cached:
        packable += 2 * p.colsum_width + 2 * p.coldiff_width
    if p.variant is Variant.SEPARATED:
        packable += p.colsum_width + p.coldiff_width   # extra pipeline stage
    return window, packable


def _stages(p: DesignParams) -> List[_Stage]:
    dw, cw, vw = p.datapath_width, p.colsum_width, p.coldiff_width
    v = p.variant
    if v is Variant.ADDER_TREE:
        depth = math.ceil(math.log2(9))
        return [_Stage("tree", depth * dw, dw)]
    if v is Variant.SEPARATED:
        return [_Stage("colsum", 2 * cw, cw), _Stage("gx", dw, dw),
                _Stage("coldiff", vw, vw), _Stage("gy", 2 * dw, dw)]
    if v is Variant.LOOKAHEAD_COMPRESSOR:
        final = math.ceil(dw / 2) + 1
    else:
        final = dw
    return [
        _Stage("colsum", 1 + final, 3 * dw),
        _Stage("gx", 2 + final, 3 * dw),
        _Stage("coldiff", vw, vw),
        _Stage("gy", 1 + final, 2 * dw),
    ]


def critical_path(p: DesignParams):
    """(levels, column crossings) of the slowest pipeline stage."""
    worst = max(_stages(p), key=lambda s: s.levels + CROSSING_PENALTY * s.crossings)
    return worst.levels + CROSSING_PENALTY * worst.crossings, worst.crossings


def critical_path_levels(p: DesignParams) -> int:
    return critical_path(p)[0]


def line_buffer_bits(p: DesignParams) -> int:
    return 2 * (p.width - 3) * p.bpp


def estimate_resources(p: DesignParams) -> ResourceReport:
    v = p.variant
    control = CONTROL_LES[v]
    luts = _datapath_luts(p) + control
    unpacked, packable = _registers(p)
    regs = unpacked + packable
    packed = min(packable, luts)
    total = luts + regs - packed
    dedicated = max(0, line_buffer_bits(p) + 2 * LINE_TAP_OFFSET[v] * p.bpp
                    + EXTRA_DEDICATED_BITS[v])
    levels, crossings = critical_path(p)
    return ResourceReport(v, total, luts, regs, dedicated, line_buffer_bits(p),
                          levels, crossings)


METRICS = ("total_les", "luts", "logic_registers", "dedicated_bits")


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    modeled: Optional[float]
    paper: Optional[float]

    @property
    def delta(self) -> Optional[float]:
        if self.modeled is None or self.paper is None:
            return None
        return self.modeled - self.paper

    @property
    def relative(self) -> Optional[float]:
        if self.delta is None or not self.paper:
            return None
        return self.delta / self.paper


def compare_with_paper(report: Optional[ResourceReport], design) -> List[ComparisonRow]:
    """Modeled vs published values for ``design`` (a variant or reference name)."""
    key = design.value if isinstance(design, Variant) else str(design)
    if key not in PAPER_REFERENCE:
        raise KeyError(f"unknown design {design!r}")
    ref = PAPER_REFERENCE[key]
    rows = []
    for metric in METRICS:
        modeled = getattr(report, metric) if report is not None else None
        rows.append(ComparisonRow(metric, modeled, ref[metric]))
    rows.append(ComparisonRow("fmax_mhz", None, ref["fmax_mhz"]))
    return rows


def _fmt(value, pct=False) -> str:
    if value is None:
        return "NA"
    if pct:
        return f"{value:+.1%}"
    if isinstance(value, float) and not value.is_integer():
        return f"{value:.2f}"
    return f"{int(value)}"


def render_text(reports: List[ResourceReport]) -> str:
    lines = []
    header = (f"{'variant':<24}{'LEs':>6}{'LUTs':>6}{'regs':>6}{'dedicated':>11}"
              f"{'levels':>8}{'xings':>7}")
    lines.append(header)
    lines.append("-" * len(header))
    for r in reports:
        lines.append(f"{r.variant.label:<24}{r.total_les:>6}{r.luts:>6}"
                     f"{r.logic_registers:>6}{r.dedicated_bits:>11}"
                     f"{r.path_levels:>8}{r.column_crossings:>7}")
    for r in reports:
        lines.append("")
        lines.append(f"{r.variant.label} vs published")
        lines.append(f"  {'metric':<18}{'model':>8}{'paper':>9}{'delta':>8}{'rel':>9}")
        for row in compare_with_paper(r, r.variant):
            lines.append(f"  {row.metric:<18}{_fmt(row.modeled):>8}{_fmt(row.paper):>9}"
                         f"{_fmt(row.delta):>8}{_fmt(row.relative, pct=True):>9}")
    return "\n".join(lines) + "\n"


def render_kv(reports: List[ResourceReport]) -> str:
    """Stable ``key=value`` lines; keys are namespaced resource./path./paper."""
    out = []
    for r in reports:
        v = r.variant.value
        for metric in METRICS + ("line_buffer_bits",):
            out.append(f"resource.{v}.{metric}={getattr(r, metric)}")
        out.append(f"path.{v}.levels={r.path_levels}")
        out.append(f"path.{v}.column_crossings={r.column_crossings}")
        for row in compare_with_paper(r, r.variant):
            out.append(f"paper.{v}.{row.metric}={_fmt(row.paper)}")
            if row.modeled is not None:
                out.append(f"paper.{v}.{row.metric}.delta={_fmt(row.delta)}")
    return "\n".join(out) + "\n"


def parse_kv(text: str) -> Dict[str, str]:
    pairs = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            pairs[key] = value
    return pairs
