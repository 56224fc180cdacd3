"""Reliability diagrams: per-bin statistics plus a deterministic SVG renderer.

The renderer draws two overlaid bar series per bin (expected accuracy in pink
behind, actual accuracy in blue in front) with a diagonal reference line and
the summary ECE. Identical diagrams always produce byte-identical SVG text.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .dataset import top1, validate_probs
from .errors import ValidationError

ACTUAL_COLOR = "rgb(56,56,255)"
EXPECTED_COLOR = "rgb(255,164,181)"


@dataclass(frozen=True)
class BinStat:
    """One confidence bin: interval, occupancy, accuracy, confidence, gap.

    Empty bins carry sentinel zeros for accuracy/mean_confidence/gap.
    """

    index: int
    lower: float
    upper: float
    count: int
    accuracy: float
    mean_confidence: float
    gap: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "lower": self.lower,
            "upper": self.upper,
            "count": self.count,
            "accuracy": self.accuracy,
            "mean_confidence": self.mean_confidence,
            "gap": self.gap,
        }


@dataclass(frozen=True)
class ReliabilityDiagram:
    bins: tuple[BinStat, ...]
    ece: float
    n: int
    m: int

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "ece": self.ece,
            "bins": [b.to_dict() for b in self.bins],
        }


def build_diagram(probs, labels, num_bins: int) -> ReliabilityDiagram:
    """Bin top-1 confidences and attach the matching ECE."""
    if num_bins < 1:
        raise ValidationError("num_bins must be >= 1")
    p = validate_probs(probs)
    y = np.asarray(labels, dtype=np.int64)
    n = p.shape[0]
    if y.shape != (n,):
        raise ValidationError("labels must match the probability rows")
    yhat, conf = top1(p)
    correct = (yhat == y).astype(np.float64)
    idx = metrics._bin_indices(conf, num_bins)
    counts, accuracy, mean_conf = metrics._accumulate(idx, conf, correct, num_bins)
    ece = metrics._weighted_gap_sum(counts, accuracy, mean_conf, n)
    bins = []
    for m in range(1, num_bins + 1):
        count = int(counts[m - 1])
        acc = float(accuracy[m - 1])
        mc = float(mean_conf[m - 1])
        bins.append(BinStat(
            index=m,
            lower=(m - 1) / num_bins,
            upper=m / num_bins,
            count=count,
            accuracy=acc,
            mean_confidence=mc,
            gap=abs(acc - mc) if count else 0.0,
        ))
    return ReliabilityDiagram(bins=tuple(bins), ece=ece, n=n, m=num_bins)


def _px(v: float) -> str:
    s = format(v, ".2f").rstrip("0").rstrip(".")
    return s if s else "0"


def render_svg(diagram: ReliabilityDiagram, width_px: int = 640, height_px: int = 480,
               expected_bar: str = "midpoint") -> str:
    """Render to SVG 1.1 text.

    ``expected_bar`` selects the pink series height: "midpoint" uses the bin
    midpoint (m - 0.5)/M, "confidence" uses the bin's mean confidence.
    """
    if width_px <= 0 or height_px <= 0:
        raise ValidationError("SVG dimensions must be positive")
    if expected_bar not in ("midpoint", "confidence"):
        raise ValidationError(f"unknown expected_bar mode '{expected_bar}'")

    left, right, top, bottom = 50.0, 15.0, 30.0, 40.0
    pw = width_px - left - right
    ph = height_px - top - bottom
    if pw <= 0 or ph <= 0:
        raise ValidationError("SVG dimensions too small for the plot margins")

    def x(c: float) -> float:
        return left + c * pw

    def y(v: float) -> float:
        return top + ph - v * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px}" height="{height_px}" '
        f'viewBox="0 0 {width_px} {height_px}">',
        f'<rect x="0" y="0" width="{width_px}" height="{height_px}" fill="white"/>',
    ]

    inset_frac = 0.08  # breathing room between neighboring bars
    for b in diagram.bins:
        bw = (b.upper - b.lower) * pw
        bx = x(b.lower) + bw * inset_frac
        bw_in = bw * (1 - 2 * inset_frac)
        expected = (b.lower + b.upper) / 2 if expected_bar == "midpoint" \
            else b.mean_confidence
        if expected > 0:
            parts.append(
                f'<rect class="bar-expected" x="{_px(bx)}" y="{_px(y(expected))}" '
                f'width="{_px(bw_in)}" height="{_px(expected * ph)}" '
                f'fill="{EXPECTED_COLOR}"/>'
            )
        if b.accuracy > 0:
            parts.append(
                f'<rect class="bar-actual" x="{_px(bx)}" y="{_px(y(b.accuracy))}" '
                f'width="{_px(bw_in)}" height="{_px(b.accuracy * ph)}" '
                f'fill="{ACTUAL_COLOR}"/>'
            )

    # diagonal reference: perfect calibration
    parts.append(
        f'<line x1="{_px(x(0))}" y1="{_px(y(0))}" x2="{_px(x(1))}" y2="{_px(y(1))}" '
        f'stroke="gray" stroke-dasharray="4,3" stroke-width="1"/>'
    )

    # axes
    parts.append(
        f'<line x1="{_px(left)}" y1="{_px(top + ph)}" x2="{_px(left + pw)}" '
        f'y2="{_px(top + ph)}" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_px(left)}" y1="{_px(top)}" x2="{_px(left)}" '
        f'y2="{_px(top + ph)}" stroke="black" stroke-width="1"/>'
    )
    for tick in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        tx, ty = x(tick), y(tick)
        label = format(tick, ".1f")
        parts.append(
            f'<line x1="{_px(tx)}" y1="{_px(top + ph)}" x2="{_px(tx)}" '
            f'y2="{_px(top + ph + 4)}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_px(tx)}" y="{_px(top + ph + 16)}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle">{label}</text>'
        )
        parts.append(
            f'<line x1="{_px(left - 4)}" y1="{_px(ty)}" x2="{_px(left)}" '
            f'y2="{_px(ty)}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_px(left - 7)}" y="{_px(ty + 4)}" font-size="11" '
            f'font-family="sans-serif" text-anchor="end">{label}</text>'
        )

    parts.append(
        f'<text x="{_px(left + pw / 2)}" y="{_px(height_px - 6)}" font-size="12" '
        f'font-family="sans-serif" text-anchor="middle">confidence</text>'
    )
    parts.append(
        f'<text x="14" y="{_px(top + ph / 2)}" font-size="12" '
        f'font-family="sans-serif" text-anchor="middle" '
        f'transform="rotate(-90 14 {_px(top + ph / 2)})">accuracy</text>'
    )
    parts.append(
        f'<text class="ece-label" x="{_px(left + 8)}" y="{_px(top - 8)}" '
        f'font-size="13" font-family="sans-serif">ECE = {diagram.ece:.4f} '
        f'(n={diagram.n}, M={diagram.m})</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
