"""Binned calibration metrics (ECE, SCE, ACE) and calibration losses.

Binning follows the left-open, right-closed convention: confidence c lands in
bin m when (m-1)/M < c <= m/M. A class probability of exactly 0 (possible in
the classwise SCE/ACE columns, never for a top-1 confidence) is clamped into
bin 1. Empty bins carry zero weight. All reductions run in a fixed order so
repeated calls are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import top1, validate_probs
from .errors import ValidationError

DEFAULT_BINS = 15
DEFAULT_RANGES = 15
LOG_CLAMP = 1e-12

SCHEMES = ("equal_width", "equal_mass")


@dataclass(frozen=True)
class BinSpec:
    """Binning scheme and bin count M."""

    scheme: str = "equal_width"
    num_bins: int = DEFAULT_BINS

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown binning scheme '{self.scheme}'")
        if self.num_bins < 1:
            raise ValidationError("num_bins must be >= 1")


@dataclass(frozen=True)
class MetricReport:
    """Summary of the calibration metrics for one prediction set."""

    ece: float
    sce: float
    ace: float
    nll: float
    num_bins_used: int
    n: int

    def to_dict(self) -> dict:
        return {
            "ece": self.ece,
            "sce": self.sce,
            "ace": self.ace,
            "nll": self.nll,
            "num_bins_used": self.num_bins_used,
            "n": self.n,
        }


def bin_index(confidence: float, num_bins: int) -> int:
    """Bin number in [1, M] for a confidence in (0, 1].

    Computed as ceil(c*M) clamped to [1, M], then nudged so the result agrees
    exactly with interval membership against the float bin edges (m-1)/M and
    m/M, which matters when c*M rounds across an integer.
    """
    if num_bins < 1:
        raise ValidationError("num_bins must be >= 1")
    if not 0.0 < confidence <= 1.0:
        raise ValidationError(f"confidence {confidence} outside (0,1]")
    m = int(np.ceil(confidence * num_bins))
    m = min(max(m, 1), num_bins)
    while m > 1 and confidence <= (m - 1) / num_bins:
        m -= 1
    while m < num_bins and confidence > m / num_bins:
        m += 1
    return m


def _bin_indices(values: np.ndarray, num_bins: int) -> np.ndarray:
    """Vectorized bin_index over values in [0, 1]; zeros clamp into bin 1."""
    m = np.ceil(values * num_bins).astype(np.int64)
    np.clip(m, 1, num_bins, out=m)
    for _ in range(2):
        down = (m > 1) & (values <= (m - 1) / num_bins)
        up = (m < num_bins) & (values > m / num_bins)
        if not down.any() and not up.any():
            break
        m = m - down.astype(np.int64) + up.astype(np.int64)
    return m


def _equal_mass_uppers(values: np.ndarray, num_bins: int) -> np.ndarray:
    """Upper bin edges putting ~N/M samples per bin (larger bins first)."""
    n = values.size
    if n < num_bins:
        raise ValidationError(f"equal_mass binning needs N >= M ({n} < {num_bins})")
    ordered = np.sort(values, kind="stable")
    base, rem = divmod(n, num_bins)
    sizes = np.full(num_bins, base, dtype=np.int64)
    sizes[:rem] += 1
    ends = np.cumsum(sizes)
    uppers = ordered[ends - 1]
    uppers[-1] = 1.0
    return uppers


def _mass_bin_indices(values: np.ndarray, uppers: np.ndarray) -> np.ndarray:
    # first bin whose upper edge is >= value; duplicates collapse downward
    return np.searchsorted(uppers, values, side="left") + 1


def _accumulate(indices: np.ndarray, confidences: np.ndarray,
                correct: np.ndarray, num_bins: int):
    """Per-bin count, accuracy, and mean confidence; zeros for empty bins.

    Members are summed in ascending value order within each bin, so the
    result is independent of the sample order (the correctness sums are 0/1
    floats and exact regardless).
    """
    order = np.lexsort((confidences, indices))
    indices = indices[order]
    confidences = confidences[order]
    correct = correct[order]
    counts = np.bincount(indices - 1, minlength=num_bins)
    conf_sums = np.bincount(indices - 1, weights=confidences, minlength=num_bins)
    acc_sums = np.bincount(indices - 1, weights=correct, minlength=num_bins)
    denom = np.maximum(counts, 1)
    populated = counts > 0
    accuracy = np.where(populated, acc_sums / denom, 0.0)
    mean_conf = np.where(populated, conf_sums / denom, 0.0)
    return counts, accuracy, mean_conf


def _weighted_gap_sum(counts, accuracy, mean_conf, n: int) -> float:
    """Sigma_m (|B_m|/N) * |acc - conf|, accumulated left to right."""
    total = 0.0
    for m in range(counts.shape[0]):
        if counts[m]:
            total += (counts[m] / n) * abs(accuracy[m] - mean_conf[m])
    return total


def ece(probs, labels, spec: BinSpec = BinSpec()) -> float:
    """Expected calibration error: confidence-binned |accuracy - confidence|."""
    p = validate_probs(probs)
    y = np.asarray(labels, dtype=np.int64)
    n = p.shape[0]
    if y.shape != (n,):
        raise ValidationError("labels must match the probability rows")
    yhat, conf = top1(p)
    correct = (yhat == y).astype(np.float64)
    if spec.scheme == "equal_mass":
        uppers = _equal_mass_uppers(conf, spec.num_bins)
        idx = _mass_bin_indices(conf, uppers)
    else:
        idx = _bin_indices(conf, spec.num_bins)
    counts, accuracy, mean_conf = _accumulate(idx, conf, correct, spec.num_bins)
    return _weighted_gap_sum(counts, accuracy, mean_conf, n)


def sce(probs, labels, spec: BinSpec = BinSpec()) -> float:
    """Static calibration error: classwise equal-width binning, averaged over K."""
    if spec.scheme != "equal_width":
        raise ValidationError("sce requires the equal_width scheme")
    p = validate_probs(probs)
    y = np.asarray(labels, dtype=np.int64)
    n, k = p.shape
    if y.shape != (n,):
        raise ValidationError("labels must match the probability rows")
    total = 0.0
    for cls in range(k):
        col = p[:, cls]
        member = (y == cls).astype(np.float64)
        idx = _bin_indices(col, spec.num_bins)
        counts, accuracy, mean_conf = _accumulate(idx, col, member, spec.num_bins)
        total += _weighted_gap_sum(counts, accuracy, mean_conf, n)
    return total / k


def ace(probs, labels, num_ranges: int = DEFAULT_RANGES) -> float:
    """Adaptive calibration error: classwise equal-mass ranges.

    Per class the samples are sorted by that class's probability (ties keep
    sample order) and cut into R contiguous ranges, the larger ones first.
    """
    p = validate_probs(probs)
    y = np.asarray(labels, dtype=np.int64)
    n, k = p.shape
    if y.shape != (n,):
        raise ValidationError("labels must match the probability rows")
    if num_ranges < 1:
        raise ValidationError("num_ranges must be >= 1")
    if num_ranges > n:
        raise ValidationError(f"num_ranges {num_ranges} exceeds sample count {n}")
    base, rem = divmod(n, num_ranges)
    sizes = [base + 1] * rem + [base] * (num_ranges - rem)
    total = 0.0
    for cls in range(k):
        col = p[:, cls]
        member = (y == cls).astype(np.float64)
        order = np.argsort(col, kind="stable")
        start = 0
        for size in sizes:
            chunk = order[start:start + size]
            start += size
            gap = abs(float(member[chunk].mean()) - float(col[chunk].mean()))
            total += gap
    return total / (k * num_ranges)


def _true_class_probs(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    p = validate_probs(probs)
    y = np.asarray(labels, dtype=np.int64)
    n = p.shape[0]
    if y.shape != (n,):
        raise ValidationError("labels must match the probability rows")
    if y.size and (y.min() < 0 or y.max() >= p.shape[1]):
        raise ValidationError("label out of range for probability matrix")
    return np.maximum(p[np.arange(n), y], LOG_CLAMP)


def nll(probs, labels) -> float:
    """Mean negative log-likelihood; true-class probability clamped at 1e-12."""
    pt = _true_class_probs(probs, labels)
    return float(np.mean(-np.log(pt)))


def focal_loss(probs, labels, gamma: float) -> float:
    """Mean focal loss -(1-p)^gamma * log(p); gamma=0 reduces to the NLL."""
    if gamma < 0:
        raise ValidationError("gamma must be >= 0")
    pt = _true_class_probs(probs, labels)
    return float(np.mean(-((1.0 - pt) ** gamma) * np.log(pt)))


def compute_report(probs, labels, num_bins: int = DEFAULT_BINS,
                   num_ranges: int = DEFAULT_RANGES) -> MetricReport:
    """All metrics in one pass over a prediction set."""
    p = validate_probs(probs)
    spec = BinSpec("equal_width", num_bins)
    return MetricReport(
        ece=ece(p, labels, spec),
        sce=sce(p, labels, spec),
        ace=ace(p, labels, num_ranges),
        nll=nll(p, labels),
        num_bins_used=num_bins,
        n=p.shape[0],
    )
