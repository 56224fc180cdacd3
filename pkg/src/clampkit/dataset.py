"""Datasets of raw classifier outputs (logits) or raw inputs (features).

CSV is the interchange format: ``logit_0,...,logit_{K-1},label`` for logit
datasets and ``x_0,...,x_{D-1},label`` for feature datasets, decimal text with
a ``.`` separator. An optional JSON manifest ``{"name": ..., "num_classes": ...}``
may sit beside a features file to pin the class count before a model is paired.

All operations here are pure; datasets are immutable after construction (their
arrays are marked read-only) and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

ROW_SUM_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _check_labels(labels: np.ndarray, num_classes: int | None, what: str) -> None:
    if labels.ndim != 1:
        raise ValidationError(f"{what}: labels must be one-dimensional")
    if labels.size and labels.min() < 0:
        raise ValidationError(f"{what}: label {int(labels.min())} out of range")
    if num_classes is not None and labels.size and labels.max() >= num_classes:
        raise ValidationError(
            f"{what}: label {int(labels.max())} out of range [0,{num_classes})"
        )


@dataclass(frozen=True)
class LogitDataset:
    """N samples of K unnormalized class scores with ground-truth labels."""

    logits: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if logits.ndim != 2:
            raise ValidationError("logits must be an NxK matrix")
        n, k = logits.shape
        if n < 1:
            raise ValidationError("dataset must contain at least one sample")
        if k < 2:
            raise ValidationError(f"need at least 2 classes, got {k}")
        if not np.isfinite(logits).all():
            raise ValidationError("logits contain NaN or Inf")
        if labels.shape != (n,):
            raise ValidationError(f"expected {n} labels, got {labels.shape}")
        _check_labels(labels, k, "logit dataset")
        object.__setattr__(self, "logits", _freeze(logits))
        object.__setattr__(self, "labels", _freeze(labels))

    @property
    def num_samples(self) -> int:
        return self.logits.shape[0]

    @property
    def num_classes(self) -> int:
        return self.logits.shape[1]


@dataclass(frozen=True)
class InputDataset:
    """N raw feature vectors with labels, to be pushed through a model."""

    features: np.ndarray
    labels: np.ndarray
    name: str = ""
    num_classes: int | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValidationError("features must be an NxD matrix")
        n, d = features.shape
        if n < 1:
            raise ValidationError("dataset must contain at least one sample")
        if d < 1:
            raise ValidationError("features must have at least one column")
        if not np.isfinite(features).all():
            raise ValidationError("features contain NaN or Inf")
        if labels.shape != (n,):
            raise ValidationError(f"expected {n} labels, got {labels.shape}")
        _check_labels(labels, self.num_classes, "input dataset")
        object.__setattr__(self, "features", _freeze(features))
        object.__setattr__(self, "labels", _freeze(labels))

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Prediction:
    """Top-1 class and its softmax confidence for one sample."""

    predicted_class: int
    confidence: float


# ---------------------------------------------------------------------------
# CSV parsing / writing


def _parse_csv(text: str, prefix: str, name: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty CSV: missing header row") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[-1] != "label":
        raise ValidationError(
            f"malformed header: expected {prefix}_0,...,{prefix}_{{K-1}},label"
        )
    k = len(header) - 1
    expected = [f"{prefix}_{i}" for i in range(k)]
    if header[:-1] != expected:
        raise ValidationError(
            f"malformed header: expected columns {','.join(expected)},label"
        )

    values = []
    labels = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != k + 1:
            raise ValidationError(
                f"row {line_no}: expected {k + 1} fields, got {len(row)}"
            )
        try:
            vals = [float(v) for v in row[:-1]]
        except ValueError:
            raise ValidationError(f"row {line_no}: non-numeric field") from None
        for v in vals:
            if math.isnan(v) or math.isinf(v):
                raise ValidationError(f"row {line_no}: NaN/Inf entry")
        try:
            label = int(row[-1])
        except ValueError:
            raise ValidationError(f"row {line_no}: non-integer label") from None
        values.append(vals)
        labels.append(label)
    if not values:
        raise ValidationError("CSV contains no data rows")
    return np.array(values, dtype=np.float64), np.array(labels, dtype=np.int64), k


def parse_logits_csv(text: str, name: str = "") -> LogitDataset:
    logits, labels, k = _parse_csv(text, "logit", name)
    bad = labels[(labels < 0) | (labels >= k)]
    if bad.size:
        raise ValidationError(f"label {int(bad[0])} out of range [0,{k})")
    return LogitDataset(logits=logits, labels=labels, name=name)


def parse_features_csv(text: str, name: str = "", num_classes: int | None = None) -> InputDataset:
    features, labels, _ = _parse_csv(text, "x", name)
    return InputDataset(features=features, labels=labels, name=name, num_classes=num_classes)


def _read_text(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"missing file: {p}")
    return p.read_text(encoding="utf-8")


def _sidecar_manifest(path) -> tuple[str, int | None]:
    """Read the optional ``<stem>.manifest.json`` next to a CSV."""
    p = Path(path)
    manifest = p.with_suffix(".manifest.json")
    name = p.stem
    num_classes = None
    if manifest.is_file():
        try:
            data = json.loads(manifest.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed manifest {manifest}: {exc}") from None
        name = data.get("name", name)
        num_classes = data.get("num_classes")
    return name, num_classes


def load_logits_csv(path) -> LogitDataset:
    """Load and validate a ``logit_0..logit_{K-1},label`` CSV file."""
    name, num_classes = _sidecar_manifest(path)
    ds = parse_logits_csv(_read_text(path), name=name)
    if num_classes is not None and num_classes != ds.num_classes:
        raise ValidationError(
            f"manifest num_classes {num_classes} != CSV columns {ds.num_classes}"
        )
    return ds


def load_features_csv(path) -> InputDataset:
    """Load and validate an ``x_0..x_{D-1},label`` CSV file."""
    name, num_classes = _sidecar_manifest(path)
    return parse_features_csv(_read_text(path), name=name, num_classes=num_classes)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def logits_csv_text(dataset: LogitDataset) -> str:
    k = dataset.num_classes
    lines = [",".join([f"logit_{i}" for i in range(k)] + ["label"])]
    for row, label in zip(dataset.logits, dataset.labels):
        lines.append(",".join([_fmt(v) for v in row] + [str(int(label))]))
    return "\n".join(lines) + "\n"


def features_csv_text(dataset: InputDataset) -> str:
    d = dataset.input_dim
    lines = [",".join([f"x_{i}" for i in range(d)] + ["label"])]
    for row, label in zip(dataset.features, dataset.labels):
        lines.append(",".join([_fmt(v) for v in row] + [str(int(label))]))
    return "\n".join(lines) + "\n"


def write_logits_csv(dataset: LogitDataset, path) -> None:
    Path(path).write_text(logits_csv_text(dataset), encoding="utf-8")


def write_features_csv(dataset: InputDataset, path) -> None:
    Path(path).write_text(features_csv_text(dataset), encoding="utf-8")


# ---------------------------------------------------------------------------
# Probabilities and predictions


def softmax(x) -> np.ndarray:
    """Row-wise stable softmax; accepts a LogitDataset or an NxK array.

    The row max is subtracted before exponentiation, so logits of magnitude
    1e3 neither overflow nor underflow the normalization.
    """
    if isinstance(x, LogitDataset):
        x = x.logits
    logits = np.asarray(x, dtype=np.float64)
    if logits.ndim != 2:
        raise ValidationError("softmax expects an NxK matrix")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def validate_probs(probs) -> np.ndarray:
    """Check ProbMatrix invariants: entries in [0,1], rows sum to 1 (1e-9)."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 2:
        raise ValidationError("probability matrix must be NxK with K >= 2")
    if not np.isfinite(p).all():
        raise ValidationError("probability matrix contains NaN or Inf")
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValidationError("probabilities must lie in [0,1]")
    sums = p.sum(axis=1)
    if np.abs(sums - 1.0).max() > ROW_SUM_TOL:
        raise ValidationError("probability rows must sum to 1 within 1e-9")
    return p


def top1(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized argmax/max per row; ties break to the lowest class index."""
    p = np.asarray(probs, dtype=np.float64)
    classes = p.argmax(axis=1)
    confidences = p[np.arange(p.shape[0]), classes]
    return classes, confidences


def predict(probs) -> list[Prediction]:
    """Per-row top-1 prediction with its confidence."""
    p = validate_probs(probs)
    classes, confidences = top1(p)
    return [Prediction(int(c), float(q)) for c, q in zip(classes, confidences)]


# ---------------------------------------------------------------------------
# Calibration/evaluation split


def _take(dataset, idx: np.ndarray):
    if isinstance(dataset, LogitDataset):
        return LogitDataset(dataset.logits[idx], dataset.labels[idx], name=dataset.name)
    return InputDataset(
        dataset.features[idx],
        dataset.labels[idx],
        name=dataset.name,
        num_classes=dataset.num_classes,
    )


def split(dataset, calib_fraction: float, seed: int):
    """Deterministically split into (calibration part, evaluation part).

    The permutation is a pure function of ``seed``; parts are disjoint and
    their union is the full dataset.
    """
    if not 0.0 < calib_fraction < 1.0:
        raise ValidationError("calib_fraction must lie in (0,1)")
    n = dataset.num_samples
    if n < 2:
        raise ValidationError("need at least 2 samples to split")
    n_calib = int(n * calib_fraction)
    if n_calib == 0:
        raise ValidationError("calibration part empty")
    if n_calib == n:
        raise ValidationError("evaluation part empty")
    perm = np.random.default_rng(seed).permutation(n)
    return _take(dataset, perm[:n_calib]), _take(dataset, perm[n_calib:])
