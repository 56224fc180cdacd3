"""Shared fixtures: the 4-row logits file and the blob model/data files."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


def _g(x: float) -> str:
    return format(x, ".17g")


# Logits whose softmax confidences are [0.9, 0.9, 0.6, 0.8] (up to rounding),
# labels [1, 0, 0, 1] -> correctness [1, 0, 1, 1].
FOUR_ROW_LOGITS = [
    [0.0, math.log(9.0)],
    [0.0, math.log(9.0)],
    [math.log(1.5), 0.0],
    [0.0, math.log(4.0)],
]
FOUR_ROW_LABELS = [1, 0, 0, 1]

FOUR_ROW_CSV = "logit_0,logit_1,label\n" + "\n".join(
    f"{_g(a)},{_g(b)},{lbl}"
    for (a, b), lbl in zip(FOUR_ROW_LOGITS, FOUR_ROW_LABELS)
) + "\n"

# The same prediction set with the confidences as exact decimal doubles;
# used where bin placement of the 0.6 sample matters.
FOUR_ROW_PROBS = np.array([
    [0.1, 0.9],
    [0.1, 0.9],
    [0.6, 0.4],
    [0.2, 0.8],
])
FOUR_ROW_PROB_LABELS = np.array([1, 0, 0, 1])


@pytest.fixture
def four_row_csv(tmp_path):
    path = tmp_path / "four_row.csv"
    path.write_text(FOUR_ROW_CSV, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def blob_model_path():
    path = FIXTURES / "blob_model.json"
    assert path.is_file(), "run tools/make_blob_fixture.py to regenerate"
    return path


@pytest.fixture(scope="session")
def blob_calib_path():
    path = FIXTURES / "blob_calib.csv"
    assert path.is_file(), "run tools/make_blob_fixture.py to regenerate"
    return path


@pytest.fixture(scope="session")
def blob_eval_path():
    path = FIXTURES / "blob_eval.csv"
    assert path.is_file(), "run tools/make_blob_fixture.py to regenerate"
    return path
