"""Regenerate the blob fixtures under tests/fixtures/.

Trains a small 2-16-3 ReLU MLP on three Gaussian blobs, then samples the
calibration/evaluation splits from wider blobs so the trained network is
overconfident on them. Outputs are committed; rerun only when the recipe
changes. Deterministic given the seed.

Usage: python tools/make_blob_fixture.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from clampkit import InputDataset, jsonio, model_to_dict, write_features_csv  # noqa: E402
from clampkit.model import Layer, MlpModel  # noqa: E402

SEED = 20240817
CENTERS = np.array([[0.0, 2.2], [-2.0, -1.2], [2.0, -1.2]])
TRAIN_STD = 0.65
SHIFT_STD = 1.35
HIDDEN = 16


def sample_blobs(rng, per_class, std):
    xs, ys = [], []
    for cls, center in enumerate(CENTERS):
        xs.append(center + rng.normal(scale=std, size=(per_class, 2)))
        ys.append(np.full(per_class, cls))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    order = rng.permutation(len(y))
    return x[order], y[order]


def train_mlp(rng, x, y, epochs=4000, lr=0.05):
    n = len(y)
    w1 = rng.normal(scale=0.8, size=(HIDDEN, 2))
    b1 = np.zeros(HIDDEN)
    w2 = rng.normal(scale=0.8, size=(3, HIDDEN))
    b2 = np.zeros(3)
    onehot = np.eye(3)[y]
    for _ in range(epochs):
        z1 = x @ w1.T + b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ w2.T + b2
        e = np.exp(z2 - z2.max(axis=1, keepdims=True))
        p = e / e.sum(axis=1, keepdims=True)
        g2 = (p - onehot) / n
        gw2 = g2.T @ a1
        gb2 = g2.sum(axis=0)
        g1 = (g2 @ w2) * (z1 > 0)
        gw1 = g1.T @ x
        gb1 = g1.sum(axis=0)
        w2 -= lr * gw2
        b2 -= lr * gb2
        w1 -= lr * gw1
        b1 -= lr * gb1
    return MlpModel(layers=(Layer(w1, b1, "relu"), Layer(w2, b2, "identity")))


def main():
    rng = np.random.default_rng(SEED)
    x_train, y_train = sample_blobs(rng, 60, TRAIN_STD)
    model = train_mlp(rng, x_train, y_train)

    x_cal, y_cal = sample_blobs(rng, 80, SHIFT_STD)
    x_ev, y_ev = sample_blobs(rng, 80, SHIFT_STD)

    fixtures = ROOT / "tests" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    (fixtures / "blob_model.json").write_text(jsonio.dumps(model_to_dict(model)) + "\n")
    write_features_csv(
        InputDataset(x_cal, y_cal, name="blob_calib", num_classes=3),
        fixtures / "blob_calib.csv",
    )
    write_features_csv(
        InputDataset(x_ev, y_ev, name="blob_eval", num_classes=3),
        fixtures / "blob_eval.csv",
    )
    (fixtures / "blob_calib.manifest.json").write_text(
        '{"name": "blob_calib", "num_classes": 3}\n'
    )
    (fixtures / "blob_eval.manifest.json").write_text(
        '{"name": "blob_eval", "num_classes": 3}\n'
    )

    # quick report so regeneration surfaces obvious calibration drift
    from clampkit import TrainConfig, fit_temperature, LogitDataset, forward, nll, softmax

    logits, _ = forward(model, x_cal, np.zeros(2), 1.0)
    ds = LogitDataset(logits, y_cal)
    report = fit_temperature(ds, TrainConfig())
    base = nll(softmax(logits), y_cal)
    print(f"train acc: {(forward(model, x_train, np.zeros(2), 1.0)[0].argmax(1) == y_train).mean():.3f}")
    print(f"calib acc: {(logits.argmax(1) == y_cal).mean():.3f}")
    print(f"uncalibrated calib NLL: {base:.4f}")
    print(f"temperature fit: T={report.calibrator.temperature:.4f} "
          f"NLL {report.final_loss:.4f} ({100 * (1 - report.final_loss / base):.1f}% better)")


if __name__ == "__main__":
    main()
