"""Post-hoc calibrators: temperature scaling and joint input/output clamping.

Temperature scaling minimizes the calibration loss of softmax(logits / T)
over a single scalar via golden-section search. The joint calibrator adds a
universal input perturbation delta fitted together with T by full-batch
gradient descent through the frozen model. Both fits track the best iterate
seen, so the reported final loss never exceeds the initial loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import metrics, model as model_mod
from .dataset import InputDataset, LogitDataset, softmax
from .errors import DimensionMismatchError, ValidationError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # inverse golden ratio
T_TOL = 1e-6
LOSSES = ("cross_entropy", "focal")


@dataclass(frozen=True)
class Calibrator:
    """A fitted output transformation: none, temperature, or clamping."""

    kind: str
    temperature: float | None = None
    delta: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "temperature", "neural_clamping"):
            raise ValidationError(f"unknown calibrator kind '{self.kind}'")
        if self.kind == "none":
            if self.temperature is not None or self.delta is not None:
                raise ValidationError("kind=none carries no parameters")
            return
        if self.temperature is None or not self.temperature > 0:
            raise ValidationError("calibrator temperature must be positive")
        if self.kind == "neural_clamping":
            d = np.asarray(self.delta, dtype=np.float64)
            if d.ndim != 1 or not np.isfinite(d).all():
                raise ValidationError("delta must be a finite vector")
            d = np.ascontiguousarray(d)
            d.flags.writeable = False
            object.__setattr__(self, "delta", d)
        elif self.delta is not None:
            raise ValidationError("temperature calibrator carries no delta")

    def to_dict(self) -> dict:
        if self.kind == "none":
            return {"kind": "none"}
        if self.kind == "temperature":
            return {"kind": "temperature", "T": self.temperature}
        return {
            "kind": "neural_clamping",
            "T": self.temperature,
            "delta": self.delta.tolist(),
        }

    @staticmethod
    def from_dict(data: dict) -> "Calibrator":
        if not isinstance(data, dict) or "kind" not in data:
            raise ValidationError("calibrator JSON must contain 'kind'")
        kind = data["kind"]
        if kind == "none":
            return Calibrator(kind="none")
        if "T" not in data:
            raise ValidationError("calibrator JSON missing 'T'")
        if kind == "temperature":
            return Calibrator(kind="temperature", temperature=float(data["T"]))
        if kind == "neural_clamping":
            if "delta" not in data:
                raise ValidationError("neural_clamping calibrator missing 'delta'")
            return Calibrator(
                kind="neural_clamping",
                temperature=float(data["T"]),
                delta=np.asarray(data["delta"], dtype=np.float64),
            )
        raise ValidationError(f"unknown calibrator kind '{kind}'")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for both fitters.

    ``steps`` is the number of gradient updates for the clamping fit (0 keeps
    the initialization); the temperature fit iterates golden-section rounds
    until the bracket shrinks below 1e-6 instead. ``gamma`` only applies when
    ``loss == "focal"``. ``delta_penalty`` adds an optional L2 term on delta
    (off by default).
    """

    loss: str = "cross_entropy"
    gamma: float = 2.0
    steps: int = 1000
    lr_delta: float = 0.01
    lr_temperature: float = 0.01
    t_init: float = 1.0
    t_min: float = 0.05
    t_max: float = 20.0
    seed: int = 0
    delta_penalty: float = 0.0

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValidationError(f"unknown loss '{self.loss}'")
        if self.gamma < 0:
            raise ValidationError("gamma must be >= 0")
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if self.lr_delta < 0 or self.lr_temperature < 0:
            raise ValidationError("learning rates must be >= 0")
        if not self.t_init > 0:
            raise ValidationError("t_init must be positive")
        if not 0 < self.t_min < self.t_max:
            raise ValidationError("need 0 < t_min < t_max")
        if self.delta_penalty < 0:
            raise ValidationError("delta_penalty must be >= 0")

    def to_dict(self) -> dict:
        return {
            "loss": self.loss,
            "gamma": self.gamma,
            "steps": self.steps,
            "lr_delta": self.lr_delta,
            "lr_temperature": self.lr_temperature,
            "t_init": self.t_init,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "seed": self.seed,
            "delta_penalty": self.delta_penalty,
        }

    @staticmethod
    def from_dict(data: dict) -> "TrainConfig":
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        known = {
            "loss": str, "gamma": float, "steps": int, "lr_delta": float,
            "lr_temperature": float, "t_init": float, "t_min": float,
            "t_max": float, "seed": int, "delta_penalty": float,
        }
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ValidationError(f"unknown config field '{key}'")
            try:
                kwargs[key] = known[key](value)
            except (TypeError, ValueError):
                raise ValidationError(f"bad value for config field '{key}'") from None
        return TrainConfig(**kwargs)


@dataclass(frozen=True)
class FitReport:
    calibrator: Calibrator
    initial_loss: float
    final_loss: float
    loss_curve: tuple[float, ...]
    steps_run: int

    def to_dict(self) -> dict:
        return {
            "calibrator": self.calibrator.to_dict(),
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "loss_curve": list(self.loss_curve),
            "steps_run": self.steps_run,
        }


def _probs_loss(probs: np.ndarray, labels: np.ndarray, loss: str, gamma: float) -> float:
    if loss == "cross_entropy":
        return metrics.nll(probs, labels)
    return metrics.focal_loss(probs, labels, gamma)


def fit_temperature(logits_calib: LogitDataset, config: TrainConfig = TrainConfig()) -> FitReport:
    """Golden-section search for the loss-minimizing temperature.

    The calibration loss of softmax(logits / T) is unimodal in T (it is convex
    in 1/T), so the search converges; both interval endpoints are also
    evaluated so a clamped optimum returns t_min or t_max exactly.
    """
    logits = logits_calib.logits
    labels = logits_calib.labels

    def f(t: float) -> float:
        return _probs_loss(softmax(logits / t), labels, config.loss, config.gamma)

    best_t, best_loss = config.t_init, f(config.t_init)
    initial_loss = best_loss

    def consider(t: float, value: float):
        nonlocal best_t, best_loss
        if value < best_loss:
            best_t, best_loss = t, value

    a, b = config.t_min, config.t_max
    consider(a, f(a))
    consider(b, f(b))
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    consider(x1, f1)
    consider(x2, f2)
    curve = [best_loss]
    iterations = 0
    while b - a > T_TOL:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
            consider(x1, f1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
            consider(x2, f2)
        iterations += 1
        curve.append(best_loss)
    return FitReport(
        calibrator=Calibrator(kind="temperature", temperature=best_t),
        initial_loss=initial_loss,
        final_loss=best_loss,
        loss_curve=tuple(curve),
        steps_run=iterations,
    )


def fit_neural_clamping(mlp: model_mod.MlpModel, inputs_calib: InputDataset,
                        config: TrainConfig = TrainConfig()) -> FitReport:
    """Fit (delta, T) jointly by full-batch gradient descent.

    delta starts at 0 and T at t_init; each step applies
    delta -= lr_delta * grad_delta and T -= lr_temperature * grad_T with T
    clamped into [t_min, t_max]. The best iterate by calibration loss is
    returned, so temperature scaling is recovered when lr_delta is 0.
    """
    if inputs_calib.input_dim != mlp.input_dim:
        raise DimensionMismatchError(
            f"dataset dim {inputs_calib.input_dim} does not match model input "
            f"{mlp.input_dim}"
        )
    if inputs_calib.labels.max() >= mlp.output_dim:
        raise ValidationError(
            f"label {int(inputs_calib.labels.max())} out of range for "
            f"{mlp.output_dim}-class model"
        )
    x = inputs_calib.features
    y = inputs_calib.labels
    delta = np.zeros(mlp.input_dim)
    t = float(config.t_init)
    penalty = config.delta_penalty

    def evaluate(dvec: np.ndarray, tv: float):
        _, trace = model_mod.forward(mlp, x, dvec, tv)
        gd, gt, value = model_mod.backward(
            trace, y, loss=config.loss, gamma=config.gamma
        )
        if penalty > 0.0:
            value += penalty * float(dvec @ dvec)
            gd = gd + 2.0 * penalty * dvec
        return value, gd, gt

    value, grad_delta, grad_t = evaluate(delta, t)
    if not math.isfinite(value):
        raise ValidationError("non-finite loss at step 0")
    initial_loss = value
    best = (value, delta.copy(), t)
    curve = [value]
    for step in range(1, config.steps + 1):
        delta = delta - config.lr_delta * grad_delta
        t = min(max(t - config.lr_temperature * grad_t, config.t_min), config.t_max)
        value, grad_delta, grad_t = evaluate(delta, t)
        if not math.isfinite(value):
            raise ValidationError(f"non-finite loss at step {step}")
        curve.append(value)
        if value < best[0]:
            best = (value, delta.copy(), t)
    best_loss, best_delta, best_t = best
    return FitReport(
        calibrator=Calibrator(
            kind="neural_clamping", temperature=best_t, delta=best_delta
        ),
        initial_loss=initial_loss,
        final_loss=best_loss,
        loss_curve=tuple(curve),
        steps_run=config.steps,
    )


def apply(calibrator: Calibrator, mlp: model_mod.MlpModel | None, data) -> np.ndarray:
    """Produce calibrated probabilities for a dataset.

    Logit datasets take kind none/temperature directly. Input datasets are
    pushed through the model first; the clamping calibrator always needs a
    model and an input dataset.
    """
    if isinstance(data, LogitDataset):
        if calibrator.kind == "neural_clamping":
            raise ValidationError(
                "neural_clamping applies to inputs through a model, not to logits"
            )
        logits = data.logits
        if calibrator.kind == "temperature":
            logits = logits / calibrator.temperature
        return softmax(logits)
    if isinstance(data, InputDataset):
        if mlp is None:
            raise ValidationError("applying a calibrator to inputs requires a model")
        if data.input_dim != mlp.input_dim:
            raise DimensionMismatchError(
                f"dataset dim {data.input_dim} does not match model input "
                f"{mlp.input_dim}"
            )
        if calibrator.kind == "neural_clamping":
            delta = calibrator.delta
            if delta.shape != (mlp.input_dim,):
                raise DimensionMismatchError(
                    f"delta dim {delta.shape[0]} does not match model input "
                    f"{mlp.input_dim}"
                )
            t = calibrator.temperature
        else:
            delta = np.zeros(mlp.input_dim)
            t = calibrator.temperature if calibrator.kind == "temperature" else 1.0
        logits, trace = model_mod.forward(mlp, data.features, delta, t)
        trace.consumed = True
        return softmax(logits)
    raise ValidationError("apply expects a LogitDataset or InputDataset")
