"""Portable feedforward MLP with exact gradients for the clamp parameters.

Weights are frozen: the only differentiable quantities are the universal
input shift delta (shared by every sample) and the output temperature T.
The forward pass computes f(x + delta) / T and retains a single-use trace;
backward replays it in reverse to produce the exact gradients of the mean
loss. ReLU's subgradient at 0 is taken as 0. All math is float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, ValidationError

ACTIVATIONS = ("relu", "identity")
LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)
    activation: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise ValidationError("layer weights must be a 2-D matrix")
        if b.shape != (w.shape[0],):
            raise ValidationError(
                f"bias length {b.shape} does not match weight rows {w.shape[0]}"
            )
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValidationError("layer contains non-finite parameters")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation '{self.activation}'")
        w = np.ascontiguousarray(w)
        b = np.ascontiguousarray(b)
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class MlpModel:
    layers: tuple[Layer, ...]
    name: str = ""

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("model needs at least one layer")
        for i in range(len(layers) - 1):
            if layers[i].out_dim != layers[i + 1].in_dim:
                raise DimensionMismatchError(
                    f"layer {i + 1} output {layers[i].out_dim} does not chain "
                    f"into layer {i + 2} input {layers[i + 1].in_dim}"
                )
        if layers[-1].activation != "identity":
            raise ValidationError("final layer must use the identity activation")
        if layers[-1].out_dim < 2:
            raise ValidationError("model must emit at least 2 class scores")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


@dataclass
class ClampedForwardTrace:
    """Intermediate activations for one batch; consumed by a single backward."""

    model: MlpModel
    perturbed_inputs: np.ndarray
    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]
    logits_unscaled: np.ndarray
    temperature: float
    consumed: bool = False


# ---------------------------------------------------------------------------
# Serialization


def model_to_dict(model: MlpModel) -> dict:
    return {
        "input_dim": model.input_dim,
        "output_dim": model.output_dim,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
    }


def model_from_dict(data: dict, name: str = "") -> MlpModel:
    if not isinstance(data, dict) or "layers" not in data:
        raise ValidationError("model JSON must contain a 'layers' array")
    layers = []
    for i, spec in enumerate(data["layers"]):
        try:
            layers.append(Layer(
                weights=np.array(spec["weights"], dtype=np.float64),
                bias=np.array(spec["bias"], dtype=np.float64),
                activation=spec.get("activation", "identity"),
            ))
        except KeyError as exc:
            raise ValidationError(f"layer {i + 1} missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"layer {i + 1}: {exc}") from None
    model = MlpModel(layers=tuple(layers), name=name)
    declared_in = data.get("input_dim")
    declared_out = data.get("output_dim")
    if declared_in is not None and declared_in != model.input_dim:
        raise DimensionMismatchError(
            f"declared input_dim {declared_in} != layer 1 input {model.input_dim}"
        )
    if declared_out is not None and declared_out != model.output_dim:
        raise DimensionMismatchError(
            f"declared output_dim {declared_out} != final layer output {model.output_dim}"
        )
    return model


def load_model_json(path) -> MlpModel:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"missing file: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed model JSON: {exc}") from None
    return model_from_dict(data, name=p.stem)


# ---------------------------------------------------------------------------
# Forward / backward


def _check_forward_args(model: MlpModel, inputs, delta, temperature: float):
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("inputs must be an NxD matrix")
    if x.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"input dim {x.shape[1]} does not match model input {model.input_dim}"
        )
    d = np.asarray(delta, dtype=np.float64)
    if d.shape != (model.input_dim,):
        raise DimensionMismatchError(
            f"delta shape {d.shape} does not match model input ({model.input_dim},)"
        )
    if not np.isfinite(d).all():
        raise ValidationError("delta contains NaN or Inf")
    if not temperature > 0:
        raise ValidationError("temperature must be positive")
    return x, d


def forward(model: MlpModel, inputs, delta, temperature: float):
    """Evaluate f(x + delta) / T row-wise.

    Returns (logits, trace); the trace feeds exactly one backward pass.
    """
    x, d = _check_forward_args(model, inputs, delta, temperature)
    a = x + d
    perturbed = a
    pre_acts: list[np.ndarray] = []
    acts: list[np.ndarray] = []
    for layer in model.layers:
        z = a @ layer.weights.T + layer.bias
        pre_acts.append(z)
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        acts.append(a)
    logits_unscaled = acts[-1]
    trace = ClampedForwardTrace(
        model=model,
        perturbed_inputs=perturbed,
        pre_activations=pre_acts,
        activations=acts,
        logits_unscaled=logits_unscaled,
        temperature=temperature,
    )
    return logits_unscaled / temperature, trace


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _loss_and_logit_grad(scaled_logits: np.ndarray, labels: np.ndarray,
                         loss: str, gamma: float):
    """Mean loss over the batch and its gradient w.r.t. the scaled logits."""
    n, k = scaled_logits.shape
    probs = _softmax_rows(scaled_logits)
    rows = np.arange(n)
    pt = probs[rows, labels]
    log_pt = np.log(np.maximum(pt, LOG_CLAMP))
    onehot = np.zeros_like(probs)
    onehot[rows, labels] = 1.0
    if loss == "cross_entropy" or (loss == "focal" and gamma == 0.0):
        value = float(np.mean(-log_pt))
        grad = (probs - onehot) / n
        return value, grad
    if loss != "focal":
        raise ValidationError(f"unknown loss '{loss}'")
    if gamma < 0:
        raise ValidationError("gamma must be >= 0")
    one_minus = 1.0 - pt
    value = float(np.mean(-(one_minus ** gamma) * log_pt))
    # d/dp of -(1-p)^g log p, with the p->1 limit of 0 handled explicitly
    with np.errstate(divide="ignore", invalid="ignore"):
        dldp = gamma * one_minus ** (gamma - 1.0) * log_pt - one_minus ** gamma / pt
    dldp = np.where(one_minus > 0.0, dldp, 0.0)
    # chain through the softmax: dp_y/dz_j = p_y (1[j=y] - p_j)
    grad = (dldp * pt)[:, None] * (onehot - probs) / n
    return value, grad


def backward(trace: ClampedForwardTrace, labels, loss: str = "cross_entropy",
             gamma: float = 0.0):
    """Exact gradients of the mean batch loss w.r.t. (delta, T).

    delta is universal, so its gradient sums the per-sample input gradients.
    The trace is consumed; reusing it raises.
    """
    if trace.consumed:
        raise ValidationError("trace already consumed by a previous backward")
    trace.consumed = True
    model = trace.model
    y = np.asarray(labels, dtype=np.int64)
    n = trace.logits_unscaled.shape[0]
    if y.shape != (n,):
        raise ValidationError("labels must match the batch size")
    if y.size and (y.min() < 0 or y.max() >= model.output_dim):
        raise ValidationError("label out of range for model outputs")

    t = trace.temperature
    scaled = trace.logits_unscaled / t
    loss_value, grad_scaled = _loss_and_logit_grad(scaled, y, loss, gamma)

    # z_scaled = z / T: dT picks up -z/T^2, dz picks up 1/T
    grad_t = float(np.sum(grad_scaled * (-trace.logits_unscaled / (t * t))))
    grad = grad_scaled / t
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        if layer.activation == "relu":
            grad = grad * (trace.pre_activations[i] > 0.0)
        grad = grad @ layer.weights
    grad_delta = grad.sum(axis=0)
    return grad_delta, grad_t, loss_value


def mean_loss(model: MlpModel, inputs, labels, delta, temperature: float,
              loss: str = "cross_entropy", gamma: float = 0.0) -> float:
    """Mean batch loss at (delta, T) without keeping a trace."""
    scaled, trace = forward(model, inputs, delta, temperature)
    trace.consumed = True
    y = np.asarray(labels, dtype=np.int64)
    value, _ = _loss_and_logit_grad(scaled, y, loss, gamma)
    return value


def finite_difference_check(model: MlpModel, inputs, labels, delta,
                            temperature: float, step: float,
                            loss: str = "cross_entropy", gamma: float = 0.0) -> float:
    """Max relative error between backward() and central finite differences.

    Coordinates where both gradients are below 1e-10 in magnitude are compared
    absolutely instead of relatively.
    """
    if step <= 0:
        raise ValidationError("step must be positive")
    x, d = _check_forward_args(model, inputs, delta, temperature)
    _, trace = forward(model, x, d, temperature)
    grad_delta, grad_t, _ = backward(trace, labels, loss=loss, gamma=gamma)

    def loss_at(dvec, t):
        return mean_loss(model, x, labels, dvec, t, loss=loss, gamma=gamma)

    worst = 0.0
    for j in range(d.shape[0]):
        bump = np.zeros_like(d)
        bump[j] = step
        fd = (loss_at(d + bump, temperature) - loss_at(d - bump, temperature)) / (2 * step)
        worst = max(worst, _coord_error(grad_delta[j], fd))
    fd_t = (loss_at(d, temperature + step) - loss_at(d, temperature - step)) / (2 * step)
    worst = max(worst, _coord_error(grad_t, fd_t))
    return worst


def _coord_error(analytic: float, numeric: float) -> float:
    scale = max(abs(analytic), abs(numeric))
    diff = abs(analytic - numeric)
    if scale < 1e-10:
        return diff
    return diff / scale
