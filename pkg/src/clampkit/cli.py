"""Command-line front end: metrics, diagram, fit-temperature, fit-clamping,
apply, serve.

Results go to stdout as JSON, or to ``--out`` (SVG when the filename ends in
.svg on the diagram verb). Exit codes: 0 success, 1 usage error, 2 data or
validation error. The CLI adds no computation of its own: every result is the
corresponding library call serialized.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import jsonio, service
from .calibrate import Calibrator, TrainConfig, apply, fit_neural_clamping, fit_temperature
from .dataset import load_features_csv, load_logits_csv
from .diagram import build_diagram, render_svg
from .errors import ValidationError
from .metrics import DEFAULT_BINS, DEFAULT_RANGES, compute_report
from .model import load_model_json


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_data_args(p, require_logits=False):
    if require_logits:
        p.add_argument("--logits", required=True, help="logits CSV path")
        return
    p.add_argument("--logits", help="logits CSV path")
    p.add_argument("--model", help="model JSON path (with --inputs)")
    p.add_argument("--inputs", help="features CSV path (with --model)")


def _add_config_args(p):
    p.add_argument("--loss", choices=["cross_entropy", "focal"], default="cross_entropy")
    p.add_argument("--gamma", type=float, default=2.0, help="focal loss exponent")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--lr-delta", type=float, default=0.01)
    p.add_argument("--lr-temperature", type=float, default=0.01)
    p.add_argument("--t-init", type=float, default=1.0)
    p.add_argument("--t-min", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-penalty", type=float, default=0.0)


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        loss=args.loss,
        gamma=args.gamma,
        steps=args.steps,
        lr_delta=args.lr_delta,
        lr_temperature=args.lr_temperature,
        t_init=args.t_init,
        t_min=args.t_min,
        t_max=args.t_max,
        seed=args.seed,
        delta_penalty=args.delta_penalty,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="clampkit", description=__doc__)
    sub = parser.add_subparsers(dest="verb", metavar="verb")

    p = sub.add_parser("metrics", help="compute ECE/SCE/ACE/NLL for a dataset")
    _add_data_args(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--ranges", type=int, default=DEFAULT_RANGES)
    p.add_argument("--calibrator", help="calibrator JSON path to apply first")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("diagram", help="build a reliability diagram")
    _add_data_args(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--calibrator", help="calibrator JSON path to apply first")
    p.add_argument("--out", help=".svg renders SVG; anything else writes JSON")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--expected", choices=["midpoint", "confidence"], default="midpoint")

    p = sub.add_parser("fit-temperature", help="fit a temperature calibrator")
    _add_data_args(p, require_logits=True)
    _add_config_args(p)
    p.add_argument("--out", help="write the fit report JSON here")

    p = sub.add_parser("fit-clamping", help="fit the joint input/output calibrator")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--inputs", required=True, help="features CSV path")
    _add_config_args(p)
    p.add_argument("--out", help="write the fit report JSON here")

    p = sub.add_parser("apply", help="emit calibrated probabilities as CSV")
    p.add_argument("--calibrator", required=True, help="calibrator JSON path")
    _add_data_args(p)
    p.add_argument("--out", help="write the CSV here instead of stdout")

    p = sub.add_parser("serve", help="start the HTTP service")
    env = os.environ
    p.add_argument("--port", type=int,
                   default=int(env.get("CLAMPKIT_PORT", service.DEFAULT_PORT)))
    p.add_argument("--host", default=env.get("CLAMPKIT_HOST", "127.0.0.1"))
    p.add_argument("--max-upload-mb", type=int,
                   default=int(env.get("CLAMPKIT_MAX_UPLOAD_MB",
                                       service.DEFAULT_MAX_UPLOAD_MB)))
    p.add_argument("--workers", type=int,
                   default=int(env.get("CLAMPKIT_WORKERS", service.DEFAULT_WORKERS)))
    p.add_argument("--static", default=env.get("CLAMPKIT_STATIC"),
                   help="directory of built panel assets to serve at /")
    p.add_argument("--snapshot", default=env.get("CLAMPKIT_SNAPSHOT"),
                   help="store snapshot file loaded on start, saved on exit")

    return parser


def _load_eval_data(args):
    """Resolve (probs, labels) from --logits or --model/--inputs plus
    an optional calibrator file."""
    calibrator = Calibrator(kind="none")
    if getattr(args, "calibrator", None):
        path = Path(args.calibrator)
        if not path.is_file():
            raise ValidationError(f"missing file: {path}")
        calibrator = Calibrator.from_dict(json.loads(path.read_text()))
    if args.logits:
        if getattr(args, "model", None) or getattr(args, "inputs", None):
            raise _UsageError("pass either --logits or --model/--inputs, not both")
        ds = load_logits_csv(args.logits)
        return apply(calibrator, None, ds), ds.labels
    if getattr(args, "model", None) and getattr(args, "inputs", None):
        mlp = load_model_json(args.model)
        ds = load_features_csv(args.inputs)
        return apply(calibrator, mlp, ds), ds.labels
    raise _UsageError("pass --logits, or --model together with --inputs")


def _write_result(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_metrics(args) -> int:
    probs, labels = _load_eval_data(args)
    n = probs.shape[0]
    report = compute_report(probs, labels, num_bins=args.bins,
                            num_ranges=min(args.ranges, n))
    _write_result(jsonio.dumps(report.to_dict()), args.out)
    return 0


def _cmd_diagram(args) -> int:
    probs, labels = _load_eval_data(args)
    diagram = build_diagram(probs, labels, args.bins)
    if args.out and args.out.lower().endswith(".svg"):
        text = render_svg(diagram, args.width, args.height, expected_bar=args.expected)
    else:
        text = jsonio.dumps(diagram.to_dict())
    _write_result(text, args.out)
    return 0


def _cmd_fit_temperature(args) -> int:
    ds = load_logits_csv(args.logits)
    report = fit_temperature(ds, _config_from_args(args))
    _write_result(jsonio.dumps(report.to_dict()), args.out)
    return 0


def _cmd_fit_clamping(args) -> int:
    mlp = load_model_json(args.model)
    ds = load_features_csv(args.inputs)
    report = fit_neural_clamping(mlp, ds, _config_from_args(args))
    _write_result(jsonio.dumps(report.to_dict()), args.out)
    return 0


def _cmd_apply(args) -> int:
    probs, labels = _load_eval_data(args)
    k = probs.shape[1]
    lines = [",".join([f"prob_{i}" for i in range(k)] + ["label"])]
    for row, label in zip(probs, labels):
        lines.append(",".join([format(v, ".17g") for v in row] + [str(int(label))]))
    _write_result("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_serve(args) -> int:
    service.run_server(
        port=args.port,
        host=args.host,
        max_upload_mb=args.max_upload_mb,
        workers=args.workers,
        static_dir=args.static,
        snapshot_path=args.snapshot,
    )
    return 0


_COMMANDS = {
    "metrics": _cmd_metrics,
    "diagram": _cmd_diagram,
    "fit-temperature": _cmd_fit_temperature,
    "fit-clamping": _cmd_fit_clamping,
    "apply": _cmd_apply,
    "serve": _cmd_serve,
}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.verb:
            raise _UsageError("a verb is required (try --help)")
        return _COMMANDS[args.verb](args)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
