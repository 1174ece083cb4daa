"""Command-line front end.

Exit codes: 0 success, 1 validation / input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .baseline import LinearVarModel, fit_ols, per_node_mse_linear
from .core import ModelShape, NlVarError, NumericalError, ValidationError
from .dynamics import DEFAULT_BURN_IN, DEFAULT_TARGET_RADIUS
from .experiments import GRADCHECK_TOL, gradient_check
from .files import load_model, read_config, read_panel, save_model, write_panel, write_report
from .forward import per_node_mse
from .synthetic import DEFAULT_NOISE_STD, default_ranges, generate_dataset
from .topology import DEFAULT_THRESHOLD, extract_topology, write_edges
from .training import TrainConfig, TrainingError, fit

log = logging.getLogger("nlvar")

GENERATE_KEYS = {
    "n_nodes": 10,
    "order": 2,
    "n_units": 5,
    "t_total": 1000,
    "burn_in": DEFAULT_BURN_IN,
    "noise_std": DEFAULT_NOISE_STD,
    "target_radius": DEFAULT_TARGET_RADIUS,
    "lower": -1.0,
    "upper": 1.0,
    "seed": 0,
}

FIT_KEYS = {"order": 3, "n_units": 5}
FIT_KEYS.update({f.name: f.default for f in fields(TrainConfig)})


def cmd_generate(config_path, out_prefix) -> int:
    cfg = read_config(config_path, GENERATE_KEYS)
    shape = ModelShape(cfg["n_nodes"], cfg["order"], cfg["n_units"])
    data = generate_dataset(
        shape, cfg["target_radius"], cfg["noise_std"],
        default_ranges(shape.n_nodes, cfg["lower"], cfg["upper"]),
        t_total=cfg["t_total"], seed=cfg["seed"], burn_in=cfg["burn_in"])
    prefix = str(out_prefix)
    outputs = {
        "observed": prefix + "_observed.csv",
        "latent": prefix + "_latent.csv",
        "model": prefix + "_model.json",
    }
    write_panel(outputs["observed"], data.observed)
    write_panel(outputs["latent"], data.latent)
    save_model(outputs["model"], data.ground_truth)
    manifest = {"command": "generate", "config": cfg, "outputs": outputs}
    Path(prefix + "_manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return 0


def _cleanup(*paths):
    for p in paths:
        Path(p).unlink(missing_ok=True)


def cmd_fit(data_csv, config_path, model_out, report_out) -> int:
    cfg = read_config(config_path, FIT_KEYS)
    panel = read_panel(data_csv)
    shape = ModelShape(panel.n_nodes, cfg.pop("order"), cfg.pop("n_units"))
    config = TrainConfig(**cfg)
    try:
        model, report = fit(panel, shape, config)
        save_model(model_out, model)
        write_report(report_out, report)
    except BaseException:
        _cleanup(model_out, report_out)
        raise
    log.info("best test MSE %.6g at epoch %d", report.best_test_mse, report.best_epoch)
    return 0


def cmd_fit_linear(data_csv, order, ridge, model_out) -> int:
    panel = read_panel(data_csv)
    try:
        save_model(model_out, LinearVarModel(fit_ols(panel, order, ridge)))
    except BaseException:
        _cleanup(model_out)
        raise
    return 0


def cmd_eval(model_file, data_csv, out=None) -> int:
    out = out or sys.stdout
    model = load_model(model_file)
    panel = read_panel(data_csv)
    if isinstance(model, LinearVarModel):
        per_node = per_node_mse_linear(model.var, panel)
    else:
        per_node = per_node_mse(model, panel)
    print(f"mse {float(per_node.mean())!r}", file=out)
    for i, v in enumerate(per_node):
        print(f"node_{i} {float(v)!r}", file=out)
    return 0


def cmd_topology(model_file, threshold, edges_out) -> int:
    model = load_model(model_file)
    write_edges(edges_out, extract_topology(model.var, threshold))
    return 0


def cmd_gradcheck(seed, instances, max_nodes, max_order, max_units, corrupt=0.0, out=None) -> int:
    out = out or sys.stdout
    worst = gradient_check(seed, instances, max_nodes, max_order, max_units, corrupt=corrupt)
    ok = True
    for name, err in worst.items():
        passed = err < GRADCHECK_TOL
        ok &= passed
        print(f"{name:6s} max_rel_err {err:.3e} {'ok' if passed else 'FAIL'}", file=out)
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlvar",
        description="Nonlinear VAR identification with invertible per-node maps.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a synthetic dataset")
    p.add_argument("--config", help="key=value file (keys: %s)" % ", ".join(GENERATE_KEYS))
    p.add_argument("--out-prefix", required=True)

    p = sub.add_parser("fit", help="train the nonlinear model")
    p.add_argument("data")
    p.add_argument("--config", help="key=value file (keys: %s)" % ", ".join(FIT_KEYS))
    p.add_argument("--model-out", required=True)
    p.add_argument("--report-out", required=True, help="CSV with epoch,train_mse,test_mse")

    p = sub.add_parser("fit-linear", help="least-squares linear VAR baseline")
    p.add_argument("data")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--ridge", type=float, default=1e-8)
    p.add_argument("--model-out", required=True)

    p = sub.add_parser("eval", help="teacher-forced one-step MSE of a model on a CSV")
    p.add_argument("model")
    p.add_argument("data")

    p = sub.add_parser(
        "topology", help="write the edge list of a model",
        description="Edge j->i is kept when max over lags of |a[p,i,j]| exceeds the threshold. "
                    "Latent coordinates are identified only up to a per-node "
                    "reparameterisation, so compare edge strengths across fits with care.")
    p.add_argument("model")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--edges-out", required=True)

    p = sub.add_parser("gradcheck", help="compare analytic gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--max-nodes", type=int, default=4)
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--max-units", type=int, default=5)
    p.add_argument("--corrupt", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "generate":
            return cmd_generate(args.config, args.out_prefix)
        if args.command == "fit":
            return cmd_fit(args.data, args.config, args.model_out, args.report_out)
        if args.command == "fit-linear":
            return cmd_fit_linear(args.data, args.order, args.ridge, args.model_out)
        if args.command == "eval":
            return cmd_eval(args.model, args.data)
        if args.command == "topology":
            return cmd_topology(args.model, args.threshold, args.edges_out)
        if args.command == "gradcheck":
            return cmd_gradcheck(args.seed, args.instances, args.max_nodes, args.max_order,
                                 args.max_units, args.corrupt)
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, NumericalError) else 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NlVarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
