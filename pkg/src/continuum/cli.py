"""Command-line interface.

Every command reads its settings from flags, optionally merged over a JSON
config file (``--config``); flags win.  Exit codes: 0 success, 2 bad
configuration or usage, 3 bad input data, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .binary import binary_path
from .classifier import CdaModel, fit_cda, project_scores
from .errors import ConfigError, ContinuumError, DataError, NumericalError
from .io import load_csv, to_json, to_tsv, write_output
from .scatter import fit_scatter
from .selection import cv_gamma, default_gamma_grid
from .simulation import HdlssConfig, SimConfig, hdlss_angle_experiment, run_classification_experiment
from .solver import SolverConfig, continuum_basis

log = logging.getLogger("continuum")

DEFAULTS: Dict[str, object] = {
    "format": "json",
    "output": None,
    "seed": 0,
    "folds": 10,
    "kappa": None,
    "gamma": None,
    "gamma_grid": None,
    "grid_size": 100,
    "max_shift": None,
    "epsilon": 1e-10,
    "max_iter": 10000,
    "initial_step": 1e3,
    "priors": "empirical",
    "p": 200,
    "rho": 0.0,
    "s": 10,
    "classes": 2,
    "n_per_class": 50,
    "n_test_per_class": 50,
    "replications": 100,
    "methods": None,
    "workers": 1,
    "delta2": 1.0,
    "sigma1_2": 1.0,
    "sigma2_2": 1.0,
    "n1": 25,
    "n2": 25,
    "p_sequence": "250,1000,4000",
    "alpha": 1.0,
}


def _float_list(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser, formats=("json", "tsv")):
    p.add_argument("--config", help="JSON file with default settings; flags override it")
    p.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=None, help="output format")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output")


def _add_data(p: argparse.ArgumentParser, labels_required: bool = True):
    p.add_argument("--input", "-i", default=None, help="CSV file, one observation per row")
    p.add_argument("--labels", default=None,
                   help="name of the class label column" + ("" if labels_required else " (optional)"))


def _add_solver(p: argparse.ArgumentParser):
    p.add_argument("--epsilon", type=float, default=None, help="convergence precision")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap per direction")
    p.add_argument("--initial-step", type=float, default=None, help="initial step size c")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="continuum",
        description="Continuum directions and continuum discriminant analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("path", help="binary continuum path over the ridge grid")
    _add_common(p)
    _add_data(p)
    p.add_argument("--grid-size", type=int, default=None, help="grid points per branch")
    p.add_argument("--max-shift", type=float, default=None, help="largest ridge shift M")

    p = sub.add_parser("basis", help="sequential continuum basis at one gamma")
    _add_common(p)
    _add_data(p)
    _add_solver(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--kappa", type=int, default=None, help="number of directions (default K-1)")

    p = sub.add_parser("fit", help="fit a CDA model; gamma by CV unless given")
    _add_common(p)
    _add_data(p)
    _add_solver(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--gamma-grid", default=None, help="comma-separated CV grid")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--priors", choices=("empirical", "uniform"), default=None)

    p = sub.add_parser("predict", help="predict labels with a saved CDA model")
    _add_common(p)
    _add_data(p, labels_required=False)
    p.add_argument("--model", default=None, help="model JSON written by 'fit'")

    p = sub.add_parser("cv", help="cross-validation error over a gamma grid")
    _add_common(p)
    _add_data(p)
    _add_solver(p)
    p.add_argument("--gamma-grid", default=None, help="comma-separated grid")
    p.add_argument("--folds", type=int, default=None)

    p = sub.add_parser("simulate", help="compound symmetry classification experiment")
    _add_common(p, ("json", "tsv", "table"))
    _add_solver(p)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--s", type=int, default=None, help="nonzero mean coordinates")
    p.add_argument("--classes", type=int, default=None, choices=(2, 3))
    p.add_argument("--n-per-class", type=int, default=None)
    p.add_argument("--n-test-per-class", type=int, default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--gamma-grid", default=None)
    p.add_argument("--methods", default=None, help="comma-separated, e.g. CDA,LDA,Bayes")
    p.add_argument("--workers", type=int, default=None, help="worker processes")

    p = sub.add_parser("hdlss", help="angle of sample vs population direction as p grows")
    _add_common(p, ("json", "tsv", "table"))
    p.add_argument("--delta2", type=float, default=None)
    p.add_argument("--sigma1-2", type=float, default=None)
    p.add_argument("--sigma2-2", type=float, default=None)
    p.add_argument("--n1", type=int, default=None)
    p.add_argument("--n2", type=int, default=None)
    p.add_argument("--p-sequence", default=None, help="comma-separated dimensions")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None, help="ridge scale, alpha_p = alpha * p")
    return parser


def _resolve(args: argparse.Namespace) -> Dict[str, object]:
    """Merge flags over the config file over built-in defaults."""
    cfg: Dict[str, object] = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = dict(DEFAULTS)
    out.update(cfg)
    for k, v in vars(args).items():
        if v is not None:
            out[k] = v
    return out


def _solver(o) -> SolverConfig:
    return SolverConfig(epsilon=float(o["epsilon"]), max_iter=int(o["max_iter"]),
                        initial_step=float(o["initial_step"]), seed=int(o["seed"]))


def _dataset(o, labels_required=True):
    if not o.get("input"):
        raise ConfigError("--input is required")
    if labels_required and not o.get("labels"):
        raise ConfigError("--labels is required")
    if not Path(o["input"]).is_file():
        raise ConfigError(f"input file not found: {o['input']}")
    return load_csv(o["input"], o.get("labels"))


def _cmd_path(o) -> str:
    data = _dataset(o)
    model, center, _ = fit_scatter(data.X, labels=data.labels)
    path = binary_path(model, K=int(o["grid_size"]), M=o["max_shift"])
    Xc = data.X - center[:, None]
    if o["format"] == "tsv":
        rows = [[pt.gamma, pt.alpha, pt.kind, pt.criterion_value, *pt.w] for pt in path]
        cols = [f"w{j + 1}" for j in range(data.p)]
        return to_tsv(["gamma", "alpha", "kind", "criterion"] + cols, rows)
    return to_json([{"gamma": pt.gamma, "alpha": pt.alpha, "kind": pt.kind,
                     "criterion": pt.criterion_value, "direction": pt.w,
                     "scores": pt.w @ Xc} for pt in path])


def _cmd_basis(o) -> str:
    data = _dataset(o)
    if o["gamma"] is None:
        raise ConfigError("--gamma is required")
    model, center, enc = fit_scatter(data.X, labels=data.labels)
    kappa = o["kappa"] if o["kappa"] is not None else len(enc.classes) - 1
    b = continuum_basis(model, float(o["gamma"]), int(kappa), _solver(o))
    scores = project_scores(b, center, data.X)
    if o["format"] == "tsv":
        rows = [[j + 1, b.criterion_values[j], b.iterations[j], *b.W[:, j]] for j in range(b.kappa)]
        return to_tsv(["direction", "criterion", "iterations"] + [f"w{i + 1}" for i in range(data.p)],
                      rows)
    return to_json({"gamma": b.gamma, "kappa": b.kappa, "seed": o["seed"],
                    "directions": b.W.T, "criterion_values": b.criterion_values,
                    "iterations": b.iterations, "deltas": b.deltas, "converged": b.converged,
                    "labels": data.labels, "scores": scores})


def _grid(o):
    return default_gamma_grid() if o["gamma_grid"] is None else np.asarray(_float_list(o["gamma_grid"]))


def _cmd_fit(o) -> str:
    data = _dataset(o)
    config = _solver(o)
    gamma = o["gamma"]
    if gamma is None:
        rep = cv_gamma(data, _grid(o), int(o["folds"]), int(o["seed"]), config)
        gamma = rep.chosen_gamma
        log.info("cross-validation chose gamma = %r (CV error %.4f)", gamma, rep.cv_error.min())
    model = fit_cda(data, float(gamma), config, priors=str(o["priors"]))
    doc = model.to_dict()
    doc["seed"] = int(o["seed"])
    return to_json(doc)


def _cmd_predict(o) -> str:
    if not o.get("model"):
        raise ConfigError("--model is required")
    try:
        model = CdaModel.from_json(Path(o["model"]).read_text())
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot load model {o['model']}: {exc}") from exc
    data = _dataset(o, labels_required=False)
    pred = model.predict(data.X)
    if o["format"] == "tsv":
        return to_tsv(["label"], [[v] for v in pred])
    doc = {"gamma": model.gamma, "predictions": pred}
    if data.labels is not None:
        doc["error_rate"] = float(np.mean(pred.astype(str) != data.labels.astype(str)))
    return to_json(doc)


def _cmd_cv(o) -> str:
    data = _dataset(o)
    rep = cv_gamma(data, _grid(o), int(o["folds"]), int(o["seed"]), _solver(o))
    if o["format"] == "tsv":
        return to_tsv(["gamma", "cv_error"], zip(rep.gamma_grid, rep.cv_error))
    return to_json(rep.to_dict())


def _cmd_simulate(o) -> str:
    grid = None if o["gamma_grid"] is None else tuple(_float_list(o["gamma_grid"]))
    cfg = SimConfig(p=int(o["p"]), rho=float(o["rho"]), s=int(o["s"]), K=int(o["classes"]),
                    n_per_class=int(o["n_per_class"]), n_test_per_class=int(o["n_test_per_class"]),
                    replications=int(o["replications"]), seed=int(o["seed"]),
                    folds=int(o["folds"]), gamma_grid=grid)
    methods = None if o["methods"] is None else [m.strip() for m in str(o["methods"]).split(",")]
    res = run_classification_experiment(cfg, methods, _solver(o), workers=int(o["workers"]))
    if o["format"] == "table":
        return res.to_table() + "\n"
    if o["format"] == "tsv":
        return to_tsv(["method", "mean", "sd", "failed"],
                      [[m, res.mean(m), res.sd(m), len(res.failures.get(m, []))]
                       for m in res.methods])
    return to_json(res.to_dict())


def _cmd_hdlss(o) -> str:
    cfg = HdlssConfig(delta2=float(o["delta2"]), sigma1_2=float(o["sigma1_2"]),
                      sigma2_2=float(o["sigma2_2"]), n1=int(o["n1"]), n2=int(o["n2"]),
                      p_sequence=tuple(int(v) for v in _float_list(o["p_sequence"])),
                      replications=int(o["replications"]), seed=int(o["seed"]),
                      alpha=float(o["alpha"]))
    res = hdlss_angle_experiment(cfg)
    if o["format"] == "table":
        return res.to_table() + "\n"
    if o["format"] == "tsv":
        d = res.to_dict()
        return to_tsv(["p", "mean_angle_deg", "limit_angle_deg", "cda_test_error_pct"],
                      [[r["p"], r["mean_angle_deg"], d["limit_angle_deg"], r["cda_test_error_pct"]]
                       for r in d["rows"]])
    return to_json(res.to_dict())


COMMANDS = {
    "path": _cmd_path,
    "basis": _cmd_basis,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "cv": _cmd_cv,
    "simulate": _cmd_simulate,
    "hdlss": _cmd_hdlss,
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, DataError):
        return 3
    if isinstance(exc, NumericalError):
        return 4
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        o = _resolve(args)
        if o["format"] not in ("json", "tsv", "table") or (
                o["format"] == "table" and args.command not in ("simulate", "hdlss")):
            raise ConfigError(f"unsupported format {o['format']!r} for {args.command}")
        text = COMMANDS[args.command](o)
        write_output(text, o["output"])
    except ContinuumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
