"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
Timestamps only ever go to the run log, never into outputs, so repeated runs
stay byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys

from . import errors
from .classify import (
    BandStack,
    assess,
    fit_signatures,
    maxlike_classify,
    save_signatures,
    stratified_sample,
)
from .config import validate_config
from .gridio import read_grid, write_grid
from .mlp import skill
from .pipeline import run_pipeline

log = logging.getLogger("coastrise")

_CONFIG_ERRORS = (errors.ConfigError,)
_NUMERIC_ERRORS = (errors.SingularCovariance, errors.DivergenceError)


def _classify_exit(exc: Exception) -> int:
    if isinstance(exc, _CONFIG_ERRORS):
        return 2
    if isinstance(exc, _NUMERIC_ERRORS):
        return 4
    if isinstance(exc, errors.CoastriseError):
        return 3
    raise exc


def _add_config_arg(parser):
    parser.add_argument("--config", required=True, help="pipeline config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for scenario builds")


def _load_config(args):
    cfg = validate_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    log_path = os.path.join(cfg.output_dir, "run.log")
    handler = logging.FileHandler(log_path)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logging.getLogger().addHandler(handler)
    logging.getLogger().setLevel(logging.INFO)
    return cfg


def _run_until(args, until: str):
    cfg = _load_config(args)
    if getattr(args, "heights", None):
        heights = tuple(float(h) for h in args.heights.split(","))
        cfg = dataclasses.replace(cfg, heights=heights)
    report = run_pipeline(cfg, until=until, threads=args.threads)
    print(f"stages run: {', '.join(report.stages_run) or '(none, all cached)'}")
    return cfg, report


def _cmd_ingest(args):
    _run_until(args, "ingest")


def _cmd_inundate(args):
    cfg, _ = _run_until(args, "scenarios")
    for h in cfg.heights:
        print(f"mask written: masks/slr_{h:g}m.asc")


def _cmd_stats(args):
    cfg, _ = _run_until(args, "stats")
    with open(os.path.join(cfg.output_dir, "stats.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def _cmd_drivers(args):
    _run_until(args, "drivers")


def _cmd_lcm_train(args):
    cfg, _ = _run_until(args, "mlp")
    with open(os.path.join(cfg.output_dir, "model", "performance.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def _cmd_lcm_influence(args):
    cfg, _ = _run_until(args, "mlp")
    for name in ("influence_forced.csv", "influence_single.csv"):
        print(f"# {name}")
        with open(os.path.join(cfg.output_dir, "model", name), encoding="utf-8") as fh:
            sys.stdout.write(fh.read())


def _cmd_lcm_project(args):
    cfg, _ = _run_until(args, "projections")
    with open(os.path.join(cfg.output_dir, "projections", "quotas.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def _cmd_lcm_validate(args):
    cfg, _ = _run_until(args, "validation")
    with open(os.path.join(cfg.output_dir, "validation", "summary.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def _cmd_export(args):
    cfg, report = _run_until(args, "catalog")
    import json

    with open(report.catalog_path, encoding="utf-8") as fh:
        checksum = json.load(fh)["checksum"]
    print(f"catalog: {report.catalog_path}")
    print(f"checksum: {checksum}")


def _cmd_classify(args):
    bands = [read_grid(p) for p in args.bands.split(",")]
    names = (
        args.band_names.split(",")
        if args.band_names
        else [f"band_{i + 1}" for i in range(len(bands))]
    )
    stack = BandStack(tuple(names), tuple(bands))
    training = read_grid(args.training)
    signatures = fit_signatures(stack, training)
    priors = None
    if args.priors:
        priors = {}
        for item in args.priors.split(","):
            cid, w = item.split("=")
            priors[int(cid)] = float(w)
        total = sum(priors.values())
        priors = {cid: w / total for cid, w in priors.items()}
    labelled = maxlike_classify(stack, signatures, priors=priors, legend=training.legend)
    write_grid(labelled, args.out)
    print(f"classified grid written: {args.out}")
    if args.signatures:
        save_signatures(signatures, args.signatures)
        print(f"signatures written: {args.signatures}")


def _cmd_assess(args):
    predicted = read_grid(args.predicted)
    reference = read_grid(args.reference)
    points = stratified_sample(reference, args.points, args.seed)
    result = assess(predicted, points)
    print(f"points: {result.n_points}")
    print(f"overall_accuracy: {result.overall_accuracy:.4f}")
    print(f"kappa: {result.kappa:.4f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "class_id", "value"])
            writer.writerow(["overall_accuracy", "", repr(result.overall_accuracy)])
            writer.writerow(["kappa", "", repr(result.kappa)])
            for cid in result.matrix.classes:
                writer.writerow(["users_accuracy", cid, repr(result.users_acc[cid])])
                writer.writerow(["producers_accuracy", cid, repr(result.producers_acc[cid])])
            writer.writerow([])
            writer.writerow(["confusion_matrix (rows=reference)"] + list(result.matrix.classes))
            for i, cid in enumerate(result.matrix.classes):
                writer.writerow([cid] + result.matrix.counts[i].tolist())
        print(f"report written: {args.out}")


def _cmd_skill(args):
    print(f"{skill(args.accuracy, args.classes):.4f}")


def _cmd_serve(args):
    import uvicorn

    from .catalog import load_catalog
    from .service import create_app

    catalog = load_catalog(args.catalog)
    app = create_app(catalog, web_root=args.web_root)
    print(f"serving catalog {args.catalog} (checksum {catalog.checksum[:12]}...) "
          f"on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coastrise",
        description="Sea-level-rise scenario engine: inundation masks, land-cover "
        "change modelling, and a web-map service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_text in (
        ("ingest", _cmd_ingest, "validate a config and hash its inputs"),
        ("stats", _cmd_stats, "flooded area per height (CSV to stdout)"),
        ("drivers", _cmd_drivers, "build the driver-variable stack"),
        ("lcm-train", _cmd_lcm_train, "train the transition network"),
        ("lcm-influence", _cmd_lcm_influence, "variable-influence tables"),
        ("lcm-project", _cmd_lcm_project, "project land cover to target years"),
        ("lcm-validate", _cmd_lcm_validate, "three-map validation of the prediction"),
        ("export", _cmd_export, "run everything and write the catalog"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_arg(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("inundate", help="build connectivity-filtered flood masks")
    _add_config_arg(p)
    p.add_argument("--heights", help="comma-separated metres, e.g. 1,2,3,4")
    p.set_defaults(fn=_cmd_inundate)

    p = sub.add_parser("classify", help="maximum-likelihood land-cover classification")
    p.add_argument("--bands", required=True, help="comma-separated band rasters")
    p.add_argument("--band-names", help="comma-separated band names")
    p.add_argument("--training", required=True, help="training-class grid")
    p.add_argument("--priors", help="per-class priors, e.g. 1=0.2,2=0.8")
    p.add_argument("--out", required=True, help="output classified grid (.asc)")
    p.add_argument("--signatures", help="also save the fitted signatures manifest here")
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("assess", help="stratified-point accuracy assessment")
    p.add_argument("--predicted", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV report path")
    p.set_defaults(fn=_cmd_assess)

    p = sub.add_parser("skill", help="chance-corrected skill measure")
    p.add_argument("--accuracy", type=float, required=True)
    p.add_argument("--classes", type=int, default=2)
    p.set_defaults(fn=_cmd_skill)

    p = sub.add_parser("serve", help="publish a catalog over HTTP")
    p.add_argument("--catalog", required=True, help="path to catalog.json")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--web-root", help="static viewer bundle to serve at /")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("make-fixture", help="generate the synthetic fjord dataset")
    p.add_argument("--dir", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=_cmd_make_fixture)

    return parser


def _cmd_make_fixture(args):
    from .fixture import build_fixture

    cfg_path = build_fixture(args.dir, seed=args.seed)
    print(f"fixture config: {cfg_path}")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except errors.CoastriseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _classify_exit(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
