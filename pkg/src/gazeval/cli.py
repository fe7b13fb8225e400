"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error (malformed or
inconsistent inputs), 3 numeric failure. Verbosity comes from the
GAZEVAL_LOG environment variable (debug/info/warning/error). All numeric
output is serialized with 17 significant digits.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import dataio
from .dataio import format_float
from .engine import PredictionContext, predict_next, value_map
from .errors import DataError, NumericError, SchemaViolation
from .evaluate import breakdown_csv, evaluate, load_report, write_report
from .fitting import FitConfig, fit, fit_config_from_dict
from .grid import downscale_bilinear
from .presets import default_cost_profile

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse with the documented exit-code contract (usage errors = 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="gazeval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="import a PGM grayscale map as an SMR raster")
    p.add_argument("--in", dest="src", required=True, help="input PGM (binary P5)")
    p.add_argument("--out", required=True, help="output SMR raster")
    p.add_argument("--downscale", type=int, default=1, metavar="N", help="bilinear downscale factor")

    p = sub.add_parser("predict", help="emit the value map and predicted next fixation")
    p.add_argument("--saliency", required=True, help="SMR raster at working resolution")
    p.add_argument("--scanpath", required=True, help="CSV holding exactly one scanpath (the history prefix)")
    p.add_argument("--params", required=True, help="model parameters JSON")
    p.add_argument("--profile", help="cost profile JSON (default: packaged placeholder)")
    p.add_argument("--downscale", type=int, default=1, metavar="N", help="factor dividing scanpath coordinates")
    p.add_argument("--out", help="write the value map as an SMR raster here")
    p.add_argument("--print-prediction", action="store_true", help="print the argmax coordinate as JSON")

    p = sub.add_parser("eval", help="score a dataset and write a report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--profile")
    p.add_argument("--steps", type=int, default=1, metavar="N", help="predict N steps ahead (1-3 validated)")
    p.add_argument("--mode", choices=("truncate", "rollout"), default="truncate")
    p.add_argument("--report", required=True, help="output report JSON path")
    p.add_argument("--model-id", default=None)
    p.add_argument("--threads", type=int, default=0, help="evaluation parallelism (0 = all cores)")
    p.add_argument("--breakdown", help="also write the per-position CSV here")

    p = sub.add_parser("fit", help="estimate parameters on a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output parameters JSON")
    p.add_argument("--samples", type=int, help="training sample count")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--profile")
    p.add_argument("--fit-config", help="FitConfig JSON; flags override its fields")
    p.add_argument(
        "--fixed-phis",
        metavar="PARAMS_JSON",
        help="hold the exploration weights of this parameter set fixed; fit only w1, w2, sigma",
    )
    p.add_argument("--trace", help="write the objective trace as CSV here")

    p = sub.add_parser("breakdown", help="export a report's per-position table as CSV")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="start the interactive session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--idle-timeout", type=float, default=1800.0, metavar="SECONDS")

    return parser


def _load_profile_arg(path) -> dataio.CostProfile:
    return dataio.load_profile(path) if path else default_cost_profile()


def _cmd_convert(args) -> int:
    g = dataio.import_pgm(args.src)
    if args.downscale != 1:
        g = downscale_bilinear(g, args.downscale)
    dataio.write_raster(g, args.out)
    log.info("wrote %dx%d raster to %s", g.width, g.height, args.out)
    return 0


def _cmd_predict(args) -> int:
    saliency = dataio.read_raster(args.saliency)
    params = dataio.load_params(args.params)
    profile = _load_profile_arg(args.profile)
    groups = dataio.parse_scanpaths(args.scanpath)
    if len(groups) != 1:
        raise SchemaViolation(
            f"predict needs exactly one scanpath, CSV holds {len(groups)}"
        )
    records = next(iter(groups.values()))
    history = dataio.rescale_to_working(
        records, args.downscale, saliency.width, saliency.height
    )
    ctx = PredictionContext(saliency, tuple(history), params, profile)
    vmap = value_map(ctx)
    if args.out:
        dataio.write_raster(vmap, args.out)
    if args.print_prediction or not args.out:
        pred = predict_next(ctx)
        print(f'{{"x": {format_float(pred.x)}, "y": {format_float(pred.y)}}}')
    return 0


def _cmd_eval(args) -> int:
    manifest = dataio.load_manifest(args.manifest)
    params = dataio.load_params(args.params)
    profile = _load_profile_arg(args.profile)
    model_id = args.model_id or Path(args.params).stem
    report = evaluate(
        manifest,
        params,
        profile,
        n=args.steps,
        mode=args.mode,
        model_id=model_id,
        threads=args.threads or None,
    )
    write_report(report, args.report)
    if args.breakdown:
        Path(args.breakdown).write_text(breakdown_csv(report), encoding="utf-8")
    print(
        f'{{"mean_nss": {format_float(report.mean_nss)}, '
        f'"baseline_nss": {format_float(report.baseline_nss)}, '
        f'"mean_auc": {format_float(report.mean_auc)}, '
        f'"sample_count": {report.sample_count}}}'
    )
    return 0


def _cmd_fit(args) -> int:
    manifest = dataio.load_manifest(args.manifest)
    profile = _load_profile_arg(args.profile)
    if args.fit_config:
        try:
            doc = json.loads(Path(args.fit_config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"fit config is not valid JSON: {exc}") from exc
        config = fit_config_from_dict(doc)
    else:
        config = FitConfig()
    overrides = {}
    if args.samples is not None:
        overrides["sample_count"] = args.samples
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.fixed_phis:
        overrides["init"] = dataio.load_params(args.fixed_phis)
        overrides["free_phis"] = False
    if overrides:
        config = dataclasses.replace(config, **overrides)
    result = fit(manifest, config, profile)
    dataio.save_params(result.params, args.out)
    if args.trace:
        lines = ["iteration,objective"]
        lines += [f"{i},{format_float(v)}" for i, v in result.objective_trace]
        Path(args.trace).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(
        f'{{"objective": {format_float(result.objective_trace[-1][1])}, '
        f'"evaluations": {result.evaluations}, '
        f'"converged_by": "{result.converged_by}"}}'
    )
    return 0


def _cmd_breakdown(args) -> int:
    report = load_report(args.report)
    Path(args.out).write_text(breakdown_csv(report), encoding="utf-8")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    level = os.environ.get("GAZEVAL_LOG", "info").lower()
    uvicorn.run(
        create_app(idle_timeout=args.idle_timeout),
        host=args.host,
        port=args.port,
        log_level=level,
    )
    return 0


_COMMANDS = {
    "convert": _cmd_convert,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "fit": _cmd_fit,
    "breakdown": _cmd_breakdown,
    "serve": _cmd_serve,
}


def _configure_logging() -> None:
    name = os.environ.get("GAZEVAL_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DataError, OSError) as exc:
        print(f"gazeval: data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"gazeval: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
