"""Command-line surface: validate, score, calibrate, bootstrap, ablate, report.

Exit codes: 0 success, 2 input/configuration errors, 3 a calibration
that failed the significance gate under --strict-significance.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, report
from .ablation import combination_sweep, strategy_ablation
from .calibration import GridSpec, calibrate
from .channels import CHANNEL_NAMES, build_channels, required_tables
from .data import filter_identity_pairs, load_dataset, validate_join
from .errors import RedscoreError
from .fusion import DEFAULT_WEIGHTS, FusionWeights, score_dataset, squash
from .gaussian import GaussianStats, fit_mid_stats
from .rankstats import bootstrap_tau

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_SIGNIFICANT = 3


def _channel_list(text):
    names = [c.strip() for c in text.split(",") if c.strip()]
    for name in names:
        if name not in CHANNEL_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown channel {name!r}; expected one of {', '.join(CHANNEL_NAMES)}"
            )
    return names


def _weights(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("weights must be alpha,beta,gamma,lambda")
    return FusionWeights.from_floats(*parts)


def _add_dataset_flags(p):
    p.add_argument("--manifest", required=True, help="dataset manifest (JSON)")
    p.add_argument("--join-mode", choices=["strict", "skip"], default="strict")
    p.add_argument("--keep-identity-pairs", action="store_true",
                   help="do not exclude candidates that equal a reference")
    p.add_argument("--reference-aggregation", choices=["first", "max", "mean"],
                   default="first")
    p.add_argument("--shrinkage", type=float, default=None,
                   help="starting covariance jitter for the mid channel")
    p.add_argument("--stats-cache", default=None,
                   help="RSGS file: load mid-channel Gaussian stats if present, else fit and save")


def _add_grid_flags(p):
    p.add_argument("--min-weight", type=float, default=0.15)
    p.add_argument("--weight-step", type=float, default=0.05)
    p.add_argument("--lambda-step", type=float, default=0.1)
    p.add_argument("--variant", choices=["tau_c", "tau_b"], default="tau_c")


def _add_output_flags(p):
    p.add_argument("--output-dir", default=".",
                   help="directory for artifacts (created if missing)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="redscore",
        description="Fused image-caption scoring from precomputed embeddings",
    )
    parser.add_argument("--version", action="version", version=f"redscore {__version__}")
    parser.add_argument(
        "--workers", type=int, default=int(os.environ.get("REDSCORE_WORKERS", "1")),
        help="worker threads for grid/bootstrap evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load a manifest and report structural problems")
    _add_dataset_flags(p)
    p.add_argument("--channels", type=_channel_list, default=[],
                   help="comma-separated channels whose joins to check")

    p = sub.add_parser("score", help="compute fused scores at fixed weights")
    _add_dataset_flags(p)
    _add_output_flags(p)
    p.add_argument("--channels", type=_channel_list, default=["mid", "dino", "gte"])
    p.add_argument("--weights", type=_weights, default=DEFAULT_WEIGHTS,
                   help="alpha,beta,gamma,lambda on the grid (default 0.15,0.35,0.5,0.8)")

    p = sub.add_parser("calibrate", help="grid-search weights against human ratings")
    _add_dataset_flags(p)
    _add_grid_flags(p)
    _add_output_flags(p)
    p.add_argument("--channels", type=_channel_list, default=["mid", "dino", "gte"])
    p.add_argument("--pvalue", choices=["normal", "permutation"], default="normal")
    p.add_argument("--perm-iters", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict-significance", action="store_true",
                   help="exit nonzero if the best point has p >= 0.05")
    p.add_argument("--no-grid-trace", action="store_true",
                   help="omit the full grid trace from the artifact")

    p = sub.add_parser("bootstrap", help="bootstrap the tau of a score against ratings")
    _add_dataset_flags(p)
    _add_output_flags(p)
    p.add_argument("--channels", type=_channel_list, default=["mid", "dino", "gte"])
    p.add_argument("--weights", type=_weights, default=DEFAULT_WEIGHTS)
    p.add_argument("--target", default="rs",
                   help="'rs' (fused score) or a single raw channel name")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=["tau_c", "tau_b"], default="tau_c")

    p = sub.add_parser("ablate", help="aggregation-strategy and combination ablations")
    ablate_sub = p.add_subparsers(dest="ablate_command", required=True)

    ps = ablate_sub.add_parser("strategy", help="hybrid vs additive vs multiplicative")
    _add_dataset_flags(ps)
    _add_grid_flags(ps)
    _add_output_flags(ps)
    ps.add_argument("--channels", type=_channel_list, default=["mid", "dino", "gte"])
    ps.add_argument("--bootstrap", action="store_true", help="add bootstrap sigma per row")
    ps.add_argument("--runs", type=int, default=1000)
    ps.add_argument("--seed", type=int, default=0)

    pw = ablate_sub.add_parser("sweep", help="all three-channel combinations from a pool")
    _add_dataset_flags(pw)
    _add_grid_flags(pw)
    _add_output_flags(pw)
    pw.add_argument("--pool", type=_channel_list,
                    default=["mid", "gte", "dino", "bertscore", "lpips", "clip"])
    pw.add_argument("--bootstrap", action="store_true")
    pw.add_argument("--runs", type=int, default=1000)
    pw.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", help="render an artifact file as a table")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["table", "structured"], default="table")
    p.add_argument("--output", default=None, help="write here instead of stdout")

    return parser


def _load(args, channel_names):
    """Shared pipeline: load, identity-filter, join-validate."""
    dataset = load_dataset(args.manifest)
    excluded = 0
    if not args.keep_identity_pairs:
        dataset, excluded = filter_identity_pairs(dataset)
    tables = required_tables(channel_names)
    report_ = None
    if tables:
        dataset, report_ = validate_join(dataset, tables, mode=args.join_mode)
    return dataset, excluded, report_


def _mid_stats(args, dataset, channel_names):
    """Fit or load cached Gaussian stats when the mid channel is in play."""
    if "mid" not in channel_names:
        return None
    if args.stats_cache and Path(args.stats_cache).exists():
        return GaussianStats.load(args.stats_cache)
    stats = fit_mid_stats(dataset, shrinkage=args.shrinkage)
    if args.stats_cache:
        stats.save(args.stats_cache)
    return stats


def _build(args, dataset, channel_names):
    return build_channels(
        dataset,
        channel_names,
        reference_aggregation=args.reference_aggregation,
        shrinkage=args.shrinkage,
        mid_stats=_mid_stats(args, dataset, channel_names),
    )


def _config_dict(args, skip=("command", "ablate_command", "workers", "output_dir", "output")):
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, FusionWeights):
            value = report.weights_dict(value)
        cfg[key] = value
    return cfg


def _out_dir(args):
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid_spec(args):
    return GridSpec.from_floats(
        weight_step=args.weight_step,
        min_weight=args.min_weight,
        lambda_step=args.lambda_step,
    )


def cmd_validate(args):
    dataset = load_dataset(args.manifest)
    filtered, excluded = filter_identity_pairs(dataset)
    print(f"dataset: {dataset.name}")
    print(f"samples: {len(dataset.samples)} ({excluded} identity pairs would be excluded)")
    for name, table in sorted(dataset.tables.items()):
        print(f"table: {name} role={table.role} dim={table.dim} entries={len(table)}")
    if args.channels:
        target = dataset if args.keep_identity_pairs else filtered
        _, joined = validate_join(target, required_tables(args.channels), mode=args.join_mode)
        if joined.ok():
            print(f"join: ok for channels {','.join(args.channels)}")
        else:
            for sample_id, channel, key in joined.misses:
                print(f"join miss: sample={sample_id} table={channel} key={key}")
            print(f"join: {len(joined.misses)} misses, {joined.retained} samples retained")
    return EXIT_OK


def cmd_score(args):
    if len(args.channels) != 3:
        raise RedscoreError("score needs exactly 3 channels (got "
                            f"{len(args.channels)}); use --channels")
    dataset, excluded, _ = _load(args, args.channels)
    channels = _build(args, dataset, args.channels)
    scores = score_dataset(channels, tuple(args.channels), args.weights)
    out = _out_dir(args)
    lines_path = out / "scores.jsonl"
    per_sample = []
    with open(lines_path, "w", encoding="utf-8") as fh:
        for sample_id in scores.per_sample:
            line = {"sample_id": sample_id, "rs": scores.per_sample[sample_id]}
            for name in args.channels:
                line[f"z_{name}"] = float(squash(channels[name].values[sample_id]))
            per_sample.append(line)
            fh.write(json.dumps(line, sort_keys=True) + "\n")
        summary = {
            "summary": {
                "tool": report.TOOL,
                "version": __version__,
                "config": _config_dict(args),
                "weights": report.weights_dict(args.weights),
                "channels": list(args.channels),
                "mean": scores.mean,
                "n": len(scores.per_sample),
                "identity_pairs_excluded": excluded,
            }
        }
        fh.write(json.dumps(summary, sort_keys=True) + "\n")
    table = report.render_artifact(
        report.artifact("scores", _config_dict(args),
                        {"channels": list(args.channels), "per_sample": per_sample})
    )
    (out / "scores.txt").write_text(table, encoding="utf-8")
    print(f"scored {len(per_sample)} samples; mean RS = {scores.mean:.4f}")
    print(f"wrote {lines_path}")
    return EXIT_OK


def cmd_calibrate(args):
    dataset, excluded, _ = _load(args, args.channels)
    channels = _build(args, dataset, args.channels)
    result = calibrate(
        channels,
        tuple(args.channels),
        dataset.ratings(),
        _grid_spec(args),
        variant=args.variant,
        pvalue_method=args.pvalue,
        perm_iters=args.perm_iters,
        seed=args.seed,
        keep_trace=not args.no_grid_trace,
        workers=args.workers,
    )
    out = _out_dir(args)
    payload = report.calibration_dict(result)
    payload["identity_pairs_excluded"] = excluded
    report.write_artifact(out / "calibration.json", "calibration", _config_dict(args), payload)
    text = report.calibration_table(result) + "\nsensitivity:\n" + report.sensitivity_table(result)
    (out / "calibration.txt").write_text(text, encoding="utf-8")
    print(report.calibration_table(result), end="")
    print(f"significant: {result.significant} (p = {result.p_value:.4g})")
    print(f"wrote {out / 'calibration.json'}")
    if args.strict_significance and not result.significant:
        print("best grid point is not significant at p < 0.05", file=sys.stderr)
        return EXIT_NOT_SIGNIFICANT
    return EXIT_OK


def cmd_bootstrap(args):
    channel_names = list(args.channels)
    if args.target != "rs":
        if args.target not in CHANNEL_NAMES:
            raise RedscoreError(f"unknown bootstrap target {args.target!r}")
        channel_names = [args.target]
    dataset, excluded, _ = _load(args, channel_names)
    channels = _build(args, dataset, channel_names)
    ratings = dataset.ratings()
    if args.target == "rs":
        scores = score_dataset(channels, tuple(args.channels), args.weights)
        values = scores.per_sample
    else:
        values = channels[args.target].values
    rated = [i for i in values if ratings.get(i) is not None]
    summary = bootstrap_tau(
        np.array([values[i] for i in rated]),
        np.array([ratings[i] for i in rated]),
        runs=args.runs,
        seed=args.seed,
        variant=args.variant,
        workers=args.workers,
    )
    out = _out_dir(args)
    payload = report.bootstrap_dict(summary)
    payload["target"] = args.target
    payload["n"] = len(rated)
    payload["identity_pairs_excluded"] = excluded
    report.write_artifact(out / "bootstrap.json", "bootstrap", _config_dict(args), payload)
    print(report.bootstrap_line(summary))
    print(f"wrote {out / 'bootstrap.json'}")
    return EXIT_OK


def cmd_ablate(args):
    boot = (args.runs, args.seed) if args.bootstrap else None
    if args.ablate_command == "strategy":
        dataset, excluded, _ = _load(args, args.channels)
        channels = _build(args, dataset, args.channels)
        rows = strategy_ablation(
            channels, tuple(args.channels), dataset.ratings(),
            _grid_spec(args), variant=args.variant, bootstrap=boot,
        )
        table = report.strategy_table(rows)
        row_dicts = []
        for label in ("hybrid", "additive", "multiplicative"):
            d = report.ablation_rows_dict([rows[label]])[0]
            d["strategy"] = label
            row_dicts.append(d)
        kind = "ablation-strategy"
    else:
        dataset, excluded, _ = _load(args, args.pool)
        channels = _build(args, dataset, args.pool)
        sweep = combination_sweep(
            args.pool, channels, dataset.ratings(),
            _grid_spec(args), variant=args.variant, bootstrap=boot,
        )
        table = report.ablation_table(sweep)
        row_dicts = report.ablation_rows_dict(sweep)
        kind = "ablation-sweep"
    out = _out_dir(args)
    payload = {"rows": row_dicts, "identity_pairs_excluded": excluded}
    report.write_artifact(out / "ablation.json", kind, _config_dict(args), payload)
    (out / "ablation.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    print(f"wrote {out / 'ablation.json'}")
    return EXIT_OK


def cmd_report(args):
    path = Path(args.input)
    if not path.exists():
        raise RedscoreError(f"input {path} does not exist")
    payload = report.load_artifact(path)
    if args.format == "structured":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        text = report.render_artifact(payload)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {args.output}")
    else:
        print(text, end="")
    return EXIT_OK


_HANDLERS = {
    "validate": cmd_validate,
    "score": cmd_score,
    "calibrate": cmd_calibrate,
    "bootstrap": cmd_bootstrap,
    "ablate": cmd_ablate,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except RedscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
