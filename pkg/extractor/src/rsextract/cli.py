"""rsextract command line: run extraction jobs and merge shard bundles."""

import argparse
import sys

from . import ExtractorError, __version__
from .extract import merge_bundles, run_job
from .job import ExtractionJob


def _shard(text):
    try:
        index, count = text.split("/")
        return int(index), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError("shard must look like i/n, e.g. 0/4") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="rsextract",
                                     description="Embedding extractor for redscore")
    parser.add_argument("--version", action="version", version=f"rsextract {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an extraction job")
    p.add_argument("--job", required=True, help="job manifest (JSON)")
    p.add_argument("--channels", default=None,
                   help="override the job's channel list (comma-separated)")
    p.add_argument("--seed", type=int, default=None, help="override the generation seed")
    p.add_argument("--backend", default=None, choices=["stub", "torch"])
    p.add_argument("--shard", type=_shard, default=None, help="i/n sample striding")

    p = sub.add_parser("merge", help="merge shard bundles")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--output", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            job = ExtractionJob.from_json(args.job)
            if args.channels:
                job.channels = tuple(c.strip() for c in args.channels.split(",") if c.strip())
                job.__post_init__()
            if args.seed is not None:
                job.generation["seed"] = args.seed
            if args.backend:
                job.backend = args.backend
            emitted = run_job(job, shard=args.shard)
            for name, path in sorted(emitted.get("bundles", {}).items()):
                print(f"wrote {name}: {path}")
            for key in ("generation_manifest", "manifest"):
                if key in emitted:
                    print(f"wrote {key}: {emitted[key]}")
            return 0
        merge_bundles(args.inputs, args.output)
        print(f"wrote {args.output}")
        return 0
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
