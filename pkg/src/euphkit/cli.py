"""Command-line surface.

Exit codes: 0 success, 1 configuration error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, EuphkitError
from .pipeline import run_detect, run_evaluate, run_identify
from .runs import build_config, parse_config_file
from .synth import SynthSpec, write_synth


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--corpus", help="raw text corpus path")
    parser.add_argument("--keywords", help="keyword list path (surface<TAB>category)")
    parser.add_argument("--truth", help="ground truth path (euphemism<TAB>keyword)")
    parser.add_argument("--backend", choices=["count-oracle", "contextual-mlm"])
    parser.add_argument("--t", type=int, help="MLM filter threshold (default 5)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--run-id", dest="run_id")
    parser.add_argument("--runs-root", dest="runs_root", help="root directory for runs")
    parser.add_argument("--k", help="comma-separated k values for evaluation")
    parser.add_argument("--format", dest="format", choices=["plain-lines", "json-lines"],
                        help="corpus file format")
    parser.add_argument("--window", type=int, help="count-oracle context window")
    parser.add_argument("--smoothing", type=float, help="count-oracle smoothing")
    parser.add_argument("--base-model", dest="base_model", help="contextual-mlm base model ref")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)


def _config_from_args(args: argparse.Namespace):
    file_values = parse_config_file(args.config) if args.config else None
    overrides = {
        "corpus": args.corpus,
        "keywords": args.keywords,
        "truth": args.truth,
        "backend": args.backend,
        "t": args.t,
        "seed": args.seed,
        "run_id": args.run_id,
        "runs_root": args.runs_root,
        "k": args.k,
        "format": args.format,
        "window": args.window,
        "smoothing": args.smoothing,
        "base_model": args.base_model,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
    }
    return build_config(file_values, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="euphkit",
        description="Detect euphemisms for target keywords and identify their meanings.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="run the detection pipeline")
    _add_config_flags(p_detect)

    p_identify = sub.add_parser("identify", help="map detected words to keywords")
    _add_config_flags(p_identify)
    p_identify.add_argument(
        "--words",
        required=True,
        help="comma-separated words, or 'from-detection:K' for the top K detected",
    )

    p_eval = sub.add_parser("evaluate", help="score artifacts against ground truth")
    _add_config_flags(p_eval)
    p_eval.add_argument(
        "--report-format",
        default="markdown,json",
        help="comma-separated subset of markdown,json,csv",
    )

    p_synth = sub.add_parser("synth", help="generate a synthetic planted-euphemism corpus")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.add_argument("--n-keywords", type=int, default=3)
    p_synth.add_argument("--euphemisms-per-keyword", type=int, default=5)
    p_synth.add_argument("--cover-ratio", type=float, default=0.5)
    p_synth.add_argument("--keyword-sentences", type=int, default=40)
    p_synth.add_argument("--euphemism-sentences", type=int, default=24)
    p_synth.add_argument("--noise-sentences", type=int, default=300)

    p_serve = sub.add_parser("serve", help="serve the moderator review API")
    p_serve.add_argument("--runs-root", dest="runs_root", default="runs")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument(
        "--frontend", default="frontend/dist",
        help="static console build to mount at /ui (skipped when absent)",
    )

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "detect":
            manifest = run_detect(_config_from_args(args))
            print(f"detection complete: {manifest.path}")
        elif args.command == "identify":
            words = args.words
            if not words.startswith("from-detection:"):
                words = [w.strip() for w in words.split(",") if w.strip()]
            manifest = run_identify(_config_from_args(args), words)
            print(f"identification complete: {manifest.path}")
        elif args.command == "evaluate":
            formats = tuple(f.strip() for f in args.report_format.split(",") if f.strip())
            paths = run_evaluate(_config_from_args(args), formats)
            for fmt, path in paths.items():
                print(f"{fmt}: {path}")
        elif args.command == "synth":
            spec = SynthSpec(
                seed=args.seed,
                n_keywords=args.n_keywords,
                euphemisms_per_keyword=args.euphemisms_per_keyword,
                cover_ratio=args.cover_ratio,
                keyword_sentences=args.keyword_sentences,
                euphemism_sentences=args.euphemism_sentences,
                noise_sentences=args.noise_sentences,
            )
            paths = write_synth(spec, args.out)
            for name, path in paths.items():
                print(f"{name}: {path}")
        elif args.command == "serve":
            import uvicorn

            from .service import create_app

            if not any(p.is_dir() for p in Path(args.runs_root).glob("*")):
                raise ConfigError(f"no runs found under {args.runs_root}")
            app = create_app(args.runs_root, frontend_dir=args.frontend)
            try:
                uvicorn.run(app, host=args.host, port=args.port)
            except OSError as exc:
                raise EuphkitError(f"cannot bind {args.host}:{args.port}: {exc}") from exc
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except EuphkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
