"""Stage orchestration over a run directory.

Each command runs its stages sequentially under the run lock, records
artifacts in the manifest as stages complete, and marks the failing stage
before re-raising.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from . import detection, identification
from .backends import Backend, build_count_oracle, load_backend
from .corpus import Corpus, TargetKeyword, count_occurrences, load_corpus, load_keywords
from .errors import ConfigError, EuphkitError, PipelineError
from .evaluation import (
    build_detection_report,
    build_identification_report,
    emit_report,
    load_ground_truth,
)
from .identification import EuphemismDistribution
from .runs import RunConfig, RunManifest, run_lock

logger = logging.getLogger(__name__)


def _load_inputs(config: RunConfig) -> tuple[Corpus, list[TargetKeyword]]:
    corpus = load_corpus(config.corpus_path, config.corpus_format)
    keywords = load_keywords(config.keyword_list_path)
    return corpus, keywords


def _write_keyword_version(run_dir: Path, keywords: list[TargetKeyword]) -> Path:
    promotions = run_dir / "promotions"
    promotions.mkdir(parents=True, exist_ok=True)
    existing = sorted(promotions.glob("keywords_v*.tsv"))
    version = len(existing) + 1
    path = promotions / f"keywords_v{version:03d}.tsv"
    path.write_text(
        "".join(f"{k.surface}\t{k.category}\n" for k in keywords), encoding="utf-8"
    )
    return path


def _build_backend(config: RunConfig, corpus: Corpus) -> Backend:
    backend_dir = config.run_dir / "backend"
    if config.backend == "count-oracle":
        handle = build_count_oracle(corpus, window=config.window, smoothing=config.smoothing)
        handle.save(backend_dir)
        return handle
    from .mlm import fine_tune

    return fine_tune(
        corpus,
        base_model_ref=config.base_model,
        hyperparams={
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "seed": config.seed,
        },
        out_dir=backend_dir,
    )


def run_detect(config: RunConfig) -> RunManifest:
    """ingest -> backend -> detect, persisting every artifact."""
    manifest = RunManifest.create(config)
    with run_lock(config.run_dir):
        stage = "ingest"
        try:
            manifest.start_stage(stage)
            corpus, keywords = _load_inputs(config)
            occurrences = count_occurrences(corpus, keywords)
            occ_path = config.run_dir / "occurrences.json"
            occ_path.write_text(
                json.dumps(occurrences, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            keywords_path = _write_keyword_version(config.run_dir, keywords)
            manifest.finish_stage(stage, {"occurrences": occ_path, "keywords": keywords_path})

            stage = "backend"
            manifest.start_stage(stage)
            handle = _build_backend(config, corpus)
            manifest.finish_stage(stage, {"state": config.run_dir / "backend" / "meta.json"})

            stage = "detect"
            manifest.start_stage(stage)
            ranking = detection.detect(
                corpus,
                keywords,
                handle,
                config.t,
                config.run_dir,
                extra_params={"k_values": list(config.k_values), "seed": config.seed},
            )
            contexts = detection.candidate_contexts(
                corpus,
                list(ranking.words()[: config.review_top]),
                keywords,
                handle,
                config.t,
                per_word=config.review_contexts,
            )
            contexts_path = config.run_dir / "rankings" / "contexts.jsonl"
            with contexts_path.open("w", encoding="utf-8") as fh:
                for word in ranking.words()[: config.review_top]:
                    record = {
                        "word": word,
                        "contexts": contexts[word],
                        "bigrams": detection.bigram_completions(corpus, word),
                    }
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
            manifest.finish_stage(
                stage,
                {
                    "ranking": config.run_dir / "rankings" / "candidates.tsv",
                    "decisions": config.run_dir / "rankings" / "filter_decisions.jsonl",
                    "contexts": contexts_path,
                },
            )
        except EuphkitError as exc:
            manifest.fail_stage(stage, str(exc))
            raise
    return manifest


def _train_classifiers(config: RunConfig, corpus: Corpus, keywords: list[TargetKeyword]):
    samples = identification.build_fine_training_set(corpus, keywords)
    usable_samples = [
        s
        for s in samples
        if len(s.masked.tokens_with_mask) - 1 >= identification.MIN_CONTEXT_TOKENS
    ]
    if not usable_samples:
        raise PipelineError("no usable keyword contexts to train on")
    positives = [s.masked for s in usable_samples]
    negatives = identification.sample_negative_contexts(
        corpus, len(positives), config.seed, keywords
    )
    coarse = identification.train_coarse(positives, negatives, seed=config.seed)
    fine = identification.train_fine(usable_samples, seed=config.seed)
    return coarse, fine


def run_identify(config: RunConfig, words: list[str] | str) -> RunManifest:
    """Train (or reuse) classifiers, then emit one distribution per word."""
    run_dir = config.run_dir
    try:
        manifest = RunManifest.load(run_dir)
    except ConfigError:
        manifest = RunManifest.create(config)

    if isinstance(words, str):
        if not words.startswith("from-detection:"):
            raise ConfigError(f"unrecognized word selector {words!r}")
        top_k = int(words.split(":", 1)[1])
        ranking = detection.load_ranking(run_dir)
        words = list(ranking.words()[:top_k])
    if not words:
        raise ConfigError("no words to identify")

    with run_lock(run_dir):
        stage = "classifiers"
        try:
            corpus, keywords = _load_inputs(config)
            classifiers_dir = run_dir / "classifiers"
            coarse_path = classifiers_dir / "coarse.pkl"
            fine_path = classifiers_dir / "fine.pkl"
            if coarse_path.is_file() and fine_path.is_file():
                coarse = identification.CoarseClassifier.load(coarse_path)
                fine = identification.FineClassifier.load(fine_path)
            else:
                manifest.start_stage(stage)
                classifiers_dir.mkdir(parents=True, exist_ok=True)
                coarse, fine = _train_classifiers(config, corpus, keywords)
                coarse.save(coarse_path)
                fine.save(fine_path)
                metrics_path = classifiers_dir / "metrics.json"
                metrics_path.write_text(
                    json.dumps(
                        {"coarse": coarse.metrics, "fine": fine.metrics},
                        indent=2,
                        sort_keys=True,
                    )
                    + "\n",
                    encoding="utf-8",
                )
                manifest.finish_stage(
                    stage,
                    {"coarse": coarse_path, "fine": fine_path, "metrics": metrics_path},
                )

            stage = "identify"
            manifest.start_stage(stage)
            dist_dir = run_dir / "distributions"
            dist_dir.mkdir(parents=True, exist_ok=True)
            dist_path = dist_dir / "distributions.jsonl"
            with dist_path.open("w", encoding="utf-8") as fh:
                for word in words:
                    try:
                        dist = identification.identify(word, corpus, coarse, fine)
                    except EuphkitError as exc:
                        logger.warning("identification failed for %r: %s", word, exc)
                        fh.write(json.dumps({"word": word, "error": str(exc)}, sort_keys=True) + "\n")
                        continue
                    fh.write(
                        json.dumps(
                            {
                                "word": dist.word,
                                "counts": dist.label_counts,
                                "probabilities": dist.probabilities,
                                "n_total": dist.n_contexts_total,
                                "n_kept": dist.n_contexts_kept,
                                "flag": dist.flag,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
            manifest.finish_stage(stage, {"distributions": dist_path})
        except EuphkitError as exc:
            manifest.fail_stage(stage, str(exc))
            raise
    return manifest


def load_distributions(run_dir: Path) -> list[EuphemismDistribution]:
    dist_path = Path(run_dir) / "distributions" / "distributions.jsonl"
    if not dist_path.is_file():
        return []
    out = []
    with dist_path.open(encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            if "error" in record:
                continue
            out.append(
                EuphemismDistribution(
                    word=record["word"],
                    label_counts=record["counts"],
                    probabilities=record["probabilities"],
                    n_contexts_total=record["n_total"],
                    n_contexts_kept=record["n_kept"],
                    flag=record.get("flag"),
                )
            )
    return out


def run_evaluate(config: RunConfig, formats: tuple[str, ...] = ("markdown", "json")) -> dict[str, Path]:
    """Score persisted artifacts against the ground truth list."""
    if not config.ground_truth_path:
        raise ConfigError("evaluation requires a ground truth file (--truth)")
    run_dir = config.run_dir
    manifest = RunManifest.load(run_dir)
    keywords = load_keywords(config.keyword_list_path)
    truth = load_ground_truth(config.ground_truth_path, keywords)

    ranking = detection.load_ranking(run_dir)
    det_report = build_detection_report(ranking, truth, config.k_values)

    distributions = load_distributions(run_dir)
    scorable = [d for d in distributions if d.word in truth.mapping]
    skipped = len(distributions) - len(scorable)
    if skipped:
        logger.warning("%d identified words are not in the ground truth; skipped", skipped)
    iden_report = build_identification_report(scorable, truth) if scorable else None

    manifest.start_stage("evaluate")
    suffix = {"markdown": "md", "json": "json", "csv": "csv"}
    paths: dict[str, Path] = {}
    for fmt in formats:
        out = run_dir / "reports" / f"report.{suffix.get(fmt, fmt)}"
        emit_report(det_report, iden_report, fmt, out)
        paths[fmt] = out
    manifest.finish_stage("evaluate", paths)
    return paths


def reload_run_backend(run_dir: Path) -> Backend:
    return load_backend(Path(run_dir) / "backend")
