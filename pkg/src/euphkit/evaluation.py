"""Ranking and identification metrics plus report emission.

Matching is exact string equality after corpus normalization. Recall is
deliberately not computed: ground-truth lists are incomplete and corpus
usage of a listed euphemism may be entirely non-euphemistic.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import TargetKeyword, tokenize
from .detection import CandidateRanking
from .errors import EvaluationError
from .identification import EuphemismDistribution

logger = logging.getLogger(__name__)

DETECTION_K_VALUES = (10, 20, 30, 40, 50, 60, 80, 100)
IDENTIFICATION_K_VALUES = (1, 2, 3)

CORRECT = "correct"
PARTIAL_PHRASE = "partial-phrase"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class GroundTruth:
    """Euphemism phrase -> target keyword surfaces (usually one)."""

    mapping: dict[str, tuple[str, ...]] = field(hash=False)
    category: str = ""

    def __post_init__(self) -> None:
        if not self.mapping:
            raise EvaluationError("ground truth must be non-empty")

    @property
    def partial_tokens(self) -> frozenset[str]:
        """Tokens of multi-word euphemism phrases (for partial-match tagging)."""
        toks: set[str] = set()
        for phrase in self.mapping:
            parts = phrase.split()
            if len(parts) > 1:
                toks.update(parts)
        return frozenset(toks)


def load_ground_truth(path: str | Path, keywords: list[TargetKeyword]) -> GroundTruth:
    """Read ``euphemism<TAB>target_keyword`` lines; values must be known keywords."""
    path = Path(path)
    if not path.is_file():
        raise EvaluationError(f"ground truth file not found: {path}")
    by_surface = {k.surface: k for k in keywords}
    mapping: dict[str, list[str]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise EvaluationError(
                    f"{path}:{lineno}: expected 'euphemism<TAB>target_keyword'"
                )
            phrase = " ".join(tokenize(parts[0]))
            keyword = " ".join(tokenize(parts[1]))
            if keyword not in by_surface:
                raise EvaluationError(
                    f"{path}:{lineno}: target keyword {keyword!r} not in keyword list"
                )
            targets = mapping.setdefault(phrase, [])
            if keyword not in targets:
                targets.append(keyword)
    if not mapping:
        raise EvaluationError(f"no ground truth entries in {path}")
    categories = sorted({by_surface[s].category for targets in mapping.values() for s in targets})
    return GroundTruth(
        mapping={phrase: tuple(targets) for phrase, targets in mapping.items()},
        category="+".join(categories),
    )


def tag_candidate(word: str, truth: GroundTruth) -> str:
    if word in truth.mapping:
        return CORRECT
    if word in truth.partial_tokens:
        return PARTIAL_PHRASE
    return UNKNOWN


def precision_at_k(ranking: CandidateRanking, truth: GroundTruth, k: int) -> float:
    """Fraction of the top-k candidates that exactly match a truth euphemism.

    A candidate matching only part of a multi-word phrase counts incorrect.
    Short rankings are scored over all available entries with a warning.
    """
    if k < 1:
        raise EvaluationError("k must be >= 1")
    entries = ranking.entries[:k]
    if len(entries) < k:
        logger.warning(
            "ranking has only %d entries; computing P@%d over all of them",
            len(ranking.entries),
            k,
        )
    if not entries:
        raise EvaluationError("cannot compute precision on an empty ranking")
    correct = sum(1 for e in entries if tag_candidate(e.word, truth) == CORRECT)
    return correct / len(entries)


def accuracy_at_k(
    distributions: list[EuphemismDistribution], truth: GroundTruth, k: int
) -> float:
    """Fraction of euphemisms whose true keyword is among the top-k predicted.

    Ties in predicted probability break lexicographically; words with no kept
    contexts count as misses. A word mapped to several keywords scores a hit
    if any of them appears in the top k.
    """
    if k < 1:
        raise EvaluationError("k must be >= 1")
    if not distributions:
        raise EvaluationError("no distributions to evaluate")
    hits = 0
    for dist in distributions:
        if dist.word not in truth.mapping:
            raise EvaluationError(f"word {dist.word!r} missing from ground truth")
        if dist.n_contexts_kept == 0 or not dist.probabilities:
            continue
        ranked = sorted(dist.probabilities.items(), key=lambda kv: (-kv[1], kv[0]))
        top = {surface for surface, _ in ranked[:k]}
        if any(target in top for target in truth.mapping[dist.word]):
            hits += 1
    return hits / len(distributions)


@dataclass(frozen=True)
class DetectionReport:
    precisions: dict[int, float] = field(hash=False)
    annotated: tuple[tuple[str, float, str], ...] = ()  # (word, weight, tag)
    n_candidates: int = 0


@dataclass(frozen=True)
class IdentificationReport:
    accuracies: dict[int, float] = field(hash=False)
    per_word: tuple[tuple[str, tuple[str, ...], int], ...] = ()  # (word, ranked keywords, n_kept)


def build_detection_report(
    ranking: CandidateRanking,
    truth: GroundTruth,
    k_values=DETECTION_K_VALUES,
    annotate_top: int = 100,
) -> DetectionReport:
    precisions = {k: precision_at_k(ranking, truth, k) for k in k_values}
    annotated = tuple(
        (e.word, e.weight, tag_candidate(e.word, truth))
        for e in ranking.entries[:annotate_top]
    )
    return DetectionReport(
        precisions=precisions, annotated=annotated, n_candidates=len(ranking.entries)
    )


def build_identification_report(
    distributions: list[EuphemismDistribution],
    truth: GroundTruth,
    k_values=IDENTIFICATION_K_VALUES,
) -> IdentificationReport:
    accuracies = {k: accuracy_at_k(distributions, truth, k) for k in k_values}
    per_word = []
    for dist in distributions:
        ranked = sorted(dist.probabilities.items(), key=lambda kv: (-kv[1], kv[0]))
        per_word.append(
            (dist.word, tuple(surface for surface, _ in ranked), dist.n_contexts_kept)
        )
    return IdentificationReport(accuracies=accuracies, per_word=tuple(per_word))


def _render_markdown(detection, identification) -> str:
    lines: list[str] = ["# Evaluation report", ""]
    if detection is not None:
        ks = sorted(detection.precisions)
        lines.append("## Detection (precision at k)")
        lines.append("")
        lines.append("| " + " | ".join(f"P@{k}" for k in ks) + " |")
        lines.append("|" + "---|" * len(ks))
        lines.append(
            "| " + " | ".join(f"{detection.precisions[k]:.2f}" for k in ks) + " |"
        )
        lines.append("")
        if detection.annotated:
            lines.append("### Top candidates")
            lines.append("")
            lines.append("| rank | word | weight | verdict |")
            lines.append("|---|---|---|---|")
            for rank, (word, weight, tag) in enumerate(detection.annotated, start=1):
                lines.append(f"| {rank} | {word} | {weight:.6g} | {tag} |")
            lines.append("")
    if identification is not None:
        ks = sorted(identification.accuracies)
        lines.append("## Identification (accuracy at k)")
        lines.append("")
        lines.append("| " + " | ".join(f"Acc@{k}" for k in ks) + " |")
        lines.append("|" + "---|" * len(ks))
        lines.append(
            "| " + " | ".join(f"{identification.accuracies[k]:.2f}" for k in ks) + " |"
        )
        lines.append("")
        if identification.per_word:
            lines.append("### Per-euphemism keyword ranking")
            lines.append("")
            lines.append("| word | predicted keywords (best first) | kept contexts |")
            lines.append("|---|---|---|")
            for word, ranked, n_kept in identification.per_word:
                lines.append(f"| {word} | {', '.join(ranked)} | {n_kept} |")
            lines.append("")
    return "\n".join(lines)


def _render_json(detection, identification) -> str:
    payload: dict = {}
    if detection is not None:
        payload["detection"] = {
            "precision_at_k": {str(k): v for k, v in sorted(detection.precisions.items())},
            "candidates": [
                {"rank": i + 1, "word": w, "weight": wt, "verdict": tag}
                for i, (w, wt, tag) in enumerate(detection.annotated)
            ],
            "n_candidates": detection.n_candidates,
        }
    if identification is not None:
        payload["identification"] = {
            "accuracy_at_k": {str(k): v for k, v in sorted(identification.accuracies.items())},
            "per_word": [
                {"word": w, "ranked_keywords": list(r), "n_contexts_kept": n}
                for w, r, n in identification.per_word
            ],
        }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _render_csv(detection, identification) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["section", "metric", "value"])
    if detection is not None:
        for k in sorted(detection.precisions):
            writer.writerow(["detection", f"P@{k}", f"{detection.precisions[k]:.6f}"])
    if identification is not None:
        for k in sorted(identification.accuracies):
            writer.writerow(
                ["identification", f"Acc@{k}", f"{identification.accuracies[k]:.6f}"]
            )
    return buf.getvalue()


def emit_report(
    detection: DetectionReport | None,
    identification: IdentificationReport | None,
    format: str,
    path: str | Path,
) -> Path:
    """Write a deterministic report file in markdown, json, or csv."""
    if detection is None and identification is None:
        raise EvaluationError("at least one report section is required")
    renderers = {"markdown": _render_markdown, "json": _render_json, "csv": _render_csv}
    if format not in renderers:
        raise EvaluationError(f"unknown report format {format!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(renderers[format](detection, identification), encoding="utf-8")
    return path
