"""Synthetic corpus generator with planted euphemisms.

Builds a deterministic forum-style corpus in which invented tokens are used
interchangeably with target keywords inside shared "informative" sentence
templates, and additionally in innocuous "cover" templates at a configurable
ratio. By construction the planted tokens are the strongest context matches
for the keywords, which makes the corpus a ground-truthed end-to-end fixture.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

KEYWORD_POOL = (
    "heroin", "marijuana", "methamphetamine", "cocaine",
    "ecstasy", "fentanyl", "ketamine", "opium",
)

EUPHEMISM_POOL = (
    "zorp", "blick", "fendle", "quarp", "mizzle", "dramble", "plonket", "vutch",
    "grindle", "snerf", "walmer", "trillix", "crombo", "pexin", "yarbo", "daskel",
    "flom", "quizzle", "brundle", "sporv", "nackle", "wumbo", "drizzet", "klonter",
    "vasper", "moxel", "tarnip", "gluven", "sprock", "helbin", "crastle", "zimber",
    "polku", "wrenit", "dovak", "lurnip", "quenby", "smarge", "trubbel", "onka",
)

# Keyword-specific signal word pairs; they appear away from the target slot so
# the slot's immediate neighbors stay shared across the whole category.
SIGNAL_PAIRS = (
    ("powder", "needle"), ("leaf", "smoke"), ("crystal", "glass"), ("pill", "rave"),
    ("syrup", "lean"), ("patch", "clinic"), ("vial", "dose"), ("resin", "pipe"),
)

# The words adjacent to {W} below are reserved: no cover or noise template may
# use them, so only keywords and planted euphemisms fill these context windows.
INFORMATIVE_TEMPLATES = (
    "my {adj} friend bought {W} yesterday and the {s0} {s1} went around fast .",
    "they kept selling {W} cheap behind the {s0} {s1} corner after {n} raids .",
    "only quality {W} always moves quick when the {s0} {s1} supply dries up .",
    "he got busted carrying {W} near that {s0} {s1} alley around {n} am .",
    "pure uncut {W} wrecked his whole {s0} {s1} crew for {n} weeks .",
)

COVER_TEMPLATES = (
    "grandma kept a {W} on the {adj} kitchen shelf for {n} years .",
    "the old {W} in the museum looked {adj} to every visitor .",
    "we painted the {W} bright {color} before the {n} street fair .",
)

NOISE_TEMPLATES = (
    "the weather in {city} stayed {adj} for {n} days straight .",
    "her {adj} cousin visited {city} during the {color} festival .",
    "local news ran {n} stories about the {city} farmers market .",
    "everyone enjoyed the {adj} concert despite {n} minute delays .",
    "the {city} library repainted its walls {color} last spring .",
)

ADJECTIVES = (
    "tired", "curious", "stubborn", "quiet", "nervous", "cheerful", "gloomy",
    "restless", "patient", "clumsy", "serious", "jumpy", "mellow", "brisk",
    "sleepy", "eager",
)
CITIES = (
    "dayton", "fresno", "tulsa", "omaha", "boise", "reno", "salem", "fargo",
    "waco", "flint", "provo", "tempe", "yonkers", "laredo", "norfolk", "tacoma",
)
COLORS = ("red", "orange", "teal", "violet", "maroon", "silver", "indigo", "olive")


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 7
    n_keywords: int = 3
    euphemisms_per_keyword: int = 5
    cover_ratio: float = 0.5
    keyword_sentences: int = 40
    euphemism_sentences: int = 24
    noise_sentences: int = 300

    def __post_init__(self) -> None:
        if not 1 <= self.n_keywords <= len(KEYWORD_POOL):
            raise ConfigError(f"n_keywords must be in 1..{len(KEYWORD_POOL)}")
        total = self.n_keywords * self.euphemisms_per_keyword
        if total > len(EUPHEMISM_POOL):
            raise ConfigError(f"at most {len(EUPHEMISM_POOL)} total euphemisms supported")
        if not 0.0 <= self.cover_ratio <= 1.0:
            raise ConfigError("cover_ratio must be in [0, 1]")


@dataclass(frozen=True)
class SynthData:
    lines: tuple[str, ...]
    keywords: tuple[tuple[str, str], ...]          # (surface, category)
    truth: tuple[tuple[str, str], ...]             # (euphemism, keyword)
    spec: SynthSpec = field(hash=False)


def _fill(template: str, rng: random.Random, word: str, signals: tuple[str, str]) -> str:
    return template.format(
        W=word,
        s0=signals[0],
        s1=signals[1],
        adj=rng.choice(ADJECTIVES),
        city=rng.choice(CITIES),
        color=rng.choice(COLORS),
        n=rng.randint(10, 99),
    )


def generate(spec: SynthSpec) -> SynthData:
    rng = random.Random(spec.seed)
    keywords = KEYWORD_POOL[: spec.n_keywords]
    n_euph = spec.n_keywords * spec.euphemisms_per_keyword
    euphemisms = EUPHEMISM_POOL[:n_euph]
    euph_keyword = {e: keywords[i % spec.n_keywords] for i, e in enumerate(euphemisms)}
    signals = {k: SIGNAL_PAIRS[i] for i, k in enumerate(keywords)}

    lines: list[str] = []
    for keyword in keywords:
        for _ in range(spec.keyword_sentences):
            template = rng.choice(INFORMATIVE_TEMPLATES)
            lines.append(_fill(template, rng, keyword, signals[keyword]))
    for euphemism in euphemisms:
        n_cover = round(spec.euphemism_sentences * spec.cover_ratio)
        n_informative = spec.euphemism_sentences - n_cover
        keyword = euph_keyword[euphemism]
        for _ in range(n_informative):
            template = rng.choice(INFORMATIVE_TEMPLATES)
            lines.append(_fill(template, rng, euphemism, signals[keyword]))
        for _ in range(n_cover):
            template = rng.choice(COVER_TEMPLATES)
            lines.append(_fill(template, rng, euphemism, signals[keyword]))
    for _ in range(spec.noise_sentences):
        template = rng.choice(NOISE_TEMPLATES)
        lines.append(_fill(template, rng, "", ("", "")))
    rng.shuffle(lines)

    return SynthData(
        lines=tuple(lines),
        keywords=tuple((k, "drug") for k in keywords),
        truth=tuple((e, euph_keyword[e]) for e in euphemisms),
        spec=spec,
    )


def write_synth(spec: SynthSpec, out_dir: str | Path) -> dict[str, Path]:
    """Materialize corpus.txt, keywords.tsv, and truth.tsv under out_dir."""
    data = generate(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.txt"
    corpus_path.write_text("".join(line + "\n" for line in data.lines), encoding="utf-8")
    keywords_path = out / "keywords.tsv"
    keywords_path.write_text(
        "".join(f"{surface}\t{category}\n" for surface, category in data.keywords),
        encoding="utf-8",
    )
    truth_path = out / "truth.tsv"
    truth_path.write_text(
        "".join(f"{euph}\t{keyword}\n" for euph, keyword in data.truth),
        encoding="utf-8",
    )
    return {"corpus": corpus_path, "keywords": keywords_path, "truth": truth_path}
