"""Valence scoring of utterances via a signed word lexicon with negation
flipping, and mapping of user valence to the agent's emotion label."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .textproc import Token

EMOTIONS = ("happy", "sad", "surprised", "interested", "neutral")

NEUTRAL_BAND = 0.1  # |score| <= band -> neutral
_NEGATION_WINDOW = 2


def _is_negation(lemma: str) -> bool:
    return lemma in ("not", "never", "n't") or lemma.endswith("n't")


@dataclass(frozen=True)
class ValenceRecord:
    score: float
    label: str  # negative | neutral | positive
    hits: tuple[tuple[str, float], ...]

    @staticmethod
    def neutral() -> "ValenceRecord":
        return ValenceRecord(0.0, "neutral", ())


def label_for(score: float) -> str:
    if score < -NEUTRAL_BAND:
        return "negative"
    if score > NEUTRAL_BAND:
        return "positive"
    return "neutral"


class SentimentLexicon:
    """lemma → signed weight in [-1, 1], loaded from a tab-separated file."""

    def __init__(self, weights: Mapping[str, float]):
        bad = {w for w in weights.values() if not -1.0 <= w <= 1.0}
        if bad:
            raise ValueError(f"sentiment weights outside [-1,1]: {sorted(bad)}")
        self.weights = dict(weights)

    @classmethod
    def load(cls, path: str | Path) -> "SentimentLexicon":
        weights: dict[str, float] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: expected 'lemma<TAB>weight', got {line!r}"
                    )
                try:
                    weights[parts[0].lower()] = float(parts[1])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad weight {parts[1]!r}") from exc
        return cls(weights)

    @classmethod
    def bundled(cls) -> "SentimentLexicon":
        with resources.as_file(
            resources.files("elicit.data") / "sentiment.txt"
        ) as p:
            return cls.load(p)


def valence(tokens: Sequence[Token], lexicon: SentimentLexicon) -> ValenceRecord:
    """Mean of matched word weights; a negation within two tokens before a
    hit flips that hit's sign.  Empty or hit-free input scores 0."""
    hits: list[tuple[str, float]] = []
    for i, tok in enumerate(tokens):
        weight = lexicon.weights.get(tok.lemma)
        if weight is None:
            continue
        lo = max(0, i - _NEGATION_WINDOW)
        if any(_is_negation(tokens[j].lemma) for j in range(lo, i)):
            weight = -weight
        hits.append((tok.lemma, weight))
    if not hits:
        return ValenceRecord.neutral()
    score = sum(w for _, w in hits) / len(hits)
    score = max(-1.0, min(1.0, score))
    return ValenceRecord(score, label_for(score), tuple(hits))


def agent_emotion(
    user_valence: ValenceRecord,
    intent_default: Optional[str] = None,
    mirror: bool = False,
) -> str:
    """Template-fixed emotion wins; otherwise mirror the user, otherwise
    stay neutral."""
    if intent_default is not None:
        if intent_default not in EMOTIONS:
            raise ValueError(f"unknown emotion label: {intent_default!r}")
        return intent_default
    if mirror:
        return {"positive": "happy", "negative": "sad"}.get(
            user_valence.label, "interested"
        )
    return "neutral"
