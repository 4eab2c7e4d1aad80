"""Shallow language analysis: tokenization, rule-based POS tagging,
noun-phrase chunking, proper-noun detection, subject identification and
single-pronoun anaphora resolution.

Everything here is deterministic and side-effect free.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

POS_TAGS = frozenset(
    {"NOUN", "PROPN", "VERB", "ADJ", "PRON", "DET", "ADP", "NUM", "OTHER"}
)

# Closed-class words always win over suffix rules and the file lexicon.
_PRONOUNS = {
    "i", "you", "he", "she", "it", "we", "they",
    "me", "him", "her", "us", "them",
    "mine", "yours", "hers", "ours", "theirs", "his",
    "myself", "yourself", "himself", "herself", "itself",
    "ourselves", "themselves",
    "who", "whom", "someone", "anyone", "everyone", "nobody",
    "i'm", "i've", "i'll", "i'd",
    "you're", "you've", "you'll",
    "he's", "she's", "it's", "we're", "we've", "they're", "they've",
    "that's", "there's", "what's", "who's",
}
_DETERMINERS = {
    "a", "an", "the", "my", "your", "its", "our", "their",
    "this", "that", "these", "those", "some", "any", "no",
    "every", "each", "all", "both", "another", "other",
}
_ADPOSITIONS = {
    "in", "on", "at", "by", "with", "from", "to", "of", "for",
    "about", "into", "onto", "over", "under", "after", "before",
    "between", "through", "during", "without", "against", "around",
    "near", "off", "since", "until", "towards", "among",
}
_AUXILIARIES = {
    "is", "am", "are", "was", "were", "be", "been", "being",
    "do", "does", "did", "done",
    "have", "has", "had",
    "will", "would", "can", "could", "shall", "should",
    "may", "might", "must",
    "don't", "doesn't", "didn't", "isn't", "aren't", "wasn't",
    "weren't", "can't", "couldn't", "won't", "wouldn't", "shouldn't",
    "haven't", "hasn't", "hadn't",
}
_FUNCTION_WORDS = {
    "and", "or", "but", "if", "so", "because", "as", "than", "then",
    "when", "while", "where", "why", "how", "not", "never",
    "yes", "no", "ok", "okay", "oh", "well", "hey", "hi", "hello",
    "please", "thanks",
}

CLOSED_CLASS: dict[str, str] = {}
CLOSED_CLASS.update({w: "PRON" for w in _PRONOUNS})
CLOSED_CLASS.update({w: "DET" for w in _DETERMINERS})
CLOSED_CLASS.update({w: "ADP" for w in _ADPOSITIONS})
CLOSED_CLASS.update({w: "VERB" for w in _AUXILIARIES})
CLOSED_CLASS.update({w: "OTHER" for w in _FUNCTION_WORDS})
# "no" is listed both as determiner and interjection; determiner reading
# is the one chunking cares about.
CLOSED_CLASS["no"] = "DET"
CLOSED_CLASS["her"] = "PRON"

# Anaphora: which knowledge classes each third-person pronoun accepts.
PRONOUN_CLASSES: dict[str, frozenset[str]] = {
    "he": frozenset({"singular-masc", "singular-any"}),
    "him": frozenset({"singular-masc", "singular-any"}),
    "his": frozenset({"singular-masc", "singular-any"}),
    "himself": frozenset({"singular-masc", "singular-any"}),
    "she": frozenset({"singular-fem", "singular-any"}),
    "her": frozenset({"singular-fem", "singular-any"}),
    "hers": frozenset({"singular-fem", "singular-any"}),
    "herself": frozenset({"singular-fem", "singular-any"}),
    "it": frozenset({"singular-any"}),
    "its": frozenset({"singular-any"}),
    "itself": frozenset({"singular-any"}),
    "they": frozenset({"plural"}),
    "them": frozenset({"plural"}),
    "theirs": frozenset({"plural"}),
    "themselves": frozenset({"plural"}),
}

ANAPHORA_CLASSES = frozenset(
    {"singular-masc", "singular-fem", "singular-any", "plural"}
)

# Words before a sentence-final period that usually mark an abbreviation,
# plus bare initials.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "st", "vs", "etc", "jr", "sr",
    "e", "g", "i", "a", "m", "p",
}

_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?|[A-Za-z]+(?:'[A-Za-z]+)*|\S")
_SENT_END = frozenset(".!?")


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str
    index: int
    sentence: int
    start: int  # character offset into the source text

    @property
    def end(self) -> int:
        return self.start + len(self.surface)

    def with_pos(self, pos: str) -> "Token":
        return Token(self.surface, self.lemma, pos, self.index,
                     self.sentence, self.start)


Span = tuple[int, int]  # half-open token-index range


@dataclass(frozen=True)
class Analysis:
    tokens: tuple[Token, ...]
    noun_phrases: tuple[Span, ...]
    proper_nouns: tuple[Span, ...]
    subject: Optional[Span]
    resolved_references: Mapping[int, str]

    def span_text(self, span: Span) -> str:
        return " ".join(t.surface for t in self.tokens[span[0]:span[1]])

    def span_lemmas(self, span: Span) -> list[str]:
        return [t.lemma for t in self.tokens[span[0]:span[1]]]


def _lemma(surface: str) -> str:
    return surface.lower()


def tokenize(text: str) -> list[Token]:
    """Split text into word/number/punctuation tokens.

    Contractions stay as one token; punctuation is split off.  Offsets
    are kept so that the original text can be reconstructed exactly from
    the tokens plus the separators between them.
    """
    raw = [(m.group(0), m.start()) for m in _TOKEN_RE.finditer(text)]
    boundaries = _sentence_boundaries(raw, text)
    tokens = []
    sent = 0
    for i, (surface, start) in enumerate(raw):
        tokens.append(Token(surface, _lemma(surface), "OTHER", i, sent, start))
        if i in boundaries:
            sent += 1
    return tokens


def _sentence_boundaries(raw: list[tuple[str, int]], text: str) -> set[int]:
    """Indices of tokens that end a sentence (exclusive of the last)."""
    out: set[int] = set()
    for i, (surface, start) in enumerate(raw):
        if surface not in _SENT_END or i == len(raw) - 1:
            continue
        nxt_surface, nxt_start = raw[i + 1]
        gap = text[start + len(surface):nxt_start]
        if not gap or not gap[0].isspace():
            continue
        if not nxt_surface[0].isupper():
            continue
        if surface == "." and i > 0 and raw[i - 1][0].lower() in _ABBREVIATIONS:
            continue
        out.add(i)
    return out


def reconstruct(text: str, tokens: Sequence[Token]) -> str:
    """Rebuild the input from token surfaces and original separators."""
    parts = []
    pos = 0
    for t in tokens:
        parts.append(text[pos:t.start])
        parts.append(t.surface)
        pos = t.end
    parts.append(text[pos:])
    return "".join(parts)


class PosLexicon:
    """Word → tag table loaded from a `lemma<TAB>TAG` file."""

    def __init__(self, entries: Mapping[str, str]):
        bad = {t for t in entries.values() if t not in POS_TAGS}
        if bad:
            raise ValueError(f"unknown POS tags in lexicon: {sorted(bad)}")
        self.entries = dict(entries)
        self.verb_stems = {w for w, t in self.entries.items() if t == "VERB"}

    @classmethod
    def load(cls, path: str | Path) -> "PosLexicon":
        entries: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: expected 'lemma<TAB>TAG', got {line!r}"
                    )
                entries[parts[0].lower()] = parts[1]
        return cls(entries)

    @classmethod
    def bundled(cls) -> "PosLexicon":
        with resources.as_file(
            resources.files("elicit.data") / "lexicon.txt"
        ) as p:
            return cls.load(p)


def _is_verb_inflection(lemma: str, stems: set[str]) -> bool:
    if lemma.endswith("s") and not lemma.endswith("ss"):
        stem = lemma[:-1]
        if stem in stems or (lemma.endswith("es") and lemma[:-2] in stems):
            return True
    for suffix in ("ing", "ed"):
        if not lemma.endswith(suffix) or len(lemma) <= len(suffix) + 1:
            continue
        stem = lemma[: -len(suffix)]
        candidates = {stem, stem + "e"}
        if len(stem) >= 2 and stem[-1] == stem[-2]:
            candidates.add(stem[:-1])  # runn-ing → run
        if candidates & stems:
            return True
    return False


def tag_pos(tokens: Sequence[Token], lexicon: PosLexicon) -> list[Token]:
    """Assign one tag per token: closed class, then lexicon, then
    capitalization, then suffix rules, defaulting to NOUN."""
    first_word: dict[int, int] = {}
    for t in tokens:
        if any(ch.isalnum() for ch in t.surface):
            first_word.setdefault(t.sentence, t.index)

    out = []
    for t in tokens:
        lemma = t.lemma
        if lemma in CLOSED_CLASS:
            out.append(t.with_pos(CLOSED_CLASS[lemma]))
            continue
        if not any(ch.isalnum() for ch in t.surface):
            out.append(t.with_pos("OTHER"))
            continue
        if t.surface[0].isdigit():
            out.append(t.with_pos("NUM"))
            continue
        if t.surface[0].isupper() and first_word.get(t.sentence) != t.index:
            out.append(t.with_pos("PROPN"))
            continue
        if lemma in lexicon.entries:
            out.append(t.with_pos(lexicon.entries[lemma]))
            continue
        if lemma.endswith("'s") and lemma[:-2] in lexicon.entries:
            out.append(t.with_pos(lexicon.entries[lemma[:-2]]))
            continue
        if lemma.endswith("ly"):
            out.append(t.with_pos("OTHER"))
            continue
        if _is_verb_inflection(lemma, lexicon.verb_stems):
            out.append(t.with_pos("VERB"))
            continue
        if t.surface[0].isupper():
            # Unknown capitalized sentence-starter: treat as a name.
            out.append(t.with_pos("PROPN"))
            continue
        out.append(t.with_pos("NOUN"))
    return out


def _chunk_noun_phrases(tokens: Sequence[Token]) -> list[Span]:
    """Maximal DET? ADJ* NOUN+ runs, never crossing a sentence break."""
    spans: list[Span] = []
    i = 0
    n = len(tokens)
    while i < n:
        j = i
        if tokens[j].pos == "DET":
            j += 1
        while j < n and tokens[j].pos == "ADJ" and tokens[j].sentence == tokens[i].sentence:
            j += 1
        k = j
        while k < n and tokens[k].pos == "NOUN" and tokens[k].sentence == tokens[i].sentence:
            k += 1
        if k > j:  # at least one NOUN
            spans.append((i, k))
            i = k
        else:
            i += 1
    return spans


def _chunk_runs(tokens: Sequence[Token], pos: str) -> list[Span]:
    spans: list[Span] = []
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i].pos == pos:
            j = i
            while (j < n and tokens[j].pos == pos
                   and tokens[j].sentence == tokens[i].sentence):
                j += 1
            spans.append((i, j))
            i = j
        else:
            i += 1
    return spans


Referent = tuple[str, str]  # (node name, anaphora class)


def _resolve_pronouns(
    tokens: Sequence[Token], salient: Sequence[Referent]
) -> dict[int, str]:
    resolved: dict[int, str] = {}
    for t in tokens:
        classes = PRONOUN_CLASSES.get(t.lemma)
        if classes is None:
            continue
        for name, cls in salient:
            if cls in classes:
                resolved[t.index] = name
                break
    return resolved


def analyze(
    text: str,
    salient_names: Sequence[Referent | str] = (),
    lexicon: Optional[PosLexicon] = None,
) -> Analysis:
    """Full shallow analysis of one utterance.

    salient_names drives pronoun resolution and is ordered most salient
    first; bare strings default to the singular-any class.
    """
    lexicon = lexicon if lexicon is not None else PosLexicon.bundled()
    tokens = tuple(tag_pos(tokenize(text), lexicon))
    noun_phrases = tuple(_chunk_noun_phrases(tokens))
    proper_nouns = tuple(_chunk_runs(tokens, "PROPN"))

    subject = None
    first_verb = next(
        (t.index for t in tokens if t.sentence == 0 and t.pos == "VERB"), None
    )
    if first_verb is not None:
        candidates = [
            s for s in list(noun_phrases) + list(proper_nouns)
            if s[1] <= first_verb and tokens[s[0]].sentence == 0
        ]
        if candidates:
            subject = min(candidates, key=lambda s: s[0])

    referents: list[Referent] = [
        (r, "singular-any") if isinstance(r, str) else r for r in salient_names
    ]
    resolved = _resolve_pronouns(tokens, referents)
    return Analysis(tokens, noun_phrases, proper_nouns, subject, resolved)
