"""Session knowledge base: nodes mined from user utterances (attributes,
possessions, aliases, co-occurrence) and the salience scoring that ranks
them for template substitution.

Salience of a node is (freq - secondsSinceLastMention) * pref, with pref
a [0,1] preference learned from utterance valence (0.5 = neutral).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .affect import ValenceRecord
from .textproc import ANAPHORA_CLASSES, Analysis, Referent, Span

DEFAULT_PREF = 0.5
PREF_LEARNING_RATE = 0.3
SNAPSHOT_VERSION = 1

_PLURAL_DETERMINERS = {"these", "those", "many", "several"}


class NodeNotFoundError(KeyError):
    pass


class SnapshotFormatError(ValueError):
    pass


@dataclass
class KBNode:
    id: str
    canonical_name: str
    aliases: set[str] = field(default_factory=set)
    attributes: list[str] = field(default_factory=list)  # multiset
    possessions: set[str] = field(default_factory=set)   # node ids
    related_to: dict[str, int] = field(default_factory=dict)
    freq: int = 0
    last_mentioned_at: int = 0
    pref: float = DEFAULT_PREF
    anaphora_class: str = "singular-any"

    def names(self) -> set[str]:
        return {self.canonical_name} | self.aliases


@dataclass(frozen=True)
class SalienceScore:
    node_id: str
    score: float
    at: int


def score_node(freq: int, time_since_last_ms: int, pref: float) -> float:
    """The relevance formula: (freq - seconds since last mention) * pref."""
    return (freq - time_since_last_ms / 1000) * pref


class KnowledgeBase:
    """One per session; mutations must come from that session's single
    event-processing sequence."""

    def __init__(self) -> None:
        self._nodes: dict[str, KBNode] = {}
        self._order: list[str] = []  # creation order, for tie-breaking
        self._by_name: dict[str, str] = {}
        self._speaker_id: Optional[str] = None
        self._speaker_name = "user"
        self._next_id = 1

    # -- lookup ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._nodes)

    def node(self, node_id: str) -> KBNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NodeNotFoundError(node_id) from None

    def nodes(self) -> list[KBNode]:
        return [self._nodes[i] for i in self._order]

    def find(self, name: str) -> Optional[KBNode]:
        nid = self._by_name.get(name.lower())
        return self._nodes[nid] if nid else None

    @property
    def speaker_id(self) -> Optional[str]:
        return self._speaker_id

    def set_speaker_name(self, name: str) -> None:
        """Rename the distinguished speaker node (creating none)."""
        name = name.lower()
        self._speaker_name = name
        if self._speaker_id is not None:
            node = self._nodes[self._speaker_id]
            old = node.canonical_name
            if old != name:
                node.aliases.discard(name)
                node.aliases.add(old)
                node.canonical_name = name
                del self._by_name[old]
                self._register_names(node)

    def salient_referents(self, now: int, limit: int = 10) -> list[Referent]:
        """Most salient node names with their anaphora classes, for the
        parser's pronoun resolution."""
        out = []
        for s in self.top_salient(limit, now):
            node = self._nodes[s.node_id]
            out.append((node.canonical_name, node.anaphora_class))
        return out

    # -- mutation ----------------------------------------------------------

    def _new_node(self, name: str, now: int) -> KBNode:
        node = KBNode(id=f"n{self._next_id}", canonical_name=name.lower(),
                      last_mentioned_at=now)
        self._next_id += 1
        self._nodes[node.id] = node
        self._order.append(node.id)
        self._register_names(node)
        return node

    def _register_names(self, node: KBNode) -> None:
        for name in node.names():
            self._by_name.setdefault(name, node.id)

    def _speaker(self, now: int) -> KBNode:
        if self._speaker_id is None:
            existing = self.find(self._speaker_name)
            node = existing or self._new_node(self._speaker_name, now)
            self._speaker_id = node.id
        return self._nodes[self._speaker_id]

    def _mention(self, name: str, now: int) -> KBNode:
        node = self.find(name)
        if node is None:
            node = self._new_node(name, now)
        node.freq += 1
        node.last_mentioned_at = now
        return node

    def ingest(
        self, analysis: Analysis, valence: ValenceRecord, now: int
    ) -> list[str]:
        """Mine one analyzed utterance into the KB.

        Returns the ids of every node touched, first-touched first.
        """
        tokens = analysis.tokens
        changed: list[str] = []

        def touch(node: KBNode) -> None:
            if node.id not in changed:
                changed.append(node.id)

        # Appositive "my dog Rex": a proper-noun run directly after a noun
        # phrase names that phrase's node instead of making its own.
        np_ends = {span[1]: span for span in analysis.noun_phrases}
        appositive: dict[Span, Span] = {}
        for span in analysis.proper_nouns:
            np = np_ends.get(span[0])
            if np is None and span[0] >= 1 and tokens[span[0] - 1].lemma in (
                "called", "named"
            ):
                np = np_ends.get(span[0] - 1)
            if np is not None and tokens[np[0]].sentence == tokens[span[0]].sentence:
                appositive[span] = np

        mention_node: dict[Span, KBNode] = {}
        for span in analysis.noun_phrases:
            head = tokens[span[1] - 1].lemma
            if head.endswith("'s"):
                head = head[:-2]
            node = self._mention(head, now)
            touch(node)
            mention_node[span] = node
            # Internal possessive clitic splits the phrase: in
            # "my brother's dog" the head dog is owned by brother.
            clitic = next(
                (t for t in tokens[span[0]:span[1] - 1]
                 if t.lemma.endswith("'s")), None
            )
            possessor: Optional[KBNode] = None
            if clitic is not None:
                possessor = self._mention(clitic.lemma[:-2], now)
                touch(possessor)
                if possessor.id != node.id:
                    possessor.possessions.add(node.id)
            for t in tokens[span[0]:span[1]]:
                if t.pos == "ADJ":
                    if clitic is not None and t.index < clitic.index:
                        possessor.attributes.append(t.lemma)
                    else:
                        node.attributes.append(t.lemma)
            if tokens[span[0]].lemma == "my":
                owner = self._speaker(now)
                owner.freq += 1
                owner.last_mentioned_at = now
                touch(owner)
                owned = possessor if possessor is not None else node
                if owned.id != owner.id:
                    owner.possessions.add(owned.id)
            det = tokens[span[0]].lemma
            if det in _PLURAL_DETERMINERS:
                node.anaphora_class = "plural"

        for span in analysis.proper_nouns:
            name = " ".join(t.lemma for t in tokens[span[0]:span[1]])
            if name.endswith("'s"):
                name = name[:-2]
            if span in appositive:
                node = mention_node[appositive[span]]
                if name != node.canonical_name:
                    node.aliases.add(name)
                    self._register_names(node)
                mention_node[span] = node
                continue
            node = self._mention(name, now)
            touch(node)
            mention_node[span] = node

        # Possessive "Rex's toy": owner proper noun (with its 's clitic)
        # immediately before an owned noun phrase.
        for span in analysis.proper_nouns:
            last = tokens[span[1] - 1]
            if last.lemma.endswith("'s"):
                owned_span = next(
                    (s for s in analysis.noun_phrases if s[0] == span[1]), None
                )
                if owned_span is not None:
                    owner = mention_node[span]
                    owned = mention_node[owned_span]
                    if owner.id != owned.id:
                        owner.possessions.add(owned.id)

        # Resolved pronouns count as mentions of their referent.
        for name in analysis.resolved_references.values():
            node = self.find(name)
            if node is not None:
                node.freq += 1
                node.last_mentioned_at = now
                touch(node)

        # Co-occurrence within one sentence.
        by_sentence: dict[int, list[str]] = {}
        for span, node in mention_node.items():
            by_sentence.setdefault(tokens[span[0]].sentence, []).append(node.id)
        for idx, name in analysis.resolved_references.items():
            node = self.find(name)
            if node is not None:
                by_sentence.setdefault(tokens[idx].sentence, []).append(node.id)
        for ids in by_sentence.values():
            distinct = list(dict.fromkeys(ids))
            for i, a in enumerate(distinct):
                for b in distinct[i + 1:]:
                    self._nodes[a].related_to[b] = self._nodes[a].related_to.get(b, 0) + 1
                    self._nodes[b].related_to[a] = self._nodes[b].related_to.get(a, 0) + 1

        for nid in changed:
            self.update_preference(nid, valence.score)
        return changed

    def update_preference(self, node_id: str, valence_score: float) -> float:
        """Move pref toward the utterance valence rescaled to [0,1]."""
        node = self.node(node_id)
        target = (valence_score + 1) / 2
        node.pref += PREF_LEARNING_RATE * (target - node.pref)
        node.pref = max(0.0, min(1.0, node.pref))
        return node.pref

    # -- scoring -----------------------------------------------------------

    def salience(self, node_id: str, now: int) -> SalienceScore:
        node = self.node(node_id)
        return SalienceScore(
            node_id=node_id,
            score=score_node(node.freq, now - node.last_mentioned_at, node.pref),
            at=now,
        )

    def top_salient(
        self, k: int, now: int, excluding: Iterable[str] = ()
    ) -> list[SalienceScore]:
        excluded = set(excluding)
        scored = [
            self.salience(nid, now) for nid in self._order if nid not in excluded
        ]
        order = {nid: i for i, nid in enumerate(self._order)}
        scored.sort(key=lambda s: (-s.score, order[s.node_id]))
        return scored[:max(0, k)]

    # -- persistence -------------------------------------------------------

    def snapshot(self) -> dict:
        nodes = []
        for node in self.nodes():
            nodes.append({
                "id": node.id,
                "canonicalName": node.canonical_name,
                "aliases": sorted(node.aliases),
                "attributes": list(node.attributes),
                "possessions": sorted(node.possessions),
                "relatedTo": {k: node.related_to[k] for k in sorted(node.related_to)},
                "freq": node.freq,
                "lastMentionedAt": node.last_mentioned_at,
                "pref": node.pref,
                "anaphoraClass": node.anaphora_class,
            })
        doc = {"version": SNAPSHOT_VERSION, "nodes": nodes}
        if self._speaker_id is not None:
            doc["speaker"] = self._speaker_id
        return doc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.snapshot(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def restore(cls, data: dict) -> "KnowledgeBase":
        if not isinstance(data, dict) or data.get("version") != SNAPSHOT_VERSION:
            raise SnapshotFormatError(
                f"expected a version-{SNAPSHOT_VERSION} snapshot document"
            )
        raw_nodes = data.get("nodes")
        if not isinstance(raw_nodes, list):
            raise SnapshotFormatError("snapshot 'nodes' must be a list")
        kb = cls()
        max_num = 0
        for i, raw in enumerate(raw_nodes):
            try:
                node = KBNode(
                    id=str(raw["id"]),
                    canonical_name=str(raw["canonicalName"]),
                    aliases=set(raw["aliases"]),
                    attributes=list(raw["attributes"]),
                    possessions=set(raw["possessions"]),
                    related_to={str(k): int(v) for k, v in raw["relatedTo"].items()},
                    freq=int(raw["freq"]),
                    last_mentioned_at=int(raw["lastMentionedAt"]),
                    pref=float(raw["pref"]),
                    anaphora_class=str(raw["anaphoraClass"]),
                )
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                raise SnapshotFormatError(f"malformed node record {i}: {exc}") from exc
            if node.freq < 1 or not 0 <= node.pref <= 1:
                raise SnapshotFormatError(f"node record {i} violates field bounds")
            if node.anaphora_class not in ANAPHORA_CLASSES:
                raise SnapshotFormatError(
                    f"node record {i}: unknown anaphora class {node.anaphora_class!r}"
                )
            kb._nodes[node.id] = node
            kb._order.append(node.id)
            kb._register_names(node)
            if node.id.startswith("n") and node.id[1:].isdigit():
                max_num = max(max_num, int(node.id[1:]))
        kb._next_id = max_num + 1
        for node in kb._nodes.values():
            dangling = (node.possessions | set(node.related_to)) - set(kb._nodes)
            if dangling:
                raise SnapshotFormatError(
                    f"node {node.id} references missing nodes {sorted(dangling)}"
                )
        speaker = data.get("speaker")
        if speaker is not None:
            if speaker not in kb._nodes:
                raise SnapshotFormatError(f"speaker {speaker!r} is not a node id")
            kb._speaker_id = speaker
            kb._speaker_name = kb._nodes[speaker].canonical_name
        return kb

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SnapshotFormatError(f"{path}: not valid JSON: {exc}") from exc
        return cls.restore(data)
