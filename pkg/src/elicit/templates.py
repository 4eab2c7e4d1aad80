"""Parser and validator for the dialogue template DSL.

The format is line oriented and indentation insensitive::

    topic <id>
    state <id>
    response <id> "<text with {name}/{X}/{Y}>" [emotion=<label>] [mirror]
        [accent=<slot>] [requires-knowledge] [min-salience=<real>]
    trigger <lemma>[,<lemma>...]
    on <replyclass> -> <state-id>
    synonym <lemma>: <lemma>[,<lemma>...]

`#` starts a comment.  Topic ids beginning with `_` are reserved for
states the engine reaches directly (timeout and closing prompts) and are
skipped by generic topic switching.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .affect import EMOTIONS

REPLY_CLASSES = ("informative", "sparse", "complex", "silence", "exhausted")
SLOT_NAMES = frozenset({"name", "X", "Y"})
TIMEOUT_STATE = "timeout"
CLOSING_STATE = "closing"

_SLOT_RE = re.compile(r"\{(\w+)\}")
_ID_RE = re.compile(r"[A-Za-z0-9_.-]+")


class TemplateError(ValueError):
    """Parse or validation failure, carrying a source location."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Response:
    id: str
    text: str
    fixed_emotion: Optional[str] = None
    mirror: bool = False
    accent_slot: Optional[str] = None
    requires_knowledge: bool = False
    min_salience: float = 0.0

    @property
    def slots(self) -> frozenset[str]:
        return frozenset(_SLOT_RE.findall(self.text))


@dataclass
class State:
    id: str
    topic_id: str
    responses: list[Response] = field(default_factory=list)
    triggers: list[frozenset[str]] = field(default_factory=list)
    transitions: dict[str, str] = field(default_factory=dict)


@dataclass
class Topic:
    id: str
    opener_state_id: str
    state_ids: list[str] = field(default_factory=list)

    @property
    def hidden(self) -> bool:
        return self.id.startswith("_")


@dataclass
class TemplateSet:
    topics: list[Topic]
    states: dict[str, State]
    synonyms: dict[str, frozenset[str]]

    def topic(self, topic_id: str) -> Topic:
        for t in self.topics:
            if t.id == topic_id:
                return t
        raise KeyError(topic_id)

    def visible_topics(self) -> list[Topic]:
        return [t for t in self.topics if not t.hidden]

    def response(self, response_id: str) -> tuple[State, Response]:
        for state in self.states.values():
            for r in state.responses:
                if r.id == response_id:
                    return state, r
        raise KeyError(response_id)

    def find_state(self, state_id: str) -> Optional[State]:
        return self.states.get(state_id)

    def expand(self, keyword: str) -> frozenset[str]:
        return frozenset({keyword}) | self.synonyms.get(keyword, frozenset())


def _parse_id(rest: str, what: str, lineno: int) -> str:
    rest = rest.strip()
    if not rest or not _ID_RE.fullmatch(rest):
        raise TemplateError(f"invalid {what} id {rest!r}", lineno)
    return rest


def _parse_response(rest: str, lineno: int) -> Response:
    try:
        parts = shlex.split(rest)
    except ValueError as exc:
        raise TemplateError(f"bad response line: {exc}", lineno)
    if len(parts) < 2:
        raise TemplateError("response needs an id and a quoted text", lineno)
    rid, text, *options = parts
    if not _ID_RE.fullmatch(rid):
        raise TemplateError(f"invalid response id {rid!r}", lineno)
    emotion = None
    mirror = False
    accent = None
    requires = False
    min_sal = 0.0
    for opt in options:
        if opt == "mirror":
            mirror = True
        elif opt == "requires-knowledge":
            requires = True
        elif opt.startswith("emotion="):
            emotion = opt.split("=", 1)[1]
            if emotion not in EMOTIONS:
                raise TemplateError(f"unknown emotion {emotion!r}", lineno)
        elif opt.startswith("accent="):
            accent = opt.split("=", 1)[1]
            if accent not in SLOT_NAMES:
                raise TemplateError(f"unknown accent slot {accent!r}", lineno)
        elif opt.startswith("min-salience="):
            try:
                min_sal = float(opt.split("=", 1)[1])
            except ValueError:
                raise TemplateError(f"bad min-salience in {opt!r}", lineno)
        else:
            raise TemplateError(f"unknown response option {opt!r}", lineno)
    resp = Response(rid, text, emotion, mirror, accent, requires, min_sal)
    extra = resp.slots - SLOT_NAMES
    if extra:
        raise TemplateError(f"unknown slot(s) {sorted(extra)} in response {rid}", lineno)
    if accent is not None and accent not in resp.slots:
        raise TemplateError(f"accent slot {accent!r} not used in response text", lineno)
    return resp


def parse_templates(source: str) -> TemplateSet:
    """Parse and validate a template DSL document."""
    topics: list[Topic] = []
    states: dict[str, State] = {}
    synonyms: dict[str, frozenset[str]] = {}
    response_lines: dict[str, int] = {}
    current_topic: Optional[Topic] = None
    current_state: Optional[State] = None

    for lineno, raw in enumerate(source.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if '"' not in stripped:
            # Inline comments; a '#' after quoted text stays literal.
            stripped = stripped.split("#", 1)[0].strip()
            if not stripped:
                continue
        line = stripped
        keyword, _, rest = line.partition(" ")

        if keyword == "topic":
            tid = _parse_id(rest, "topic", lineno)
            if any(t.id == tid for t in topics):
                raise TemplateError(f"duplicate topic id {tid!r}", lineno)
            current_topic = Topic(tid, opener_state_id="")
            topics.append(current_topic)
            current_state = None
        elif keyword == "state":
            if current_topic is None:
                raise TemplateError("state outside of a topic", lineno)
            sid = _parse_id(rest, "state", lineno)
            if sid in states:
                raise TemplateError(f"duplicate state id {sid!r}", lineno)
            current_state = State(sid, current_topic.id)
            states[sid] = current_state
            current_topic.state_ids.append(sid)
            if not current_topic.opener_state_id:
                current_topic.opener_state_id = sid
        elif keyword == "response":
            if current_state is None:
                raise TemplateError("response outside of a state", lineno)
            resp = _parse_response(rest, lineno)
            if resp.id in response_lines:
                raise TemplateError(
                    f"duplicate response id {resp.id!r} "
                    f"(first defined on line {response_lines[resp.id]})",
                    lineno,
                )
            response_lines[resp.id] = lineno
            current_state.responses.append(resp)
        elif keyword == "trigger":
            if current_state is None:
                raise TemplateError("trigger outside of a state", lineno)
            lemmas = frozenset(
                w.strip().lower() for w in rest.split(",") if w.strip()
            )
            if not lemmas:
                raise TemplateError("empty trigger keyword set", lineno)
            current_state.triggers.append(lemmas)
        elif keyword == "on":
            if current_state is None:
                raise TemplateError("transition outside of a state", lineno)
            m = re.fullmatch(r"(\w+)\s*->\s*([A-Za-z0-9_.-]+)", rest.strip())
            if not m:
                raise TemplateError(
                    "expected 'on <replyclass> -> <state-id>'", lineno
                )
            reply_class, target = m.group(1), m.group(2)
            if reply_class not in REPLY_CLASSES:
                raise TemplateError(f"unknown reply class {reply_class!r}", lineno)
            current_state.transitions[reply_class] = target
        elif keyword == "synonym":
            head, sep, tail = rest.partition(":")
            if not sep:
                raise TemplateError("expected 'synonym <lemma>: <lemma>,...'", lineno)
            words = frozenset(w.strip().lower() for w in tail.split(",") if w.strip())
            if not words:
                raise TemplateError("empty synonym set", lineno)
            synonyms[head.strip().lower()] = words
        else:
            raise TemplateError(f"unknown directive {keyword!r}", lineno)

    if not topics:
        raise TemplateError("no topics defined")
    for topic in topics:
        if not topic.opener_state_id:
            raise TemplateError(f"topic {topic.id!r} has no states")
    for state in states.values():
        for reply_class, target in state.transitions.items():
            if target not in states:
                raise TemplateError(
                    f"state {state.id!r}: transition on {reply_class!r} "
                    f"targets missing state {target!r}"
                )
    return TemplateSet(topics, states, synonyms)


def load_templates(path: str | Path) -> TemplateSet:
    return parse_templates(Path(path).read_text(encoding="utf-8"))


def bundled_templates_path() -> Path:
    with resources.as_file(
        resources.files("elicit.data") / "default.templates"
    ) as p:
        return p
