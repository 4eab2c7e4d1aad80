"""Session lifecycle around the engine: the append-only event log, auto
and wizard modes, timeout arming, transcript persistence and resume.

All mutations of one session pass through its internal lock, so events
get gap-free, strictly increasing sequence numbers.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .engine import Candidate, Engine, EngineConfig, InformationState, Observation
from .knowledge import KnowledgeBase
from .templates import TemplateSet, load_templates, bundled_templates_path
from .textproc import PosLexicon
from .affect import SentimentLexicon

EVENT_KINDS = (
    "session-start", "user-utterance", "agent-intent", "wizard-candidates",
    "wizard-selection", "timeout", "session-end",
)

CONVERSATIONAL_KINDS = ("session-start", "user-utterance", "agent-intent",
                        "timeout", "session-end")


class SessionError(Exception):
    pass


class ConfigError(SessionError):
    pass


class SessionClosedError(SessionError):
    pass


class UnsupportedModeError(SessionError):
    pass


class StaleCandidateError(SessionError):
    """The selected response is not in the latest candidate list."""


@dataclass
class SessionConfig:
    mode: str = "auto"  # auto | wizard
    template_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    sentiment_path: Optional[str] = None
    timeout_ms: int = 10_000
    target_duration_ms: int = 300_000
    seed: int = 0
    virtual_clock: bool = False

    def validate(self) -> None:
        if self.mode not in ("auto", "wizard"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.timeout_ms <= 0:
            raise ConfigError("timeoutMs must be positive")
        for label, path in (("template", self.template_path),
                            ("lexicon", self.lexicon_path),
                            ("sentiment lexicon", self.sentiment_path)):
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{label} file not readable: {path}")

    def to_payload(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "timeoutMs": self.timeout_ms,
            "targetDurationMs": self.target_duration_ms,
            "virtualClock": self.virtual_clock,
        }

    def build_engine(self) -> Engine:
        templates = load_templates(self.template_path or bundled_templates_path())
        lexicon = (PosLexicon.load(self.lexicon_path)
                   if self.lexicon_path else PosLexicon.bundled())
        sentiment = (SentimentLexicon.load(self.sentiment_path)
                     if self.sentiment_path else SentimentLexicon.bundled())
        engine_cfg = EngineConfig(
            timeout_ms=self.timeout_ms,
            target_duration_ms=self.target_duration_ms,
        )
        return Engine(templates, lexicon, sentiment, engine_cfg)


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    at: int
    kind: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "at": self.at, "kind": self.kind,
             "payload": self.payload},
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "SessionEvent":
        data = json.loads(line)
        return cls(seq=int(data["seq"]), at=int(data["at"]),
                   kind=str(data["kind"]), payload=dict(data["payload"]))


def _intent_payload(candidate: Candidate) -> dict:
    intent = candidate.intent
    payload = {
        "markup": intent.serialize(),
        "text": intent.text,
        "function": intent.function,
        "emotion": intent.emotion,
        "responseId": intent.response_id,
        "stateId": intent.state_id,
        "accentTokenIndex": intent.accent_token_index,
        "knowledge": None,
    }
    if candidate.knowledge_node_id is not None:
        payload["knowledge"] = {
            "nodeId": candidate.knowledge_node_id,
            "name": candidate.knowledge_node_name,
            "score": candidate.knowledge_score,
        }
    return payload


def kb_summary(kb: KnowledgeBase, now: int) -> dict:
    nodes = kb.nodes()
    scores = [kb.salience(n.id, now).score for n in nodes]
    return {
        "nodes": len(nodes),
        "attributes": sum(len(n.attributes) for n in nodes),
        "possessions": sum(len(n.possessions) for n in nodes),
        "aliases": sum(len(n.aliases) for n in nodes),
        "meanSalience": (sum(scores) / len(scores)) if scores else 0.0,
    }


class Session:
    def __init__(
        self,
        session_id: str,
        config: SessionConfig,
        directory: Optional[Path] = None,
        engine: Optional[Engine] = None,
    ):
        config.validate()
        self.id = session_id
        self.config = config
        self.engine = engine or config.build_engine()
        self.kb = KnowledgeBase()
        self.state = InformationState()
        self.rng = random.Random(config.seed)
        self.events: list[SessionEvent] = []
        self.closed = False
        self.pending_candidates: list[Candidate] = []
        self._lock = threading.RLock()
        self._wall_start = time.monotonic()
        self._transcript = None
        self.directory = directory
        if directory is not None:
            directory.mkdir(parents=True, exist_ok=True)
            self._transcript = open(directory / "transcript.jsonl", "a",
                                    encoding="utf-8")
        self._append("session-start", config.to_payload(), at=0)
        self._agent_move(self._plan_start())

    # -- clock -------------------------------------------------------------

    def now(self, at_ms: Optional[int] = None) -> int:
        if self.config.virtual_clock:
            at = self.state.session_clock if at_ms is None else at_ms
        else:
            at = int((time.monotonic() - self._wall_start) * 1000)
            if at_ms is not None:
                at = max(at_ms, self.state.session_clock)
        return max(at, self.state.session_clock)

    def timeout_deadline(self) -> Optional[int]:
        """Session time at which a timeout should fire, if armed."""
        if self.closed or not self.state.awaiting_reply:
            return None
        return self.state.session_clock + self.config.timeout_ms

    # -- event log ---------------------------------------------------------

    def _append(self, kind: str, payload: dict, at: int) -> SessionEvent:
        event = SessionEvent(len(self.events) + 1, at, kind, payload)
        self.events.append(event)
        if self._transcript is not None:
            self._transcript.write(event.to_json() + "\n")
            self._transcript.flush()
        return event

    def events_since(self, from_seq: int) -> list[SessionEvent]:
        with self._lock:
            return [e for e in self.events if e.seq > from_seq]

    # -- engine plumbing ---------------------------------------------------

    def _plan_start(self) -> list[Candidate]:
        return self.engine.plan_greeting(self.state, self.kb, self.rng)

    def _agent_move(self, candidates: list[Candidate]) -> SessionEvent:
        """Emit the next agent step: the intent itself in auto mode, the
        candidate list in wizard mode."""
        candidates = candidates[: self.engine.config.candidate_count]
        if self.config.mode == "wizard":
            self.pending_candidates = candidates
            payload = {"candidates": [
                {"rank": i + 1, **_intent_payload(c)}
                for i, c in enumerate(candidates)
            ]}
            return self._append("wizard-candidates", payload,
                                self.state.session_clock)
        return self._commit(candidates[0])

    def _commit(self, candidate: Candidate) -> SessionEvent:
        self.engine.commit(self.state, candidate, self.state.session_clock)
        event = self._append("agent-intent", _intent_payload(candidate),
                             self.state.session_clock)
        if self.state.closed:
            self._finish("closing")
        return event

    def _finish(self, reason: str) -> SessionEvent:
        now = self.state.session_clock
        event = self._append(
            "session-end",
            {"reason": reason, "kb": kb_summary(self.kb, now)},
            now,
        )
        self.closed = True
        if self.directory is not None:
            self.kb.save(self.directory / "kb.json")
        if self._transcript is not None:
            self._transcript.close()
            self._transcript = None
        return event

    # -- public operations -------------------------------------------------

    def post_utterance(self, text: str, at_ms: Optional[int] = None) -> int:
        with self._lock:
            if self.closed:
                raise SessionClosedError(self.id)
            at = self.now(at_ms)
            obs = self.engine.observe_utterance(self.state, self.kb, text, at)
            self._append("user-utterance", {
                "text": text,
                "valence": {"score": obs.valence.score,
                            "label": obs.valence.label},
                "replyClass": obs.reply_class,
                "newNodes": len(obs.new_node_ids),
            }, at)
            plans = self.engine.plan_reply(self.state, self.kb, self.rng, obs)
            return self._agent_move(plans).seq

    def fire_timeout(self, at_ms: Optional[int] = None) -> int:
        with self._lock:
            if self.closed:
                raise SessionClosedError(self.id)
            at = self.now(at_ms)
            self.state.session_clock = at
            self.state.awaiting_reply = False
            self._append("timeout", {}, at)
            plans = self.engine.plan_timeout(self.state, self.kb, self.rng)
            return self._agent_move(plans).seq

    def select_candidate(self, response_id: str,
                         at_ms: Optional[int] = None) -> int:
        with self._lock:
            if self.config.mode != "wizard":
                raise UnsupportedModeError(
                    "candidate selection requires a wizard session"
                )
            if self.closed:
                raise SessionClosedError(self.id)
            match = next(
                (c for c in self.pending_candidates
                 if c.intent.response_id == response_id), None,
            )
            if match is None:
                raise StaleCandidateError(response_id)
            self.pending_candidates = []
            at = self.now(at_ms)
            self.state.session_clock = at
            self._append("wizard-selection", {"responseId": response_id}, at)
            return self._commit(match).seq

    def close(self, reason: str = "closed") -> int:
        with self._lock:
            if self.closed:
                raise SessionClosedError(self.id)
            return self._finish(reason).seq

    # -- resume ------------------------------------------------------------

    @classmethod
    def resume(cls, directory: Path, config: SessionConfig,
               session_id: str = "resumed") -> "Session":
        """Rebuild a session's live state by replaying its transcript
        through the engine; the transcript file is left untouched."""
        path = Path(directory) / "transcript.jsonl"
        events = load_transcript(path)
        session = cls.__new__(cls)
        session.id = session_id
        session.config = config
        session.engine = config.build_engine()
        session.kb = KnowledgeBase()
        session.state = InformationState()
        session.rng = random.Random(config.seed)
        session.events = []
        session.closed = False
        session.pending_candidates = []
        session._lock = threading.RLock()
        session._wall_start = time.monotonic()
        session._transcript = None
        session.directory = Path(directory)

        plans: list[Candidate] = []
        for event in events:
            session.events.append(event)
            if event.kind == "session-start":
                plans = session._plan_start()
            elif event.kind == "user-utterance":
                obs = session.engine.observe_utterance(
                    session.state, session.kb, event.payload["text"], event.at
                )
                plans = session.engine.plan_reply(
                    session.state, session.kb, session.rng, obs
                )
            elif event.kind == "timeout":
                session.state.session_clock = max(
                    session.state.session_clock, event.at
                )
                session.state.awaiting_reply = False
                plans = session.engine.plan_timeout(
                    session.state, session.kb, session.rng
                )
            elif event.kind == "agent-intent":
                rid = event.payload["responseId"]
                match = next(
                    (c for c in plans if c.intent.response_id == rid), None
                )
                if match is None:
                    raise SessionError(
                        f"transcript seq {event.seq}: response {rid!r} "
                        "cannot be reproduced by the engine"
                    )
                session.engine.commit(session.state, match, event.at)
            elif event.kind == "session-end":
                session.closed = True
        if not session.closed:
            session._transcript = open(path, "a", encoding="utf-8")
            if session.config.mode == "wizard":
                session.pending_candidates = plans
        return session


def load_transcript(path: Path | str) -> list[SessionEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                events.append(SessionEvent.from_json(line))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise SessionError(
                    f"{path}: malformed transcript line {lineno}: {exc}"
                ) from exc
    return events
