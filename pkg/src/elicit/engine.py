"""Information-state dialogue manager and intent renderer.

Selection order for the next move: a reply-class transition backed by
salient knowledge (slot substitution), then a plain transition response,
then keyword/synonym triggers, then a generic switch to a fresh topic.
Every event produces exactly one intent; pools are drawn without
repetition while unused members remain.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from typing import Optional
from xml.sax.saxutils import escape

from . import affect, textproc
from .affect import SentimentLexicon, ValenceRecord, agent_emotion
from .knowledge import KnowledgeBase, SalienceScore
from .templates import (
    CLOSING_STATE,
    TIMEOUT_STATE,
    Response,
    State,
    TemplateSet,
)
from .textproc import Analysis, PosLexicon

FUNCTIONS = (
    "greet", "probe-open", "probe-followup", "elaborate-request",
    "rephrase-request", "topic-switch", "timeout-prompt", "closing",
)

_TRANSITION_FUNCTION = {
    "informative": "probe-followup",
    "sparse": "elaborate-request",
    "complex": "rephrase-request",
}

_BUILTIN_TIMEOUT = (
    "Are you still there? I'd love to hear more.",
    "Take your time. I'm listening whenever you're ready.",
)
_BUILTIN_CLOSING = (
    "It has been lovely talking with you. Thank you for sharing!",
    "Thanks for the chat, this was really nice. Goodbye!",
)
_BUILTIN_CONTINUE = (
    "Tell me more about yourself.",
    "What else has been on your mind lately?",
)


class MissingSlotError(KeyError):
    pass


@dataclass
class EngineConfig:
    informative_tokens: int = 8
    complex_tokens: int = 40
    complex_sentences: int = 2
    max_followups: int = 3
    barren_turns: int = 2
    timeout_ms: int = 10_000
    target_duration_ms: int = 300_000
    candidate_count: int = 5


@dataclass(frozen=True)
class HistoryEntry:
    speaker: str  # user | agent
    text: str
    at: int


@dataclass
class InformationState:
    session_clock: int = 0
    history: list[HistoryEntry] = field(default_factory=list)
    current_topic: str = ""
    current_state: str = ""
    follow_ups_in_topic: int = 0
    used_responses: dict[str, int] = field(default_factory=dict)
    last_user_input_at: int = 0
    user_name: Optional[str] = None
    awaiting_reply: bool = False
    exhausted_topics: set[str] = field(default_factory=set)
    visited_topics: set[str] = field(default_factory=set)
    barren_streak: int = 0
    agent_turns: int = 0
    closed: bool = False
    last_response_id: Optional[str] = None
    user_emotion: Optional[str] = None  # reserved for a non-verbal channel

    def check_invariants(self) -> None:
        clocks = [e.at for e in self.history]
        assert clocks == sorted(clocks), "history timestamps must be ordered"
        assert self.session_clock >= (clocks[-1] if clocks else 0)


@dataclass(frozen=True)
class IntentMarkup:
    function: str
    text: str
    emotion: str
    response_id: str
    state_id: str
    accent_token_index: Optional[int] = None

    def serialize(self) -> str:
        parts = re.split(r"(\s+)", self.text)
        word_i = -1
        rendered = []
        for part in parts:
            if part and not part.isspace():
                word_i += 1
                word = escape(part)
                if word_i == self.accent_token_index:
                    # Wrap the word itself, leaving trailing punctuation out.
                    m = re.match(r"([\w'&;-]+)(.*)", word)
                    if m:
                        word = f"<accent>{m.group(1)}</accent>{m.group(2)}"
                    else:
                        word = f"<accent>{word}</accent>"
                rendered.append(word)
            else:
                rendered.append(part)
        return (
            f'<intent function="{self.function}" emotion="{self.emotion}" '
            f'state="{self.state_id}" response="{self.response_id}">'
            f"<speech>{''.join(rendered)}</speech></intent>"
        )


@dataclass(frozen=True)
class Candidate:
    """One possible next agent move, fully rendered."""
    intent: IntentMarkup
    topic_id: str
    function: str
    changes_state: bool = True
    exhausts_topic: Optional[str] = None
    knowledge_node_id: Optional[str] = None
    knowledge_node_name: Optional[str] = None
    knowledge_score: Optional[float] = None


@dataclass(frozen=True)
class Observation:
    """What one user utterance contributed, before planning."""
    text: str
    at: int
    analysis: Analysis
    valence: ValenceRecord
    new_node_ids: tuple[str, ...]
    changed_node_ids: tuple[str, ...]
    reply_class: str


_SLOT_RE = re.compile(r"\{(\w+)\}")


def render_intent(
    response: Response,
    slots: dict[str, str],
    emotion: str,
    function: str,
    state_id: str,
) -> IntentMarkup:
    """Fill the response's slots and locate the accent token."""
    accent_index: Optional[int] = None
    out: list[str] = []
    pos = 0
    for m in _SLOT_RE.finditer(response.text):
        name = m.group(1)
        if name not in slots:
            raise MissingSlotError(name)
        out.append(response.text[pos:m.start()])
        if name == response.accent_slot and accent_index is None:
            before = "".join(out)
            accent_index = len(before.split())
            if before and not before[-1].isspace():
                accent_index = max(0, accent_index - 1)
        out.append(slots[name])
        pos = m.end()
    out.append(response.text[pos:])
    return IntentMarkup(
        function=function,
        text="".join(out),
        emotion=emotion,
        response_id=response.id,
        state_id=state_id,
        accent_token_index=accent_index,
    )


def should_close(state: InformationState, config: EngineConfig) -> bool:
    """Close only after the target duration, once the topic has run dry."""
    return (
        state.session_clock >= config.target_duration_ms
        and state.current_topic in state.exhausted_topics
    )


class Engine:
    def __init__(
        self,
        templates: TemplateSet,
        pos_lexicon: Optional[PosLexicon] = None,
        sentiment_lexicon: Optional[SentimentLexicon] = None,
        config: Optional[EngineConfig] = None,
    ):
        self.templates = templates
        self.pos_lexicon = pos_lexicon or PosLexicon.bundled()
        self.sentiment_lexicon = sentiment_lexicon or SentimentLexicon.bundled()
        self.config = config or EngineConfig()

    # -- observation -------------------------------------------------------

    def observe_utterance(
        self, state: InformationState, kb: KnowledgeBase, text: str, at: int
    ) -> Observation:
        """Apply one user utterance to the IS and KB and classify it."""
        at = max(at, state.session_clock)
        state.session_clock = at
        state.last_user_input_at = at
        state.awaiting_reply = False
        state.history.append(HistoryEntry("user", text, at))

        analysis = textproc.analyze(
            text, kb.salient_referents(at), self.pos_lexicon
        )
        val = affect.valence(analysis.tokens, self.sentiment_lexicon)
        self._maybe_capture_name(state, kb, analysis)
        before = {n.id for n in kb.nodes()}
        changed = kb.ingest(analysis, val, at)
        new_nodes = tuple(nid for nid in changed if nid not in before)

        if new_nodes:
            state.barren_streak = 0
        else:
            state.barren_streak += 1

        reply_class = self._classify(state, analysis, len(new_nodes))
        return Observation(
            text=text, at=at, analysis=analysis, valence=val,
            new_node_ids=new_nodes, changed_node_ids=tuple(changed),
            reply_class=reply_class,
        )

    def _maybe_capture_name(
        self, state: InformationState, kb: KnowledgeBase, analysis: Analysis
    ) -> None:
        if state.user_name is not None:
            return
        greet_state = self._greet_state_id()
        if state.current_state != greet_state:
            return
        name_token = next(
            (t for t in analysis.tokens if t.pos == "PROPN"), None
        ) or next(
            (t for t in analysis.tokens
             if t.lemma not in textproc.CLOSED_CLASS
             and any(ch.isalpha() for ch in t.surface)),
            None,
        )
        if name_token is None:
            return
        display = name_token.surface.rstrip("'s") if name_token.surface.endswith("'s") \
            else name_token.surface
        state.user_name = display[:1].upper() + display[1:]
        kb.set_speaker_name(display.lower())

    def _greet_state_id(self) -> str:
        visible = self.templates.visible_topics()
        return visible[0].opener_state_id if visible else ""

    def _classify(
        self, state: InformationState, analysis: Analysis, new_node_count: int
    ) -> str:
        cfg = self.config
        tokens = analysis.tokens
        n_tokens = len(tokens)
        n_sentences = tokens[-1].sentence + 1 if tokens else 0
        if n_tokens > cfg.complex_tokens or (
            n_sentences > cfg.complex_sentences and analysis.subject is None
        ):
            return "complex"
        exhausted = (
            state.follow_ups_in_topic >= cfg.max_followups
            or state.barren_streak >= cfg.barren_turns
        )
        if exhausted:
            return "exhausted"
        if n_tokens >= cfg.informative_tokens or new_node_count >= 1:
            return "informative"
        return "sparse"

    # -- planning ----------------------------------------------------------

    def plan_greeting(
        self, state: InformationState, kb: KnowledgeBase, rng: random.Random
    ) -> list[Candidate]:
        visible = self.templates.visible_topics()
        if not visible:
            return [self._builtin_candidate(state, _BUILTIN_CONTINUE,
                                            "greet", "neutral")]
        opener = self.templates.states[visible[0].opener_state_id]
        cands = self._state_candidates(
            state, kb, opener, "greet", ValenceRecord.neutral()
        )
        if not cands:
            return [self._builtin_candidate(state, _BUILTIN_CONTINUE,
                                            "greet", "neutral")]
        # The opening line is fixed in declared order so every session
        # starts with the canonical greeting.
        return cands

    def plan_timeout(
        self, state: InformationState, kb: KnowledgeBase, rng: random.Random
    ) -> list[Candidate]:
        timeout_state = self.templates.find_state(TIMEOUT_STATE)
        if timeout_state is not None:
            cands = self._state_candidates(
                state, kb, timeout_state, "timeout-prompt",
                ValenceRecord.neutral(), changes_state=False,
            )
            if cands:
                return self._order_candidates(state, cands, rng)
        return [self._builtin_candidate(state, _BUILTIN_TIMEOUT,
                                        "timeout-prompt", "interested")]

    def plan_reply(
        self,
        state: InformationState,
        kb: KnowledgeBase,
        rng: random.Random,
        observation: Observation,
    ) -> list[Candidate]:
        """All viable next moves, best first.  Index 0 is exactly what an
        autonomous session emits; the rest feed the wizard console."""
        reply_class = observation.reply_class
        exhausts = state.current_topic if reply_class == "exhausted" else None
        if exhausts is not None:
            pending = replace_exhausted(state, exhausts)
            if should_close(pending, self.config):
                return self._closing_candidates(state, kb, rng, exhausts)

        primary: list[Candidate] = []
        if reply_class in _TRANSITION_FUNCTION:
            current = self.templates.find_state(state.current_state)
            target_id = current.transitions.get(reply_class) if current else None
            if target_id is not None:
                target = self.templates.states[target_id]
                function = _TRANSITION_FUNCTION[reply_class]
                if self._is_foreign_opener(target, state):
                    function = "probe-open"
                primary = self._state_candidates(
                    state, kb, target, function, observation.valence
                )

        trigger_cands: list[Candidate] = []
        if not primary:
            trigger_cands = self._trigger_candidates(state, kb, observation)

        switch_cands: list[Candidate] = []
        if not primary and not trigger_cands:
            switch_cands = self._switch_candidates(
                state, kb, observation.valence, exhausts
            )

        chosen = primary or trigger_cands or switch_cands
        if not chosen:
            chosen = [self._builtin_candidate(
                state, _BUILTIN_CONTINUE, "topic-switch", "interested",
                exhausts_topic=exhausts,
            )]
        elif exhausts is not None:
            chosen = [replace(c, exhausts_topic=exhausts) for c in chosen]

        ordered = self._order_candidates(state, chosen, rng)
        # Wizard alternatives from the later stages, after the committed pick.
        extras: list[Candidate] = []
        for stage in (trigger_cands if primary else [],
                      switch_cands if (primary or trigger_cands) else []):
            extras.extend(stage)
        if not switch_cands and (primary or trigger_cands):
            extras.extend(self._switch_candidates(
                state, kb, observation.valence, exhausts))
        seen = {c.intent.response_id for c in ordered}
        for c in extras:
            if c.intent.response_id not in seen:
                ordered.append(replace(c, exhausts_topic=exhausts))
                seen.add(c.intent.response_id)
        return ordered[: self.config.candidate_count]

    def _closing_candidates(
        self, state: InformationState, kb: KnowledgeBase,
        rng: random.Random, exhausts: Optional[str],
    ) -> list[Candidate]:
        closing = self.templates.find_state(CLOSING_STATE)
        if closing is not None:
            cands = self._state_candidates(
                state, kb, closing, "closing", ValenceRecord.neutral(),
                changes_state=False,
            )
            if cands:
                cands = [replace(c, exhausts_topic=exhausts) for c in cands]
                return self._order_candidates(state, cands, rng)
        return [self._builtin_candidate(state, _BUILTIN_CLOSING, "closing",
                                        "happy", exhausts_topic=exhausts)]

    def _is_foreign_opener(self, target: State, state: InformationState) -> bool:
        if target.topic_id == state.current_topic:
            return False
        topic = self.templates.topic(target.topic_id)
        return topic.opener_state_id == target.id

    def _slot_context(
        self, state: InformationState, kb: KnowledgeBase
    ) -> tuple[dict[str, str], dict[str, SalienceScore]]:
        """Fillable slot values and the salience backing X/Y."""
        excluded = set()
        if kb.speaker_id is not None:
            excluded.add(kb.speaker_id)
        if state.user_name is not None:
            node = kb.find(state.user_name.lower())
            if node is not None:
                excluded.add(node.id)
        top = kb.top_salient(2, state.session_clock, excluding=excluded)
        slots: dict[str, str] = {}
        backing: dict[str, SalienceScore] = {}
        if state.user_name is not None:
            slots["name"] = state.user_name
        if len(top) >= 1:
            slots["X"] = kb.node(top[0].node_id).canonical_name
            backing["X"] = top[0]
        if len(top) >= 2:
            slots["Y"] = kb.node(top[1].node_id).canonical_name
            backing["Y"] = top[1]
        return slots, backing

    def _state_candidates(
        self,
        state: InformationState,
        kb: KnowledgeBase,
        target: State,
        function: str,
        valence: ValenceRecord,
        changes_state: bool = True,
    ) -> list[Candidate]:
        slots, backing = self._slot_context(state, kb)
        cands = []
        for resp in target.responses:
            if not resp.slots <= set(slots):
                continue
            knowledge: Optional[SalienceScore] = None
            if "X" in resp.slots:
                knowledge = backing["X"]
            elif "Y" in resp.slots:
                knowledge = backing["Y"]
            if resp.requires_knowledge:
                if knowledge is None or knowledge.score < resp.min_salience:
                    continue
            emotion = agent_emotion(valence, resp.fixed_emotion, resp.mirror)
            intent = render_intent(resp, slots, emotion, function, target.id)
            cands.append(Candidate(
                intent=intent,
                topic_id=target.topic_id,
                function=function,
                changes_state=changes_state,
                knowledge_node_id=knowledge.node_id if knowledge else None,
                knowledge_node_name=(
                    kb.node(knowledge.node_id).canonical_name if knowledge else None
                ),
                knowledge_score=knowledge.score if knowledge else None,
            ))
        return cands

    def _trigger_candidates(
        self, state: InformationState, kb: KnowledgeBase, observation: Observation
    ) -> list[Candidate]:
        lemmas = {t.lemma for t in observation.analysis.tokens}
        out: list[Candidate] = []
        for topic in self.templates.visible_topics():
            for sid in topic.state_ids:
                st = self.templates.states[sid]
                if sid == state.current_state:
                    continue
                if any(
                    any(self.templates.expand(k) & lemmas for k in trigger)
                    for trigger in st.triggers
                ):
                    out.extend(self._state_candidates(
                        state, kb, st, "probe-open", observation.valence
                    ))
        return out

    def _switch_candidates(
        self,
        state: InformationState,
        kb: KnowledgeBase,
        valence: ValenceRecord,
        pending_exhaust: Optional[str] = None,
    ) -> list[Candidate]:
        exhausted = set(state.exhausted_topics)
        if pending_exhaust is not None:
            exhausted.add(pending_exhaust)
        fresh = [
            t for t in self.templates.visible_topics()
            if t.id not in exhausted and t.id not in state.visited_topics
        ]
        if not fresh:
            # Nothing unvisited: revisit a viable topic, but never the
            # greeting topic (asking for the name twice is jarring).
            greet_topic = (self.templates.visible_topics() or [None])[0]
            revisitable = [
                t for t in self.templates.visible_topics()
                if t.id != state.current_topic and t is not greet_topic
            ]
            viable = [t for t in revisitable if t.id not in exhausted]
            fresh = (viable or revisitable)[:1]
        if not fresh:
            return []
        opener = self.templates.states[fresh[0].opener_state_id]
        return self._state_candidates(state, kb, opener, "topic-switch", valence)

    def _order_candidates(
        self, state: InformationState, cands: list[Candidate], rng: random.Random
    ) -> list[Candidate]:
        """Pick the committed move (seeded-uniform over unused, avoiding an
        immediate exact repeat) and rank the rest for the wizard."""
        usable = [
            c for c in cands
            if c.intent.response_id != state.last_response_id
        ] or cands
        unused = [
            c for c in usable
            if c.intent.response_id not in state.used_responses
        ]
        if unused:
            first = unused[rng.randrange(len(unused))]
        else:
            first = min(
                usable,
                key=lambda c: state.used_responses.get(c.intent.response_id, -1),
            )
        rest = [c for c in cands if c is not first]
        rest.sort(key=lambda c: (
            c.knowledge_score is None,
            -(c.knowledge_score or 0.0),
        ))
        return [first] + rest

    def _builtin_candidate(
        self,
        state: InformationState,
        texts: tuple[str, ...],
        function: str,
        emotion: str,
        exhausts_topic: Optional[str] = None,
    ) -> Candidate:
        text = texts[state.agent_turns % len(texts)]
        intent = IntentMarkup(
            function=function, text=text, emotion=emotion,
            response_id=f"__{function}-{state.agent_turns % len(texts)}__",
            state_id=state.current_state or "__start__",
        )
        return Candidate(
            intent=intent,
            topic_id=state.current_topic,
            function=function,
            changes_state=False,
            exhausts_topic=exhausts_topic,
        )

    # -- commit ------------------------------------------------------------

    def commit(
        self, state: InformationState, candidate: Candidate, at: int
    ) -> IntentMarkup:
        """Apply the chosen move to the information state."""
        at = max(at, state.session_clock)
        state.session_clock = at
        intent = candidate.intent
        state.history.append(HistoryEntry("agent", intent.text, at))
        state.used_responses[intent.response_id] = state.agent_turns
        state.agent_turns += 1
        state.last_response_id = intent.response_id
        if candidate.exhausts_topic:
            state.exhausted_topics.add(candidate.exhausts_topic)
        if candidate.changes_state and intent.state_id in self.templates.states:
            new_topic = candidate.topic_id
            if new_topic != state.current_topic:
                state.follow_ups_in_topic = 0
            elif candidate.function in ("probe-followup", "elaborate-request"):
                state.follow_ups_in_topic += 1
            state.current_topic = new_topic
            state.current_state = intent.state_id
            state.visited_topics.add(new_topic)
        if candidate.function == "closing":
            state.closed = True
            state.awaiting_reply = False
        else:
            state.awaiting_reply = True
        return intent


def replace_exhausted(state: InformationState, topic_id: str) -> InformationState:
    """A shallow view of the state with one more exhausted topic, used for
    the closing decision without mutating the live state."""
    view = replace(state)
    view.exhausted_topics = state.exhausted_topics | {topic_id}
    return view
