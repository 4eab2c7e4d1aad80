"""Deterministic scripted replay on a virtual clock.

A script is a JSON array of steps, either ``{"say": text, "afterMs": d}``
or ``{"silence": d}``.  Time advances only by the scripted delays; armed
timeouts fire exactly when the virtual clock crosses their deadline, so
two runs with equal inputs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .session import Session, SessionConfig, SessionError


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class SayStep:
    text: str
    after_ms: int


@dataclass(frozen=True)
class SilenceStep:
    duration_ms: int


ReplayStep = Union[SayStep, SilenceStep]


def parse_script(source: str, name: str = "<script>") -> list[ReplayStep]:
    try:
        data = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ScriptError(f"{name}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, list) or not data:
        raise ScriptError(f"{name}: script must be a non-empty JSON array")
    steps: list[ReplayStep] = []
    for i, raw in enumerate(data, 1):
        if not isinstance(raw, dict):
            raise ScriptError(f"{name}: step {i} is not an object")
        if "say" in raw:
            after = raw.get("afterMs", 0)
            if not isinstance(raw["say"], str) or not isinstance(after, int) or after < 0:
                raise ScriptError(f"{name}: step {i}: bad say step")
            steps.append(SayStep(raw["say"], after))
        elif "silence" in raw:
            dur = raw["silence"]
            if not isinstance(dur, int) or dur < 0:
                raise ScriptError(f"{name}: step {i}: bad silence duration")
            steps.append(SilenceStep(dur))
        else:
            raise ScriptError(f"{name}: step {i}: expected 'say' or 'silence'")
    return steps


def load_script(path: str | Path) -> list[ReplayStep]:
    return parse_script(Path(path).read_text(encoding="utf-8"), str(path))


def run_replay(
    steps: list[ReplayStep],
    config: SessionConfig,
    directory: Optional[Path] = None,
    session_id: str = "replay",
) -> Session:
    """Drive a fresh session through the script and close it."""
    config.virtual_clock = True
    session = Session(session_id, config, directory)
    t = 0
    for step in steps:
        if session.closed:
            break
        if isinstance(step, SayStep):
            target = t + step.after_ms
            # The utterance wins a tie with the timeout deadline.
            while not session.closed:
                deadline = session.timeout_deadline()
                if deadline is None or deadline >= target:
                    break
                session.fire_timeout(deadline)
            if not session.closed:
                session.post_utterance(step.text, target)
            t = target
        else:
            target = t + step.duration_ms
            while not session.closed:
                deadline = session.timeout_deadline()
                if deadline is None or deadline > target:
                    break
                session.fire_timeout(deadline)
            t = target
            if not session.closed:
                # Silence still advances the session clock.
                session.state.session_clock = max(
                    session.state.session_clock, t
                )
    if not session.closed:
        session.close("script-end")
    return session
