"""Transcript metrics and report rendering.

Reports are computed solely from a persisted transcript, so they are
stable across reruns and machines.  The report path can also render a
small set of matplotlib figures next to the delimited output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from .session import SessionEvent, load_transcript


@dataclass(frozen=True)
class MetricsReport:
    turns: int
    duration_ms: int
    nodes_created: int
    attributes_recorded: int
    possessions_recorded: int
    aliases_recorded: int
    mean_salience_at_close: float
    distinct_responses_used: int
    exact_repetitions: int
    timeouts_fired: int

    def rows(self) -> list[tuple[str, object]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


def compute_metrics(events: Sequence[SessionEvent]) -> MetricsReport:
    agent_texts = [e.payload["text"] for e in events if e.kind == "agent-intent"]
    user_turns = sum(1 for e in events if e.kind == "user-utterance")
    kb = {}
    for e in events:
        if e.kind == "session-end":
            kb = e.payload.get("kb", {})
    repeats = sum(
        1 for prev, cur in zip(agent_texts, agent_texts[1:]) if prev == cur
    )
    return MetricsReport(
        turns=user_turns + len(agent_texts),
        duration_ms=events[-1].at if events else 0,
        nodes_created=int(kb.get("nodes", 0)),
        attributes_recorded=int(kb.get("attributes", 0)),
        possessions_recorded=int(kb.get("possessions", 0)),
        aliases_recorded=int(kb.get("aliases", 0)),
        mean_salience_at_close=float(kb.get("meanSalience", 0.0)),
        distinct_responses_used=len({
            e.payload["responseId"] for e in events if e.kind == "agent-intent"
        }),
        exact_repetitions=repeats,
        timeouts_fired=sum(1 for e in events if e.kind == "timeout"),
    )


def metrics_from_file(path: str | Path) -> MetricsReport:
    return compute_metrics(load_transcript(path))


def write_report_csv(report: MetricsReport, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerows(report.rows())


def render_figures(events: Sequence[SessionEvent], out_dir: Path) -> list[Path]:
    """Render summary figures for a transcript; returns the written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    user = [(e.at / 1000, e.payload["valence"]["score"])
            for e in events if e.kind == "user-utterance"]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    if user:
        xs, ys = zip(*user)
        ax.plot(xs, ys, "o-", color="tab:blue")
    ax.axhline(0.0, color="grey", lw=0.8)
    ax.set_xlabel("session time (s)")
    ax.set_ylabel("utterance valence")
    ax.set_ylim(-1.05, 1.05)
    ax.set_title("User valence over the session")
    fig.tight_layout()
    path = out_dir / "valence_timeline.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    picks = [(e.at / 1000, e.payload["knowledge"]["score"],
              e.payload["knowledge"]["name"])
             for e in events
             if e.kind == "agent-intent" and e.payload.get("knowledge")]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    if picks:
        xs = [p[0] for p in picks]
        ys = [p[1] for p in picks]
        ax.plot(xs, ys, "s-", color="tab:green")
        for x, y, name in picks:
            ax.annotate(name, (x, y), textcoords="offset points",
                        xytext=(0, 6), fontsize=7, ha="center")
    ax.set_xlabel("session time (s)")
    ax.set_ylabel("salience of substituted node")
    ax.set_title("Knowledge-backed substitutions")
    fig.tight_layout()
    path = out_dir / "salience_substitutions.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    counts: dict[str, list[tuple[float, int]]] = {"user": [], "agent": []}
    totals = {"user": 0, "agent": 0}
    for e in events:
        key = {"user-utterance": "user", "agent-intent": "agent"}.get(e.kind)
        if key:
            totals[key] += 1
            counts[key].append((e.at / 1000, totals[key]))
    fig, ax = plt.subplots(figsize=(7, 3.2))
    for key, color in (("user", "tab:blue"), ("agent", "tab:orange")):
        if counts[key]:
            xs, ys = zip(*counts[key])
            ax.step(xs, ys, where="post", label=f"{key} turns", color=color)
    ax.set_xlabel("session time (s)")
    ax.set_ylabel("cumulative turns")
    ax.legend(loc="upper left")
    ax.set_title("Turn activity")
    fig.tight_layout()
    path = out_dir / "turn_activity.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
