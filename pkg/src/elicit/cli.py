"""Command line entry point: interactive chat, the session server,
scripted replay, transcript metrics and template validation."""

from __future__ import annotations

import queue
import sys
import threading
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .metrics import metrics_from_file, render_figures, write_report_csv
from .replay import ScriptError, load_script, run_replay
from .session import (
    ConfigError,
    Session,
    SessionConfig,
    SessionError,
    load_transcript,
)
from .templates import TemplateError, load_templates, bundled_templates_path


def _shared_options(fn):
    options = [
        click.option("--templates", "template_path", type=str, default=None,
                     help="Template DSL file (bundled set by default)."),
        click.option("--lexicon", "lexicon_path", type=str, default=None,
                     help="POS lexicon file."),
        click.option("--sentiment", "sentiment_path", type=str, default=None,
                     help="Sentiment lexicon file."),
        click.option("--timeout-ms", type=int, default=10_000,
                     show_default=True),
        click.option("--target-duration-ms", type=int, default=300_000,
                     show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--session-dir", type=click.Path(path_type=Path),
                     default=None, help="Where to persist the transcript."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _session_config(mode: str, template_path, lexicon_path, sentiment_path,
                    timeout_ms, target_duration_ms, seed,
                    virtual_clock: bool = False) -> SessionConfig:
    return SessionConfig(
        mode=mode,
        template_path=template_path,
        lexicon_path=lexicon_path,
        sentiment_path=sentiment_path,
        timeout_ms=timeout_ms,
        target_duration_ms=target_duration_ms,
        seed=seed,
        virtual_clock=virtual_clock,
    )


def _print_agent_events(session: Session, from_seq: int) -> int:
    for event in session.events_since(from_seq):
        if event.kind == "agent-intent":
            payload = event.payload
            click.echo(f"Alice [{payload['emotion']}]: {payload['text']}")
        elif event.kind == "session-end":
            click.echo("(session ended)")
        from_seq = event.seq
    return from_seq


@click.group()
@click.version_option(__version__)
def main() -> None:
    """A probing virtual interviewer you can chat with, serve, or replay."""


@main.command()
@_shared_options
def chat(template_path, lexicon_path, sentiment_path, timeout_ms,
         target_duration_ms, seed, session_dir) -> None:
    """Interactive terminal chat with real wall-clock timeouts."""
    config = _session_config("auto", template_path, lexicon_path,
                             sentiment_path, timeout_ms, target_duration_ms,
                             seed)
    try:
        session = Session("chat", config, session_dir)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    lines: queue.Queue[Optional[str]] = queue.Queue()

    def reader() -> None:
        for line in sys.stdin:
            lines.put(line.rstrip("\n"))
        lines.put(None)

    threading.Thread(target=reader, daemon=True).start()
    seen = _print_agent_events(session, 0)
    while not session.closed:
        try:
            line = lines.get(timeout=timeout_ms / 1000)
        except queue.Empty:
            deadline = session.timeout_deadline()
            if deadline is not None and session.now() >= deadline:
                session.fire_timeout()
                seen = _print_agent_events(session, seen)
            continue
        if line is None or line.strip().lower() in ("/quit", "/exit"):
            break
        if not line.strip():
            continue
        session.post_utterance(line)
        seen = _print_agent_events(session, seen)
    if not session.closed:
        session.close("operator-exit")
    sys.exit(0)


@main.command()
@_shared_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--frontend-dist", type=click.Path(path_type=Path), default=None,
              help="Built web client to serve alongside the API.")
def serve(template_path, lexicon_path, sentiment_path, timeout_ms,
          target_duration_ms, seed, session_dir, host, port,
          frontend_dist) -> None:
    """Run the HTTP session server."""
    import uvicorn

    from .server import ServerConfig, create_app

    app = create_app(ServerConfig(
        sessions_root=session_dir or Path("sessions"),
        template_path=template_path,
        lexicon_path=lexicon_path,
        sentiment_path=sentiment_path,
        frontend_dist=frontend_dist,
    ))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@_shared_options
@click.argument("script", type=click.Path(exists=True, path_type=Path))
@click.option("--figures-dir", type=click.Path(path_type=Path), default=None,
              help="Also render metrics figures into this directory.")
def replay(template_path, lexicon_path, sentiment_path, timeout_ms,
           target_duration_ms, seed, session_dir, script,
           figures_dir) -> None:
    """Replay a scripted user on a virtual clock (no sleeping)."""
    config = _session_config("auto", template_path, lexicon_path,
                             sentiment_path, timeout_ms, target_duration_ms,
                             seed, virtual_clock=True)
    try:
        steps = load_script(script)
        session = run_replay(steps, config, session_dir)
    except (ScriptError, ConfigError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    for event in session.events:
        if event.kind == "agent-intent":
            click.echo(
                f"[{event.at:>7}ms] Alice [{event.payload['emotion']}]: "
                f"{event.payload['text']}"
            )
        elif event.kind == "user-utterance":
            click.echo(f"[{event.at:>7}ms] User: {event.payload['text']}")
    from .metrics import compute_metrics
    report = compute_metrics(session.events)
    click.echo("")
    for name, value in report.rows():
        click.echo(f"{name}\t{value}")
    if figures_dir is not None:
        for path in render_figures(session.events, figures_dir):
            click.echo(f"wrote {path}")


@main.command()
@click.argument("transcript", type=click.Path(exists=True, path_type=Path))
@click.option("--out-dir", type=click.Path(path_type=Path), default=None,
              help="Write metrics.csv and figures here.")
def metrics(transcript, out_dir) -> None:
    """Compute a metrics report from a persisted transcript."""
    try:
        report = metrics_from_file(transcript)
    except SessionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for name, value in report.rows():
        click.echo(f"{name}\t{value}")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_report_csv(report, out_dir / "metrics.csv")
        events = load_transcript(transcript)
        written = render_figures(events, out_dir)
        click.echo(f"wrote {out_dir / 'metrics.csv'}")
        for path in written:
            click.echo(f"wrote {path}")


@main.command("check-templates")
@click.argument("template_file", type=click.Path(path_type=Path),
                required=False)
def check_templates(template_file) -> None:
    """Validate a template DSL file and report its contents."""
    path = template_file or bundled_templates_path()
    try:
        templates = load_templates(path)
    except FileNotFoundError:
        click.echo(f"error: no such file: {path}", err=True)
        sys.exit(2)
    except TemplateError as exc:
        click.echo(f"error: {path}: {exc}", err=True)
        sys.exit(1)
    n_responses = sum(
        len(s.responses) for s in templates.states.values()
    )
    click.echo(
        f"ok: {len(templates.topics)} topics, {len(templates.states)} states, "
        f"{n_responses} responses, {len(templates.synonyms)} synonym sets"
    )


if __name__ == "__main__":
    main()
