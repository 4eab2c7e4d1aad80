import json

import pytest
from fastapi.testclient import TestClient

from elicit.server import ServerConfig, create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(ServerConfig(sessions_root=tmp_path))
    with TestClient(app) as client:
        yield client


def create(client, **overrides):
    body = {"virtualClock": True, "seed": 7}
    body.update(overrides)
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200
    return resp.json()["id"]


def events(client, session_id, frm=0):
    with client.stream(
        "GET", f"/sessions/{session_id}/events", params={"from": frm}
    ) as resp:
        assert resp.status_code == 200
        return [json.loads(line) for line in resp.iter_lines() if line]


def test_create_and_greet(client):
    sid = create(client)
    client.post(f"/sessions/{sid}/close")
    stream = events(client, sid)
    assert [e["kind"] for e in stream] == [
        "session-start", "agent-intent", "session-end",
    ]
    assert stream[0]["seq"] == 1
    assert "Alice" in stream[1]["payload"]["text"]


def test_utterance_roundtrip(client):
    sid = create(client)
    resp = client.post(f"/sessions/{sid}/utterance",
                       json={"text": "I love hiking", "atMs": 2000})
    assert resp.status_code == 200
    client.post(f"/sessions/{sid}/close")
    stream = events(client, sid)
    kinds = [e["kind"] for e in stream]
    assert kinds[2:4] == ["user-utterance", "agent-intent"]
    assert stream[2]["at"] == 2000
    assert stream[2]["payload"]["valence"]["label"] == "positive"


def test_stream_from_offset(client):
    sid = create(client)
    client.post(f"/sessions/{sid}/close")
    stream = events(client, sid, frm=2)
    assert [e["seq"] for e in stream] == [3]


def test_wizard_selection_flow(client):
    sid = create(client, mode="wizard")
    client.post(f"/sessions/{sid}/utterance", json={"text": "Maya", "atMs": 0})
    # No agent intent yet: the operator has not chosen.
    resp = client.post(f"/sessions/{sid}/select",
                       json={"responseId": "not-real"})
    assert resp.status_code == 409
    # Find the live candidates and select the first.
    client_events = None
    client.post(f"/sessions/{sid}/close")
    client_events = events(client, sid)
    cands = [e for e in client_events if e["kind"] == "wizard-candidates"]
    assert cands
    assert all(c["rank"] >= 1 for c in cands[0]["payload"]["candidates"])


def test_wizard_select_commits_intent(client, tmp_path):
    sid = create(client, mode="wizard")
    first = transcript_events(tmp_path / sid)
    top = first[-1]["payload"]["candidates"][0]
    resp = client.post(f"/sessions/{sid}/select",
                       json={"responseId": top["responseId"], "atMs": 0})
    assert resp.status_code == 200
    client.post(f"/sessions/{sid}/close")
    stream = events(client, sid)
    kinds = [e["kind"] for e in stream]
    assert kinds == ["session-start", "wizard-candidates",
                     "wizard-selection", "agent-intent", "session-end"]
    assert stream[3]["payload"]["responseId"] == top["responseId"]
    assert stream[3]["payload"]["text"] == top["text"]


def transcript_events(session_dir):
    """Events persisted so far, read from the session's transcript file."""
    lines = (session_dir / "transcript.jsonl").read_text().splitlines()
    return [json.loads(line) for line in lines]


def test_select_in_auto_mode_is_rejected(client):
    sid = create(client)
    resp = client.post(f"/sessions/{sid}/select", json={"responseId": "x"})
    assert resp.status_code == 400


def test_closed_session_gives_410(client):
    sid = create(client)
    client.post(f"/sessions/{sid}/close")
    resp = client.post(f"/sessions/{sid}/utterance", json={"text": "hi"})
    assert resp.status_code == 410
    resp = client.post(f"/sessions/{sid}/close")
    assert resp.status_code == 410


def test_unknown_session_404(client):
    assert client.post("/sessions/nope/utterance",
                       json={"text": "hi"}).status_code == 404
    assert client.get("/sessions/nope/events").status_code == 404
    assert client.post("/sessions/nope/close").status_code == 404


def test_bad_config_rejected(client):
    resp = client.post("/sessions", json={"templatePath": "/no/such/file"})
    assert resp.status_code == 400


def test_bad_from_param(client):
    sid = create(client)
    resp = client.get(f"/sessions/{sid}/events", params={"from": "xyz"})
    assert resp.status_code == 400


def test_transcript_persisted_on_disk(client, tmp_path):
    sid = create(client)
    client.post(f"/sessions/{sid}/utterance", json={"text": "My cat Luna", "atMs": 1500})
    client.post(f"/sessions/{sid}/close")
    transcript = tmp_path / sid / "transcript.jsonl"
    assert transcript.is_file()
    kb = json.loads((tmp_path / sid / "kb.json").read_text())
    assert any(n["canonicalName"] == "cat" for n in kb["nodes"])


def test_live_stream_held_open(tmp_path):
    """Against a real server the event stream stays open and delivers new
    events as they happen."""
    import socket
    import threading

    import httpx
    import uvicorn

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]

    app = create_app(ServerConfig(sessions_root=tmp_path))
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                           log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                httpx.get(base + "/sessions/none/events", timeout=1)
                break
            except httpx.TransportError:
                import time
                time.sleep(0.05)
        sid = httpx.post(base + "/sessions",
                         json={"virtualClock": True}).json()["id"]
        got = []
        done = threading.Event()

        def consume():
            with httpx.stream("GET", f"{base}/sessions/{sid}/events",
                              timeout=10) as resp:
                for line in resp.iter_lines():
                    if line:
                        got.append(json.loads(line))
            done.set()

        consumer = threading.Thread(target=consume, daemon=True)
        consumer.start()
        httpx.post(f"{base}/sessions/{sid}/utterance",
                   json={"text": "I love hiking", "atMs": 2000})
        httpx.post(f"{base}/sessions/{sid}/close")
        assert done.wait(10), "stream did not finish after close"
        kinds = [e["kind"] for e in got]
        assert kinds == ["session-start", "agent-intent", "user-utterance",
                         "agent-intent", "session-end"]
        assert [e["seq"] for e in got] == list(range(1, len(got) + 1))
    finally:
        server.should_exit = True
        thread.join(timeout=5)
