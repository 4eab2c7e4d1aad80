/** Round trip against a live session server: requires the Python package
 * to be installed (`pip install -e .` at the repository root). */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ChatPane } from "../src/chat.js";
import { SessionClient } from "../src/client.js";
import { WizardConsole } from "../src/wizard.js";
import type { CandidateRow, SessionEvent } from "../src/types.js";

let server: ChildProcess;
let base: string;

async function waitFor(
  predicate: () => boolean,
  what: string,
  timeoutMs = 15_000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

beforeAll(async () => {
  const port = 8100 + Math.floor(Math.random() * 800);
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    ["-m", "elicit.cli", "serve", "--port", String(port), "--session-dir",
     mkdtempSync(join(tmpdir(), "elicit-web-"))],
    { stdio: "ignore" },
  );
  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      await fetch(`${base}/sessions/none/events`);
      return;
    } catch {
      if (Date.now() > deadline) throw new Error("server did not start");
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
  }
});

afterAll(() => {
  server?.kill();
});

describe("wizard console round trip", () => {
  it("renders candidates, selects one, and shows the agent bubble", async () => {
    document.body.innerHTML = "<div id='app'></div>";
    const root = document.getElementById("app")!;

    const client = await SessionClient.create(base, {
      mode: "wizard",
      seed: 7,
      virtualClock: true,
    });
    const pane = new ChatPane(root);
    const wizard = new WizardConsole(root, client);
    client.store.onEvent((event) => {
      pane.apply(event);
      wizard.apply(event);
    });
    const running = client.run();

    // Greeting candidates arrive; pick the top one to get started.
    await waitFor(
      () => root.querySelectorAll("button.candidate").length > 0,
      "greeting candidates",
    );
    (root.querySelector("button.candidate") as HTMLButtonElement).click();
    await waitFor(
      () => root.querySelectorAll(".bubble.agent").length === 1,
      "greeting bubble",
    );

    await client.postUtterance("Maya", 2000);
    await waitFor(
      () => !((root.querySelector("button.candidate") as HTMLButtonElement)?.disabled ?? true),
      "fresh candidates after the name",
    );
    (root.querySelector("button.candidate") as HTMLButtonElement).click();
    await waitFor(
      () => root.querySelectorAll(".bubble.agent").length === 2,
      "second agent bubble",
    );

    // An informative reply yields a full panel of five candidates.
    await client.postUtterance(
      "I love hiking in the hills with my little dog",
      8000,
    );
    await waitFor(() => {
      const rows = root.querySelectorAll("button.candidate");
      return rows.length === 5 && !(rows[0] as HTMLButtonElement).disabled;
    }, "five candidates");

    const events = client.store.events as SessionEvent[];
    const lastCandidates = [...events]
      .reverse()
      .find((e) => e.kind === "wizard-candidates")!;
    const rows = lastCandidates.payload.candidates as CandidateRow[];
    expect(rows).toHaveLength(5);
    expect(rows.map((r) => r.rank)).toEqual([1, 2, 3, 4, 5]);

    const before = events.length;
    const chosen = root.querySelectorAll("button.candidate")[1] as HTMLButtonElement;
    const chosenId = chosen.dataset.responseId!;
    chosen.click();
    await waitFor(
      () => root.querySelectorAll(".bubble.agent").length === 3,
      "selected agent bubble",
    );

    // Exactly one wizard-selection followed by exactly one agent-intent.
    const tail = (client.store.events as SessionEvent[]).slice(before);
    expect(tail.map((e) => e.kind)).toEqual(["wizard-selection", "agent-intent"]);
    expect(tail[0].payload.responseId).toBe(chosenId);
    expect(tail[1].payload.responseId).toBe(chosenId);

    // The chat pane shows the selected text with its emotion label.
    const bubbles = root.querySelectorAll(".bubble.agent");
    const last = bubbles[bubbles.length - 1] as HTMLElement;
    expect(last.textContent).toContain(
      String((tail[1].payload as { text: string }).text),
    );
    expect(last.querySelector(".emotion")!.textContent).toMatch(/^\[\w+\]$/);

    // The spent panel stays disabled until new candidates arrive.
    expect(
      (root.querySelector("button.candidate") as HTMLButtonElement).disabled,
    ).toBe(true);

    await client.close();
    await running;
  });

  it("recovers from a stale selection with a conflict and no agent bubble", async () => {
    document.body.innerHTML = "<div id='app'></div>";
    const root = document.getElementById("app")!;

    const client = await SessionClient.create(base, {
      mode: "wizard",
      seed: 3,
      virtualClock: true,
    });
    const pane = new ChatPane(root);
    const wizard = new WizardConsole(root, client);
    client.store.onEvent((event) => {
      pane.apply(event);
      wizard.apply(event);
    });
    const running = client.run();

    await waitFor(
      () => root.querySelectorAll("button.candidate").length > 0,
      "greeting candidates",
    );

    // Forge a click on a candidate id the server no longer offers.
    const row = root.querySelector("button.candidate") as HTMLButtonElement;
    row.dataset.responseId = "stale-id";
    const agentBubbles = () => root.querySelectorAll(".bubble.agent").length;
    const bubblesBefore = agentBubbles();
    row.click();
    await waitFor(
      () => !(root.querySelector("button.candidate") as HTMLButtonElement).disabled,
      "panel re-enabled after conflict",
    );
    expect(agentBubbles()).toBe(bubblesBefore);

    await client.close();
    await running;
  });
});
