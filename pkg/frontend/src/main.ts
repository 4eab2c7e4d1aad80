/** Entry point: routes /chat/<id> to the interviewee pane and
 * /wizard/<id> to the operator console, both fed by one event stream. */

import { ChatPane } from "./chat.js";
import { SessionClient } from "./client.js";
import { WizardConsole } from "./wizard.js";

export function parseRoute(
  pathname: string,
): { view: "chat" | "wizard"; sessionId: string } | null {
  const match = /^\/(chat|wizard)\/([^/]+)$/.exec(pathname);
  if (!match) return null;
  return { view: match[1] as "chat" | "wizard", sessionId: match[2] };
}

export async function boot(root: HTMLElement, pathname: string): Promise<void> {
  const route = parseRoute(pathname);
  if (!route) {
    root.textContent = "Open /chat/<session-id> or /wizard/<session-id>.";
    return;
  }
  const client = new SessionClient("", route.sessionId);
  const chat = new ChatPane(root);
  client.onConnectionState((state) => chat.setConnectionState(state));
  client.store.onEvent((event) => chat.apply(event));

  if (route.view === "wizard") {
    const wizard = new WizardConsole(root, client);
    client.store.onEvent((event) => wizard.apply(event));
  } else {
    const form = document.createElement("form");
    const input = document.createElement("input");
    input.type = "text";
    input.placeholder = "Say something…";
    form.append(input);
    form.addEventListener("submit", (raised) => {
      raised.preventDefault();
      const text = input.value.trim();
      if (!text) return;
      input.value = "";
      void client.postUtterance(text);
    });
    root.append(form);
  }

  await client.run();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app")!, window.location.pathname);
}
