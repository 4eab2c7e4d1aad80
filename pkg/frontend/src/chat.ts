/** The interviewee's chat pane: turns rendered strictly in event order,
 * agent bubbles labelled with their emotion and the accented word
 * emphasized. All content comes from received events; the pane never
 * invents agent text. */

import { parseIntent } from "./markup.js";
import type { ConnectionState, SessionEvent } from "./types.js";

export class ChatPane {
  private thinking: HTMLElement;
  private status: HTMLElement;
  private turns: HTMLElement;
  private rendered = new Set<number>();

  constructor(private root: HTMLElement) {
    this.status = document.createElement("div");
    this.status.className = "connection-status";
    this.turns = document.createElement("div");
    this.turns.className = "turns";
    this.thinking = document.createElement("div");
    this.thinking.className = "thinking";
    this.thinking.textContent = "…";
    this.thinking.hidden = true;
    root.append(this.status, this.turns, this.thinking);
  }

  setConnectionState(state: ConnectionState): void {
    this.status.textContent = state === "live" ? "" : state;
    this.status.dataset.state = state;
  }

  /** Apply one event from the gap-free store. */
  apply(event: SessionEvent): void {
    if (this.rendered.has(event.seq)) return;
    this.rendered.add(event.seq);
    switch (event.kind) {
      case "user-utterance":
        this.addBubble(event.seq, "user", String(event.payload.text));
        this.thinking.hidden = false;
        break;
      case "agent-intent": {
        const intent = parseIntent(String(event.payload.markup));
        if (!intent) return;
        const bubble = this.addBubble(event.seq, "agent", "");
        const label = document.createElement("span");
        label.className = "emotion";
        label.textContent = `[${intent.emotion}]`;
        bubble.append(label, " ");
        if (intent.accent) {
          const [before, after] = splitAround(intent.speech, intent.accent);
          const em = document.createElement("em");
          em.className = "accent";
          em.textContent = intent.accent;
          bubble.append(before, em, after);
        } else {
          bubble.append(intent.speech);
        }
        this.thinking.hidden = true;
        break;
      }
      case "session-end":
        this.thinking.hidden = true;
        this.addBubble(event.seq, "system", "session ended");
        break;
      default:
        break;
    }
  }

  private addBubble(seq: number, role: string, text: string): HTMLElement {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${role}`;
    bubble.dataset.seq = String(seq);
    bubble.textContent = text;
    this.turns.append(bubble);
    return bubble;
  }
}

function splitAround(speech: string, accent: string): [string, string] {
  const index = speech.indexOf(accent);
  if (index < 0) return [speech, ""];
  return [speech.slice(0, index), speech.slice(index + accent.length)];
}
