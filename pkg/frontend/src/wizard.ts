/** The hidden operator's console: the latest candidate list as actionable
 * rows (filled text, state id, salience score); clicking one issues the
 * selection. The panel disables once a selection lands and refreshes on a
 * stale-selection conflict. */

import { ConflictError, SessionClient } from "./client.js";
import type { CandidateRow, SessionEvent } from "./types.js";

export class WizardConsole {
  private panel: HTMLElement;
  private currentSeq = 0;
  private disabled = false;

  constructor(
    private root: HTMLElement,
    private client: SessionClient,
  ) {
    this.panel = document.createElement("div");
    this.panel.className = "candidate-panel";
    root.append(this.panel);
  }

  apply(event: SessionEvent): void {
    if (event.kind === "wizard-candidates") {
      this.currentSeq = event.seq;
      this.disabled = false;
      this.render(event.payload.candidates as CandidateRow[]);
    } else if (event.kind === "wizard-selection") {
      this.disabled = true;
      this.setRowsDisabled(true);
    }
  }

  private render(candidates: CandidateRow[]): void {
    this.panel.replaceChildren();
    for (const candidate of candidates) {
      const row = document.createElement("button");
      row.className = "candidate";
      row.dataset.responseId = candidate.responseId;
      row.dataset.rank = String(candidate.rank);
      const score =
        candidate.knowledge === null
          ? "—"
          : candidate.knowledge.score.toFixed(3);
      row.textContent = `${candidate.rank}. ${candidate.text} (${candidate.stateId}, salience ${score})`;
      row.addEventListener("click", () => {
        // Read the id off the row so the DOM stays the single source of
        // truth for what the operator actually clicked.
        void this.select(row.dataset.responseId!);
      });
      this.panel.append(row);
    }
  }

  private setRowsDisabled(disabled: boolean): void {
    for (const row of this.panel.querySelectorAll("button")) {
      (row as HTMLButtonElement).disabled = disabled;
    }
  }

  private async select(responseId: string): Promise<void> {
    if (this.disabled) return;
    this.setRowsDisabled(true);
    try {
      await this.client.selectCandidate(responseId);
      // The wizard-selection event will keep the panel disabled.
    } catch (error) {
      if (error instanceof ConflictError) {
        // Stale: a fresher candidate list exists; re-enable and wait for
        // it to arrive through the stream.
        this.setRowsDisabled(false);
        return;
      }
      throw error;
    }
  }
}
