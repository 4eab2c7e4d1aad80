/** Wire types for the session server's newline-delimited JSON event feed. */

export type EventKind =
  | "session-start"
  | "user-utterance"
  | "agent-intent"
  | "wizard-candidates"
  | "wizard-selection"
  | "timeout"
  | "session-end";

export interface SessionEvent {
  seq: number;
  at: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface IntentPayload {
  markup: string;
  text: string;
  function: string;
  emotion: string;
  responseId: string;
  stateId: string;
  accentTokenIndex: number | null;
  knowledge: { nodeId: string; name: string; score: number } | null;
}

export interface CandidateRow extends IntentPayload {
  rank: number;
}

export interface UtterancePayload {
  text: string;
  valence: { score: number; label: string };
  replyClass: string;
  newNodes: number;
}

export type SessionMode = "auto" | "wizard";

export type ConnectionState = "connecting" | "live" | "reconnecting";
