/** Client-side parsing of the serialized intent markup, the single source
 * of truth for what the agent says and how. */

export interface ParsedIntent {
  function: string;
  emotion: string;
  state: string;
  response: string;
  /** Speech text with the accent element removed. */
  speech: string;
  /** The accented word, if any. */
  accent: string | null;
}

const INTENT_RE =
  /^<intent function="([^"]*)" emotion="([^"]*)" state="([^"]*)" response="([^"]*)"><speech>([\s\S]*)<\/speech><\/intent>$/;

const ACCENT_RE = /<accent>([\s\S]*?)<\/accent>/;

function unescapeXml(text: string): string {
  return text
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&apos;/g, "'")
    .replace(/&amp;/g, "&");
}

/** Parse one serialized intent; returns null on anything malformed rather
 * than guessing — the client never fabricates agent output. */
export function parseIntent(markup: string): ParsedIntent | null {
  const m = INTENT_RE.exec(markup);
  if (!m) return null;
  const [, fn, emotion, state, response, rawSpeech] = m;
  const accentMatch = ACCENT_RE.exec(rawSpeech);
  const accent = accentMatch ? unescapeXml(accentMatch[1]) : null;
  const speech = unescapeXml(rawSpeech.replace(ACCENT_RE, "$1"));
  return { function: fn, emotion, state, response, speech, accent };
}
