import { describe, expect, it } from "vitest";

import { parseIntent } from "../src/markup.js";

describe("parseIntent", () => {
  it("parses a plain greeting", () => {
    const markup =
      '<intent function="greet" emotion="happy" state="greet" ' +
      'response="greet-1"><speech>Hey, my name is Alice, ' +
      "what's your name?</speech></intent>";
    const intent = parseIntent(markup);
    expect(intent).not.toBeNull();
    expect(intent!.function).toBe("greet");
    expect(intent!.emotion).toBe("happy");
    expect(intent!.speech).toContain("my name is Alice");
    expect(intent!.accent).toBeNull();
  });

  it("extracts the accented word", () => {
    const markup =
      '<intent function="probe-followup" emotion="interested" ' +
      'state="hobbies-follow" response="hf-1"><speech>So what do you ' +
      "specifically like about <accent>hiking</accent>?</speech></intent>";
    const intent = parseIntent(markup);
    expect(intent!.accent).toBe("hiking");
    expect(intent!.speech).toBe("So what do you specifically like about hiking?");
  });

  it("unescapes reserved characters", () => {
    const markup =
      '<intent function="greet" emotion="neutral" state="s" response="r">' +
      "<speech>cats &amp; dogs &lt;3</speech></intent>";
    expect(parseIntent(markup)!.speech).toBe("cats & dogs <3");
  });

  it("rejects malformed markup instead of guessing", () => {
    expect(parseIntent("hello there")).toBeNull();
    expect(parseIntent('<intent function="x"><speech>hi</speech></intent>')).toBeNull();
    expect(parseIntent("")).toBeNull();
  });
});
