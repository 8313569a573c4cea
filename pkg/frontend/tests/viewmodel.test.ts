import { describe, expect, it } from "vitest";
import type { SessionView } from "../src/api.js";
import { deriveView } from "../src/viewmodel.js";
import { guidelinesFor, FIRST_PERSON_GUIDELINES, SUBSEQUENT_GUIDELINES } from "../src/guidelines.js";

function session(overrides: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s1",
    image_ref: "http://img/1.jpg",
    mode: { kind: "chain", annotators: null, max_rounds: 6 },
    status: "open",
    merged_caption: "a red boat.",
    round_count: 1,
    rounds: [],
    ...overrides,
  };
}

describe("deriveView", () => {
  it("hides the read pane in round 1", () => {
    const view = deriveView(session({ round_count: 0, merged_caption: null }), "observing");
    expect(view.roundIndex).toBe(1);
    expect(view.showReadPane).toBe(false);
    expect(view.priorCaption).toBeNull();
  });

  it("shows the prior caption from round 2 of a chain", () => {
    const view = deriveView(session(), "observing");
    expect(view.roundIndex).toBe(2);
    expect(view.showReadPane).toBe(true);
    expect(view.priorCaption).toBe("a red boat.");
  });

  it("never shows the read pane in parallel or single modes", () => {
    for (const mode of [
      { kind: "parallel" as const, annotators: 3, max_rounds: 6 },
      { kind: "single" as const, annotators: null, max_rounds: 6 },
    ]) {
      const view = deriveView(session({ mode, round_count: 2 }), "observing");
      expect(view.showReadPane).toBe(false);
      expect(view.priorCaption).toBeNull();
    }
  });

  it("labels parallel mode with its annotator count", () => {
    const mode = { kind: "parallel" as const, annotators: 3, max_rounds: 6 };
    expect(deriveView(session({ mode }), "idle").modeBadge).toBe("parallel(3)");
    expect(deriveView(session(), "idle").modeBadge).toBe("chain");
  });

  it("runs exactly the timer matching the phase", () => {
    expect(deriveView(session(), "observing").timersRunning).toEqual({
      observe: true,
      read: false,
      output: false,
    });
    expect(deriveView(session(), "reading").timersRunning).toEqual({
      observe: false,
      read: true,
      output: false,
    });
    expect(deriveView(session(), "outputting").timersRunning).toEqual({
      observe: false,
      read: false,
      output: true,
    });
    expect(deriveView(session(), "done").timersRunning).toEqual({
      observe: false,
      read: false,
      output: false,
    });
  });

  it("enables completion only for open sessions with at least one round", () => {
    expect(deriveView(session(), "done").canFinalize).toBe(true);
    expect(deriveView(session({ round_count: 0 }), "done").canFinalize).toBe(false);
    expect(deriveView(session({ status: "finalized" }), "done").canFinalize).toBe(false);
  });
});

describe("guidelinesFor", () => {
  it("gives first-person guidance in round 1 and add-only guidance later", () => {
    expect(guidelinesFor(1)).toBe(FIRST_PERSON_GUIDELINES);
    expect(guidelinesFor(2)).toBe(SUBSEQUENT_GUIDELINES);
    expect(guidelinesFor(6)).toBe(SUBSEQUENT_GUIDELINES);
  });
});
