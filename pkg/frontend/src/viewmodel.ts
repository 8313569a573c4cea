/** Pure derivation of what the annotation screen should show. */

import type { SessionView } from "./api.js";
import type { Phase } from "./timers.js";

export interface TimerDisplay {
  observe: boolean;
  read: boolean;
  output: boolean;
}

export interface UiSessionView {
  imageUrl: string;
  roundIndex: number;
  modeBadge: string;
  /** Prior merged caption; null whenever the read pane must stay hidden. */
  priorCaption: string | null;
  showReadPane: boolean;
  timersRunning: TimerDisplay;
  canFinalize: boolean;
}

export function deriveView(session: SessionView, phase: Phase): UiSessionView {
  const roundIndex = session.round_count + 1;
  // mirrors the read_previous_s = 0 rule: no read pane in round 1 or in
  // parallel/single modes
  const showReadPane = session.mode.kind === "chain" && roundIndex >= 2;
  const badge =
    session.mode.kind === "parallel"
      ? `parallel(${session.mode.annotators})`
      : session.mode.kind;
  return {
    imageUrl: session.image_ref,
    roundIndex,
    modeBadge: badge,
    priorCaption: showReadPane ? session.merged_caption : null,
    showReadPane,
    timersRunning: {
      observe: phase === "observing",
      read: phase === "reading",
      output: phase === "outputting",
    },
    canFinalize: session.status === "open" && session.round_count > 0,
  };
}
