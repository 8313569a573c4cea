/**
 * Round timer state machine.
 *
 * A single machine drives the observe / read / output timers, so the
 * submitted event list is monotone by construction:
 *
 *   observe_start < observe_end <= read_start < read_end <= output_start < output_end
 *
 * The read pair exists only when the round actually opened the prior
 * caption (chain rounds >= 2).
 */

export type EventKind =
  | "observe_start"
  | "observe_end"
  | "read_start"
  | "read_end"
  | "output_start"
  | "output_end";

export interface TimingEvent {
  round_index: number;
  kind: EventKind;
  t: number;
}

export type Phase = "idle" | "observing" | "reading" | "outputting" | "done";

export type Clock = () => number;

const MIN_STEP = 0.001; // strict-within-pair intervals need positive width

export class RoundTimers {
  readonly roundIndex: number;
  private readonly clock: Clock;
  private events: TimingEvent[] = [];
  private last = -Infinity;
  phase: Phase = "idle";

  constructor(roundIndex: number, clock: Clock = () => Date.now() / 1000) {
    this.roundIndex = roundIndex;
    this.clock = clock;
  }

  /** Monotone timestamp; never goes backwards even if the clock stalls. */
  private stamp(strictlyAfterLast: boolean): number {
    let t = this.clock();
    const floor = strictlyAfterLast ? this.last + MIN_STEP : this.last;
    if (t < floor) t = floor;
    this.last = t;
    return t;
  }

  private push(kind: EventKind, strict: boolean): void {
    this.events.push({ round_index: this.roundIndex, kind, t: this.stamp(strict) });
  }

  /** The image becomes visible; there is no untimed observation. */
  showImage(): void {
    if (this.phase !== "idle") throw new Error(`cannot show image in phase ${this.phase}`);
    this.push("observe_start", false);
    this.phase = "observing";
  }

  /** Opening the prior-caption pane ends observing and starts reading. */
  openPrior(): void {
    if (this.phase !== "observing") throw new Error(`cannot read in phase ${this.phase}`);
    this.push("observe_end", true);
    this.push("read_start", false);
    this.phase = "reading";
  }

  /** First output action (keystroke or record press) starts the output timer. */
  beginOutput(): void {
    if (this.phase === "observing") {
      this.push("observe_end", true);
    } else if (this.phase === "reading") {
      this.push("read_end", true);
    } else {
      throw new Error(`cannot start output in phase ${this.phase}`);
    }
    this.push("output_start", false);
    this.phase = "outputting";
  }

  finishOutput(): void {
    if (this.phase !== "outputting") throw new Error(`cannot finish in phase ${this.phase}`);
    this.push("output_end", true);
    this.phase = "done";
  }

  /** Events for submission; only complete rounds can be submitted. */
  toEvents(): TimingEvent[] {
    if (this.phase !== "done") throw new Error("round is not finished");
    return [...this.events];
  }
}

/** Defensive client-side check mirroring the server's validation. */
export function eventsAreMonotone(events: TimingEvent[]): boolean {
  for (let i = 1; i < events.length; i++) {
    const prev = events[i - 1];
    const cur = events[i];
    const strict = cur.kind.endsWith("_end"); // start/end pairs have positive width
    if (strict ? cur.t <= prev.t : cur.t < prev.t) return false;
  }
  return true;
}
