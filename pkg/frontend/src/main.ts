/** DOM wiring for the annotation screen; all logic lives in the modules. */

import { AnnotationApi, ServiceError, type SessionView } from "./api.js";
import { AudioRecorder } from "./audio.js";
import { guidelinesFor } from "./guidelines.js";
import { RoundTimers, eventsAreMonotone } from "./timers.js";
import { deriveView } from "./viewmodel.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const api = new AnnotationApi(
  (window as unknown as { ANNOCHAIN_API?: string }).ANNOCHAIN_API ?? "",
);
const recorder = new AudioRecorder();

let session: SessionView | null = null;
let timers: RoundTimers | null = null;
let annotatorId = "";
let capturedAudio: { audio_b64: string; audio_format: string } | null = null;

function render(): void {
  if (!session || !timers) return;
  const view = deriveView(session, timers.phase);
  $("mode-badge").textContent = view.modeBadge;
  $("round-label").textContent = `round ${view.roundIndex}`;
  $("guidelines").innerHTML = guidelinesFor(view.roundIndex)
    .map((g) => `<li>${g}</li>`)
    .join("");
  $("read-pane").style.display = view.showReadPane ? "" : "none";
  for (const phase of ["observe", "read", "output"] as const) {
    $(`timer-${phase}`).classList.toggle(
      "running",
      view.timersRunning[phase],
    );
  }
  ($("finalize") as HTMLButtonElement).disabled = !view.canFinalize;
}

async function startSession(): Promise<void> {
  const imageRef = ($("image-ref") as HTMLInputElement).value;
  annotatorId = ($("annotator-id") as HTMLInputElement).value || "annotator-1";
  const created = await api.createSession(imageRef, "chain");
  session = await api.getSession(created.session_id);
  beginRound();
}

function beginRound(): void {
  if (!session) return;
  timers = new RoundTimers(session.round_count + 1);
  const img = $("image") as HTMLImageElement;
  // no untimed observation: the observe timer starts with image visibility
  img.src = session.image_ref;
  img.style.visibility = "visible";
  timers.showImage();
  capturedAudio = null;
  render();
}

async function openPrior(): Promise<void> {
  if (!session || !timers) return;
  timers.openPrior();
  const reply = await api.getPrior(session.session_id, annotatorId, Date.now() / 1000);
  $("prior-caption").textContent = reply.merged_caption;
  render();
}

async function toggleRecording(): Promise<void> {
  if (!timers) return;
  if (!recorder.recording) {
    if (timers.phase !== "outputting") timers.beginOutput();
    const ok = await recorder.start();
    if (!ok) $("typed-text").focus(); // typing fallback
  } else {
    capturedAudio = await recorder.stop();
  }
  render();
}

function onFirstKeystroke(): void {
  if (timers && timers.phase !== "outputting" && timers.phase !== "done") {
    timers.beginOutput();
    render();
  }
}

async function submitRound(): Promise<void> {
  if (!session || !timers) return;
  timers.finishOutput();
  const events = timers.toEvents();
  if (!eventsAreMonotone(events)) throw new Error("timer state corrupted");
  const typed = ($("typed-text") as HTMLTextAreaElement).value;
  try {
    session = await api.submitRound(session.session_id, {
      annotator_id: annotatorId,
      payload_kind: capturedAudio ? "speech_transcript" : "typed_text",
      ...(capturedAudio ?? { text: typed }),
      events,
    });
    ($("typed-text") as HTMLTextAreaElement).value = "";
    beginRound();
  } catch (err) {
    showError(err);
  }
}

async function finalizeSession(): Promise<void> {
  if (!session) return;
  try {
    session = await api.finalize(session.session_id, annotatorId);
    const report = await api.metrics(session.session_id);
    $("metrics").textContent =
      `units: ${report.unit_count}  time: ${report.total_time_s.toFixed(1)} s` +
      `  speed: ${(report.speed_units_per_s ?? 0).toFixed(3)} units/s`;
  } catch (err) {
    showError(err);
  }
}

function showError(err: unknown): void {
  const box = $("error");
  box.style.display = "";
  box.textContent =
    err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err);
  // retry affordance: the round state is preserved, the user may resubmit
}

export function wire(): void {
  $("start").addEventListener("click", () => void startSession());
  $("open-prior").addEventListener("click", () => void openPrior());
  $("record").addEventListener("click", () => void toggleRecording());
  $("typed-text").addEventListener("input", onFirstKeystroke, { once: false });
  $("submit").addEventListener("click", () => void submitRound());
  $("finalize").addEventListener("click", () => void finalizeSession());
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  wire();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
