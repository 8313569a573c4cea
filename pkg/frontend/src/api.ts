/** Typed client for the annotation service's HTTP endpoints. */

import type { TimingEvent } from "./timers.js";

export interface ModeInfo {
  kind: "single" | "parallel" | "chain";
  annotators: number | null;
  max_rounds: number;
}

export interface SessionView {
  session_id: string;
  image_ref: string;
  mode: ModeInfo;
  status: string;
  merged_caption: string | null;
  round_count: number;
  rounds: Array<{
    round_index: number;
    annotator_id: string;
    payload_kind: string;
    raw_text: string;
  }>;
}

export interface IntrinsicReport {
  unit_count: number;
  total_time_s: number;
  speed_units_per_s: number | null;
  duplication_pct: number | null;
}

export interface RoundPayload {
  annotator_id: string;
  payload_kind: "speech_transcript" | "typed_text";
  text?: string;
  audio_b64?: string;
  audio_format?: string;
  events: TimingEvent[];
}

export interface ApiError {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.status = status;
    this.code = body.code;
  }
}

type FetchLike = typeof fetch;

export class AnnotationApi {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  private readonly token?: string;

  constructor(baseUrl: string, options: { fetchImpl?: FetchLike; token?: string } = {}) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = options.fetchImpl ?? fetch;
    this.token = options.token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const reply = await this.fetchImpl(`${this.base}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await reply.text();
    const parsed = text ? JSON.parse(text) : null;
    if (!reply.ok) {
      throw new ServiceError(reply.status, parsed ?? { code: "Unknown", message: text });
    }
    return parsed as T;
  }

  createSession(imageRef: string, mode: string, annotators?: number): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", {
      image_ref: imageRef,
      mode,
      annotators: annotators ?? null,
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  /** Fetching the prior caption starts the server-side read timer too. */
  getPrior(sessionId: string, annotatorId: string, t: number): Promise<{ merged_caption: string }> {
    const query = new URLSearchParams({ annotator_id: annotatorId, t: String(t) });
    return this.request("GET", `/sessions/${sessionId}/prior?${query}`);
  }

  submitRound(sessionId: string, payload: RoundPayload): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/rounds`, payload);
  }

  finalize(sessionId: string, annotatorId: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/finalize`, {
      annotator_id: annotatorId,
    });
  }

  metrics(sessionId: string): Promise<IntrinsicReport> {
    return this.request("GET", `/sessions/${sessionId}/metrics`);
  }

  async healthz(): Promise<boolean> {
    try {
      await this.request("GET", "/healthz");
      return true;
    } catch {
      return false;
    }
  }
}
