/**
 * Microphone capture with a typing fallback.
 *
 * Records via getUserMedia + MediaRecorder and returns the blob base64
 * encoded for server-side transcription. When capture is unavailable
 * (no device, denied permission, unsupported browser) the caller falls
 * back to the typed-text input.
 */

export interface CapturedAudio {
  audio_b64: string;
  audio_format: string;
}

export interface RecorderDeps {
  getUserMedia?: (constraints: MediaStreamConstraints) => Promise<MediaStream>;
  createRecorder?: (stream: MediaStream) => MediaRecorder;
}

function defaultDeps(): RecorderDeps {
  if (typeof navigator === "undefined" || !navigator.mediaDevices) return {};
  return {
    getUserMedia: (c) => navigator.mediaDevices.getUserMedia(c),
    createRecorder: (s) => new MediaRecorder(s),
  };
}

export function formatFromMime(mimeType: string): string {
  if (mimeType.includes("webm")) return "webm";
  if (mimeType.includes("ogg")) return "ogg";
  if (mimeType.includes("mp3") || mimeType.includes("mpeg")) return "mp3";
  return "wav";
}

export async function blobToBase64(blob: Blob): Promise<string> {
  const buffer = await blob.arrayBuffer();
  const bytes = new Uint8Array(buffer);
  let binary = "";
  for (const b of bytes) binary += String.fromCharCode(b);
  return btoa(binary);
}

export class AudioRecorder {
  private deps: RecorderDeps;
  private recorder: MediaRecorder | null = null;
  private chunks: Blob[] = [];

  constructor(deps: RecorderDeps = defaultDeps()) {
    this.deps = deps;
  }

  get available(): boolean {
    return Boolean(this.deps.getUserMedia && this.deps.createRecorder);
  }

  get recording(): boolean {
    return this.recorder !== null;
  }

  /** Returns false when capture could not start; caller switches to typing. */
  async start(): Promise<boolean> {
    if (!this.available || this.recorder) return false;
    try {
      const stream = await this.deps.getUserMedia!({ audio: true });
      const recorder = this.deps.createRecorder!(stream);
      this.chunks = [];
      recorder.ondataavailable = (event: BlobEvent) => {
        if (event.data.size > 0) this.chunks.push(event.data);
      };
      recorder.start();
      this.recorder = recorder;
      return true;
    } catch {
      return false;
    }
  }

  async stop(): Promise<CapturedAudio> {
    const recorder = this.recorder;
    if (!recorder) throw new Error("not recording");
    this.recorder = null;
    await new Promise<void>((resolve) => {
      recorder.onstop = () => resolve();
      recorder.stop();
    });
    const mime = recorder.mimeType || "audio/webm";
    const blob = new Blob(this.chunks, { type: mime });
    return { audio_b64: await blobToBase64(blob), audio_format: formatFromMime(mime) };
  }
}
