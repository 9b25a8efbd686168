/** Typed client for the chromagrade preview service's HTTP contract. */

export interface GradingParams {
  brightness: number;
  contrast: number;
  gamma: number;
  hue: number;
  saturation: number;
  sharpness: number;
  temperature: number;
}

export type ParamName = keyof GradingParams;

export interface ParamSpec {
  min: number;
  max: number;
  identity: number;
}

export type ParamSchema = Record<ParamName, ParamSpec>;

export interface CreateSessionResponse {
  session_id: string;
  params: GradingParams;
  keyframe_indices: number[];
  frame_count: number;
  schema: ParamSchema;
}

export interface SessionStatus {
  status: 'idle' | 'running' | 'done' | 'failed';
  iters_done: number;
  iters_total: number;
  progress: number;
  loss: number[];
  error: string | null;
}

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`service error ${status}: ${detail}`);
  }
}

async function ensureOk(resp: Response): Promise<Response> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === 'string') detail = body.detail;
      else detail = JSON.stringify(body);
    } catch {
      /* body was not JSON */
    }
    throw new ServiceError(resp.status, detail);
  }
  return resp;
}

export class ServiceClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  async createSession(
    styleB64: string,
    framesB64: string[],
    frameRate = 25,
    keyframes?: number,
  ): Promise<CreateSessionResponse> {
    const resp = await fetch(this.url('/sessions'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({
        style: styleB64,
        frames: framesB64,
        frame_rate: frameRate,
        ...(keyframes ? { keyframes } : {}),
      }),
    });
    return (await ensureOk(resp)).json();
  }

  async getParams(sessionId: string): Promise<GradingParams> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/params`));
    return (await ensureOk(resp)).json();
  }

  async preview(sessionId: string, params: GradingParams, frameIndex: number): Promise<Uint8Array> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/preview`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ params, frame_index: frameIndex }),
    });
    const buf = await (await ensureOk(resp)).arrayBuffer();
    return new Uint8Array(buf);
  }

  async startFinetune(sessionId: string, iters?: number): Promise<void> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/finetune`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(iters ? { iters } : {}),
    });
    await ensureOk(resp);
  }

  async status(sessionId: string): Promise<SessionStatus> {
    const resp = await fetch(this.url(`/sessions/${sessionId}`));
    return (await ensureOk(resp)).json();
  }

  lutUrl(sessionId: string, size = 33): string {
    return this.url(`/sessions/${sessionId}/lut.cube?size=${size}`);
  }

  async fetchLut(sessionId: string, size = 33): Promise<string> {
    const resp = await fetch(this.lutUrl(sessionId, size));
    return (await ensureOk(resp)).text();
  }

  async deleteSession(sessionId: string): Promise<void> {
    const resp = await fetch(this.url(`/sessions/${sessionId}`), { method: 'DELETE' });
    await ensureOk(resp);
  }
}
