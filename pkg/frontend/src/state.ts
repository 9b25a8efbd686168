/** Session state for the tuning panel: slider values, debounced previews with
 * at most one request in flight, and predicted-vs-override bookkeeping. */

import type { GradingParams, ParamName, ParamSchema } from './api.js';

export const PARAM_ORDER: ParamName[] = [
  'brightness', 'contrast', 'gamma', 'hue', 'saturation', 'sharpness', 'temperature',
];

export type PreviewTransport = (params: GradingParams, frameIndex: number) => Promise<Uint8Array>;

export interface TunerOptions {
  debounceMs?: number;
}

interface PreviewListener {
  (data: Uint8Array, seq: number): void;
}

export class TunerStore {
  private sliderValues: GradingParams;
  private predicted: GradingParams;
  private readonly touched = new Set<ParamName>();

  private debounceTimer: ReturnType<typeof setTimeout> | undefined;
  private inFlight = false;
  private followUp = false;
  private sentSeq = 0;
  private appliedSeq = 0;

  frameIndex = 0;

  private previewListeners: PreviewListener[] = [];
  private errorListeners: ((err: unknown) => void)[] = [];
  private readonly debounceMs: number;

  constructor(
    readonly schema: ParamSchema,
    initial: GradingParams,
    private readonly transport: PreviewTransport,
    opts: TunerOptions = {},
  ) {
    this.predicted = { ...initial };
    this.sliderValues = { ...initial };
    this.debounceMs = opts.debounceMs ?? 150;
  }

  /** Current slider positions (exactly what a params.json export contains). */
  get sliders(): GradingParams {
    return { ...this.sliderValues };
  }

  get predictedParams(): GradingParams {
    return { ...this.predicted };
  }

  get requestInFlight(): boolean {
    return this.inFlight;
  }

  onPreview(listener: PreviewListener): void {
    this.previewListeners.push(listener);
  }

  onError(listener: (err: unknown) => void): void {
    this.errorListeners.push(listener);
  }

  clampToRange(name: ParamName, value: number): number {
    const spec = this.schema[name];
    return Math.min(Math.max(value, spec.min), spec.max);
  }

  /** Move one slider; clamped to the served range, preview debounced. */
  setSlider(name: ParamName, value: number): void {
    this.sliderValues = { ...this.sliderValues, [name]: this.clampToRange(name, value) };
    this.touched.add(name);
    this.schedulePreview();
  }

  setFrameIndex(index: number): void {
    this.frameIndex = index;
    this.schedulePreview();
  }

  /** Restore the server's predicted parameters, clearing user overrides. */
  resetToPredicted(): void {
    this.sliderValues = { ...this.predicted };
    this.touched.clear();
    this.schedulePreview();
  }

  /** After fine-tuning: adopt new predictions, but keep any parameter the
   * user explicitly moved as an override. */
  adoptPrediction(params: GradingParams): void {
    this.predicted = { ...params };
    const next = { ...params };
    for (const name of this.touched) next[name] = this.sliderValues[name];
    this.sliderValues = next;
    this.schedulePreview();
  }

  /** Exactly the seven-field params.json object. */
  exportParams(): string {
    const obj: Record<string, number> = {};
    for (const name of PARAM_ORDER) obj[name] = this.sliderValues[name];
    return JSON.stringify(obj);
  }

  importParams(text: string): void {
    const obj = JSON.parse(text) as Record<string, unknown>;
    const keys = Object.keys(obj);
    const unknown = keys.filter((k) => !PARAM_ORDER.includes(k as ParamName));
    if (unknown.length) throw new Error(`unknown grading parameter keys: ${unknown.join(', ')}`);
    const missing = PARAM_ORDER.filter((k) => !(k in obj));
    if (missing.length) throw new Error(`missing grading parameter keys: ${missing.join(', ')}`);
    const next = { ...this.sliderValues };
    for (const name of PARAM_ORDER) {
      const v = obj[name];
      if (typeof v !== 'number' || !Number.isFinite(v)) {
        throw new Error(`${name} must be a finite number`);
      }
      const spec = this.schema[name];
      if (v < spec.min || v > spec.max) {
        throw new Error(`${name}=${v} outside [${spec.min}, ${spec.max}]`);
      }
      next[name] = v;
      this.touched.add(name);
    }
    this.sliderValues = next;
    this.schedulePreview();
  }

  /** Ask for a preview now (still subject to the single-flight rule). */
  requestPreview(): void {
    this.firePreview();
  }

  private schedulePreview(): void {
    if (this.debounceTimer !== undefined) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = undefined;
      this.firePreview();
    }, this.debounceMs);
  }

  private firePreview(): void {
    if (this.inFlight) {
      // exactly one follow-up with the latest params once the current
      // request lands; never two requests in flight
      this.followUp = true;
      return;
    }
    this.inFlight = true;
    const seq = ++this.sentSeq;
    const params = this.sliders;
    this.transport(params, this.frameIndex)
      .then((data) => {
        if (seq > this.appliedSeq) {
          this.appliedSeq = seq;
          for (const cb of this.previewListeners) cb(data, seq);
        }
      })
      .catch((err) => {
        for (const cb of this.errorListeners) cb(err);
      })
      .finally(() => {
        this.inFlight = false;
        if (this.followUp) {
          this.followUp = false;
          this.firePreview();
        }
      });
  }
}
