import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import type { GradingParams, ParamSchema } from '../src/api.js';
import { PARAM_ORDER, TunerStore } from '../src/state.js';

const SCHEMA: ParamSchema = {
  brightness: { min: -0.5, max: 0.5, identity: 0 },
  contrast: { min: 0.5, max: 2, identity: 1 },
  gamma: { min: 0.33, max: 3, identity: 1 },
  hue: { min: -0.7853981633974483, max: 0.7853981633974483, identity: 0 },
  saturation: { min: 0, max: 2, identity: 1 },
  sharpness: { min: 0, max: 2, identity: 0 },
  temperature: { min: -0.5, max: 0.5, identity: 0 },
};

const IDENTITY: GradingParams = {
  brightness: 0, contrast: 1, gamma: 1, hue: 0, saturation: 1, sharpness: 0, temperature: 0,
};

interface Call {
  params: GradingParams;
  resolve: (data: Uint8Array) => void;
}

function makeStore(debounceMs = 150) {
  const calls: Call[] = [];
  const transport = (params: GradingParams) =>
    new Promise<Uint8Array>((resolve) => {
      calls.push({ params, resolve });
    });
  const store = new TunerStore(SCHEMA, IDENTITY, transport, { debounceMs });
  return { store, calls };
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe('slider/params bijection', () => {
  it('reads back exactly what was set', () => {
    const { store } = makeStore();
    store.setSlider('brightness', 0.123456789);
    store.setSlider('hue', -0.25);
    expect(store.sliders.brightness).toBe(0.123456789);
    expect(store.sliders.hue).toBe(-0.25);
  });

  it('export/import round-trips exactly', () => {
    const { store } = makeStore();
    store.setSlider('contrast', 1.3337);
    store.setSlider('temperature', -0.125);
    const json = store.exportParams();
    expect(Object.keys(JSON.parse(json))).toEqual(PARAM_ORDER);

    const { store: fresh } = makeStore();
    fresh.importParams(json);
    expect(fresh.sliders).toEqual(store.sliders);
    expect(fresh.exportParams()).toBe(json);
  });

  it('clamps to the served ranges', () => {
    const { store } = makeStore();
    store.setSlider('saturation', 99);
    expect(store.sliders.saturation).toBe(2);
    store.setSlider('brightness', -99);
    expect(store.sliders.brightness).toBe(-0.5);
  });

  it('rejects unknown, missing, and out-of-range imports', () => {
    const { store } = makeStore();
    expect(() => store.importParams(JSON.stringify({ ...IDENTITY, vibrance: 1 })))
      .toThrow(/unknown/);
    const missing: Partial<GradingParams> = { ...IDENTITY };
    delete missing.hue;
    expect(() => store.importParams(JSON.stringify(missing))).toThrow(/missing/);
    expect(() => store.importParams(JSON.stringify({ ...IDENTITY, gamma: 9 })))
      .toThrow(/outside/);
  });
});

describe('debounced previews', () => {
  it('coalesces rapid slider moves into one request with the latest values', async () => {
    const { store, calls } = makeStore();
    store.setSlider('brightness', 0.1);
    vi.advanceTimersByTime(80);
    store.setSlider('brightness', 0.2);
    vi.advanceTimersByTime(80);
    store.setSlider('brightness', 0.3);
    expect(calls.length).toBe(0);
    vi.advanceTimersByTime(150);
    expect(calls.length).toBe(1);
    expect(calls[0].params.brightness).toBe(0.3);
  });

  it('keeps at most one request in flight and coalesces follow-ups', async () => {
    const { store, calls } = makeStore();
    store.setSlider('contrast', 1.1);
    vi.advanceTimersByTime(150);
    expect(calls.length).toBe(1);
    expect(store.requestInFlight).toBe(true);

    // two more edits while the first request is still pending
    store.setSlider('contrast', 1.2);
    vi.advanceTimersByTime(150);
    store.setSlider('contrast', 1.4);
    vi.advanceTimersByTime(150);
    expect(calls.length).toBe(1); // still just one in flight

    calls[0].resolve(new Uint8Array([1]));
    await vi.waitFor(() => expect(calls.length).toBe(2));
    expect(calls[1].params.contrast).toBe(1.4); // latest values, one follow-up

    calls[1].resolve(new Uint8Array([2]));
    await vi.waitFor(() => expect(store.requestInFlight).toBe(false));
  });

  it('applies previews in sequence order', async () => {
    const { store, calls } = makeStore();
    const seen: number[] = [];
    store.onPreview((_data, seq) => seen.push(seq));

    store.setSlider('gamma', 1.2);
    vi.advanceTimersByTime(150);
    store.setSlider('gamma', 1.3);
    vi.advanceTimersByTime(150);
    calls[0].resolve(new Uint8Array([1]));
    await vi.waitFor(() => expect(calls.length).toBe(2));
    calls[1].resolve(new Uint8Array([2]));
    await vi.waitFor(() => expect(seen.length).toBe(2));
    expect(seen).toEqual([1, 2]);
  });

  it('surfaces transport errors to error listeners', async () => {
    const errors: unknown[] = [];
    const store = new TunerStore(SCHEMA, IDENTITY, () => Promise.reject(new Error('boom')), {
      debounceMs: 10,
    });
    store.onError((e) => errors.push(e));
    store.setSlider('hue', 0.1);
    vi.advanceTimersByTime(10);
    await vi.waitFor(() => expect(errors.length).toBe(1));
    expect((errors[0] as Error).message).toBe('boom');
  });
});

describe('prediction adoption', () => {
  it('reset restores predicted values', () => {
    const { store } = makeStore();
    store.setSlider('brightness', 0.4);
    store.resetToPredicted();
    expect(store.sliders).toEqual(IDENTITY);
  });

  it('keeps user overrides when adopting new predictions', () => {
    const { store } = makeStore();
    store.setSlider('saturation', 0.2); // explicit user delta
    store.adoptPrediction({ ...IDENTITY, brightness: 0.1, saturation: 1.5 });
    expect(store.sliders.brightness).toBe(0.1); // untouched -> new prediction
    expect(store.sliders.saturation).toBe(0.2); // touched -> override kept
    expect(store.predictedParams.saturation).toBe(1.5);
  });
});
