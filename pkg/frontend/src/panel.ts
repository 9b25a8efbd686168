/** DOM panel: sliders bound to the store, live preview, fine-tune progress,
 * LUT/params export. Parameter ranges and identity values come from the
 * service schema; nothing is duplicated client-side. */

import type { ParamName, ServiceClient } from './api.js';
import { PARAM_ORDER, TunerStore } from './state.js';

const POLL_MS = 500;

export class TunerPanel {
  readonly root: HTMLElement;
  private readonly sliders = new Map<ParamName, HTMLInputElement>();
  private readonly readouts = new Map<ParamName, HTMLElement>();
  private readonly previewImg: HTMLImageElement;
  private readonly statusEl: HTMLElement;
  private readonly errorEl: HTMLElement;
  private previewUrl: string | undefined;

  constructor(
    private readonly client: ServiceClient,
    private readonly sessionId: string,
    readonly store: TunerStore,
    frameCount: number,
  ) {
    this.root = el('div', 'tuner');

    const sliderBox = el('div', 'sliders');
    for (const name of PARAM_ORDER) {
      sliderBox.appendChild(this.buildSliderRow(name));
    }
    this.root.appendChild(sliderBox);

    const frameRow = el('div', 'frame-row');
    const frameInput = document.createElement('input');
    frameInput.type = 'number';
    frameInput.min = '0';
    frameInput.max = String(frameCount - 1);
    frameInput.value = '0';
    frameInput.addEventListener('change', () => {
      this.store.setFrameIndex(Number(frameInput.value));
    });
    frameRow.append(label('keyframe'), frameInput);
    this.root.appendChild(frameRow);

    this.previewImg = document.createElement('img');
    this.previewImg.className = 'preview';
    this.previewImg.alt = 'graded preview';
    this.root.appendChild(this.previewImg);

    this.statusEl = el('div', 'status');
    this.errorEl = el('div', 'error');
    this.root.append(this.statusEl, this.errorEl);
    this.root.appendChild(this.buildActions());

    store.onPreview((data) => this.showPreview(data));
    store.onError((err) => this.showError(err));
    store.requestPreview();
  }

  private buildSliderRow(name: ParamName): HTMLElement {
    const spec = this.store.schema[name];
    const row = el('div', 'slider-row');
    const input = document.createElement('input');
    input.type = 'range';
    input.min = String(spec.min);
    input.max = String(spec.max);
    input.step = 'any';
    input.value = String(this.store.sliders[name]);
    input.dataset.param = name;
    const readout = el('span', 'readout');
    readout.textContent = this.store.sliders[name].toFixed(3);
    input.addEventListener('input', () => {
      this.store.setSlider(name, Number(input.value));
      readout.textContent = Number(input.value).toFixed(3);
    });
    this.sliders.set(name, input);
    this.readouts.set(name, readout);
    row.append(label(`${name} (identity ${spec.identity})`), input, readout);
    return row;
  }

  private buildActions(): HTMLElement {
    const box = el('div', 'actions');

    const finetuneBtn = button('Fine-tune', async () => {
      try {
        await this.client.startFinetune(this.sessionId);
        await this.pollFinetune();
      } catch (err) {
        this.showError(err);
      }
    });

    const exportLut = button('Export LUT', () => {
      window.open(this.client.lutUrl(this.sessionId), '_blank');
    });

    const exportParams = button('Export params.json', () => {
      const blob = new Blob([this.store.exportParams()], { type: 'application/json' });
      const a = document.createElement('a');
      a.href = URL.createObjectURL(blob);
      a.download = 'params.json';
      a.click();
      URL.revokeObjectURL(a.href);
    });

    const importInput = document.createElement('input');
    importInput.type = 'file';
    importInput.accept = '.json';
    importInput.addEventListener('change', async () => {
      const file = importInput.files?.[0];
      if (!file) return;
      try {
        this.store.importParams(await file.text());
        this.syncSliders();
      } catch (err) {
        this.showError(err);
      }
    });

    const resetBtn = button('Reset to predicted', () => {
      this.store.resetToPredicted();
      this.syncSliders();
    });

    box.append(finetuneBtn, exportLut, exportParams, importInput, resetBtn);
    return box;
  }

  /** Push store values into the DOM inputs (import/reset/fine-tune paths). */
  syncSliders(): void {
    const params = this.store.sliders;
    for (const name of PARAM_ORDER) {
      const input = this.sliders.get(name)!;
      input.value = String(params[name]);
      this.readouts.get(name)!.textContent = params[name].toFixed(3);
    }
  }

  private async pollFinetune(): Promise<void> {
    this.statusEl.textContent = 'fine-tuning...';
    for (;;) {
      const status = await this.client.status(this.sessionId);
      if (status.status === 'running') {
        const pct = Math.round(status.progress * 100);
        const loss = status.loss.at(-1);
        this.statusEl.textContent =
          `fine-tuning ${pct}% (${status.iters_done}/${status.iters_total}` +
          (loss !== undefined ? `, loss ${loss.toFixed(3)})` : ')');
        await sleep(POLL_MS);
        continue;
      }
      if (status.status === 'failed') {
        this.statusEl.textContent = '';
        this.showError(new Error(status.error ?? 'fine-tune failed'));
        return;
      }
      break;
    }
    const params = await this.client.getParams(this.sessionId);
    this.store.adoptPrediction(params);
    this.syncSliders();
    this.statusEl.textContent = 'fine-tune done';
  }

  private showPreview(data: Uint8Array): void {
    const buf = data.slice().buffer as ArrayBuffer;
    const blob = new Blob([buf], { type: 'image/png' });
    if (this.previewUrl) URL.revokeObjectURL(this.previewUrl);
    this.previewUrl = URL.createObjectURL(blob);
    this.previewImg.src = this.previewUrl;
    this.errorEl.textContent = '';
  }

  private showError(err: unknown): void {
    this.errorEl.textContent = err instanceof Error ? err.message : String(err);
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function label(text: string): HTMLElement {
  const node = el('label', 'param-label');
  node.textContent = text;
  return node;
}

function button(text: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement('button');
  b.textContent = text;
  b.addEventListener('click', onClick);
  return b;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
