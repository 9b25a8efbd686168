/** Boot: upload a style image plus content frames, create a session, and
 * mount the tuning panel. Served at /ui by the preview service. */

import { ServiceClient } from './api.js';
import { TunerPanel } from './panel.js';
import { TunerStore } from './state.js';

function fileToBase64(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => {
      const url = reader.result as string;
      resolve(url.slice(url.indexOf(',') + 1)); // strip the data: prefix
    };
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });
}

async function boot(): Promise<void> {
  const app = document.getElementById('app')!;
  const form = document.getElementById('setup') as HTMLFormElement;
  const styleInput = document.getElementById('style-file') as HTMLInputElement;
  const framesInput = document.getElementById('frame-files') as HTMLInputElement;
  const errorEl = document.getElementById('setup-error')!;

  const client = new ServiceClient('');

  form.addEventListener('submit', async (ev) => {
    ev.preventDefault();
    errorEl.textContent = '';
    try {
      const styleFile = styleInput.files?.[0];
      const frameFiles = Array.from(framesInput.files ?? []);
      if (!styleFile || frameFiles.length === 0) {
        throw new Error('choose a style image and at least one frame');
      }
      frameFiles.sort((a, b) => a.name.localeCompare(b.name));
      const style = await fileToBase64(styleFile);
      const frames = await Promise.all(frameFiles.map(fileToBase64));

      const session = await client.createSession(style, frames);
      const store = new TunerStore(
        session.schema,
        session.params,
        (params, frameIndex) => client.preview(session.session_id, params, frameIndex),
      );
      const panel = new TunerPanel(client, session.session_id, store, session.frame_count);
      form.hidden = true;
      app.appendChild(panel.root);
    } catch (err) {
      errorEl.textContent = err instanceof Error ? err.message : String(err);
    }
  });
}

boot();
