/** Live call page: renders the reducer state and relays typed replies. */

import { openCall, sendFrames } from './client.js';
import {
  CallState,
  applyFrames,
  initialCallState,
  recordUserText,
} from './callState.js';

const TOAST_MS = 4000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function renderCall(state: CallState): void {
  const transcript = el<HTMLElement>('transcript');
  transcript.innerHTML = '';
  for (const line of state.transcript) {
    const row = document.createElement('p');
    row.className = line.speaker === 'agent' ? 'agent-line' : 'user-line';
    row.textContent = line.text;
    transcript.appendChild(row);
  }
  transcript.scrollTop = transcript.scrollHeight;

  const bar = el<HTMLProgressElement>('progress-bar');
  bar.value = Math.round(state.progress * 100);
  el<HTMLElement>('progress-label').textContent = `${Math.round(state.progress * 100)}%`;

  const input = el<HTMLInputElement>('reply-input');
  const send = el<HTMLButtonElement>('send-button');
  input.disabled = !state.inputEnabled;
  send.disabled = !state.inputEnabled;
  if (state.ended) {
    el<HTMLElement>('status').textContent =
      state.endReason === 'completed'
        ? 'Survey complete — thank you!'
        : `Call ended (${state.endReason ?? 'closed'}).`;
  }
}

function showToast(text: string): void {
  const holder = el<HTMLElement>('toasts');
  const toast = document.createElement('div');
  toast.className = 'toast';
  toast.textContent = text;
  holder.appendChild(toast);
  setTimeout(() => toast.remove(), TOAST_MS);
}

export async function startCallPage(token: string): Promise<void> {
  let state = initialCallState();
  let shownToasts = 0;

  const update = (next: CallState): void => {
    state = next;
    // One toast per encouragement frame, however the batches arrive.
    for (; shownToasts < state.toasts.length; shownToasts++) {
      showToast(state.toasts[shownToasts]);
    }
    renderCall(state);
  };

  const boot = await openCall(token);
  el<HTMLElement>('instructions').textContent = boot.instructions;
  update(applyFrames(state, boot.frames));

  const input = el<HTMLInputElement>('reply-input');
  const submit = async (): Promise<void> => {
    const text = input.value.trim();
    if (!text || !state.inputEnabled) return;
    input.value = '';
    update(recordUserText(state, text));
    const frames = await sendFrames(boot.stream, [
      { type: 'user_text', payload: { text } },
    ]);
    update(applyFrames(state, frames));
  };

  el<HTMLButtonElement>('send-button').addEventListener('click', () => void submit());
  input.addEventListener('keydown', (event) => {
    if (event.key === 'Enter') void submit();
  });
}
