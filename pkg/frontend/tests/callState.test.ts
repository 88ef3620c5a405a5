import { describe, expect, it } from 'vitest';

import {
  applyFrame,
  applyFrames,
  initialCallState,
  recordUserText,
} from '../src/callState.js';
import type { WireFrame } from '../src/frames.js';

let clock = 0;
function frame(type: string, payload: WireFrame['payload']): WireFrame {
  clock += 1000;
  return { ts_ms: clock, session_id: 's1', type, payload };
}

describe('call state reducer', () => {
  it('renders the greeting from a hello frame', () => {
    const state = applyFrame(
      initialCallState(),
      frame('hello', { text: 'Hi Ana, thanks for joining.', kind: 'greeting' }),
    );
    expect(state.transcript).toEqual([
      { speaker: 'agent', text: 'Hi Ana, thanks for joining.' },
    ]);
    expect(state.inputEnabled).toBe(true);
  });

  it('collects one toast per encouragement frame', () => {
    const state = applyFrames(initialCallState(), [
      frame('encouragement', { text: 'A quarter done!', milestone: 25 }),
      frame('agent_say', { text: 'Next question.', kind: 'question' }),
      frame('encouragement', { text: 'Halfway!', milestone: 50 }),
    ]);
    expect(state.toasts).toEqual(['A quarter done!', 'Halfway!']);
    // Encouragements also land in the transcript, once each.
    expect(
      state.transcript.filter((l) => l.text === 'Halfway!').length,
    ).toBe(1);
  });

  it('tracks server progress and never renders a regression', () => {
    let state = applyFrames(initialCallState(), [
      frame('progress', { fraction: 0.25 }),
      frame('progress', { fraction: 0.5 }),
    ]);
    expect(state.progress).toBe(0.5);
    state = applyFrame(state, frame('progress', { fraction: 0.1 }));
    expect(state.progress).toBe(0.5);
    expect(state.notices.some((n) => n.includes('backwards'))).toBe(true);
  });

  it('disables input after the end frame', () => {
    const state = applyFrame(
      initialCallState(),
      frame('end', { reason: 'completed' }),
    );
    expect(state.ended).toBe(true);
    expect(state.endReason).toBe('completed');
    expect(state.inputEnabled).toBe(false);
    expect(recordUserText(state, 'hello?')).toBe(state);
  });

  it('treats a duplicate end frame as a no-op', () => {
    const first = applyFrame(
      initialCallState(),
      frame('end', { reason: 'completed' }),
    );
    const second = applyFrame(first, frame('end', { reason: 'completed' }));
    expect(second).toBe(first);
  });

  it('frames are applied in arrival order', () => {
    const state = applyFrames(initialCallState(), [
      frame('agent_say', { text: 'One.', kind: 'question' }),
      frame('agent_say', { text: 'Two.', kind: 'question' }),
      frame('agent_say', { text: 'Three.', kind: 'question' }),
    ]);
    expect(state.transcript.map((l) => l.text)).toEqual(['One.', 'Two.', 'Three.']);
  });

  it('surfaces unknown frame types as notices, not transcript lines', () => {
    const state = applyFrame(initialCallState(), frame('confetti', {}));
    expect(state.transcript).toEqual([]);
    expect(state.notices).toEqual(['unknown frame type: confetti']);
  });

  it('never mutates a prior state', () => {
    const start = initialCallState();
    const frozen = JSON.stringify(start);
    applyFrames(start, [
      frame('hello', { text: 'Hi.' }),
      frame('progress', { fraction: 0.3 }),
      frame('end', { reason: 'completed' }),
    ]);
    expect(JSON.stringify(start)).toBe(frozen);
  });
});
