/** Pure call-view state machine.
 *
 * Every rendered value (transcript lines, progress, toasts) originates from a
 * server frame; the reducer never invents state. Frames are applied in
 * arrival order and a duplicate end frame is a no-op.
 */

import type { WireFrame } from './frames.js';

export interface TranscriptLine {
  speaker: 'agent' | 'you';
  text: string;
}

export interface CallState {
  transcript: TranscriptLine[];
  /** Last server-reported completion fraction in [0, 1]. */
  progress: number;
  /** One entry per encouragement frame, in arrival order. */
  toasts: string[];
  ended: boolean;
  endReason: string | null;
  inputEnabled: boolean;
  /** Non-fatal protocol notices (unknown frame types, out-of-order data). */
  notices: string[];
}

export function initialCallState(): CallState {
  return {
    transcript: [],
    progress: 0,
    toasts: [],
    ended: false,
    endReason: null,
    inputEnabled: true,
    notices: [],
  };
}

const SPOKEN_TYPES = new Set([
  'hello',
  'agent_say',
  'consent_prompt',
  'idle_prompt',
]);

/** Apply one server frame; returns a new state, never mutates the input. */
export function applyFrame(state: CallState, frame: WireFrame): CallState {
  if (state.ended) {
    // The session is closed; the server only ever re-sends the end frame.
    if (frame.type === 'end') return state;
    return {
      ...state,
      notices: [...state.notices, `frame after end: ${frame.type}`],
    };
  }

  if (SPOKEN_TYPES.has(frame.type)) {
    const text = frame.payload.text ?? '';
    if (frame.payload.event === 'interrupted') {
      return { ...state, notices: [...state.notices, 'agent interrupted'] };
    }
    return {
      ...state,
      transcript: [...state.transcript, { speaker: 'agent', text }],
    };
  }

  switch (frame.type) {
    case 'encouragement':
      return {
        ...state,
        transcript: [
          ...state.transcript,
          { speaker: 'agent', text: frame.payload.text ?? '' },
        ],
        toasts: [...state.toasts, frame.payload.text ?? ''],
      };
    case 'progress': {
      const fraction = frame.payload.fraction ?? state.progress;
      if (fraction < state.progress) {
        // Server progress is monotone; flag regressions instead of rendering.
        return {
          ...state,
          notices: [...state.notices, `progress went backwards: ${fraction}`],
        };
      }
      return { ...state, progress: fraction };
    }
    case 'end':
      return {
        ...state,
        ended: true,
        endReason: frame.payload.reason ?? null,
        inputEnabled: false,
      };
    default:
      return {
        ...state,
        notices: [...state.notices, `unknown frame type: ${frame.type}`],
      };
  }
}

export function applyFrames(state: CallState, frames: WireFrame[]): CallState {
  return frames.reduce(applyFrame, state);
}

/** Record the participant's own submitted reply in the transcript. */
export function recordUserText(state: CallState, text: string): CallState {
  if (!state.inputEnabled) return state;
  return { ...state, transcript: [...state.transcript, { speaker: 'you', text }] };
}
