/** Wire protocol shared with the session server: one JSON frame per line. */

export type FrameType =
  | 'hello'
  | 'agent_say'
  | 'consent_prompt'
  | 'idle_prompt'
  | 'encouragement'
  | 'progress'
  | 'end';

export interface WireFrame {
  ts_ms: number;
  session_id: string;
  type: FrameType | string;
  payload: {
    text?: string;
    kind?: string;
    node?: string;
    milestone?: number;
    fraction?: number;
    reason?: string;
    event?: string;
  };
}

export interface OutboundFrame {
  type: 'user_text' | 'user_word' | 'hangup';
  payload: { text?: string };
}

export interface CallBootstrap {
  session_id: string;
  instructions: string;
  stream: string;
  frames: WireFrame[];
}

/** Parse an NDJSON response body into frames, skipping blank lines. */
export function parseNdjson(body: string): WireFrame[] {
  return body
    .split('\n')
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as WireFrame);
}

export function encodeNdjson(frames: OutboundFrame[]): string {
  return frames.map((f) => JSON.stringify(f) + '\n').join('');
}
