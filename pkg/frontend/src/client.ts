/** Thin fetch wrapper over the session-server HTTP surface. */

import {
  CallBootstrap,
  OutboundFrame,
  WireFrame,
  encodeNdjson,
  parseNdjson,
} from './frames.js';
import { SchedulePayload, ScheduleResult, interpretResponse } from './schedule.js';

export async function openCall(token: string): Promise<CallBootstrap> {
  const response = await fetch(`/call/${token}`);
  if (!response.ok) {
    const body = await response.json().catch(() => ({}));
    throw new Error(body.error ?? `open failed (${response.status})`);
  }
  return (await response.json()) as CallBootstrap;
}

/** POST outbound frames as NDJSON; the response is the server's frame batch. */
export async function sendFrames(
  stream: string,
  frames: OutboundFrame[],
): Promise<WireFrame[]> {
  const response = await fetch(stream, {
    method: 'POST',
    headers: { 'Content-Type': 'application/x-ndjson' },
    body: encodeNdjson(frames),
  });
  if (!response.ok) {
    throw new Error(`stream failed (${response.status})`);
  }
  return parseNdjson(await response.text());
}

export async function postSchedule(
  token: string,
  payload: SchedulePayload,
): Promise<ScheduleResult> {
  const response = await fetch(`/schedule/${token}`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(payload),
  });
  const body = await response.json().catch(() => ({}));
  return interpretResponse(response.status, body);
}
