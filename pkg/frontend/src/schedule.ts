/** Scheduling form logic: payload construction and response handling.
 *
 * The phone and timezone fields arrive prefilled from the contact record but
 * stay editable; whatever the form holds at submit time is what is posted.
 */

export interface ScheduleFormValues {
  date: string; // YYYY-MM-DD
  window: string; // "HH:MM-HH:MM", local to `timezone`
  phone: string;
  timezone: string;
}

export interface SchedulePayload {
  date: string;
  window: string;
  phone: string;
  timezone: string;
}

export interface ScheduleConfirmation {
  attempt_id: string;
  scheduled_at: number;
  phone: string;
  timezone: string;
}

export interface ScheduleResult {
  ok: boolean;
  confirmation: ScheduleConfirmation | null;
  /** Inline error text shown next to the form, e.g. "slot in past". */
  error: string | null;
}

const DATE_RE = /^\d{4}-\d{2}-\d{2}$/;
const WINDOW_RE = /^([01]\d|2[0-3]):[0-5]\d-([01]\d|2[0-3]):[0-5]\d$/;

/** Client-side check before posting; returns an inline error or null. */
export function validateForm(values: ScheduleFormValues): string | null {
  if (!DATE_RE.test(values.date)) return 'date must be YYYY-MM-DD';
  if (!WINDOW_RE.test(values.window)) return 'window must be HH:MM-HH:MM';
  if (values.phone.trim() === '') return 'phone is required';
  if (values.timezone.trim() === '') return 'timezone is required';
  return null;
}

/** The exact body posted to /schedule/{token} — nothing added, nothing dropped. */
export function buildPayload(values: ScheduleFormValues): SchedulePayload {
  return {
    date: values.date,
    window: values.window,
    phone: values.phone,
    timezone: values.timezone,
  };
}

/** Map a server response onto the form outcome (confirmation or inline error). */
export function interpretResponse(status: number, body: unknown): ScheduleResult {
  if (status === 200) {
    return { ok: true, confirmation: body as ScheduleConfirmation, error: null };
  }
  const message =
    typeof body === 'object' && body !== null && 'error' in body
      ? String((body as { error: unknown }).error)
      : `request failed (${status})`;
  return { ok: false, confirmation: null, error: message };
}

/** Local-time wording for the confirmation banner. */
export function confirmationText(c: ScheduleConfirmation): string {
  const local = new Date(c.scheduled_at).toLocaleString('en-US', {
    timeZone: c.timezone,
    dateStyle: 'medium',
    timeStyle: 'short',
  });
  return `Call scheduled for ${local} (${c.timezone}) to ${c.phone}.`;
}
