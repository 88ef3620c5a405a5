/** Scheduling page: prefilled, editable contact details and slot picker. */

import { postSchedule } from './client.js';
import {
  ScheduleFormValues,
  buildPayload,
  confirmationText,
  validateForm,
} from './schedule.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export interface ContactPrefill {
  phone: string;
  timezone: string;
}

export function prefill(contact: ContactPrefill): void {
  el<HTMLInputElement>('phone').value = contact.phone;
  el<HTMLInputElement>('timezone').value = contact.timezone;
}

function readForm(): ScheduleFormValues {
  return {
    date: el<HTMLInputElement>('date').value,
    window: el<HTMLInputElement>('window').value,
    phone: el<HTMLInputElement>('phone').value,
    timezone: el<HTMLInputElement>('timezone').value,
  };
}

export function startSchedulePage(token: string): void {
  const error = el<HTMLElement>('form-error');
  const confirmation = el<HTMLElement>('confirmation');

  el<HTMLButtonElement>('schedule-button').addEventListener('click', async () => {
    error.textContent = '';
    confirmation.textContent = '';
    const values = readForm();
    const invalid = validateForm(values);
    if (invalid) {
      error.textContent = invalid;
      return;
    }
    const result = await postSchedule(token, buildPayload(values));
    if (!result.ok || !result.confirmation) {
      error.textContent = result.error ?? 'scheduling failed';
      return;
    }
    confirmation.textContent = confirmationText(result.confirmation);
  });
}
