/** Page entry: routes /call/{token} and /schedule/{token} to their views. */

import { startCallPage } from './callView.js';
import { startSchedulePage } from './scheduleView.js';

function tokenFromPath(): string {
  const parts = window.location.pathname.split('/').filter(Boolean);
  return parts[parts.length - 1] ?? '';
}

const token = tokenFromPath();
if (window.location.pathname.startsWith('/schedule/')) {
  startSchedulePage(token);
} else {
  void startCallPage(token);
}
