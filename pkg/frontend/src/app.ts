/**
 * Browser wiring: binds the session, search and palette modules to the DOM.
 * All protocol logic lives in the imported modules so it stays testable
 * without a browser.
 */

import { ApiClient } from './api.js';
import { PaletteState } from './palette.js';
import { PortalSession, connect, isExpired } from './session.js';
import { RenderedRow, SearchView, recolour, runSearch } from './search.js';

interface Elements {
  serverUrl: HTMLInputElement;
  credential: HTMLInputElement;
  connectButton: HTMLButtonElement;
  status: HTMLElement;
  venueId: HTMLInputElement;
  date: HTMLInputElement;
  window: HTMLSelectElement;
  searchButton: HTMLButtonElement;
  paletteButton: HTMLButtonElement;
  results: HTMLElement;
}

function grab(): Elements {
  const byId = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;
  return {
    serverUrl: byId('server-url'),
    credential: byId('credential'),
    connectButton: byId('connect'),
    status: byId('status'),
    venueId: byId('venue-id'),
    date: byId('date'),
    window: byId('window'),
    searchButton: byId('search'),
    paletteButton: byId('palette-toggle'),
    results: byId('results'),
  };
}

function rowHtml(row: RenderedRow): string {
  return (
    `<tr><td><code>${row.userId}</code></td><td>${row.window}</td>` +
    `<td>${row.score}</td><td><span class="badge" style="background:${row.colour}">${row.level}</span></td></tr>`
  );
}

function renderView(view: SearchView, target: HTMLElement): void {
  switch (view.state) {
    case 'results':
      target.innerHTML =
        '<table><thead><tr><th>Contact handle</th><th>Scan window</th><th>Risk score</th><th>Level</th></tr></thead>' +
        `<tbody>${view.rows.map(rowHtml).join('')}</tbody></table>`;
      break;
    case 'no-contacts':
      target.innerHTML = '<p class="empty">No contacts in that window.</p>';
      break;
    case 'unknown-venue':
      target.innerHTML = `<p class="warn">${view.message}</p>`;
      break;
    case 'error':
      target.innerHTML = `<p class="error">${view.message}</p>`;
      break;
  }
}

export function start(): void {
  const el = grab();
  const palette = new PaletteState(window.localStorage);
  let session: PortalSession | null = null;
  let api: ApiClient | null = null;
  let lastRows: RenderedRow[] = [];

  el.paletteButton.textContent = `Palette: ${palette.name}`;

  el.connectButton.addEventListener('click', async () => {
    el.status.textContent = 'solving proof-of-work…';
    api = new ApiClient(el.serverUrl.value.replace(/\/$/, ''));
    try {
      session = await connect(api, el.credential.value);
      el.status.textContent = `connected (${session.role}, expires ${session.expiresAt})`;
    } catch (error) {
      session = null;
      el.status.textContent = `offline: ${error instanceof Error ? error.message : error}`;
    }
  });

  el.searchButton.addEventListener('click', async () => {
    if (!api || !session || isExpired(session)) {
      session = null;
      el.status.textContent = 'session expired: reconnect first';
      return;
    }
    const view = await runSearch(
      api,
      session.token,
      { venueId: el.venueId.value, date: el.date.value, window: el.window.value },
      palette,
    );
    lastRows = view.state === 'results' ? view.rows : [];
    renderView(view, el.results);
  });

  el.paletteButton.addEventListener('click', () => {
    palette.toggle();
    el.paletteButton.textContent = `Palette: ${palette.name}`;
    if (lastRows.length > 0) {
      lastRows = recolour(lastRows, palette);
      renderView({ state: 'results', rows: lastRows }, el.results);
    }
  });
}

if (typeof document !== 'undefined' && document.getElementById('connect')) {
  start();
}
