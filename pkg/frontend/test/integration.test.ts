/**
 * End-to-end check against a seeded backend: the venue search must render
 * exactly the oracle contact set, the palette toggle must swap every badge
 * colour and be an involution, and the client must never call an
 * undocumented endpoint.
 */

import { ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient, DOCUMENTED_ENDPOINTS } from '../src/api.js';
import { PaletteState } from '../src/palette.js';
import { connect } from '../src/session.js';
import { recolour, runSearch } from '../src/search.js';

const PORT = 21000 + (process.pid % 9000);
const BASE = `http://127.0.0.1:${PORT}`;

let backend: ChildProcess;
let oracle: { venue_id: string; date: string; window: string; user_ids: string[]; credential: string };

function fakeStorage() {
  const map = new Map<string, string>();
  return { getItem: (k: string) => map.get(k) ?? null, setItem: (k: string, v: string) => void map.set(k, v) };
}

async function waitForBackend(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error('fixture backend did not come up');
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), 'portal-fixture-'));
  const oraclePath = join(dir, 'oracle.json');
  backend = spawn(
    'python3',
    [join(__dirname, 'fixtures', 'portal_backend.py'), '--port', String(PORT), '--oracle', oraclePath],
    { stdio: 'ignore' },
  );
  await waitForBackend();
  oracle = JSON.parse(readFileSync(oraclePath, 'utf-8'));
}, 40_000);

afterAll(() => {
  backend?.kill();
});

describe('portal against a seeded backend', () => {
  it('solves the challenge, searches, and renders the exact oracle contact set', async () => {
    const api = new ApiClient(BASE);
    const palette = new PaletteState(fakeStorage());

    const session = await connect(api, oracle.credential, { clientKey: 'integration-client' });
    expect(session.role).toBe('Investigator');

    const view = await runSearch(
      api,
      session.token,
      { venueId: oracle.venue_id, date: oracle.date, window: oracle.window },
      palette,
    );
    expect(view.state).toBe('results');
    if (view.state !== 'results') return;
    expect(view.rows.map((r) => r.userId).sort()).toEqual(oracle.user_ids);
    for (const row of view.rows) {
      expect(row.colour).toBe(palette.colour(row.level));
    }

    // palette toggle: all badge colours swap, no data refetch, involution
    const requestsBefore = api.requestLog.length;
    const original = view.rows;
    palette.toggle();
    const swapped = recolour(original, palette);
    swapped.forEach((row, i) => expect(row.colour).not.toBe(original[i].colour));
    palette.toggle();
    expect(recolour(swapped, palette)).toEqual(original);
    expect(api.requestLog.length).toBe(requestsBefore);

    // endpoint discipline: nothing outside the published list
    for (const entry of api.requestLog) {
      expect(DOCUMENTED_ENDPOINTS).toContain(entry);
    }
  }, 30_000);

  it('empty window renders the explicit no-contacts state', async () => {
    const api = new ApiClient(BASE);
    const session = await connect(api, oracle.credential, { clientKey: 'integration-client-2' });
    const view = await runSearch(
      api,
      session.token,
      { venueId: oracle.venue_id, date: '2020-10-01', window: oracle.window },
      new PaletteState(fakeStorage()),
    );
    expect(view.state).toBe('no-contacts');
  }, 30_000);

  it('unknown venue renders as such', async () => {
    const api = new ApiClient(BASE);
    const session = await connect(api, oracle.credential, { clientKey: 'integration-client-3' });
    const view = await runSearch(
      api,
      session.token,
      { venueId: 'NO-SUCH-VENUE', date: oracle.date, window: oracle.window },
      new PaletteState(fakeStorage()),
    );
    expect(view.state).toBe('unknown-venue');
  }, 30_000);
});
