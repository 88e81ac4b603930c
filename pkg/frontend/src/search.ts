/**
 * Venue search: input validation, query execution and the view model the
 * table renders from. Empty results are a first-class state, distinct from
 * errors; malformed input never reaches the network.
 */

import { ApiClient, ApiError, ContactRow } from './api.js';
import { PaletteState } from './palette.js';

export const WINDOW_LABELS = ['0-4', '4-8', '8-12', '12-16', '16-20', '20-24'] as const;

export interface SearchInput {
  venueId: string;
  date: string; // YYYY-MM-DD
  window: string; // one of WINDOW_LABELS
}

export interface RenderedRow {
  userId: string;
  window: string;
  score: string;
  level: string;
  colour: string;
}

export type SearchView =
  | { state: 'results'; rows: RenderedRow[] }
  | { state: 'no-contacts' }
  | { state: 'unknown-venue'; message: string }
  | { state: 'error'; message: string };

export function validateInput(input: SearchInput): string[] {
  const problems: string[] = [];
  if (!input.venueId.trim()) {
    problems.push('venue id is required');
  }
  if (!/^\d{4}-\d{2}-\d{2}$/.test(input.date) || Number.isNaN(Date.parse(input.date))) {
    problems.push('date must be a valid YYYY-MM-DD day');
  }
  if (!WINDOW_LABELS.includes(input.window as (typeof WINDOW_LABELS)[number])) {
    problems.push(`window must be one of ${WINDOW_LABELS.join(', ')}`);
  }
  return problems;
}

export function renderRows(contacts: ContactRow[], palette: PaletteState): RenderedRow[] {
  return contacts.map((contact) => ({
    userId: contact.user_id,
    window: contact.scan_window ? `${contact.scan_window.date} ${contact.scan_window.window}` : '',
    score: contact.score.toFixed(4),
    level: contact.level,
    colour: palette.colour(contact.level),
  }));
}

export async function runSearch(
  api: ApiClient,
  token: string,
  input: SearchInput,
  palette: PaletteState,
): Promise<SearchView> {
  const problems = validateInput(input);
  if (problems.length > 0) {
    // client-side validation failure: deliberately no request
    return { state: 'error', message: problems.join('; ') };
  }
  try {
    const response = await api.searchContacts(token, input.venueId.trim(), input.date, input.window);
    if (response.contacts.length === 0) {
      return { state: 'no-contacts' };
    }
    return { state: 'results', rows: renderRows(response.contacts, palette) };
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      return { state: 'unknown-venue', message: `no scans recorded for venue ${input.venueId}` };
    }
    return { state: 'error', message: error instanceof Error ? error.message : String(error) };
  }
}

/** Re-colour already-fetched rows after a palette toggle; no refetch. */
export function recolour(rows: RenderedRow[], palette: PaletteState): RenderedRow[] {
  return rows.map((row) => ({ ...row, colour: palette.colour(row.level) }));
}
