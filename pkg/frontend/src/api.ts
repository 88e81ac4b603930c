/**
 * Typed client for the backend HTTP API.
 *
 * Every request is funnelled through one helper that records the endpoint
 * in a request log; tests assert the portal never strays off the published
 * endpoint list.
 */

export const DOCUMENTED_ENDPOINTS = [
  'POST /session',
  'POST /session/prove',
  'POST /scan',
  'POST /questionnaire',
  'GET /risk',
  'POST /investigate/search',
  'GET /research/aggregate',
] as const;

export interface ChallengeResponse {
  challenge_id: string;
  server_nonce: string;
  difficulty: number;
  expires_at: string;
}

export interface TokenResponse {
  token: string;
  role: string;
  user_id: string;
  expires_at: string;
}

export interface ContactRow {
  user_id: string;
  scan_window: { date: string; window: string } | null;
  score: number;
  level: string;
  colour: string;
}

export interface SearchResponse {
  contacts: ContactRow[];
  empty_window: boolean;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }

  /** Challenge expiry and replay rejections are worth an automatic retry. */
  get retryable(): boolean {
    return this.status === 403 && /expired|replay|used/i.test(this.detail);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly requestLog: string[] = [];

  constructor(
    public readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown, token?: string): Promise<T> {
    this.requestLog.push(`${method} ${path.split('?')[0]}`);
    const headers: Record<string, string> = { 'content-type': 'application/json' };
    if (token) headers.authorization = `Bearer ${token}`;
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (error) {
      throw new ApiError(0, `server unreachable: ${String(error)}`);
    }
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = JSON.stringify(JSON.parse(text).detail ?? text);
      } catch {
        /* plain text error body */
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  requestChallenge(clientKey: string, credential: string): Promise<ChallengeResponse> {
    return this.request('POST', '/session', {
      client_key: clientKey,
      role: 'Investigator',
      credential,
    });
  }

  proveChallenge(challengeId: string, nonce: string): Promise<TokenResponse> {
    return this.request('POST', '/session/prove', { challenge_id: challengeId, nonce });
  }

  searchContacts(
    token: string,
    venueId: string,
    date: string,
    window: string,
  ): Promise<SearchResponse> {
    return this.request(
      'POST',
      '/investigate/search',
      { venue_id: venueId, date, window },
      token,
    );
  }
}
