/**
 * Session establishment: request a challenge, solve the proof-of-work off
 * the interaction path, exchange it for an investigator token. Expired or
 * consumed challenges trigger an automatic re-request.
 */

import { ApiClient, ApiError } from './api.js';
import { solveChallenge } from './pow.js';

export interface PortalSession {
  token: string;
  role: string;
  expiresAt: string;
}

export interface ConnectOptions {
  clientKey?: string;
  maxRetries?: number;
}

function randomClientKey(): string {
  const bytes = new Uint8Array(16);
  crypto.getRandomValues(bytes);
  return Array.from(bytes, (b) => b.toString(16).padStart(2, '0')).join('');
}

export async function connect(
  api: ApiClient,
  credential: string,
  options: ConnectOptions = {},
): Promise<PortalSession> {
  const clientKey = options.clientKey ?? randomClientKey();
  const maxRetries = options.maxRetries ?? 3;
  let lastError: ApiError | null = null;
  for (let attempt = 0; attempt <= maxRetries; attempt += 1) {
    const challenge = await api.requestChallenge(clientKey, credential);
    const nonce = await solveChallenge(challenge.server_nonce, clientKey, challenge.difficulty);
    try {
      const proved = await api.proveChallenge(challenge.challenge_id, nonce);
      return { token: proved.token, role: proved.role, expiresAt: proved.expires_at };
    } catch (error) {
      if (error instanceof ApiError && error.retryable && attempt < maxRetries) {
        lastError = error;
        continue; // stale challenge: fetch a fresh one
      }
      throw error;
    }
  }
  throw lastError ?? new ApiError(0, 'could not establish a session');
}

export function isExpired(session: PortalSession, now: Date = new Date()): boolean {
  return new Date(session.expiresAt).getTime() <= now.getTime();
}
