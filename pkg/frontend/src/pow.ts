/**
 * Client-side proof-of-work solver.
 *
 * Mirrors the server scheme exactly: sha256 over the UTF-8 text
 * `${serverNonce}:${clientKey}:${nonce}` must clear the required number of
 * leading zero bits. Solving yields to the event loop periodically so the
 * UI stays responsive while the puzzle grinds.
 */

const encoder = new TextEncoder();

export async function proofDigest(
  serverNonce: string,
  clientKey: string,
  nonce: string,
): Promise<Uint8Array> {
  const data = encoder.encode(`${serverNonce}:${clientKey}:${nonce}`);
  const digest = await crypto.subtle.digest('SHA-256', data);
  return new Uint8Array(digest);
}

export function leadingZeroBits(digest: Uint8Array): number {
  let bits = 0;
  for (const byte of digest) {
    if (byte === 0) {
      bits += 8;
      continue;
    }
    let b = byte;
    while ((b & 0x80) === 0) {
      bits += 1;
      b <<= 1;
    }
    break;
  }
  return bits;
}

export async function meetsDifficulty(
  serverNonce: string,
  clientKey: string,
  nonce: string,
  difficulty: number,
): Promise<boolean> {
  return leadingZeroBits(await proofDigest(serverNonce, clientKey, nonce)) >= difficulty;
}

/** Brute-force the first nonce that clears the difficulty. */
export async function solveChallenge(
  serverNonce: string,
  clientKey: string,
  difficulty: number,
  yieldEvery = 512,
): Promise<string> {
  for (let nonce = 0; ; nonce += 1) {
    if (await meetsDifficulty(serverNonce, clientKey, String(nonce), difficulty)) {
      return String(nonce);
    }
    if (nonce % yieldEvery === yieldEvery - 1) {
      await new Promise((resolve) => setTimeout(resolve, 0));
    }
  }
}
