import { describe, expect, it } from 'vitest';

import { leadingZeroBits, meetsDifficulty, proofDigest, solveChallenge } from '../src/pow.js';

describe('proof digest', () => {
  it('matches the server digest scheme byte for byte', async () => {
    // sha256("feedface00:portal-client:7") computed with a reference tool
    const digest = await proofDigest('feedface00', 'portal-client', '7');
    const hex = Array.from(digest, (b) => b.toString(16).padStart(2, '0')).join('');
    expect(hex).toBe('3c3e34bc11e99b35fc475a4591ba8e81d99b955b206c92de640438e3fdf69951');
    expect(leadingZeroBits(digest)).toBe(2);
  });
});

describe('leadingZeroBits', () => {
  it('counts bits across byte boundaries', () => {
    expect(leadingZeroBits(new Uint8Array([0, 0, 0xff]))).toBe(16);
    expect(leadingZeroBits(new Uint8Array([0x01]))).toBe(7);
    expect(leadingZeroBits(new Uint8Array([0x80]))).toBe(0);
    expect(leadingZeroBits(new Uint8Array([0, 0, 0, 0]))).toBe(32);
  });
});

describe('solveChallenge', () => {
  it('finds the same nonce as the server-side reference solver', async () => {
    // reference solver answer for this fixture and difficulty 8 is 119
    const nonce = await solveChallenge('feedface00', 'portal-client', 8);
    expect(nonce).toBe('119');
    expect(await meetsDifficulty('feedface00', 'portal-client', nonce, 8)).toBe(true);
  });

  it('solves difficulty 8 well under the interactivity budget', async () => {
    const start = performance.now();
    await solveChallenge('00aa11bb', 'speed-check', 8);
    expect(performance.now() - start).toBeLessThan(2000);
  });

  it('accepts everything at difficulty zero', async () => {
    expect(await meetsDifficulty('x', 'y', 'anything', 0)).toBe(true);
  });
});
