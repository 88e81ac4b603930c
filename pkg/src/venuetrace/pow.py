"""Adaptive proof-of-work session hardening.

Session creation hands the client a challenge whose difficulty grows with
the client's recent request rate; a session token is only issued for a
nonce whose digest clears the required number of leading zero bits.
"""

from __future__ import annotations

import hashlib
import secrets
from collections import defaultdict, deque
from dataclasses import dataclass


class PowError(Exception):
    pass


class Expired(PowError):
    pass


class Replay(PowError):
    pass


class InsufficientWork(PowError):
    pass


class UnknownChallenge(PowError):
    pass


@dataclass(frozen=True)
class PowParams:
    d_base: int = 8
    r_free: float = 10.0  # free requests per minute
    step: float = 0.2  # extra bits per excess request/min (2 bits per 10)
    d_min: int = 0
    d_max: int = 20
    ttl_seconds: float = 120.0


def difficulty(observed_rate: float, route_weight: float = 0.0, params: PowParams = PowParams()) -> int:
    """Leading-zero-bit requirement; monotone in the observed rate, clamped."""
    raw = params.d_base + params.step * max(0.0, observed_rate - params.r_free) + route_weight
    return int(min(float(params.d_max), max(float(params.d_min), raw)))


def proof_digest(server_nonce: str, client_key: str, nonce: str) -> bytes:
    """sha256 over server_nonce : client_key : nonce (all UTF-8 text)."""
    return hashlib.sha256(f"{server_nonce}:{client_key}:{nonce}".encode("utf-8")).digest()


def leading_zero_bits(digest: bytes) -> int:
    bits = 0
    for byte in digest:
        if byte == 0:
            bits += 8
            continue
        for shift in range(7, -1, -1):
            if byte >> shift:
                return bits + (7 - shift)
        return bits
    return bits


def meets_difficulty(server_nonce: str, client_key: str, nonce: str, bits: int) -> bool:
    return leading_zero_bits(proof_digest(server_nonce, client_key, nonce)) >= bits


def solve(server_nonce: str, client_key: str, bits: int, start: int = 0) -> str:
    """Reference brute-force solver; also the oracle the tests compare against."""
    nonce = start
    while True:
        text = str(nonce)
        if meets_difficulty(server_nonce, client_key, text, bits):
            return text
        nonce += 1


@dataclass
class SessionChallenge:
    challenge_id: str
    server_nonce: str
    client_key: str
    difficulty: int
    issued_at: float
    expires_at: float
    context: dict


class RateTracker:
    """Sliding-window request rate per client key, in requests/minute."""

    def __init__(self, window_seconds: float = 60.0):
        self.window = window_seconds
        self._events: dict[str, deque[float]] = defaultdict(deque)

    def observe(self, client_key: str, now: float) -> float:
        events = self._events[client_key]
        events.append(now)
        while events and now - events[0] > self.window:
            events.popleft()
        return len(events) * 60.0 / self.window


class ChallengeStore:
    """Single-use challenge registry with expiry."""

    def __init__(self, params: PowParams = PowParams()):
        self.params = params
        self._open: dict[str, SessionChallenge] = {}

    def issue(
        self,
        client_key: str,
        observed_rate: float,
        now: float,
        route_weight: float = 0.0,
        context: dict | None = None,
    ) -> SessionChallenge:
        challenge = SessionChallenge(
            challenge_id=secrets.token_hex(16),
            server_nonce=secrets.token_hex(16),
            client_key=client_key,
            difficulty=difficulty(observed_rate, route_weight, self.params),
            issued_at=now,
            expires_at=now + self.params.ttl_seconds,
            context=dict(context or {}),
        )
        self._open[challenge.challenge_id] = challenge
        return challenge

    def verify(self, challenge_id: str, nonce: str, now: float) -> SessionChallenge:
        """Consume the challenge whether or not the proof verifies."""
        challenge = self._open.pop(challenge_id, None)
        if challenge is None:
            raise Replay("challenge unknown or already used")
        if now > challenge.expires_at:
            raise Expired("challenge expired")
        if not meets_difficulty(challenge.server_nonce, challenge.client_key, nonce, challenge.difficulty):
            raise InsufficientWork(
                f"digest does not clear {challenge.difficulty} leading zero bits"
            )
        return challenge
