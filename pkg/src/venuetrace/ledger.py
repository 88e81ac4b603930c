"""Append-only hash-chained ledger silos and venue-to-silo routing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass


class UnknownSilo(KeyError):
    pass


def canonical_payload(payload: dict) -> str:
    """Stable wire form; digests and signatures are computed over this."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


GENESIS_DIGEST = hashlib.sha256(b"genesis").hexdigest()


def chain_digest(prev_digest: str, payload_text: str) -> str:
    return hashlib.sha256(prev_digest.encode() + b"|" + payload_text.encode()).hexdigest()


@dataclass(frozen=True)
class LedgerEntry:
    index: int
    payload: dict
    digest: str

    @property
    def payload_text(self) -> str:
        return canonical_payload(self.payload)


class LedgerLog:
    """In-memory append-only log with a verifiable digest chain."""

    def __init__(self):
        self._entries: list[LedgerEntry] = []

    def __len__(self) -> int:
        return len(self._entries)

    def append(self, payload: dict) -> LedgerEntry:
        prev = self._entries[-1].digest if self._entries else GENESIS_DIGEST
        entry = LedgerEntry(len(self._entries), dict(payload), chain_digest(prev, canonical_payload(payload)))
        self._entries.append(entry)
        return entry

    def entries(self) -> list[LedgerEntry]:
        return list(self._entries)


def verify_chain(entries: list[LedgerEntry]) -> int | None:
    """Recompute the digest chain; return the first corrupt index, None if intact."""
    prev = GENESIS_DIGEST
    for position, entry in enumerate(entries):
        if entry.index != position:
            return position
        expected = chain_digest(prev, canonical_payload(entry.payload))
        if entry.digest != expected:
            return position
        prev = entry.digest
    return None


def assign_silo(venue_id: str, n_silos: int) -> int:
    """Stable uniform shard for a venue id; identical across processes."""
    if n_silos < 1:
        raise ValueError("need at least one silo")
    raw = hashlib.sha256(venue_id.encode("utf-8")).digest()
    return int.from_bytes(raw[:8], "big") % n_silos


class SiloDeployment:
    """A fixed set of silos, each an independent append-only log.

    The backing store is pluggable so the same read path serves both plain
    logs and consensus-replicated clusters.
    """

    def __init__(self, n_silos: int, silo_factory=LedgerLog):
        if n_silos < 1:
            raise ValueError("need at least one silo")
        self.n_silos = n_silos
        self.silos = [silo_factory() for _ in range(n_silos)]

    def silo_for(self, venue_id: str) -> int:
        return assign_silo(venue_id, self.n_silos)

    def append(self, venue_id: str, payload: dict) -> tuple[int, LedgerEntry]:
        silo_id = self.silo_for(venue_id)
        return silo_id, self.silos[silo_id].append(payload)

    def entries(self, silo_id: int) -> list[LedgerEntry]:
        if not 0 <= silo_id < self.n_silos:
            raise UnknownSilo(f"silo {silo_id} does not exist")
        return self.silos[silo_id].entries()

    def all_entries(self) -> list[LedgerEntry]:
        out = []
        for silo in self.silos:
            out.extend(silo.entries())
        return out


def read_range(
    deployment: SiloDeployment, venue_id: str, start: int, stop: int, silo_id: int | None = None
) -> list[LedgerEntry]:
    """Committed entries for a venue with timestamp in [start, stop), commit order."""
    if start > stop:
        raise ValueError("range start must not exceed stop")
    if silo_id is None:
        silo_id = deployment.silo_for(venue_id)
    return [
        e
        for e in deployment.entries(silo_id)
        if e.payload.get("venue_id") == venue_id and start <= e.payload.get("t", -1) < stop
    ]
