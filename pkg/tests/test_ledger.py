import numpy as np
import pytest

from venuetrace.ledger import (
    GENESIS_DIGEST,
    LedgerEntry,
    LedgerLog,
    SiloDeployment,
    UnknownSilo,
    assign_silo,
    read_range,
    verify_chain,
)


class TestHashChain:
    def build(self, n=10):
        log = LedgerLog()
        for i in range(n):
            log.append({"kind": "scan", "venue_id": "V", "user_id": f"u{i}", "t": i * 10})
        return log

    def test_intact_chain_verifies(self):
        assert verify_chain(self.build().entries()) is None

    def test_tampered_payload_detected(self):
        entries = self.build().entries()
        entries[5] = LedgerEntry(5, {**entries[5].payload, "user_id": "evil"}, entries[5].digest)
        assert verify_chain(entries) == 5

    def test_genesis_tamper_detected(self):
        entries = self.build().entries()
        entries[0] = LedgerEntry(0, entries[0].payload, "0" * 64)
        assert verify_chain(entries) == 0

    def test_removed_entry_detected(self):
        entries = self.build().entries()
        del entries[3]
        assert verify_chain(entries) == 3

    def test_chain_links_previous_digest(self):
        entries = self.build(3).entries()
        assert entries[0].digest != GENESIS_DIGEST
        assert len({e.digest for e in entries}) == 3


class TestAssignSilo:
    def test_single_silo(self):
        assert all(assign_silo(f"venue-{i}", 1) == 0 for i in range(50))

    def test_deterministic(self):
        assert assign_silo("4WT59M5Y", 8) == assign_silo("4WT59M5Y", 8)

    def test_uniformity_chi_squared(self):
        rng = np.random.default_rng(1)
        n, silos = 100_000, 8
        ids = [f"{rng.integers(0, 2**63):016x}" for _ in range(n)]
        counts = np.bincount([assign_silo(v, silos) for v in ids], minlength=silos)
        expected = n / silos
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < 18.475  # 1% critical value, 7 dof

    def test_validation(self):
        with pytest.raises(ValueError):
            assign_silo("x", 0)


class TestReadRange:
    def deployment(self):
        dep = SiloDeployment(4)
        for venue, t, user in (
            ("A", 10, "u1"),
            ("B", 15, "u2"),
            ("A", 20, "u1"),
            ("A", 30, "u3"),
            ("B", 25, "u4"),
        ):
            dep.append(venue, {"kind": "scan", "venue_id": venue, "user_id": user, "t": t})
        return dep

    def test_empty_silo(self):
        dep = SiloDeployment(2)
        assert read_range(dep, "nothing", 0, 100) == []

    def test_half_open_interval(self):
        entries = read_range(self.deployment(), "A", 10, 30)
        assert [e.payload["t"] for e in entries] == [10, 20]

    def test_interleaved_venues_filtered(self):
        dep = self.deployment()
        entries = read_range(dep, "A", 0, 100)
        oracle = [e for e in dep.all_entries() if e.payload["venue_id"] == "A"]
        assert [e.payload for e in entries] == [e.payload for e in oracle]

    def test_unknown_silo(self):
        with pytest.raises(UnknownSilo):
            self.deployment().entries(17)

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            read_range(self.deployment(), "A", 30, 10)

    def test_routing_stable(self):
        dep = self.deployment()
        assert dep.silo_for("A") == assign_silo("A", 4)
