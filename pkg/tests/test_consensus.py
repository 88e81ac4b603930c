import pytest

from venuetrace.consensus import (
    ClusterSilo,
    Ed25519Signer,
    FaultSpec,
    HmacSigner,
    InvalidScenario,
    NoQuorum,
    SimNetConfig,
    Simulation,
    run_scenario,
)
from venuetrace.ledger import verify_chain


class TestScenarioConfig:
    def test_quorum_rule(self):
        assert SimNetConfig(4, 1, seed=0).quorum == 3
        assert SimNetConfig(7, 2, seed=0).quorum == 5

    def test_n_must_cover_faults(self):
        with pytest.raises(InvalidScenario):
            SimNetConfig(3, 1, seed=0)

    def test_fault_kinds_validated(self):
        with pytest.raises(InvalidScenario):
            FaultSpec(0, "meteor-strike")

    def test_too_many_faulty_nodes(self):
        with pytest.raises(InvalidScenario):
            SimNetConfig(4, 1, seed=0, faults=(FaultSpec(0, "crash"), FaultSpec(1, "crash")))

    def test_json_round_trip(self):
        config = SimNetConfig(4, 1, seed=5, drop_rate=0.1, faults=(FaultSpec(2, "equivocate", 7),))
        assert SimNetConfig.from_json(config.to_json()) == config


class TestFaultFreeReplication:
    def test_identical_logs_all_replicas(self):
        config = SimNetConfig(4, 0, seed=1)
        sim = Simulation(config)
        result = sim.run([{"cmd_seq": i} for i in range(100)])
        assert result.safety_ok and result.committed_commands == 100
        for _ in range(10):  # let the final commit broadcast reach laggards
            sim.step()
        logs = [r.committed_entries() for r in sim.replicas]
        assert all(len(log) >= 100 for log in logs)
        digests = {tuple(e.digest for e in log[:100]) for log in logs}
        assert len(digests) == 1

    def test_committed_log_is_valid_hash_chain(self):
        config = SimNetConfig(4, 0, seed=2)
        sim = Simulation(config)
        sim.run([{"cmd_seq": i} for i in range(40)])
        assert verify_chain(sim.replicas[0].committed_entries()) is None

    def test_trace_is_seed_deterministic(self):
        runs = []
        for _ in range(2):
            config = SimNetConfig(4, 0, seed=9)
            result = run_scenario(config, n_commands=30, trace=True)
            runs.append((result.rounds, result.committed_commands, tuple(result.trace)))
        assert runs[0] == runs[1]

    def test_liveness_bounded_rounds(self):
        for seed in range(5):
            result = run_scenario(SimNetConfig(4, 0, seed=seed), n_commands=100)
            assert result.committed_commands == 100
            assert result.rounds < 200


class TestByzantineScenarios:
    def test_equivocating_leader_deposed_and_safe(self):
        config = SimNetConfig(4, 1, seed=3, faults=(FaultSpec(0, "equivocate", 0),))
        result = run_scenario(config, n_commands=150)
        assert result.safety_ok
        assert result.committed_commands == 150
        assert result.leader_changes >= 1

    def test_stale_replay_harmless(self):
        config = SimNetConfig(4, 1, seed=4, faults=(FaultSpec(1, "stale_replay", 0),))
        result = run_scenario(config, n_commands=150)
        assert result.safety_ok and result.committed_commands == 150

    def test_crash_tolerated(self):
        config = SimNetConfig(4, 1, seed=5, faults=(FaultSpec(2, "crash", 15),))
        result = run_scenario(config, n_commands=150)
        assert result.safety_ok and result.committed_commands == 150

    def test_vote_withholding_tolerated(self):
        config = SimNetConfig(4, 1, seed=6, faults=(FaultSpec(3, "vote_withhold", 0),))
        result = run_scenario(config, n_commands=150)
        assert result.safety_ok and result.committed_commands == 150

    def test_mixed_seeds_never_diverge(self):
        kinds = ("equivocate", "stale_replay", "crash", "vote_withhold")
        for seed in range(16):
            fault = FaultSpec(seed % 4, kinds[seed % 4], at_round=seed % 8)
            config = SimNetConfig(4, 1, seed=200 + seed, faults=(fault,))
            result = run_scenario(config, n_commands=120)
            assert result.safety_ok, f"divergence with {fault}"

    def test_message_drops_tolerated(self):
        config = SimNetConfig(4, 0, seed=8, drop_rate=0.05)
        result = run_scenario(config, n_commands=80, max_rounds=3000)
        assert result.safety_ok and result.committed_commands == 80


class TestSigners:
    def test_hmac_sign_verify(self):
        signer = HmacSigner(seed=1, n_nodes=4)
        sig = signer.sign(2, "message-body")
        assert signer.verify(2, "message-body", sig)
        assert not signer.verify(2, "other-body", sig)
        assert not signer.verify(1, "message-body", sig)

    def test_ed25519_sign_verify(self):
        signer = Ed25519Signer(seed=1, n_nodes=4)
        sig = signer.sign(0, "payload")
        assert signer.verify(0, "payload", sig)
        assert not signer.verify(0, "tampered", sig)
        assert not signer.verify(3, "payload", sig)
        assert not signer.verify(0, "payload", "00" * 64)

    def test_signers_interchangeable_in_simulation(self):
        config = SimNetConfig(4, 0, seed=12)
        sim = Simulation(config, signer=Ed25519Signer(seed=12, n_nodes=4))
        result = sim.run([{"cmd_seq": i} for i in range(20)])
        assert result.safety_ok and result.committed_commands == 20


class TestClusterSilo:
    def test_append_commits_and_chains(self):
        silo = ClusterSilo(SimNetConfig(4, 0, seed=30))
        entries = [silo.append({"kind": "scan", "venue_id": "V", "user_id": f"u{i}", "t": i}) for i in range(5)]
        assert [e.index for e in entries] == sorted(e.index for e in entries)
        assert verify_chain(silo.entries()[: entries[-1].index + 1]) is None

    def test_no_quorum_when_two_of_four_crash(self):
        config = SimNetConfig(
            4, 1, seed=31, faults=(FaultSpec(1, "crash", 0),)
        )
        silo = ClusterSilo(config)
        # crash a second node out from under the cluster
        silo.sim.replicas[2].crashed = True
        with pytest.raises(NoQuorum):
            silo.append({"kind": "scan", "venue_id": "V", "user_id": "u", "t": 0}, max_rounds=80)
