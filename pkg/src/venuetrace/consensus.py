"""Deterministic in-process simulation of a BFT-hardened Raft variant.

The hardening over plain Raft: every message is signed; an entry commits
only when the leader assembles a quorum certificate of 2f+1 signed acks;
a replica ack-votes at most one digest per log index, ever, so conflicting
certificates for one index would force an honest double-signer; followers
reject any attempt to rewrite their committed prefix; and two conflicting
signed leader claims constitute an equivocation proof that blacklists the
leader and forces a view change.

Byzantine behaviour is a scripted menu (equivocate, stale replay, crash,
vote withholding), not an arbitrary adversary. The whole run is a pure
function of the scenario config: one seeded RNG drives delivery order,
delays and drops, and each replica's election jitter derives from
(seed, node id).
"""

from __future__ import annotations

import hashlib
import hmac as hmac_mod
import json
import random
from dataclasses import dataclass, field

from venuetrace.ledger import GENESIS_DIGEST, LedgerEntry, canonical_payload, chain_digest

HEARTBEAT_EVERY = 2  # rounds
BATCH_LIMIT = 64
RESUBMIT_AFTER = 12  # rounds before the driver re-sends an uncommitted command

FAULT_KINDS = ("crash", "equivocate", "stale_replay", "vote_withhold")


class NoQuorum(RuntimeError):
    pass


class InvalidScenario(ValueError):
    pass


@dataclass(frozen=True)
class FaultSpec:
    node: int
    kind: str
    at_round: int = 0

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise InvalidScenario(f"unknown fault kind {self.kind!r}")


@dataclass(frozen=True)
class SimNetConfig:
    n_nodes: int
    f_byzantine: int
    seed: int
    drop_rate: float = 0.0
    min_delay: int = 1
    max_delay: int = 1
    faults: tuple[FaultSpec, ...] = ()

    def __post_init__(self):
        if self.n_nodes < 3 * self.f_byzantine + 1:
            raise InvalidScenario("need n_nodes >= 3*f_byzantine + 1")
        if self.n_nodes < 1:
            raise InvalidScenario("need at least one node")
        if not 0.0 <= self.drop_rate < 1.0:
            raise InvalidScenario("drop_rate must be in [0, 1)")
        if not 1 <= self.min_delay <= self.max_delay:
            raise InvalidScenario("delays must satisfy 1 <= min <= max")
        if len({f.node for f in self.faults}) > self.f_byzantine:
            raise InvalidScenario("more faulty nodes than f_byzantine")
        for f in self.faults:
            if not 0 <= f.node < self.n_nodes:
                raise InvalidScenario(f"fault node {f.node} out of range")

    @property
    def quorum(self) -> int:
        return (self.n_nodes + self.f_byzantine) // 2 + 1

    def to_json(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "f_byzantine": self.f_byzantine,
            "seed": self.seed,
            "drop_rate": self.drop_rate,
            "min_delay": self.min_delay,
            "max_delay": self.max_delay,
            "faults": [
                {"node": f.node, "kind": f.kind, "at_round": f.at_round} for f in self.faults
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SimNetConfig":
        faults = tuple(FaultSpec(**f) for f in doc.get("faults", []))
        keys = {k: doc[k] for k in ("n_nodes", "f_byzantine", "seed") if k in doc}
        opt = {
            k: doc[k] for k in ("drop_rate", "min_delay", "max_delay") if k in doc
        }
        return cls(faults=faults, **keys, **opt)


class Signer:
    """Signature scheme interface; the simulator only needs sign/verify."""

    def sign(self, node_id: int, body: str) -> str:
        raise NotImplementedError

    def verify(self, node_id: int, body: str, sig: str) -> bool:
        raise NotImplementedError


class HmacSigner(Signer):
    """Cheap keyed stand-in: per-node HMAC secrets derived from the seed.

    Unforgeability is modelled, not enforced; scripted adversaries never
    call sign() for another node's identity.
    """

    def __init__(self, seed: int, n_nodes: int):
        self._keys = [
            hashlib.sha256(f"node-key|{seed}|{node}".encode()).digest() for node in range(n_nodes)
        ]

    def sign(self, node_id: int, body: str) -> str:
        return hmac_mod.new(self._keys[node_id], body.encode(), hashlib.sha256).hexdigest()

    def verify(self, node_id: int, body: str, sig: str) -> bool:
        return hmac_mod.compare_digest(self.sign(node_id, body), sig)


class Ed25519Signer(Signer):
    """Real asymmetric signatures; interchangeable with the stand-in."""

    def __init__(self, seed: int, n_nodes: int):
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

        self._private = [
            Ed25519PrivateKey.from_private_bytes(
                hashlib.sha256(f"node-seed|{seed}|{node}".encode()).digest()
            )
            for node in range(n_nodes)
        ]
        self._public = [key.public_key() for key in self._private]

    def sign(self, node_id: int, body: str) -> str:
        return self._private[node_id].sign(body.encode()).hex()

    def verify(self, node_id: int, body: str, sig: str) -> bool:
        from cryptography.exceptions import InvalidSignature

        try:
            self._public[node_id].verify(bytes.fromhex(sig), body.encode())
            return True
        except (InvalidSignature, ValueError):
            return False


@dataclass(slots=True)
class Msg:
    kind: str
    sender: int
    term: int
    # append / claims
    prev_index: int = -1
    prev_digest: str = ""
    payloads: tuple = ()  # canonical payload texts
    claim_index: int = -1
    claim_digest: str = ""
    claim_sig: str = ""  # leader signature over the claim tuple
    # votes / acks / commits
    candidate: int = -1
    last_index: int = -1
    commit_index: int = -1
    index: int = -1
    digest: str = ""
    leader: int = -1
    vote_sig: str = ""  # follower's certificate vote
    cert: tuple = ()  # ((voter, vote_sig), ...)
    entries: tuple = ()  # sync payload texts
    proof: tuple = ()  # two conflicting signed claims
    sig: str = ""

    def body(self) -> str:
        return repr(
            (
                self.kind, self.sender, self.term, self.prev_index, self.prev_digest,
                self.payloads, self.claim_index, self.claim_digest, self.claim_sig,
                self.candidate, self.last_index, self.commit_index, self.index,
                self.digest, self.leader, self.vote_sig, self.cert, self.entries, self.proof,
            )
        )


def claim_body(term: int, index: int, digest: str) -> str:
    return repr(("claim", term, index, digest))


def ack_vote_body(index: int, digest: str) -> str:
    # Certificate votes are term-free on purpose: one digest per index, ever.
    return repr(("ackvote", index, digest))


FOLLOWER, CANDIDATE, LEADER = "follower", "candidate", "leader"


@dataclass(slots=True)
class LogSlot:
    text: str
    digest: str
    payload: dict


class Replica:
    def __init__(self, node_id: int, config: SimNetConfig, signer: Signer):
        self.id = node_id
        self.n = config.n_nodes
        self.q = config.quorum
        self.signer = signer
        self.term = 0
        self.role = FOLLOWER
        self.leader_id: int | None = None
        self.voted_for: dict[int, int] = {}
        self.votes: set[int] = set()
        self.log: list[LogSlot] = []
        self.commit_index = 0  # number of committed entries
        self.acked: dict[int, str] = {}  # position -> the one digest this node endorses
        self.ack_votes: dict[tuple[int, str], dict[int, str]] = {}
        self.match: dict[int, int] = {}
        self.pending: list[str] = []
        self.seen_cmds: set[str] = set()
        self.blacklist: set[int] = set()
        self.claims_seen: dict[tuple[int, int], tuple[str, str, int]] = {}
        self.pending_adopt: tuple[int, str] | None = None
        self._stall_commit = 0
        self._stall_rounds = 0
        # stable jitter seed: str hash() is process-salted, so avoid it
        self.rng = random.Random((config.seed * 1_000_003 + node_id) & 0xFFFFFFFF)
        self.timer = self.rng.randint(10, 20)
        self.heartbeat_due = 0
        self.crashed = False
        self.fault: FaultSpec | None = next(
            (f for f in config.faults if f.node == node_id), None
        )
        if self.fault is not None and self.fault.kind in ("equivocate", "stale_replay"):
            # scripted adversaries race for leadership so the fault matters
            self.timer = self.rng.randint(2, 4)
        self.sent_history: list[Msg] = []
        self.outbox: list[tuple[int | None, Msg]] = []  # (recipient or None=broadcast, msg)

    # -- helpers ----------------------------------------------------------

    def digest_after(self, count: int) -> str:
        return GENESIS_DIGEST if count == 0 else self.log[count - 1].digest

    def _fault_active(self, kind: str, rnd: int) -> bool:
        return self.fault is not None and self.fault.kind == kind and rnd >= self.fault.at_round

    def _send(self, to: int | None, msg: Msg) -> None:
        msg.sig = self.signer.sign(self.id, msg.body())
        self.outbox.append((to, msg))
        if self.fault is not None and self.fault.kind == "stale_replay":
            self.sent_history.append(msg)

    def _sign_claim(self, index: int, digest: str) -> str:
        return self.signer.sign(self.id, claim_body(self.term, index, digest))

    # -- leader duties ----------------------------------------------------

    def _become_leader(self) -> None:
        self.role = LEADER
        self.leader_id = self.id
        self.match = {peer: self.commit_index for peer in range(self.n) if peer != self.id}
        self.heartbeat_due = 0
        # (re-)endorse the inherited chain wherever the single-vote rule allows
        for position, slot in enumerate(self.log):
            if self.acked.get(position) in (None, slot.digest):
                self.acked[position] = slot.digest

    def _drain_pending(self) -> None:
        while self.pending:
            text = self.pending.pop(0)
            position = len(self.log)
            digest = chain_digest(self.digest_after(position), text)
            self.log.append(LogSlot(text, digest, json.loads(text)))
            self.acked[position] = digest
            self.ack_votes.setdefault((position, digest), {})[self.id] = self.signer.sign(
                self.id, ack_vote_body(position, digest)
            )

    def _append_for(self, peer: int, rnd: int) -> Msg:
        start = min(self.match.get(peer, self.commit_index), len(self.log))
        batch = self.log[start : start + BATCH_LIMIT]
        payloads = tuple(slot.text for slot in batch)
        claim_index = start + len(batch)
        claim_digest = self.digest_after(claim_index)
        if self._fault_active("equivocate", rnd) and batch and peer % 2 == 1:
            # send a conflicting batch to half the followers: same positions,
            # tampered first payload, honestly signed conflicting claim
            tampered = dict(batch[0].payload)
            tampered["tampered"] = True
            texts = [canonical_payload(tampered), *(slot.text for slot in batch[1:])]
            digest = self.digest_after(start)
            for text in texts:
                digest = chain_digest(digest, text)
            payloads = tuple(texts)
            claim_digest = digest
        return Msg(
            kind="append",
            sender=self.id,
            term=self.term,
            prev_index=start,
            prev_digest=self.digest_after(start),
            payloads=payloads,
            claim_index=claim_index,
            claim_digest=claim_digest,
            claim_sig=self._sign_claim(claim_index, claim_digest),
            commit_index=self.commit_index,
        )

    def _lead(self, rnd: int) -> None:
        self._drain_pending()
        behind = any(self.match.get(p, 0) < len(self.log) for p in self.match)
        if rnd >= self.heartbeat_due or behind:
            for peer in self.match:
                self._send(peer, self._append_for(peer, rnd))
            self.heartbeat_due = rnd + HEARTBEAT_EVERY

    # -- round hook --------------------------------------------------------

    def tick(self, rnd: int) -> None:
        if self.crashed:
            return
        if self._fault_active("crash", rnd):
            self.crashed = True
            return
        if self.role == LEADER:
            self._lead(rnd)
        else:
            self.timer -= 1
            # heartbeats from a leader that never advances commits must not
            # keep it in power while entries sit uncommitted
            if len(self.log) > self.commit_index and self.commit_index == self._stall_commit:
                self._stall_rounds += 1
            else:
                self._stall_commit = self.commit_index
                self._stall_rounds = 0
            if self.timer <= 0 or self._stall_rounds > 30:
                self._stall_rounds = 0
                self._start_election()
        if self._fault_active("stale_replay", rnd) and self.sent_history:
            for _ in range(2):
                old = self.sent_history[self.rng.randrange(len(self.sent_history))]
                self.outbox.append((None, old))

    def _start_election(self) -> None:
        self.term += 1
        self.role = CANDIDATE
        self.leader_id = None
        self.voted_for[self.term] = self.id
        self.votes = {self.id}
        self.timer = self.rng.randint(10, 20)
        self._send(
            None,
            Msg(
                kind="vote_req",
                sender=self.id,
                term=self.term,
                candidate=self.id,
                last_index=len(self.log),
                commit_index=self.commit_index,
            ),
        )

    # -- message handling ---------------------------------------------------

    def receive(self, msg: Msg, rnd: int) -> None:
        if self.crashed:
            return
        if not self.signer.verify(msg.sender, msg.body(), msg.sig):
            return
        if msg.sender in self.blacklist and msg.kind in ("append", "commit", "vote_req"):
            return
        handler = getattr(self, f"_on_{msg.kind}", None)
        if handler is not None:
            handler(msg, rnd)

    def _observe_term(self, term: int) -> None:
        if term > self.term:
            self.term = term
            self.role = FOLLOWER
            self.leader_id = None
            self.votes = set()

    def _record_claim(self, term: int, index: int, digest: str, sig: str, leader: int) -> None:
        """Track signed leader claims; conflicting ones prove equivocation."""
        if not self.signer.verify(leader, claim_body(term, index, digest), sig):
            return
        key = (term, index)
        known = self.claims_seen.get(key)
        if known is None:
            self.claims_seen[key] = (digest, sig, leader)
            return
        known_digest, known_sig, known_leader = known
        if known_leader == leader and known_digest != digest:
            proof = ((term, index, known_digest, leader, known_sig), (term, index, digest, leader, sig))
            self._apply_proof(proof)
            self._send(None, Msg(kind="proof", sender=self.id, term=self.term, proof=proof))

    def _apply_proof(self, proof: tuple) -> None:
        (term_a, index_a, digest_a, leader_a, sig_a), (term_b, index_b, digest_b, leader_b, sig_b) = proof
        if leader_a != leader_b or (term_a, index_a) != (term_b, index_b) or digest_a == digest_b:
            return
        if not self.signer.verify(leader_a, claim_body(term_a, index_a, digest_a), sig_a):
            return
        if not self.signer.verify(leader_b, claim_body(term_b, index_b, digest_b), sig_b):
            return
        if leader_a not in self.blacklist:
            self.blacklist.add(leader_a)
            # endorsements made toward a proven equivocator are void; committed
            # positions stay pinned by their certificates
            for position in [p for p in self.acked if p >= self.commit_index]:
                del self.acked[position]
            if self.leader_id == leader_a:
                self.leader_id = None
                self.timer = min(self.timer, self.rng.randint(1, 3))

    def _on_proof(self, msg: Msg, rnd: int) -> None:
        self._apply_proof(msg.proof)

    def _on_client(self, msg: Msg, rnd: int) -> None:
        for text in msg.payloads:
            if self.role == LEADER:
                if text not in self.seen_cmds:
                    self.seen_cmds.add(text)
                    self.pending.append(text)
            elif self.leader_id is not None and msg.sender != self.leader_id:
                self._send(
                    self.leader_id,
                    Msg(kind="client", sender=self.id, term=self.term, payloads=(text,)),
                )

    def _on_vote_req(self, msg: Msg, rnd: int) -> None:
        self._observe_term(msg.term)
        if msg.term < self.term or msg.candidate in self.blacklist:
            return
        if self._fault_active("vote_withhold", rnd):
            return
        if self.voted_for.get(msg.term) not in (None, msg.candidate):
            return
        if msg.last_index < len(self.log) or msg.commit_index < self.commit_index:
            return
        self.voted_for[msg.term] = msg.candidate
        self.timer = self.rng.randint(10, 20)
        self._send(msg.candidate, Msg(kind="vote", sender=self.id, term=msg.term, candidate=msg.candidate))

    def _on_vote(self, msg: Msg, rnd: int) -> None:
        if msg.term != self.term or self.role != CANDIDATE or msg.candidate != self.id:
            return
        self.votes.add(msg.sender)
        if len(self.votes) >= self.q:
            self._become_leader()

    def _on_append(self, msg: Msg, rnd: int) -> None:
        self._observe_term(msg.term)
        if msg.term < self.term:
            return
        if self.role == CANDIDATE:
            self.role = FOLLOWER
        self.leader_id = msg.sender
        self.timer = self.rng.randint(10, 20)
        self._record_claim(msg.term, msg.claim_index, msg.claim_digest, msg.claim_sig, msg.sender)
        if msg.sender in self.blacklist:
            # this very append may have completed the equivocation proof
            return

        if msg.prev_index > len(self.log) or self.digest_after(
            min(msg.prev_index, len(self.log))
        ) != msg.prev_digest or msg.prev_index < 0:
            self._send(
                msg.sender,
                Msg(kind="nack", sender=self.id, term=self.term, commit_index=self.commit_index),
            )
            return

        position = msg.prev_index
        digest = msg.prev_digest
        accepted = position
        to_store: list[LogSlot] = []
        for text in msg.payloads:
            digest = chain_digest(digest, text)
            if position < len(self.log) and self.log[position].digest == digest:
                position += 1
                accepted = position
                continue
            if position < self.commit_index:
                # attempt to rewrite the committed prefix
                self._send(
                    msg.sender,
                    Msg(kind="nack", sender=self.id, term=self.term, commit_index=self.commit_index),
                )
                return
            if self.acked.get(position) not in (None, digest):
                break  # endorsed a different digest here once already; never double-vote
            to_store.append(LogSlot(text, digest, json.loads(text)))
            position += 1
            accepted = position
        if to_store:
            start = accepted - len(to_store)
            del self.log[start:]
            for offset, slot in enumerate(to_store):
                self.log.append(slot)
                self.acked[start + offset] = slot.digest
        if self._fault_active("vote_withhold", rnd):
            return
        ack_digest = self.digest_after(accepted)
        self._send(
            None,
            Msg(
                kind="ack",
                sender=self.id,
                term=self.term,
                index=accepted,
                digest=ack_digest,
                leader=msg.sender,
                claim_index=msg.claim_index,
                claim_digest=msg.claim_digest,
                claim_sig=msg.claim_sig,
                vote_sig=self.signer.sign(self.id, ack_vote_body(accepted, ack_digest)),
            ),
        )

    def _on_ack(self, msg: Msg, rnd: int) -> None:
        if msg.leader >= 0 and msg.claim_index >= 0:
            self._record_claim(msg.term, msg.claim_index, msg.claim_digest, msg.claim_sig, msg.leader)
        if self.role != LEADER or msg.term != self.term:
            return
        self.match[msg.sender] = max(self.match.get(msg.sender, 0), msg.index)
        if msg.index <= self.commit_index or msg.index > len(self.log):
            return
        if self.digest_after(msg.index) != msg.digest:
            return
        if not self.signer.verify(msg.sender, ack_vote_body(msg.index, msg.digest), msg.vote_sig):
            return
        votes = self.ack_votes.setdefault((msg.index, msg.digest), {})
        votes[msg.sender] = msg.vote_sig
        if self.id not in votes and (
            msg.index == 0 or self.acked.get(msg.index - 1) == self.log[msg.index - 1].digest
        ):
            votes[self.id] = self.signer.sign(self.id, ack_vote_body(msg.index, msg.digest))
        if len(votes) >= self.q:
            cert = tuple(sorted(votes.items()))
            self.commit_index = msg.index
            self._send(
                None,
                Msg(
                    kind="commit",
                    sender=self.id,
                    term=self.term,
                    index=msg.index,
                    digest=msg.digest,
                    cert=cert,
                ),
            )

    def _valid_cert(self, index: int, digest: str, cert: tuple) -> bool:
        voters = set()
        for voter, sig in cert:
            if not isinstance(voter, int) or not 0 <= voter < self.n:
                return False
            if voter in voters:
                continue
            if self.signer.verify(voter, ack_vote_body(index, digest), sig):
                voters.add(voter)
        return len(voters) >= self.q

    def _on_commit(self, msg: Msg, rnd: int) -> None:
        if msg.index <= self.commit_index:
            return
        if not self._valid_cert(msg.index, msg.digest, msg.cert):
            return
        if msg.index <= len(self.log) and self.digest_after(msg.index) == msg.digest:
            self.commit_index = msg.index
            self.pending_adopt = None
            return
        # certified entries we do not hold (or hold differently): fetch and adopt
        self.pending_adopt = (msg.index, msg.digest)
        self._send(
            None,
            Msg(
                kind="sync_req",
                sender=self.id,
                term=self.term,
                index=msg.index,
                commit_index=self.commit_index,
            ),
        )

    def _on_sync_req(self, msg: Msg, rnd: int) -> None:
        if self.commit_index < msg.index:
            return
        start = min(msg.commit_index, self.commit_index)
        texts = tuple(slot.text for slot in self.log[start : msg.index])
        self._send(
            msg.sender,
            Msg(
                kind="sync_resp",
                sender=self.id,
                term=self.term,
                index=msg.index,
                prev_index=start,
                prev_digest=self.digest_after(start),
                entries=texts,
            ),
        )

    def _on_sync_resp(self, msg: Msg, rnd: int) -> None:
        if self.pending_adopt is None:
            return
        target_index, target_digest = self.pending_adopt
        if msg.index != target_index or msg.prev_index > self.commit_index:
            return
        if self.digest_after(msg.prev_index) != msg.prev_digest:
            return
        digest = msg.prev_digest
        slots = []
        for text in msg.entries:
            digest = chain_digest(digest, text)
            slots.append(LogSlot(text, digest, json.loads(text)))
        if msg.prev_index + len(slots) != target_index or digest != target_digest:
            return
        del self.log[msg.prev_index :]
        for offset, slot in enumerate(slots):
            self.log.append(slot)
            self.acked[msg.prev_index + offset] = slot.digest  # certificate overrides
        self.commit_index = target_index
        self.pending_adopt = None

    def _on_nack(self, msg: Msg, rnd: int) -> None:
        if self.role == LEADER and msg.term == self.term:
            self.match[msg.sender] = min(
                self.match.get(msg.sender, self.commit_index), msg.commit_index
            )

    # -- inspection ---------------------------------------------------------

    def committed_entries(self) -> list[LedgerEntry]:
        return [
            LedgerEntry(i, slot.payload, slot.digest)
            for i, slot in enumerate(self.log[: self.commit_index])
        ]


@dataclass
class SimResult:
    safety_ok: bool
    first_divergence: int | None
    committed_commands: int
    total_commands: int
    rounds: int
    leader_changes: int
    trace: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.safety_ok:
            return "safety held"
        return f"safety violated at index {self.first_divergence}"


class Simulation:
    """Round-based driver: delivery, ticks, and client retry logic."""

    def __init__(self, config: SimNetConfig, signer: Signer | None = None, trace: bool = False):
        self.config = config
        self.signer = signer or HmacSigner(config.seed, config.n_nodes)
        self.rng = random.Random(config.seed)
        self.replicas = [Replica(i, config, self.signer) for i in range(config.n_nodes)]
        self.mailbox: list[tuple[int, int, int, Msg]] = []  # (due_round, seq, to, msg)
        self._seq = 0
        self.round = 0
        self.trace_enabled = trace
        self.trace: list[str] = []
        self.committed_seen: set[str] = set()
        self._scan_progress = [0] * config.n_nodes
        self.leader_history: list[int] = []

    # -- plumbing -----------------------------------------------------------

    def _honest(self) -> list[Replica]:
        return [r for r in self.replicas if r.fault is None or r.fault.kind == "crash"]

    def _schedule(self, sender: int, to: int | None, msg: Msg) -> None:
        recipients = [to] if to is not None else [p for p in range(self.config.n_nodes) if p != sender]
        for recipient in recipients:
            if self.rng.random() < self.config.drop_rate:
                continue
            delay = self.rng.randint(self.config.min_delay, self.config.max_delay)
            self._seq += 1
            self.mailbox.append((self.round + delay, self._seq, recipient, msg))

    def submit(self, payload: dict, target: int | None = None) -> None:
        text = canonical_payload(payload)
        leader = target if target is not None else self._likely_leader()
        msg = Msg(kind="client", sender=leader, term=0, payloads=(text,))
        # client messages are unsigned in spirit; stamp with recipient identity
        msg.sig = self.signer.sign(leader, msg.body())
        self._seq += 1
        self.mailbox.append((self.round + 1, self._seq, leader, msg))

    def _likely_leader(self) -> int:
        for replica in self._honest():
            if not replica.crashed and replica.role == LEADER:
                return replica.id
        for replica in self._honest():
            if not replica.crashed and replica.leader_id is not None:
                return replica.leader_id
        alive = [r.id for r in self._honest() if not r.crashed]
        return alive[0] if alive else 0

    def step(self) -> None:
        self.round += 1
        due = [item for item in self.mailbox if item[0] <= self.round]
        self.mailbox = [item for item in self.mailbox if item[0] > self.round]
        due.sort(key=lambda item: item[1])
        self.rng.shuffle(due)
        for _due_round, _seq, to, msg in due:
            if self.trace_enabled:
                self.trace.append(
                    f"round={self.round} to=n{to} from=n{msg.sender} kind={msg.kind} "
                    f"term={msg.term} index={max(msg.index, msg.claim_index)} digest={msg.digest[:12] or msg.claim_digest[:12]}"
                )
            self.replicas[to].receive(msg, self.round)
        leader_now = next((r.id for r in self.replicas if r.role == LEADER and not r.crashed), None)
        if leader_now is not None and (not self.leader_history or self.leader_history[-1] != leader_now):
            self.leader_history.append(leader_now)
        for replica in self.replicas:
            replica.tick(self.round)
            for to, msg in replica.outbox:
                self._schedule(replica.id, to, msg)
            replica.outbox.clear()
        self._scan_commits()

    def _scan_commits(self) -> None:
        for replica in self._honest():
            while self._scan_progress[replica.id] < replica.commit_index:
                slot = replica.log[self._scan_progress[replica.id]]
                self.committed_seen.add(slot.text)
                self._scan_progress[replica.id] += 1

    # -- safety -------------------------------------------------------------

    def check_safety(self) -> tuple[bool, int | None]:
        """Honest committed logs must be pairwise prefix-consistent."""
        logs = [r.log[: r.commit_index] for r in self._honest()]
        reference: list[LogSlot] = max(logs, key=len, default=[])
        for log in logs:
            for i, slot in enumerate(log):
                if slot.digest != reference[i].digest:
                    return False, i
        return True, None

    def committed_texts(self) -> set[str]:
        longest = max((r.log[: r.commit_index] for r in self._honest()), key=len, default=[])
        return {slot.text for slot in longest}

    def run(self, commands: list[dict], max_rounds: int = 2000, inject_per_round: int = 40) -> SimResult:
        texts = [canonical_payload(c) for c in commands]
        last_submit: dict[str, int] = {}
        cursor = 0
        while self.round < max_rounds:
            self.step()
            budget = inject_per_round
            while cursor < len(texts) and budget > 0:
                self.submit(json.loads(texts[cursor]))
                last_submit[texts[cursor]] = self.round
                cursor += 1
                budget -= 1
            if budget and cursor >= len(texts):
                for text in texts:
                    if budget <= 0:
                        break
                    if text not in self.committed_seen and self.round - last_submit.get(text, -99) >= RESUBMIT_AFTER:
                        self.submit(json.loads(text))
                        last_submit[text] = self.round
                        budget -= 1
            ok, _ = self.check_safety()
            if not ok:
                break
            if cursor >= len(texts) and set(texts) <= self.committed_texts():
                break
        ok, divergence = self.check_safety()
        committed = self.committed_texts()
        return SimResult(
            safety_ok=ok,
            first_divergence=divergence,
            committed_commands=len([t for t in texts if t in committed]),
            total_commands=len(texts),
            rounds=self.round,
            leader_changes=max(0, len(self.leader_history) - 1),
            trace=self.trace,
        )


def run_scenario(
    config: SimNetConfig, n_commands: int = 100, trace: bool = False, max_rounds: int = 2000
) -> SimResult:
    sim = Simulation(config, trace=trace)
    commands = [{"cmd_seq": i, "kind": "noop"} for i in range(n_commands)]
    return sim.run(commands, max_rounds=max_rounds)


class ClusterSilo:
    """Consensus-replicated silo exposing the plain log interface.

    Appends submit a command to the cluster and pump simulation rounds until
    the entry commits on the honest quorum.
    """

    def __init__(self, config: SimNetConfig | None = None):
        self.config = config or SimNetConfig(n_nodes=4, f_byzantine=1, seed=0)
        self.sim = Simulation(self.config)
        # bootstrap an initial leader so the first append is fast
        for _ in range(40):
            self.sim.step()
            if any(r.role == LEADER for r in self.sim.replicas):
                break

    def __len__(self) -> int:
        return len(self.entries())

    def append(self, payload: dict, max_rounds: int = 200) -> LedgerEntry:
        text = canonical_payload(payload)
        self.sim.submit(payload)
        waited = 0
        resubmit_at = self.sim.round + RESUBMIT_AFTER
        while text not in self.sim.committed_seen:
            self.sim.step()
            waited += 1
            if self.sim.round >= resubmit_at:
                self.sim.submit(payload)
                resubmit_at = self.sim.round + RESUBMIT_AFTER
            if waited > max_rounds:
                raise NoQuorum("command failed to commit; cluster lacks a live quorum")
        for entry in reversed(self.entries()):
            if canonical_payload(entry.payload) == text:
                return entry
        raise NoQuorum("committed entry not found in quorum log")

    def entries(self) -> list[LedgerEntry]:
        best = max(self.sim._honest(), key=lambda r: r.commit_index)
        return best.committed_entries()
