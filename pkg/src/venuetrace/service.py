"""HTTP/JSON service: proof-of-work session establishment, scan check-ins,
questionnaire submission, risk retrieval, investigator search and research
aggregates. Transport security beyond the PoW gate is out of scope."""

from __future__ import annotations

import secrets
import time
import uuid
from dataclasses import dataclass, field as dataclass_field
from datetime import date, datetime, timezone
from typing import Callable, Literal

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from pydantic import BaseModel, Field

from venuetrace import fedquery, pow, qr
from venuetrace.consensus import ClusterSilo, NoQuorum, SimNetConfig
from venuetrace.ledger import LedgerLog, SiloDeployment
from venuetrace.ml import ClassifierModel, ModelKind, predict_proba
from venuetrace.records import (
    WINDOW_LABELS,
    RiskProfile,
    YesNo,
    coarsen_timestamp,
    encode_features,
    minutes_to_iso,
    derive_risk_profile,
    record_from_flat,
    validate_record,
)
from venuetrace.risk import (
    DecayParams,
    ExposureEvent,
    Palette,
    ThresholdTable,
    combined_risk,
    format_score,
    level_colour,
    prune_events,
    risk_level,
)

import numpy as np

DEFAULT_SESSION_TTL = 3600.0  # seconds


def zero_rate_model() -> ClassifierModel:
    """Uninformative classifier: probability 0.5 for every record."""
    from venuetrace.records import FEATURE_LENGTH

    return ClassifierModel(ModelKind.LOGISTIC_REGRESSION, np.zeros(FEATURE_LENGTH), 0.0)


@dataclass
class ServiceConfig:
    n_silos: int = 4
    silo_backend: Literal["direct", "cluster"] = "direct"
    cluster_nodes: int = 4
    cluster_faults: int = 1
    k_min: int = fedquery.DEFAULT_K_MIN
    decay: DecayParams = dataclass_field(default_factory=DecayParams)
    thresholds: ThresholdTable = dataclass_field(default_factory=ThresholdTable)
    pow_params: pow.PowParams = dataclass_field(default_factory=pow.PowParams)
    model: ClassifierModel = dataclass_field(default_factory=zero_rate_model)
    investigator_credential: str = "investigator-secret"
    researcher_credential: str = "researcher-secret"
    session_ttl: float = DEFAULT_SESSION_TTL
    route_weights: dict = dataclass_field(default_factory=dict)
    clock: Callable[[], float] = time.time  # seconds since epoch


@dataclass
class Session:
    token: str
    role: str
    user_id: str
    profile: RiskProfile
    expires_at: float


@dataclass
class ScanHandle:
    handle: str
    user_id: str
    venue_id: str
    venue_code: int
    silo_id: int
    t: int  # minutes


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        if config.silo_backend == "cluster":
            seeds = iter(range(10_000, 10_000 + config.n_silos))

            def factory():
                return ClusterSilo(
                    SimNetConfig(config.cluster_nodes, config.cluster_faults, seed=next(seeds))
                )

            self.deployment = SiloDeployment(config.n_silos, factory)
        else:
            self.deployment = SiloDeployment(config.n_silos, LedgerLog)
        self.challenges = pow.ChallengeStore(config.pow_params)
        self.rate = pow.RateTracker()
        self.sessions: dict[str, Session] = {}
        self.handles: dict[str, ScanHandle] = {}

    def now_seconds(self) -> float:
        return self.config.clock()

    def now_minutes(self) -> int:
        return int(self.now_seconds() // 60)


def _iso_seconds(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class SessionRequest(BaseModel):
    client_key: str = Field(min_length=1)
    role: Literal["User", "Investigator", "Researcher"] = "User"
    credential: str | None = None
    user_id: str | None = None
    high_risk_gate: Literal["Yes", "No"] = "No"
    moderate_risk_gate: Literal["Yes", "No"] = "No"


class ProveRequest(BaseModel):
    challenge_id: str
    nonce: str


class ScanRequest(BaseModel):
    qr_text: str


class QuestionnaireRequest(BaseModel):
    handle: str
    answers: dict[str, str]


class InvestigateRequest(BaseModel):
    venue_id: str
    date: str | None = None  # YYYY-MM-DD
    window: str | None = None  # one of the 4-hour bin labels
    from_minute: int | None = None
    to_minute: int | None = None


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = ServiceState(config or ServiceConfig())
    app = FastAPI(title="venuetrace", version="0.1.0")
    app.state.service = state

    def auth(request: Request, *roles: str) -> Session:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(401, "missing bearer token")
        session = state.sessions.get(header.split(" ", 1)[1])
        if session is None or session.expires_at < state.now_seconds():
            raise HTTPException(401, "unknown or expired session")
        if roles and session.role not in roles:
            raise HTTPException(403, f"requires role in {roles}")
        return session

    def user_session(request: Request) -> Session:
        return auth(request, "User")

    def investigator_session(request: Request) -> Session:
        return auth(request, "Investigator")

    @app.post("/session")
    def open_session(body: SessionRequest):
        now = state.now_seconds()
        if body.role == "Investigator" and body.credential != state.config.investigator_credential:
            raise HTTPException(403, "invalid investigator credential")
        if body.role == "Researcher" and body.credential != state.config.researcher_credential:
            raise HTTPException(403, "invalid researcher credential")
        observed = state.rate.observe(body.client_key, now)
        challenge = state.challenges.issue(
            body.client_key,
            observed,
            now,
            route_weight=state.config.route_weights.get("session", 0.0),
            context={
                "role": body.role,
                "user_id": body.user_id or str(uuid.uuid4()),
                "high": body.high_risk_gate,
                "moderate": body.moderate_risk_gate,
            },
        )
        return {
            "challenge_id": challenge.challenge_id,
            "server_nonce": challenge.server_nonce,
            "difficulty": challenge.difficulty,
            "expires_at": _iso_seconds(challenge.expires_at),
        }

    @app.post("/session/prove")
    def prove_session(body: ProveRequest):
        now = state.now_seconds()
        try:
            challenge = state.challenges.verify(body.challenge_id, body.nonce, now)
        except pow.Replay:
            raise HTTPException(403, "challenge unknown, used, or replayed") from None
        except pow.Expired:
            raise HTTPException(403, "challenge expired") from None
        except pow.InsufficientWork as exc:
            raise HTTPException(403, str(exc)) from None
        ctx = challenge.context
        session = Session(
            token=secrets.token_hex(24),
            role=ctx["role"],
            user_id=ctx["user_id"],
            profile=derive_risk_profile(YesNo(ctx["high"]), YesNo(ctx["moderate"])),
            expires_at=now + state.config.session_ttl,
        )
        state.sessions[session.token] = session
        return {
            "token": session.token,
            "role": session.role,
            "user_id": session.user_id,
            "expires_at": _iso_seconds(session.expires_at),
        }

    @app.post("/scan")
    def post_scan(body: ScanRequest, session: Session = Depends(user_session)):
        try:
            payload = qr.parse_qr(body.qr_text)
        except qr.QrError as exc:
            raise HTTPException(400, f"malformed QR: {exc}") from None
        venue = qr.map_venue_type(payload.venue_type_code)
        t = state.now_minutes()
        record = {
            "kind": "scan",
            "venue_id": payload.venue_id,
            "vt": venue.code,
            "user_id": session.user_id,
            "t": t,
        }
        try:
            silo_id, _entry = state.deployment.append(payload.venue_id, record)
        except NoQuorum as exc:
            raise HTTPException(503, str(exc)) from None
        handle = secrets.token_hex(12)
        state.handles[handle] = ScanHandle(handle, session.user_id, payload.venue_id, venue.code, silo_id, t)
        return {"handle": handle, "display_window": coarsen_timestamp(t).as_dict()}

    @app.post("/questionnaire")
    def post_questionnaire(body: QuestionnaireRequest, session: Session = Depends(user_session)):
        scan = state.handles.get(body.handle)
        if scan is None:
            raise HTTPException(404, "unknown record handle")
        if scan.user_id != session.user_id:
            raise HTTPException(403, "handle belongs to another user")
        flat = dict(body.answers)
        flat.setdefault("Exposure_Led_to_Contamination", "Unknown")
        flat.setdefault("Risk_of_Contamination", "")
        flat["TIMESTAMP"] = minutes_to_iso(scan.t)
        flat["UserID"] = scan.user_id
        flat["Location_Type"] = str(scan.venue_code)
        try:
            record = record_from_flat(flat)
        except (ValueError, KeyError) as exc:
            raise HTTPException(422, detail={"violations": [str(exc)]}) from None
        violations = validate_record(record)
        if violations:
            raise HTTPException(422, detail={"violations": violations})
        payload = {
            "kind": "questionnaire",
            "handle": body.handle,
            "venue_id": scan.venue_id,
            "user_id": scan.user_id,
            "t": scan.t,
            "answers": flat,
        }
        try:
            state.deployment.append(scan.venue_id, payload)
        except NoQuorum as exc:
            raise HTTPException(503, str(exc)) from None
        return {"accepted": True, "handle": body.handle}

    def _user_events(user_id: str) -> list[ExposureEvent]:
        latest: dict[str, dict] = {}
        for entry in state.deployment.all_entries():
            if entry.payload.get("kind") == "questionnaire" and entry.payload["user_id"] == user_id:
                latest[entry.payload["handle"]] = entry.payload
        events = []
        for payload in latest.values():
            record = record_from_flat(payload["answers"])
            p = predict_proba(state.config.model, encode_features(record))
            events.append(ExposureEvent(t=payload["t"], p=float(p)))
        return events

    def _risk_for(user_id: str, profile: RiskProfile, palette: Palette) -> dict:
        now_min = state.now_minutes()
        events = prune_events(_user_events(user_id), now_min)
        score = combined_risk(events, now_min, state.config.decay)
        level = risk_level(score, profile, state.config.thresholds)
        return {
            "score": float(format_score(score)),
            "level": level.value,
            "colour": level_colour(level, palette),
            "as_of": minutes_to_iso(now_min),
        }

    def _palette(name: str | None) -> Palette:
        return Palette.COLOUR_BLIND if name == "colour_blind" else Palette.STANDARD

    @app.get("/risk")
    def get_risk(request: Request, palette: str | None = Query(default=None)):
        session = auth(request, "User")
        return _risk_for(session.user_id, session.profile, _palette(palette))

    @app.post("/investigate/search")
    def investigate(
        body: InvestigateRequest,
        request: Request,
        palette: str | None = Query(default=None),
    ):
        auth(request, "Investigator")
        if body.window is not None and body.window not in WINDOW_LABELS:
            raise HTTPException(422, f"window must be one of {WINDOW_LABELS}")
        try:
            query = fedquery.ContactQuery(
                venue_id=body.venue_id,
                day=date.fromisoformat(body.date) if body.date else None,
                window=WINDOW_LABELS.index(body.window) if body.window else None,
                start=body.from_minute,
                stop=body.to_minute,
            )
            bounds = query.bounds()
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        try:
            result = fedquery.search_contacts(state.deployment, query)
        except fedquery.UnknownVenue as exc:
            raise HTTPException(404, str(exc)) from None
        pal = _palette(palette)
        contacts = []
        for user_id in result.user_ids:
            scan_window = None
            for entry in state.deployment.entries(state.deployment.silo_for(body.venue_id)):
                p = entry.payload
                if (
                    p.get("kind") == "scan"
                    and p.get("venue_id") == body.venue_id
                    and p.get("user_id") == user_id
                    and bounds[0] <= p["t"] < bounds[1]
                ):
                    scan_window = coarsen_timestamp(p["t"]).as_dict()
                    break
            # investigators see pseudonymous handles with a default-profile risk level
            risk = _risk_for(user_id, _default_profile(), pal)
            contacts.append(
                {
                    "user_id": user_id,
                    "scan_window": scan_window,
                    "score": risk["score"],
                    "level": risk["level"],
                    "colour": risk["colour"],
                }
            )
        return {"contacts": contacts, "empty_window": result.empty_window}

    @app.get("/research/aggregate")
    def research_aggregate(
        group_by: str,
        outcome_split: bool = False,
        filter: list[str] = Query(default=[]),
    ):
        filters = []
        for item in filter:
            if "=" not in item:
                raise HTTPException(422, "filters take the form Field=Level")
            field_name, level = item.split("=", 1)
            filters.append((field_name, level))
        try:
            rows = fedquery.research_aggregate(
                state.deployment,
                fedquery.AggregateQuery(group_by, tuple(filters), outcome_split),
                k_min=state.config.k_min,
            )
        except fedquery.InvalidGroupField as exc:
            raise HTTPException(422, str(exc)) from None
        return {"rows": rows, "k_min": state.config.k_min}

    @app.get("/health")
    def health():
        quorum_ok = True
        if state.config.silo_backend == "cluster":
            for silo in state.deployment.silos:
                alive = [r for r in silo.sim._honest() if not r.crashed]
                quorum_ok &= len(alive) >= silo.config.quorum
        return {
            "status": "ok",
            "silos": state.deployment.n_silos,
            "backend": state.config.silo_backend,
            "quorum_ok": quorum_ok,
        }

    return app


def _default_profile() -> RiskProfile:
    return derive_risk_profile(YesNo.NO, YesNo.NO)
