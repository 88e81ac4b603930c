"""Venue QR poster ingestion.

Posters carry colon-separated clear text whose last particle is a compact
JWS (RFC 7515). Only the payload members ``id`` and ``vt`` are read; the
signature is never verified because the signing keys are not ours to check
and venue identity is treated as opaque.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass

from venuetrace.records import VENUE_TYPES, VenueType

DEFAULT_PREFIX = ("UKC19TRACING", "1")

OTHER_VENUE_CODE = 19


class QrError(ValueError):
    pass


class MalformedEnvelope(QrError):
    pass


class MalformedJws(QrError):
    pass


class MissingField(QrError):
    pass


@dataclass(frozen=True)
class QrPayload:
    venue_id: str
    venue_type_code: str

    def as_dict(self) -> dict[str, str]:
        return {"id": self.venue_id, "vt": self.venue_type_code}


def _b64url_decode(segment: str) -> bytes:
    padded = segment + "=" * (-len(segment) % 4)
    try:
        return base64.urlsafe_b64decode(padded.encode("ascii"))
    except (binascii.Error, UnicodeEncodeError) as exc:
        raise MalformedJws(f"bad base64url segment: {exc}") from None


def _b64url_encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode("ascii").rstrip("=")


def parse_qr(text: str) -> QrPayload:
    """Extract (id, vt) from scanned poster text.

    Accepts any ``A:B:...:JWS`` shape; only the final colon-separated
    particle is interpreted, and of it only the payload segment is decoded.
    """
    if not text:
        raise MalformedEnvelope("empty QR content")
    particles = text.split(":")
    jws = particles[-1]
    if not jws:
        raise MalformedEnvelope("empty JWS particle after final colon")
    segments = jws.split(".")
    if len(segments) != 3:
        raise MalformedJws(f"compact JWS needs 3 dot-separated segments, got {len(segments)}")
    payload_bytes = _b64url_decode(segments[1])
    try:
        payload = json.loads(payload_bytes)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedJws(f"payload is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise MalformedJws("JWS payload must be a JSON object")
    for member in ("id", "vt"):
        if member not in payload:
            raise MissingField(f"payload lacks required member {member!r}")
        if not isinstance(payload[member], str):
            raise MalformedJws(f"payload member {member!r} must be text")
    if not payload["id"]:
        raise MissingField("payload member 'id' is empty")
    return QrPayload(venue_id=payload["id"], venue_type_code=payload["vt"])


def render_qr(
    payload: QrPayload,
    prefix: tuple[str, ...] = DEFAULT_PREFIX,
    signature: bytes = b"unsigned-fixture",
    extra_members: dict[str, str] | None = None,
) -> str:
    """Build poster text that round-trips through :func:`parse_qr`.

    Test/demo helper only: the signature bytes are opaque filler, not a
    real signature.
    """
    members: dict[str, str] = {"id": payload.venue_id, "vt": payload.venue_type_code}
    if extra_members:
        members.update(extra_members)
    header = _b64url_encode(json.dumps({"alg": "ES256"}).encode())
    body = _b64url_encode(json.dumps(members, separators=(",", ":")).encode())
    jws = f"{header}.{body}.{_b64url_encode(signature)}"
    return ":".join((*prefix, jws))


def map_venue_type(vt_code: str) -> VenueType:
    """Map a poster ``vt`` code onto the venue taxonomy.

    Both zero-padded (``"015"``) and bare (``"15"``) codes resolve; anything
    unrecognized falls back to Other, keeping the mapping total.
    """
    stripped = vt_code.strip().lstrip("0")
    if stripped.isdigit():
        code = int(stripped)
        if code in VENUE_TYPES:
            return VENUE_TYPES[code]
    return VENUE_TYPES[OTHER_VENUE_CODE]
