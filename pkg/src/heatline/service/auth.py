"""Minimal course auth: join code + email in, signed session token out.

Emails are pseudonymized with a keyed hash, so the stored log never
contains an address and the same email always maps to the same student_id.
Tokens are HMAC-signed and stateless; restarting the service does not
invalidate them.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import time
from dataclasses import dataclass

DEFAULT_TOKEN_TTL_S = 14 * 24 * 3600

ROLE_STUDENT = "student"
ROLE_INSTRUCTOR = "instructor"


class AuthError(Exception):
    pass


def pseudonymize_email(secret: str, email: str) -> str:
    digest = hmac.new(
        secret.encode(), email.strip().lower().encode(), hashlib.sha256
    ).hexdigest()
    return f"stu-{digest[:12]}"


@dataclass(frozen=True)
class TokenClaims:
    course_id: str
    subject: str
    role: str
    expires_at: float


def issue_token(
    secret: str,
    course_id: str,
    subject: str,
    role: str,
    now: float | None = None,
    ttl_s: int = DEFAULT_TOKEN_TTL_S,
) -> str:
    now = time.time() if now is None else now
    payload = {
        "course_id": course_id,
        "sub": subject,
        "role": role,
        "exp": now + ttl_s,
    }
    body = base64.urlsafe_b64encode(json.dumps(payload).encode()).decode().rstrip("=")
    return f"{body}.{_sign(secret, body)}"


def verify_token(secret: str, token: str, now: float | None = None) -> TokenClaims:
    now = time.time() if now is None else now
    try:
        body, signature = token.split(".", 1)
    except ValueError:
        raise AuthError("malformed token")
    if not hmac.compare_digest(signature, _sign(secret, body)):
        raise AuthError("bad signature")
    padded = body + "=" * (-len(body) % 4)
    payload = json.loads(base64.urlsafe_b64decode(padded))
    if payload["exp"] < now:
        raise AuthError("token expired")
    return TokenClaims(
        course_id=payload["course_id"],
        subject=payload["sub"],
        role=payload["role"],
        expires_at=payload["exp"],
    )


def _sign(secret: str, body: str) -> str:
    return hmac.new(secret.encode(), body.encode(), hashlib.sha256).hexdigest()
