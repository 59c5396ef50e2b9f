"""Operator authentication: salted password records, sessions, lockout.

Credentials live in a plain text file, one record per line:

    username:pbkdf2_sha256:<iterations>:<salt_hex>:<hash_hex>[:panels=<ids|*>]

Verification is constant-time. Five consecutive failures lock the account
until the service restarts. Session tokens carry 128 bits of entropy and
expire on the simulation clock.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass, field

from ..clock import VirtualClock

PBKDF2_ALGO = "pbkdf2_sha256"
DEFAULT_ITERATIONS = 60_000
DEFAULT_MAX_FAILURES = 5
DEFAULT_SESSION_TTL = 3600.0   # simulation seconds
TOKEN_BYTES = 16               # 128 bits


class AuthError(Exception):
    pass


class BadCredentialsError(AuthError):
    pass


class LockedOutError(AuthError):
    pass


class UnauthorizedError(AuthError):
    pass


@dataclass(frozen=True)
class UserRecord:
    username: str
    iterations: int
    salt: bytes
    digest: bytes
    panels: frozenset[str] | None = None   # None = all panels


@dataclass(frozen=True)
class Session:
    token: str
    user: str
    expiry: float
    permitted_panels: frozenset[str] | None = None

    def permits(self, panel_id: str) -> bool:
        return self.permitted_panels is None or panel_id in self.permitted_panels


def hash_password(password: str, salt: bytes | None = None,
                  iterations: int = DEFAULT_ITERATIONS) -> tuple[bytes, bytes]:
    if salt is None:
        salt = secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, iterations)
    return salt, digest


def format_record(username: str, password: str,
                  iterations: int = DEFAULT_ITERATIONS,
                  panels: list[str] | None = None) -> str:
    salt, digest = hash_password(password, iterations=iterations)
    line = f"{username}:{PBKDF2_ALGO}:{iterations}:{salt.hex()}:{digest.hex()}"
    if panels:
        line += f":panels={','.join(panels)}"
    return line


class CredentialStore:
    def __init__(self, users: dict[str, UserRecord] | None = None):
        self.users = users or {}

    @classmethod
    def parse(cls, text: str) -> "CredentialStore":
        users: dict[str, UserRecord] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(":")
            if len(parts) not in (5, 6) or parts[1] != PBKDF2_ALGO:
                raise ValueError(f"credential file line {lineno}: bad record")
            panels: frozenset[str] | None = None
            if len(parts) == 6:
                spec = parts[5]
                if not spec.startswith("panels="):
                    raise ValueError(f"credential file line {lineno}: bad panel list")
                value = spec[len("panels="):]
                panels = None if value == "*" else frozenset(
                    p for p in value.split(",") if p)
            users[parts[0]] = UserRecord(
                username=parts[0],
                iterations=int(parts[2]),
                salt=bytes.fromhex(parts[3]),
                digest=bytes.fromhex(parts[4]),
                panels=panels,
            )
        return cls(users)

    @classmethod
    def load(cls, path: str) -> "CredentialStore":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def add(self, username: str, password: str,
            iterations: int = DEFAULT_ITERATIONS,
            panels: list[str] | None = None) -> None:
        salt, digest = hash_password(password, iterations=iterations)
        self.users[username] = UserRecord(
            username, iterations, salt, digest,
            frozenset(panels) if panels else None)

    def verify(self, username: str, password: str) -> UserRecord | None:
        record = self.users.get(username)
        if record is None:
            # Burn comparable time so unknown users are indistinguishable.
            hash_password(password, b"\x00" * 16, DEFAULT_ITERATIONS)
            return None
        _, digest = hash_password(password, record.salt, record.iterations)
        return record if hmac.compare_digest(digest, record.digest) else None


@dataclass
class Authenticator:
    store: CredentialStore
    clock: VirtualClock
    max_failures: int = DEFAULT_MAX_FAILURES
    session_ttl: float = DEFAULT_SESSION_TTL
    _sessions: dict[str, Session] = field(default_factory=dict)
    _failures: dict[str, int] = field(default_factory=dict)
    _locked: set[str] = field(default_factory=set)

    def authenticate(self, username: str, password: str) -> Session:
        if username in self._locked:
            raise LockedOutError(f"account {username!r} is locked out")
        record = self.store.verify(username, password)
        if record is None:
            count = self._failures.get(username, 0) + 1
            self._failures[username] = count
            if count >= self.max_failures:
                self._locked.add(username)
            raise BadCredentialsError("bad username or password")
        self._failures.pop(username, None)
        return self._issue(username, record.panels)

    def create_session(self, username: str,
                       panels: frozenset[str] | None = None) -> Session:
        """Issue a session without a password check (in-process callers
        such as the scenario runner)."""
        return self._issue(username, panels)

    def _issue(self, username: str, panels: frozenset[str] | None) -> Session:
        session = Session(
            token=secrets.token_hex(TOKEN_BYTES),
            user=username,
            expiry=self.clock.now + self.session_ttl,
            permitted_panels=panels,
        )
        self._sessions[session.token] = session
        return session

    def lookup(self, token: str | None) -> Session:
        if not token:
            raise UnauthorizedError("missing token")
        session = self._sessions.get(token)
        if session is None:
            raise UnauthorizedError("unknown token")
        if self.clock.now >= session.expiry:
            raise UnauthorizedError("expired token")
        return session

    def revoke(self, token: str) -> None:
        self._sessions.pop(token, None)
