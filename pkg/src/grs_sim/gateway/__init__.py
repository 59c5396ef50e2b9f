"""Remote supervisory service: authentication, audit trail, panel registry,
command forwarding, automatic operation and the HTTP/JSON surface."""

from .audit import AuditLog, EventKind, SupervisorEvent
from .auth import (
    Authenticator,
    BadCredentialsError,
    CredentialStore,
    LockedOutError,
    Session,
    UnauthorizedError,
)
from .core import (
    GatewayCore,
    GatewayError,
    Mode,
    ModeLockedError,
    PanelOfflineError,
    PanelRuntime,
    UnknownButtonError,
    UnknownPanelError,
    UnknownSelectorError,
)

__all__ = [
    "AuditLog", "EventKind", "SupervisorEvent",
    "Authenticator", "BadCredentialsError", "CredentialStore",
    "LockedOutError", "Session", "UnauthorizedError",
    "GatewayCore", "GatewayError", "Mode", "ModeLockedError",
    "PanelOfflineError", "PanelRuntime", "UnknownButtonError",
    "UnknownPanelError", "UnknownSelectorError",
]
