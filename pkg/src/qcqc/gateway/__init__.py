"""CLI and HTTP service surfaces over an immutable gallery snapshot."""

from .config import ServiceConfig, load_service_config
from .state import ServiceState, Snapshot

__all__ = ["ServiceConfig", "ServiceState", "Snapshot", "load_service_config"]
