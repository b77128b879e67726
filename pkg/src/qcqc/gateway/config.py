"""Service configuration: key=value file plus environment overrides."""
from __future__ import annotations

import dataclasses
import os
from pathlib import Path

DEFAULT_PORT = 8787

ENV_PORT = "QCQC_PORT"
ENV_ENDPOINT_URL = "QCQC_ENDPOINT_URL"
ENV_API_KEY = "QCQC_API_KEY"


@dataclasses.dataclass(frozen=True)
class ServiceConfig:
    port: int = DEFAULT_PORT
    endpoint_url: str | None = None
    api_key: str | None = None
    api_key_header: str = "X-Api-Key"
    endpoint_timeout: float = 30.0
    embed_seed: int = 0
    random_seed: int = 0
    allow_reload: bool = False
    static_dir: str | None = None


def _parse_kv_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line is not key=value: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_service_config(path=None, env=None, **overrides) -> ServiceConfig:
    """Build a config from (in increasing precedence) a key=value file, the
    QCQC_* environment variables, and explicit keyword overrides."""
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        kv = _parse_kv_file(path)
        if "port" in kv:
            values["port"] = int(kv["port"])
        if "endpoint_url" in kv:
            values["endpoint_url"] = kv["endpoint_url"]
        if "api_key" in kv:
            values["api_key"] = kv["api_key"]
        if "api_key_header" in kv:
            values["api_key_header"] = kv["api_key_header"]
        if "endpoint_timeout" in kv:
            values["endpoint_timeout"] = float(kv["endpoint_timeout"])
        if "embed_seed" in kv:
            values["embed_seed"] = int(kv["embed_seed"])
        if "random_seed" in kv:
            values["random_seed"] = int(kv["random_seed"])
        if "static_dir" in kv:
            values["static_dir"] = kv["static_dir"]
    if env.get(ENV_PORT):
        values["port"] = int(env[ENV_PORT])
    if env.get(ENV_ENDPOINT_URL):
        values["endpoint_url"] = env[ENV_ENDPOINT_URL]
    if env.get(ENV_API_KEY):
        values["api_key"] = env[ENV_API_KEY]
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ServiceConfig(**values)
