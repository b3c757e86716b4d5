"""Adapter configuration with environment defaults and secret redaction.

Upstream addresses may embed credentials (userinfo, api-key query params);
they must never leak into logs, reprs, or serialized state, so the config
only ever prints a redacted form of itself.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

ENDPOINT_KINDS = ("generate", "evaluate", "train_rollout", "schedule")

ENV_BY_KIND = {
    "generate": "MOTIONLOOP_GEN_URL",
    "evaluate": "MOTIONLOOP_VLM1_URL",
    "evaluate2": "MOTIONLOOP_VLM2_URL",
    "train_rollout": "MOTIONLOOP_TRACKER_CMD",
    "schedule": "MOTIONLOOP_LLM_URL",
}

_USERINFO_RE = re.compile(r"//[^/@]+@")
_SECRET_QUERY_RE = re.compile(r"((?:api_?key|token|secret|password)=)[^&\s]+", re.IGNORECASE)


def redact(address: str | None) -> str:
    """Mask credentials embedded in an upstream address."""
    if not address:
        return "(unset)"
    masked = _USERINFO_RE.sub("//***@", address)
    masked = _SECRET_QUERY_RE.sub(r"\1***", masked)
    return masked


@dataclass
class AdapterConfig:
    kind: str
    upstream: str | None = None  # URL or command line, per kind
    timeout_seconds: float = 30.0
    retries: int = 2
    transport: str = "socket"  # socket | stream
    listen: str = "127.0.0.1:0"
    evaluator_role: str = "vlm-1"  # evaluate adapters: vlm-1 | vlm-2

    def __post_init__(self):
        if self.kind not in ENDPOINT_KINDS:
            raise ValueError(f"unknown endpoint kind {self.kind!r}")
        if self.transport not in ("socket", "stream"):
            raise ValueError(f"transport must be 'socket' or 'stream', got {self.transport!r}")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.upstream is None:
            env = ENV_BY_KIND["evaluate2"] if (
                self.kind == "evaluate" and self.evaluator_role == "vlm-2"
            ) else ENV_BY_KIND[self.kind]
            self.upstream = os.environ.get(env)

    def __repr__(self):
        return (
            f"AdapterConfig(kind={self.kind!r}, upstream={redact(self.upstream)!r}, "
            f"timeout={self.timeout_seconds}, retries={self.retries}, "
            f"transport={self.transport!r})"
        )

    __str__ = __repr__
