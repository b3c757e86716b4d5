"""Service adapters exposing external systems as motionloop protocol endpoints.

One adapter per endpoint kind: ``generate`` (text-to-motion upstream with the
standard post-processing chain), ``evaluate`` (a VLM role), ``train_rollout``
(an RL tracker behind a subprocess JSON bridge), and ``schedule`` (the policy
LLM). Adapters speak the wire protocol natively and never import the
orchestrator package.
"""

from .config import AdapterConfig, redact
from .endpoints import (
    EvaluatorAdapter,
    GeneratorAdapter,
    SchedulerAdapter,
    TrackerAdapter,
    build_adapter,
)
from .upstreams import (
    CallableUpstream,
    HttpJsonUpstream,
    RetryingUpstream,
    SubprocessJsonUpstream,
)
from .wire import AdapterServer, ProtocolViolation, UpstreamUnavailable, serve_stream

__version__ = "0.1.0"
