"""Run one adapter as a long-lived endpoint (socket or stdio stream).

Example:
    MOTIONLOOP_GEN_URL=http://localhost:8080/generate \
        motionloop-adapter --kind generate --listen 127.0.0.1:9301

With ``--mock-upstream`` the adapter serves without a reachable upstream,
answering from small built-in stubs; useful for wiring tests.
"""

from __future__ import annotations

import argparse
import math
import sys

from .config import AdapterConfig
from .endpoints import build_adapter
from .upstreams import CallableUpstream, HttpJsonUpstream, SubprocessJsonUpstream
from .wire import AdapterServer, serve_stream


def _mock_upstream(kind: str) -> CallableUpstream:
    if kind == "generate":
        def fn(payload):
            seed = payload.get("seed", 0)
            frames = []
            for t in range(120):
                wobble = 0.05 * math.sin(2 * math.pi * (t / 120 + seed % 7 / 7))
                frames.append([[wobble * (j % 3), 0.0, 0.05 * j] for j in range(22)])
            return {"frames": frames, "fps": 20.0}
        return CallableUpstream(fn)
    if kind == "evaluate":
        return CallableUpstream(lambda payload: {
            "difficulty": 5.0, "alignment": "partial",
            "rationale": "mock upstream verdict",
        })
    if kind == "train_rollout":
        def fn(payload):
            if payload["op"] == "train":
                return {"policy_id": "upstream-policy-000"}
            return {"clip": payload["clip"]}
        return CallableUpstream(fn)
    if kind == "schedule":
        return CallableUpstream(lambda payload: {
            "text": "SET 1\nA: unchanged\nB: none\nC: none\nD: (mock upstream has no library)",
        })
    raise ValueError(kind)


def build_upstream(config: AdapterConfig, mock: bool):
    if mock:
        return _mock_upstream(config.kind)
    if not config.upstream:
        raise SystemExit(
            f"no upstream configured for {config.kind}; set the endpoint env var "
            "or pass --upstream / --mock-upstream"
        )
    if config.kind == "train_rollout":
        return SubprocessJsonUpstream(config.upstream.split(), timeout=config.timeout_seconds)
    return HttpJsonUpstream(config.upstream, timeout=config.timeout_seconds)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kind", required=True,
                        choices=("generate", "evaluate", "train_rollout", "schedule"))
    parser.add_argument("--upstream", default=None,
                        help="upstream URL (or command line for train_rollout)")
    parser.add_argument("--listen", default=None, help="HOST:PORT (default: stdio stream)")
    parser.add_argument("--timeout", type=float, default=30.0)
    parser.add_argument("--retries", type=int, default=2)
    parser.add_argument("--evaluator-role", default="vlm-1")
    parser.add_argument("--mock-upstream", action="store_true")
    args = parser.parse_args(argv)

    config = AdapterConfig(
        kind=args.kind,
        upstream=args.upstream,
        timeout_seconds=args.timeout,
        retries=args.retries,
        transport="socket" if args.listen else "stream",
        listen=args.listen or "127.0.0.1:0",
        evaluator_role=args.evaluator_role,
    )
    handler = build_adapter(config, build_upstream(config, args.mock_upstream))
    print(f"serving {config}", file=sys.stderr, flush=True)

    if args.listen:
        host, port = args.listen.rsplit(":", 1)
        server = AdapterServer(handler, host=host, port=int(port))
        print(f"listening on {server.address}", file=sys.stderr, flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        return 0
    serve_stream(handler, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
