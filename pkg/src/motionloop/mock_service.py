"""Serve the mock components over the wire protocol (stdio or a local socket).

Run as ``python -m motionloop.mock_service`` to answer framed requests on
stdin/stdout (the subprocess transport), or with ``--listen HOST:PORT`` to
serve a local socket endpoint. One process answers every op; point any
subset of the loop's endpoints at it.
"""

from __future__ import annotations

import argparse
import sys

from .mocks import MockGenerator, MockTracker
from .prompts import load_library, load_templates, seed_library, seed_templates
from .services import make_mock_handler
from .wire import SocketServer, serve_stream


def build_handler(args):
    lib = load_library(args.library) if args.library else seed_library()
    templates = load_templates(args.templates) if args.templates else seed_templates()
    generator = MockGenerator(lib)
    tracker = MockTracker(seed=args.seed)
    return make_mock_handler(
        lib, templates, generator, tracker,
        evaluator_id=args.evaluator_id, schedule_seed=args.seed,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--listen", default=None, help="serve on HOST:PORT instead of stdio")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--evaluator-id", default="mock-vlm")
    parser.add_argument("--library", default=None)
    parser.add_argument("--templates", default=None)
    args = parser.parse_args(argv)

    handler = build_handler(args)
    if args.listen:
        host, port = args.listen.rsplit(":", 1)
        server = SocketServer(handler, host=host, port=int(port))
        print(f"serving on {server.address}", file=sys.stderr, flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        return 0
    serve_stream(handler, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
