"""Service protocol: structured-text documents over sockets or subprocess pipes.

One request/response per call. A document is ``key: value`` header lines, a
blank line, then an optional free-form body (clip payloads, chat messages).
Frames on a byte stream are length-prefixed so bodies may contain anything.

Endpoints (see the orchestrator): ``generate``, ``evaluate``, ``train``,
``rollout``, ``schedule``.
"""

from __future__ import annotations

import io
import socket
import socketserver
import subprocess
import threading

from .errors import ProtocolViolation, UpstreamUnavailable

PROTOCOL_VERSION = "1"

KNOWN_OPS = ("generate", "evaluate", "train", "rollout", "schedule", "shutdown")


# --- documents ---

def encode_document(fields: dict[str, str], body: str = "") -> str:
    """Render header fields plus an optional body into one document."""
    lines = []
    for key, value in fields.items():
        if "\n" in key or ":" in key:
            raise ProtocolViolation(f"illegal field name {key!r}")
        value = str(value)
        if "\n" in value:
            raise ProtocolViolation(f"field {key!r} value contains a newline; use the body")
        lines.append(f"{key}: {value}")
    text = "\n".join(lines) + "\n"
    if body:
        text += "\n" + body
    return text


def parse_document(text: str) -> tuple[dict[str, str], str]:
    """Split a document into (fields, body)."""
    fields: dict[str, str] = {}
    lines = text.split("\n")
    body_index = None
    for i, line in enumerate(lines):
        if line == "":
            body_index = i + 1
            break
        if ":" not in line:
            raise ProtocolViolation(f"bad header line: {line!r}")
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    body = "\n".join(lines[body_index:]) if body_index is not None else ""
    return fields, body


# --- framing ---

def write_frame(stream, payload: bytes) -> None:
    stream.write(f"{len(payload)}\n".encode("ascii"))
    stream.write(payload)
    stream.flush()


def read_frame(stream) -> bytes | None:
    """Read one length-prefixed frame; None at clean end of stream."""
    header = b""
    while not header.endswith(b"\n"):
        chunk = stream.read(1)
        if not chunk:
            if header:
                raise ProtocolViolation("stream ended inside a frame header")
            return None
        header += chunk
    try:
        length = int(header.strip())
    except ValueError as exc:
        raise ProtocolViolation(f"bad frame header {header!r}") from exc
    payload = b""
    while len(payload) < length:
        chunk = stream.read(length - len(payload))
        if not chunk:
            raise ProtocolViolation("stream ended inside a frame payload")
        payload += chunk
    return payload


# --- requests and responses ---

def encode_request(op: str, fields: dict[str, str], body: str = "") -> bytes:
    header = {"motionloop": PROTOCOL_VERSION, "op": op}
    header.update(fields)
    return encode_document(header, body).encode("utf-8")


def decode_request(payload: bytes) -> tuple[str, dict[str, str], str]:
    fields, body = parse_document(payload.decode("utf-8"))
    if fields.get("motionloop") != PROTOCOL_VERSION:
        raise ProtocolViolation("missing or unsupported protocol version")
    op = fields.pop("op", None)
    if not op:
        raise ProtocolViolation("request is missing 'op'")
    fields.pop("motionloop", None)
    return op, fields, body


def encode_response(fields: dict[str, str], body: str = "", error: str | None = None) -> bytes:
    header = {"motionloop": PROTOCOL_VERSION, "status": "error" if error else "ok"}
    if error:
        header["error"] = error
    header.update(fields)
    return encode_document(header, body).encode("utf-8")


def decode_response(payload: bytes) -> tuple[dict[str, str], str]:
    fields, body = parse_document(payload.decode("utf-8"))
    if fields.get("motionloop") != PROTOCOL_VERSION:
        raise ProtocolViolation("missing or unsupported protocol version")
    status = fields.pop("status", None)
    fields.pop("motionloop", None)
    if status == "error":
        raise UpstreamUnavailable(fields.get("error", "remote endpoint reported an error"))
    if status != "ok":
        raise ProtocolViolation(f"bad response status {status!r}")
    return fields, body


# --- transports (client side) ---

class SocketTransport:
    """Connects per request to a ``host:port`` endpoint."""

    def __init__(self, address: str, timeout: float = 30.0):
        if ":" not in address:
            raise ValueError(f"socket address must be host:port, got {address!r}")
        host, port = address.rsplit(":", 1)
        self.host = host
        self.port = int(port)
        self.timeout = timeout

    def call(self, payload: bytes) -> bytes:
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as conn:
                stream = conn.makefile("rwb")
                write_frame(stream, payload)
                response = read_frame(stream)
        except OSError as exc:
            raise UpstreamUnavailable(f"{self.host}:{self.port} unreachable: {exc}") from exc
        if response is None:
            raise UpstreamUnavailable(f"{self.host}:{self.port} closed without a response")
        return response


class SubprocessTransport:
    """Keeps a child process alive and exchanges frames over its pipes."""

    def __init__(self, command: list[str]):
        self.command = command
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE
                )
            except OSError as exc:
                raise UpstreamUnavailable(f"cannot start {self.command}: {exc}") from exc
        return self._proc

    def call(self, payload: bytes) -> bytes:
        with self._lock:
            proc = self._ensure()
            try:
                write_frame(proc.stdin, payload)
                response = read_frame(proc.stdout)
            except (OSError, ValueError) as exc:
                raise UpstreamUnavailable(f"subprocess endpoint failed: {exc}") from exc
        if response is None:
            raise UpstreamUnavailable("subprocess endpoint closed its stream")
        return response

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None


class ServiceClient:
    """Typed request helper over any transport with a ``call(bytes)`` method."""

    def __init__(self, transport):
        self.transport = transport

    def request(self, op: str, fields: dict[str, str], body: str = "") -> tuple[dict[str, str], str]:
        payload = encode_request(op, fields, body)
        return decode_response(self.transport.call(payload))


# --- servers ---

def serve_stream(handler, in_stream, out_stream) -> None:
    """Answer framed requests on a pipe pair until EOF (subprocess transport).

    ``handler(op, fields, body)`` returns ``(fields, body)``; raising inside
    the handler produces an error response and keeps the stream alive.
    """
    while True:
        payload = read_frame(in_stream)
        if payload is None:
            return
        write_frame(out_stream, _dispatch(handler, payload))


def _dispatch(handler, payload: bytes) -> bytes:
    try:
        op, fields, body = decode_request(payload)
    except ProtocolViolation as exc:
        return encode_response({}, error=f"ProtocolViolation: {exc}")
    try:
        out_fields, out_body = handler(op, fields, body)
    except Exception as exc:  # noqa: BLE001 - faults must cross the wire
        return encode_response({}, error=f"{type(exc).__name__}: {exc}")
    return encode_response(out_fields, out_body)


class _FrameRequestHandler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            try:
                payload = read_frame(self.rfile)
            except ProtocolViolation:
                return
            if payload is None:
                return
            write_frame(self.wfile, _dispatch(self.server.service_handler, payload))


class SocketServer(socketserver.ThreadingTCPServer):
    """Local TCP endpoint answering protocol requests; one thread per client."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, handler, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _FrameRequestHandler)
        self.service_handler = handler

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread
