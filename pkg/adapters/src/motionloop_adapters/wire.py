"""Standalone implementation of the motionloop wire protocol and clip format.

Adapters talk to the orchestrator only through its external interfaces:
length-prefixed frames carrying structured-text documents, and the clip
text format for motion payloads. This module implements both from the
protocol description so the adapters package has no dependency on the
orchestrator's code.
"""

from __future__ import annotations

import socketserver
import threading

PROTOCOL_VERSION = "1"
CLIP_MAGIC = "motionloop-clip 1"


class ProtocolViolation(Exception):
    """Request or response does not follow the wire protocol."""


class UpstreamUnavailable(Exception):
    """The adapter's upstream system is unreachable or timed out."""


# --- structured-text documents ---

def encode_document(fields: dict[str, str], body: str = "") -> str:
    lines = []
    for key, value in fields.items():
        value = str(value)
        if "\n" in value:
            raise ProtocolViolation(f"field {key!r} value contains a newline; use the body")
        lines.append(f"{key}: {value}")
    text = "\n".join(lines) + "\n"
    if body:
        text += "\n" + body
    return text


def parse_document(text: str) -> tuple[dict[str, str], str]:
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


def dispatch(handler, payload: bytes) -> bytes:
    """Decode, handle, and encode one exchange; faults become error responses."""
    try:
        op, fields, body = decode_request(payload)
    except ProtocolViolation as exc:
        return encode_response({}, error=f"ProtocolViolation: {exc}")
    try:
        out_fields, out_body = handler(op, fields, body)
    except Exception as exc:  # noqa: BLE001 - faults must cross the wire
        return encode_response({}, error=f"{type(exc).__name__}: {exc}")
    return encode_response(out_fields, out_body)


def serve_stream(handler, in_stream, out_stream) -> None:
    """Answer framed requests on a pipe pair until EOF; errors keep it alive."""
    while True:
        payload = read_frame(in_stream)
        if payload is None:
            return
        write_frame(out_stream, dispatch(handler, payload))


class _FrameRequestHandler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            try:
                payload = read_frame(self.rfile)
            except ProtocolViolation:
                return
            if payload is None:
                return
            write_frame(self.wfile, dispatch(self.server.service_handler, payload))


class AdapterServer(socketserver.ThreadingTCPServer):
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


# --- clip documents ---

def format_clip_document(
    frames, fps: float, clip_id: str, root_index: int = 0,
    source_prompt_id: str | None = None,
) -> str:
    """Render a T x J x 3 nested structure into the clip text format."""
    lines = [
        CLIP_MAGIC,
        f"clip_id: {clip_id}",
        f"fps: {float(fps)!r}",
        f"joint_count: {len(frames[0])}",
        f"root_index: {root_index}",
    ]
    if source_prompt_id is not None:
        lines.append(f"source_prompt_id: {source_prompt_id}")
    lines.append(f"frames: {len(frames)}")
    for frame in frames:
        lines.append(" ".join(repr(float(c)) for joint in frame for c in joint))
    return "\n".join(lines) + "\n"


def parse_clip_document(text: str) -> dict:
    """Parse a clip document into a plain dict with nested frame lists."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != CLIP_MAGIC:
        raise ProtocolViolation(f"missing '{CLIP_MAGIC}' header")
    header: dict[str, str] = {}
    body_start = None
    for i, line in enumerate(lines[1:], start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if ":" not in stripped:
            raise ProtocolViolation(f"bad clip header line: {line!r}")
        key, value = stripped.split(":", 1)
        header[key.strip()] = value.strip()
        if key.strip() == "frames":
            body_start = i + 1
            break
    if body_start is None:
        raise ProtocolViolation("clip document has no 'frames:' header")
    for key in ("clip_id", "fps", "joint_count", "root_index", "frames"):
        if key not in header:
            raise ProtocolViolation(f"clip document is missing {key!r}")
    joint_count = int(header["joint_count"])
    frame_count = int(header["frames"])
    rows = [line for line in lines[body_start:] if line.strip()]
    if len(rows) != frame_count:
        raise ProtocolViolation(f"expected {frame_count} frame rows, found {len(rows)}")
    frames = []
    for row in rows:
        values = [float(tok) for tok in row.split()]
        if len(values) != joint_count * 3:
            raise ProtocolViolation("frame row width does not match joint_count")
        frames.append([values[j * 3 : j * 3 + 3] for j in range(joint_count)])
    return {
        "clip_id": header["clip_id"],
        "fps": float(header["fps"]),
        "joint_count": joint_count,
        "root_index": int(header["root_index"]),
        "source_prompt_id": header.get("source_prompt_id"),
        "frames": frames,
    }
