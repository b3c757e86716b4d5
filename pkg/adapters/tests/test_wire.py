import io
import subprocess
import sys

import pytest

from motionloop_adapters.wire import (
    AdapterServer,
    ProtocolViolation,
    decode_request,
    dispatch,
    encode_document,
    format_clip_document,
    parse_clip_document,
    parse_document,
    read_frame,
    write_frame,
)


def test_document_roundtrip():
    fields = {"motionloop": "1", "op": "train", "manifest": "m.txt"}
    body = "payload\nwith lines"
    back_fields, back_body = parse_document(encode_document(fields, body))
    assert back_fields == fields and back_body == body


def test_frame_roundtrip():
    stream = io.BytesIO()
    write_frame(stream, b"abc\n\nxyz")
    stream.seek(0)
    assert read_frame(stream) == b"abc\n\nxyz"
    assert read_frame(stream) is None


def test_decode_request_requires_version_and_op():
    with pytest.raises(ProtocolViolation):
        decode_request(encode_document({"op": "generate"}).encode())
    with pytest.raises(ProtocolViolation):
        decode_request(encode_document({"motionloop": "1"}).encode())


def test_clip_document_roundtrip():
    frames = [[[0.1 * t + 0.01 * j, -1.5, 2.0] for j in range(22)] for t in range(4)]
    document = format_clip_document(frames, fps=20.0, clip_id="c-1", source_prompt_id="p-1")
    clip = parse_clip_document(document)
    assert clip["clip_id"] == "c-1"
    assert clip["fps"] == 20.0
    assert clip["joint_count"] == 22
    assert clip["source_prompt_id"] == "p-1"
    assert clip["frames"] == frames


def test_clip_document_rejects_bad_width():
    document = format_clip_document([[[0, 0, 0]] * 22], fps=20.0, clip_id="c")
    broken = document.replace("frames: 1", "frames: 1").rsplit("\n", 2)[0] + "\n0.0 1.0\n"
    with pytest.raises(ProtocolViolation):
        parse_clip_document(broken)


def test_socket_server_roundtrip():
    def handler(op, fields, body):
        return {"echo_op": op}, body.upper()

    server = AdapterServer(handler)
    server.start_background()
    try:
        import socket

        host, port = server.address.rsplit(":", 1)
        with socket.create_connection((host, int(port)), timeout=5) as conn:
            stream = conn.makefile("rwb")
            write_frame(stream, encode_document(
                {"motionloop": "1", "op": "ping"}, "hello").encode())
            fields, body = parse_document(read_frame(stream).decode("utf-8"))
        assert fields["status"] == "ok" and fields["echo_op"] == "ping"
        assert body == "HELLO"
    finally:
        server.shutdown()
        server.server_close()


def test_serve_main_over_stdio():
    """The installed entry point answers frames on stdin/stdout."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "motionloop_adapters.serve",
         "--kind", "train_rollout", "--mock-upstream"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
    )
    try:
        request = encode_document(
            {"motionloop": "1", "op": "train", "manifest": "x/manifest.txt"}
        ).encode()
        write_frame(proc.stdin, request)
        response = read_frame(proc.stdout)
        fields, _body = parse_document(response.decode("utf-8"))
        assert fields["status"] == "ok"
        assert fields["policy_id"] == "upstream-policy-000"
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)
