"""Golden-fixture conformance: every adapter answers the shipped requests
with protocol-valid responses of the same shape as the golden responses,
upstream fully stubbed, orchestrator package never imported."""

import math

import pytest

from motionloop_adapters import AdapterConfig, CallableUpstream, build_adapter
from motionloop_adapters.wire import dispatch, parse_clip_document, parse_document

from conftest import load_fixture


def response_shape(payload: bytes):
    fields, body = parse_document(payload.decode("utf-8"))
    return fields, body


def assert_ok_with_golden_fields(response: bytes, golden: bytes):
    fields, _body = response_shape(response)
    golden_fields, _golden_body = response_shape(golden)
    assert fields.get("status") == "ok", fields
    assert set(fields) == set(golden_fields), (
        f"field names differ: {sorted(fields)} vs {sorted(golden_fields)}"
    )


# --- generate ---

def stub_generator_motion(payload):
    assert set(payload) == {"text", "seed"}
    frames = []
    for t in range(120):
        sway = 0.2 * math.sin(2 * math.pi * 2 * t / 120)
        frames.append([[sway + 0.01 * j, 0.0, 0.04 * j] for j in range(22)])
    return {"frames": frames, "fps": 20.0}


def test_generate_conformance(fixtures_dir):
    upstream = CallableUpstream(stub_generator_motion)
    adapter = build_adapter(AdapterConfig(kind="generate"), upstream)
    request = load_fixture("generate.request.txt")
    response = dispatch(adapter, request)
    assert_ok_with_golden_fields(response, load_fixture("generate.response.txt"))

    _fields, body = response_shape(response)
    clip = parse_clip_document(body)
    golden_clip = parse_clip_document(response_shape(load_fixture("generate.response.txt"))[1])
    assert clip["joint_count"] == golden_clip["joint_count"] == 24
    assert len(clip["frames"]) == len(golden_clip["frames"]) == 180
    assert clip["fps"] == golden_clip["fps"] == 30.0
    assert clip["source_prompt_id"] == "fixture-dance-0001"
    # post-processing lifted the body to standing height
    root_z = [frame[0][2] for frame in clip["frames"]]
    assert abs(sum(root_z) / len(root_z) - 0.92) < 0.02
    # hands duplicate wrists (joint expansion ran)
    assert clip["frames"][0][22] == clip["frames"][0][20]
    assert upstream.calls == 1


# --- evaluate ---

def stub_vlm(payload):
    assert set(payload) == {"prompt", "image_base64"}
    return {
        "difficulty": 6.5,
        "alignment": "Aligned",
        "attributes": {"intensity": "fast spins"},
        "rationale": "looks demanding",
    }


def test_evaluate_conformance(fixtures_dir):
    upstream = CallableUpstream(stub_vlm)
    adapter = build_adapter(
        AdapterConfig(kind="evaluate", evaluator_role="vlm-2"), upstream
    )
    request = load_fixture("evaluate.request.txt")
    response = dispatch(adapter, request)
    assert_ok_with_golden_fields(response, load_fixture("evaluate.response.txt"))

    fields, body = response_shape(response)
    assert fields["evaluator_id"] == "vlm-2"
    assert 0.0 <= float(fields["difficulty"]) <= 10.0
    assert fields["alignment"] == "aligned"  # normalized to lowercase
    assert fields["intensity"] == "fast spins"
    assert body.strip() == "looks demanding"


def test_evaluate_clamps_out_of_range_scores(fixtures_dir):
    upstream = CallableUpstream(lambda p: {"difficulty": 14.2, "alignment": "partial"})
    adapter = build_adapter(AdapterConfig(kind="evaluate"), upstream)
    response = dispatch(adapter, load_fixture("evaluate.request.txt"))
    fields, _ = response_shape(response)
    assert float(fields["difficulty"]) == 10.0


# --- train / rollout ---

def stub_tracker(payload):
    if payload["op"] == "train":
        assert payload["manifest"] == "train-000/manifest.txt"
        return {"policy_id": "mock-policy-000"}
    clip = dict(payload["clip"])
    clip["frames"] = [
        [[x + 0.01, y, z] for x, y, z in frame] for frame in clip["frames"]
    ]
    return {"clip": clip}


def test_train_conformance(fixtures_dir):
    adapter = build_adapter(AdapterConfig(kind="train_rollout"), CallableUpstream(stub_tracker))
    response = dispatch(adapter, load_fixture("train.request.txt"))
    assert_ok_with_golden_fields(response, load_fixture("train.response.txt"))
    fields, _ = response_shape(response)
    assert fields["policy_id"] == "mock-policy-000"


def test_rollout_conformance(fixtures_dir):
    adapter = build_adapter(AdapterConfig(kind="train_rollout"), CallableUpstream(stub_tracker))
    request = load_fixture("rollout.request.txt")
    response = dispatch(adapter, request)
    assert_ok_with_golden_fields(response, load_fixture("rollout.response.txt"))

    _fields, body = response_shape(response)
    executed = parse_clip_document(body)
    _op_fields, request_body = parse_document(request.decode("utf-8"))[0], \
        parse_document(request.decode("utf-8"))[1]
    reference = parse_clip_document(request_body)
    assert executed["joint_count"] == reference["joint_count"]
    assert len(executed["frames"]) == len(reference["frames"])
    assert executed["fps"] == reference["fps"]
    assert executed["clip_id"] == reference["clip_id"]


# --- schedule ---

def stub_llm(payload):
    messages = payload["messages"]
    assert len(messages) == 4
    assert "strictly harder" in messages[0]
    assert "SET 1" in messages[1]
    assert "base_action" in messages[2]
    assert "D:" in messages[3]
    return {"text": "SET 1\nA: a\nB: b\nC: c\nD: sentence one\n"
                    "SET 2\nA: a\nB: b\nC: c\nD: sentence two"}


def test_schedule_conformance(fixtures_dir):
    adapter = build_adapter(AdapterConfig(kind="schedule"), CallableUpstream(stub_llm))
    response = dispatch(adapter, load_fixture("schedule.request.txt"))
    assert_ok_with_golden_fields(response, load_fixture("schedule.response.txt"))
    _fields, body = response_shape(response)
    assert body.count("D:") == 2
