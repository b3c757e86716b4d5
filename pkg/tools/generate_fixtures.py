#!/usr/bin/env python3
"""Regenerate the golden fixtures checked into the repository.

Writes the T-pose golden tile used by the rendering tests and the protocol
request/response pairs under fixtures/protocol/ that adapter implementations
are verified against. Re-running on the same platform must be a no-op; the
conformance tests diff fresh generations against the committed bytes.
"""

from __future__ import annotations

import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from motionloop.clips import format_clip_document, save_clip, write_manifest  # noqa: E402
from motionloop.evaluation import (  # noqa: E402
    RenderConfig,
    StitchedImage,
    encode_request,
    image_to_pgm,
    render_frame,
    stitch_keyframes,
)
from motionloop.mocks import MockGenerator, MockTracker, mock_schedule_response  # noqa: E402
from motionloop.prompts import seed_library, seed_templates  # noqa: E402
from motionloop.scheduler import build_llm_messages, Observation, SetRecord  # noqa: E402
from motionloop.services import make_mock_handler  # noqa: E402
from motionloop.skeleton import rest_pose  # noqa: E402
from motionloop.wire import decode_response, encode_request as wire_request  # noqa: E402

FIXTURE_TILE = os.path.join(ROOT, "tests", "fixtures", "tpose_tile.pgm")
PROTOCOL_DIR = os.path.join(ROOT, "fixtures", "protocol")

SMALL_RENDER = RenderConfig(tile_width=32, tile_height=32)


def fixture_prompt(lib, templates):
    from motionloop.prompts import SLOTS, instantiate_prompt

    selection = {slot: lib.eligible("dance", slot, 2, 2)[0].phrase for slot in SLOTS}
    return instantiate_prompt(
        lib, templates, "dance", 0, selection, prompt_id="fixture-dance-0001"
    )


def write_bytes(path, data: bytes):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    print(f"wrote {os.path.relpath(path, ROOT)} ({len(data)} bytes)")


def golden_tile():
    pose = rest_pose(24, pelvis_height=0.92)
    tile = render_frame(pose)
    image = StitchedImage(pixels=tile, frame_count=1, tile_width=tile.shape[1])
    write_bytes(FIXTURE_TILE, image_to_pgm(image))


def protocol_fixtures():
    lib, templates = seed_library(), seed_templates()
    generator = MockGenerator(lib)
    tracker = MockTracker(seed=0)
    handler = make_mock_handler(lib, templates, generator, tracker, evaluator_id="mock-vlm")

    prompt = fixture_prompt(lib, templates)
    clip = generator.generate(prompt, seed=7)

    def run(name, op, fields, body=""):
        request = wire_request(op, fields, body)
        from motionloop.wire import _dispatch

        response = _dispatch(handler, request)
        decode_response(response)  # sanity: golden responses are status ok
        write_bytes(os.path.join(PROTOCOL_DIR, f"{name}.request.txt"), request)
        write_bytes(os.path.join(PROTOCOL_DIR, f"{name}.response.txt"), response)

    # generate
    run("generate", "generate",
        {"prompt_id": prompt.prompt_id, "text": prompt.text, "seed": "7"})

    # evaluate (small tiles keep the fixture compact)
    image = stitch_keyframes(clip, SMALL_RENDER)
    run("evaluate", "evaluate", {}, encode_request(image, prompt.text))

    # train: materialize the dataset layout the golden request references
    dataset_dir = os.path.join(PROTOCOL_DIR, "train-000")
    os.makedirs(dataset_dir, exist_ok=True)
    clip_path = os.path.join(dataset_dir, f"{clip.clip_id}.clip")
    save_clip(clip, clip_path)
    manifest = os.path.join(dataset_dir, "manifest.txt")
    write_manifest([f"{clip.clip_id}.clip"], manifest)
    cwd = os.getcwd()
    os.chdir(PROTOCOL_DIR)
    try:
        run("train", "train", {"manifest": "train-000/manifest.txt"})
        run("rollout", "rollout", {"policy_id": "mock-policy-000"},
            format_clip_document(clip))
    finally:
        os.chdir(cwd)

    # schedule: a two-set observation rendered through the chat protocol
    from motionloop.evaluation import Alignment, DualFeedback, VlmFeedback
    from motionloop.metrics import MetricReport
    import numpy as np

    def record(success, d1, d2, tier):
        from motionloop.prompts import SLOTS, instantiate_prompt

        selection = {slot: lib.eligible("dance", slot, tier, tier)[0].phrase for slot in SLOTS}
        set_prompt = instantiate_prompt(lib, templates, "dance", 0, selection)
        report = MetricReport(
            clip_id=f"{set_prompt.prompt_id}-clip", g_mpjpe=0.05, l_mpjpe=0.03,
            vel_dist=0.4, acc_dist=1.1, frame_errors=np.zeros(3),
            clip_success_rate=success, succeeded=success == 1.0, tau=0.5,
        )
        feedback = DualFeedback(
            first=VlmFeedback("gpt4o-role", d1, Alignment.ALIGNED),
            second=VlmFeedback("qwen-role", d2, Alignment.ALIGNED),
        )
        return SetRecord(prompt=set_prompt, report=report, feedback=feedback)

    obs = Observation(loop_index=1, sets=[record(1.0, 2.0, 2.5, 1), record(0.6, 7.0, 7.5, 3)])
    script = build_llm_messages(obs, lib, templates)
    run("schedule", "schedule", {}, script.to_body())

    readme = """Golden protocol fixtures
========================

One request/response pair per endpoint op, produced by the deterministic
mock components (seed 0, generator seed 7). Adapters must answer each
*.request.txt with a response of the same shape as *.response.txt:
identical header fields present, same body format; free-text values
(rationale, attribute descriptions) may differ.

The train request references the relative path train-000/manifest.txt;
run conformance checks with this directory as the working directory.
Regenerate everything with: python3 tools/generate_fixtures.py
"""
    write_bytes(os.path.join(PROTOCOL_DIR, "README.txt"), readme.encode())


if __name__ == "__main__":
    golden_tile()
    protocol_fixtures()
