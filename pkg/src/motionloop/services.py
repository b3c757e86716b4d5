"""Remote component wrappers and endpoint handlers for the service protocol.

The orchestrator can swap any mock for a remote endpoint: generators,
evaluators, trackers, and the scheduler all speak the same framed
structured-text protocol (see ``wire``). This module provides the client
wrappers that implement the in-process component interfaces over a
transport, plus a handler that serves the mock components, which doubles as
the reference implementation for adapter authors. Golden request/response
fixtures for adapter conformance are generated here.
"""

from __future__ import annotations

import math
import os

from .clips import format_clip_document, load_manifest_clips, parse_clip_document, save_clip, write_manifest
from .errors import ProtocolViolation
from .evaluation import (
    Alignment,
    DualFeedback,
    RenderConfig,
    VlmFeedback,
    decode_request,
    encode_request,
    format_eval_response,
    parse_eval_response,
    pgm_to_image,
    stitch_keyframes,
)
from .prompts import ActionPrompt, parse_prompt
from .scheduler import ChatScript
from .wire import ServiceClient, encode_document, parse_document


# --- client-side components ---

class RemoteGenerator:
    """`generate` endpoint as a generator component."""

    def __init__(self, transport):
        self.client = ServiceClient(transport)

    def generate(self, prompt: ActionPrompt, seed: int):
        _fields, body = self.client.request(
            "generate",
            {"prompt_id": prompt.prompt_id, "text": prompt.text, "seed": str(seed)},
        )
        return parse_clip_document(body, origin="generate response")


class RemoteEvaluator:
    """One `evaluate` endpoint (a single VLM role)."""

    def __init__(self, transport, evaluator_id: str, render_cfg: RenderConfig = RenderConfig()):
        self.client = ServiceClient(transport)
        self.evaluator_id = evaluator_id
        self.render_cfg = render_cfg

    def evaluate_clip(self, clip, prompt_text: str) -> VlmFeedback:
        image = stitch_keyframes(clip, self.render_cfg)
        request_doc = encode_request(image, prompt_text)
        fields, body = self.client.request("evaluate", {}, request_doc)
        return parse_eval_response(encode_document(fields, body), evaluator_id=self.evaluator_id)


class RemoteDualEvaluator:
    """Two evaluator endpoints fused into the dual-feedback interface."""

    def __init__(self, first: RemoteEvaluator, second: RemoteEvaluator):
        self.first = first
        self.second = second

    def evaluate(self, clip, prompt: ActionPrompt) -> DualFeedback:
        return DualFeedback(
            first=self.first.evaluate_clip(clip, prompt.text),
            second=self.second.evaluate_clip(clip, prompt.text),
        )


class RemoteTracker:
    """`train`/`rollout` endpoints as a tracker component.

    Training materializes the dataset as clip files plus a manifest under
    ``workdir`` because the wire contract passes a manifest path.
    """

    def __init__(self, transport, workdir: str):
        self.client = ServiceClient(transport)
        # the manifest path crosses process boundaries; relative paths would
        # break under a serving process with a different working directory
        self.workdir = os.path.abspath(workdir)
        self._train_count = 0

    def train(self, clips) -> str:
        directory = os.path.join(self.workdir, f"train-{self._train_count:03d}")
        os.makedirs(directory, exist_ok=True)
        self._train_count += 1
        paths = []
        for clip in clips:
            path = os.path.join(directory, f"{clip.clip_id}.clip")
            save_clip(clip, path)
            paths.append(path)
        manifest = os.path.join(directory, "manifest.txt")
        write_manifest(paths, manifest)
        fields, _body = self.client.request("train", {"manifest": manifest})
        if "policy_id" not in fields:
            raise ProtocolViolation("train response is missing policy_id")
        return fields["policy_id"]

    def rollout(self, policy_id: str, clip):
        _fields, body = self.client.request(
            "rollout", {"policy_id": policy_id}, format_clip_document(clip)
        )
        return parse_clip_document(body, origin="rollout response")


class RemoteScheduler:
    """`schedule` endpoint callable used by the LLM policy."""

    def __init__(self, transport):
        self.client = ServiceClient(transport)

    def __call__(self, script: ChatScript) -> str:
        _fields, body = self.client.request("schedule", {}, script.to_body())
        return body


# --- server-side handler over the mock components ---

def feedback_to_wire(feedback: VlmFeedback) -> tuple[dict, str]:
    """Split a feedback document into response (fields, body)."""
    fields, body = parse_document(format_eval_response(feedback))
    return fields, body


def mock_image_evaluate(
    prompt_text: str, image_bytes: bytes, evaluator_id: str, tile_width: int = 256
) -> VlmFeedback:
    """Image-only mock for serving `evaluate` without clip access.

    Difficulty derives from the fraction of lit pixels, a crude visual
    activity proxy; alignment is Partial because the image alone cannot
    prove which prompt produced it.
    """
    image = pgm_to_image(image_bytes, tile_width=tile_width)
    lit_fraction = float((image.pixels > 0).mean())
    difficulty = 1.0 + 9.0 * math.tanh(lit_fraction * 60.0)
    attributes = {
        "action_sequence": f"{image.frame_count} stitched keyframes",
        "technical_complexity": f"lit pixel fraction {lit_fraction:.4f}",
        "intensity": "estimated from stroke coverage",
        "balance": "not assessed from stills",
        "continuity": "keyframes are temporally ordered",
    }
    return VlmFeedback(
        evaluator_id=evaluator_id,
        difficulty=difficulty,
        alignment=Alignment.PARTIAL,
        attributes=attributes,
        rationale=f"Visual activity score for prompt: {prompt_text[:60]}",
    )


def make_mock_handler(lib, templates, generator, tracker, evaluator_id: str = "mock-vlm",
                      schedule_seed: int = 0):
    """Protocol handler backed entirely by the deterministic mocks."""
    from .mocks import mock_schedule_response

    def handle(op: str, fields: dict, body: str):
        if op == "generate":
            for key in ("prompt_id", "text", "seed"):
                if key not in fields:
                    raise ProtocolViolation(f"generate request is missing {key!r}")
            prompt = parse_prompt(lib, templates, fields["text"])
            prompt.prompt_id = fields["prompt_id"]
            clip = generator.generate(prompt, int(fields["seed"]))
            return {}, format_clip_document(clip)
        if op == "evaluate":
            prompt_text, image_bytes = decode_request(body)
            request_fields, _ = parse_document(body)
            tile_width = int(request_fields.get("tile_width", "256"))
            feedback = mock_image_evaluate(prompt_text, image_bytes, evaluator_id, tile_width)
            return feedback_to_wire(feedback)
        if op == "train":
            if "manifest" not in fields:
                raise ProtocolViolation("train request is missing 'manifest'")
            clips = load_manifest_clips(fields["manifest"])
            return {"policy_id": tracker.train(clips)}, ""
        if op == "rollout":
            if "policy_id" not in fields:
                raise ProtocolViolation("rollout request is missing 'policy_id'")
            clip = parse_clip_document(body, origin="rollout request")
            return {}, format_clip_document(tracker.rollout(fields["policy_id"], clip))
        if op == "schedule":
            return {}, mock_schedule_response(body, lib, templates, schedule_seed)
        raise ProtocolViolation(f"unsupported op {op!r}")

    return handle
