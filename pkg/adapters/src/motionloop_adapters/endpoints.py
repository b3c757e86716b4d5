"""The protocol endpoint handlers bridging upstream systems.

Each handler answers exactly the ops its endpoint kind owns, converts
between the wire's structured-text formats and the upstream's JSON payloads,
and stays stateless between requests apart from the upstream session handle.

Upstream payload contracts (JSON):
  generate:  {text, seed}                 -> {frames: [[x,y,z]*22]*T, fps}
  evaluate:  {prompt, image_base64}       -> {difficulty, alignment,
                                              attributes?, rationale?}
  train:     {manifest}                   -> {policy_id}
  rollout:   {policy_id, clip}            -> {clip}   (clip = parsed document dict)
  schedule:  {messages: [goal, data, resources, tasks]} -> {text}
"""

from __future__ import annotations

from .config import AdapterConfig
from .postprocess import post_process
from .upstreams import RetryingUpstream
from .wire import (
    ProtocolViolation,
    format_clip_document,
    parse_clip_document,
    parse_document,
)

ALIGNMENT_WORDS = ("aligned", "partial", "mismatch")

ATTRIBUTE_KEYS = (
    "action_sequence",
    "technical_complexity",
    "intensity",
    "balance",
    "continuity",
)

_MESSAGE_NAMES = ("goal", "data_summary", "resources", "tasks_and_schema")


def _retrying(upstream, config: AdapterConfig):
    return RetryingUpstream(upstream, retries=config.retries)


class GeneratorAdapter:
    """`generate`: prompt text in, post-processed 180-frame clip document out."""

    def __init__(self, upstream, config: AdapterConfig):
        self.upstream = _retrying(upstream, config)

    def __call__(self, op: str, fields: dict, body: str):
        if op != "generate":
            raise ProtocolViolation(f"generator endpoint cannot serve op {op!r}")
        for key in ("prompt_id", "text", "seed"):
            if key not in fields:
                raise ProtocolViolation(f"generate request is missing {key!r}")
        reply = self.upstream.call({"text": fields["text"], "seed": int(fields["seed"])})
        if "frames" not in reply or "fps" not in reply:
            raise ProtocolViolation("generator upstream reply is missing frames/fps")
        frames = post_process(reply["frames"], src_fps=float(reply["fps"]))
        document = format_clip_document(
            frames.tolist(),
            fps=30.0,
            clip_id=f"{fields['prompt_id']}-clip",
            source_prompt_id=fields["prompt_id"],
        )
        return {}, document


class EvaluatorAdapter:
    """`evaluate`: stitched keyframe request in, feedback document out."""

    def __init__(self, upstream, config: AdapterConfig):
        self.upstream = _retrying(upstream, config)
        self.evaluator_id = config.evaluator_role

    def __call__(self, op: str, fields: dict, body: str):
        if op != "evaluate":
            raise ProtocolViolation(f"evaluator endpoint cannot serve op {op!r}")
        request_fields, _instructions = parse_document(body)
        for key in ("prompt", "image_base64"):
            if key not in request_fields:
                raise ProtocolViolation(f"evaluate request is missing {key!r}")
        reply = self.upstream.call(
            {"prompt": request_fields["prompt"], "image_base64": request_fields["image_base64"]}
        )
        if "difficulty" not in reply or "alignment" not in reply:
            raise ProtocolViolation("evaluator upstream reply is missing difficulty/alignment")
        difficulty = max(0.0, min(10.0, float(reply["difficulty"])))
        alignment = str(reply["alignment"]).strip().lower()
        if alignment not in ALIGNMENT_WORDS:
            raise ProtocolViolation(f"evaluator upstream sent unknown alignment {alignment!r}")
        attributes = reply.get("attributes", {})
        out = {
            "evaluator_id": self.evaluator_id,
            "difficulty": repr(difficulty),
            "alignment": alignment,
        }
        for key in ATTRIBUTE_KEYS:
            out[key] = str(attributes.get(key, ""))
        return out, str(reply.get("rationale", ""))


class TrackerAdapter:
    """`train`/`rollout`: manifests and clip documents in, policy ids and clips out."""

    def __init__(self, upstream, config: AdapterConfig):
        self.upstream = _retrying(upstream, config)

    def __call__(self, op: str, fields: dict, body: str):
        if op == "train":
            if "manifest" not in fields:
                raise ProtocolViolation("train request is missing 'manifest'")
            reply = self.upstream.call({"op": "train", "manifest": fields["manifest"]})
            if "policy_id" not in reply:
                raise ProtocolViolation("tracker upstream reply is missing policy_id")
            return {"policy_id": str(reply["policy_id"])}, ""
        if op == "rollout":
            if "policy_id" not in fields:
                raise ProtocolViolation("rollout request is missing 'policy_id'")
            clip = parse_clip_document(body)
            reply = self.upstream.call(
                {"op": "rollout", "policy_id": fields["policy_id"], "clip": clip}
            )
            if "clip" not in reply:
                raise ProtocolViolation("tracker upstream reply is missing clip")
            out = reply["clip"]
            document = format_clip_document(
                out["frames"], fps=out["fps"], clip_id=out["clip_id"],
                root_index=out.get("root_index", 0),
                source_prompt_id=out.get("source_prompt_id"),
            )
            return {}, document
        raise ProtocolViolation(f"tracker endpoint cannot serve op {op!r}")


class SchedulerAdapter:
    """`schedule`: four-message chat script in, raw optimized-prompt text out."""

    def __init__(self, upstream, config: AdapterConfig):
        self.upstream = _retrying(upstream, config)

    def __call__(self, op: str, fields: dict, body: str):
        if op != "schedule":
            raise ProtocolViolation(f"scheduler endpoint cannot serve op {op!r}")
        messages = self._split_messages(body)
        reply = self.upstream.call({"messages": messages})
        if "text" not in reply:
            raise ProtocolViolation("scheduler upstream reply is missing text")
        return {}, str(reply["text"])

    @staticmethod
    def _split_messages(body: str) -> list[str]:
        sections: dict[str, list[str]] = {}
        current = None
        for line in body.split("\n"):
            if line.startswith("=== ") and line.endswith(" ==="):
                current = line[4:-4]
                sections[current] = []
                continue
            if current is not None:
                sections[current].append(line)
        missing = [name for name in _MESSAGE_NAMES if name not in sections]
        if missing:
            raise ProtocolViolation(f"chat script is missing sections: {missing}")
        return ["\n".join(sections[name]).strip("\n") for name in _MESSAGE_NAMES]


ADAPTER_CLASSES = {
    "generate": GeneratorAdapter,
    "evaluate": EvaluatorAdapter,
    "train_rollout": TrackerAdapter,
    "schedule": SchedulerAdapter,
}


def build_adapter(config: AdapterConfig, upstream):
    return ADAPTER_CLASSES[config.kind](upstream, config)
