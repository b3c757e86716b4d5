"""Visual evaluation protocol: keyframe stitching, request encoding, feedback.

A clip is uniformly subsampled to 60 keyframes, each rendered as a 1-px
stick figure on an 8-bit grayscale tile (orthographic XZ projection, fixed
world window, integer Bresenham segments so images are bit-stable across
platforms), and the tiles are concatenated horizontally. The stitched image
travels base64-encoded inside an evaluation request; responses carry a
difficulty score, an alignment verdict, five attribute descriptors, and a
rationale. A deterministic mock evaluator stands in for real VLM endpoints.
"""

from __future__ import annotations

import base64
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .clips import MotionClip, clip_mean_speed
from .errors import (
    BadCount,
    JointCountUnsupported,
    MalformedResponse,
    TooShort,
    UnknownAlignment,
)
from .prompts import ActionPrompt
from .skeleton import bone_segments
from .wire import encode_document, parse_document

KEYFRAME_COUNT = 60

ATTRIBUTE_KEYS = (
    "action_sequence",
    "technical_complexity",
    "intensity",
    "balance",
    "continuity",
)


class Alignment(enum.Enum):
    ALIGNED = "aligned"
    PARTIAL = "partial"
    MISMATCH = "mismatch"


@dataclass(frozen=True)
class RenderConfig:
    """Orthographic XZ window and tile geometry for stick-figure tiles."""

    tile_width: int = 256
    tile_height: int = 256
    x_min: float = -2.0
    x_max: float = 2.0
    z_min: float = 0.0
    z_max: float = 3.0


@dataclass
class StitchedImage:
    """Keyframe tiles concatenated left to right into one grayscale buffer."""

    pixels: np.ndarray  # (height, width) uint8
    frame_count: int
    tile_width: int

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.pixels.shape[1] != self.frame_count * self.tile_width:
            raise ValueError("width must equal frame_count * tile_width")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def subsample_indices(total_frames: int, count: int) -> list[int]:
    """Uniform keyframe indices floor(i * T / k); strictly increasing from 0."""
    if not 1 <= count <= total_frames:
        raise BadCount(f"need 1 <= count <= T, got count={count}, T={total_frames}")
    return [(i * total_frames) // count for i in range(count)]


def _to_pixel(x: float, z: float, cfg: RenderConfig) -> tuple[int, int]:
    u = (x - cfg.x_min) / (cfg.x_max - cfg.x_min) * (cfg.tile_width - 1)
    v = (cfg.z_max - z) / (cfg.z_max - cfg.z_min) * (cfg.tile_height - 1)
    return int(math.floor(u + 0.5)), int(math.floor(v + 0.5))


def _draw_segment(tile: np.ndarray, p0: tuple[int, int], p1: tuple[int, int]) -> None:
    """Integer Bresenham line; pixels outside the tile are skipped."""
    height, width = tile.shape
    x0, y0 = p0
    x1, y1 = p1
    span = max(abs(x1 - x0), abs(y1 - y0))
    if span > 8 * (width + height):
        return  # both endpoints far outside the window
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= x0 < width and 0 <= y0 < height:
            tile[y0, x0] = 255
        if x0 == x1 and y0 == y1:
            return
        doubled = 2 * err
        if doubled >= dy:
            err += dy
            x0 += sx
        if doubled <= dx:
            err += dx
            y0 += sy


def render_frame(pose: np.ndarray, cfg: RenderConfig = RenderConfig()) -> np.ndarray:
    """Rasterize a 24-joint pose into one grayscale tile."""
    pose = np.asarray(pose, dtype=np.float64)
    if pose.shape != (24, 3):
        raise JointCountUnsupported(f"render_frame needs a (24, 3) pose, got {pose.shape}")
    tile = np.zeros((cfg.tile_height, cfg.tile_width), dtype=np.uint8)
    pixels = [_to_pixel(p[0], p[2], cfg) for p in pose]
    for parent, child in bone_segments(24):
        _draw_segment(tile, pixels[parent], pixels[child])
    return tile


def stitch_keyframes(clip: MotionClip, cfg: RenderConfig = RenderConfig()) -> StitchedImage:
    """Render 60 uniformly subsampled keyframes and concatenate them."""
    if clip.frame_count < KEYFRAME_COUNT:
        raise TooShort(f"stitching needs >= {KEYFRAME_COUNT} frames, got {clip.frame_count}")
    indices = subsample_indices(clip.frame_count, KEYFRAME_COUNT)
    tiles = [render_frame(clip.frames[t], cfg) for t in indices]
    return StitchedImage(
        pixels=np.hstack(tiles), frame_count=KEYFRAME_COUNT, tile_width=cfg.tile_width
    )


def image_to_pgm(image: StitchedImage) -> bytes:
    """Canonical byte encoding: binary PGM (P5), row-major, 8-bit."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def pgm_to_image(data: bytes, tile_width: int) -> StitchedImage:
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise MalformedResponse("not a P5 grayscale image")
    width, height = (int(tok) for tok in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8, count=width * height)
    return StitchedImage(
        pixels=pixels.reshape(height, width).copy(),
        frame_count=width // tile_width,
        tile_width=tile_width,
    )


# --- requests ---

_INSTRUCTION_BLOCK = """\
You are given a prompt and a horizontally stitched sequence of skeleton
keyframes rendered left to right in time order. Judge the human motion only,
ignoring scene or prop differences. Reply with these fields:
alignment: one of aligned | partial | mismatch (does the motion match the prompt?)
difficulty: a number from 0 to 10
action_sequence: short description
technical_complexity: short description
intensity: short description
balance: short description
continuity: short description
rationale: one or two sentences
"""


def encode_request(image: StitchedImage, prompt_text: str) -> str:
    """Build the evaluation request document (standard base64, no wrapping)."""
    encoded = base64.b64encode(image_to_pgm(image)).decode("ascii")
    fields = {
        "prompt": prompt_text,
        "image_width": str(image.width),
        "image_height": str(image.height),
        "tile_width": str(image.tile_width),
        "image_base64": encoded,
    }
    return encode_document(fields, _INSTRUCTION_BLOCK)


def decode_request(document: str) -> tuple[str, bytes]:
    """Recover (prompt, image bytes) from an evaluation request document."""
    fields, _body = parse_document(document)
    for key in ("prompt", "image_base64"):
        if key not in fields:
            raise MalformedResponse(f"evaluation request is missing {key!r}")
    return fields["prompt"], base64.b64decode(fields["image_base64"])


# --- feedback ---

@dataclass
class VlmFeedback:
    """One evaluator's verdict on a clip/prompt pair."""

    evaluator_id: str
    difficulty: float
    alignment: Alignment
    attributes: dict[str, str] = field(default_factory=dict)
    rationale: str = ""
    clamped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.difficulty <= 10.0:
            raise ValueError(f"difficulty must be in [0, 10], got {self.difficulty}")

    def to_record(self) -> dict:
        return {
            "evaluator_id": self.evaluator_id,
            "difficulty": self.difficulty,
            "alignment": self.alignment.value,
            "attributes": dict(self.attributes),
            "rationale": self.rationale,
            "clamped": self.clamped,
        }

    @classmethod
    def from_record(cls, record: dict) -> "VlmFeedback":
        return cls(
            evaluator_id=record["evaluator_id"],
            difficulty=record["difficulty"],
            alignment=Alignment(record["alignment"]),
            attributes=dict(record.get("attributes", {})),
            rationale=record.get("rationale", ""),
            clamped=record.get("clamped", False),
        )


@dataclass
class DualFeedback:
    """Verdicts from the two evaluator roles; scores are never averaged."""

    first: VlmFeedback   # GPT-4o role
    second: VlmFeedback  # Qwen role

    @property
    def agreement(self) -> float:
        return abs(self.first.difficulty - self.second.difficulty)

    def min_difficulty(self) -> float:
        return min(self.first.difficulty, self.second.difficulty)

    def to_record(self) -> dict:
        return {"first": self.first.to_record(), "second": self.second.to_record()}

    @classmethod
    def from_record(cls, record: dict) -> "DualFeedback":
        return cls(
            first=VlmFeedback.from_record(record["first"]),
            second=VlmFeedback.from_record(record["second"]),
        )


def format_eval_response(feedback: VlmFeedback) -> str:
    """Render feedback into the response document an evaluator endpoint emits."""
    fields = {
        "evaluator_id": feedback.evaluator_id,
        "difficulty": repr(feedback.difficulty),
        "alignment": feedback.alignment.value,
    }
    for key in ATTRIBUTE_KEYS:
        fields[key] = feedback.attributes.get(key, "")
    return encode_document(fields, feedback.rationale)


def parse_eval_response(document: str, evaluator_id: str | None = None) -> VlmFeedback:
    """Parse an evaluator response; difficulty is clamped into [0, 10]."""
    try:
        fields, body = parse_document(document)
    except Exception as exc:
        raise MalformedResponse(f"unparseable evaluator response: {exc}") from exc
    if "difficulty" not in fields or "alignment" not in fields:
        raise MalformedResponse("response must carry 'difficulty' and 'alignment'")
    try:
        difficulty = float(fields["difficulty"])
    except ValueError as exc:
        raise MalformedResponse(f"bad difficulty {fields['difficulty']!r}") from exc
    if not math.isfinite(difficulty):
        raise MalformedResponse(f"bad difficulty {difficulty!r}")
    word = fields["alignment"].strip().lower()
    try:
        alignment = Alignment(word)
    except ValueError as exc:
        raise UnknownAlignment(f"unknown alignment word {word!r}") from exc
    clamped = not 0.0 <= difficulty <= 10.0
    difficulty = min(10.0, max(0.0, difficulty))
    attributes = {key: fields.get(key, "") for key in ATTRIBUTE_KEYS}
    return VlmFeedback(
        evaluator_id=evaluator_id or fields.get("evaluator_id", "unknown"),
        difficulty=difficulty,
        alignment=alignment,
        attributes=attributes,
        rationale=body.strip(),
        clamped=clamped,
    )


# --- mock evaluator ---

def _speed_to_difficulty(speed: float, scale: float) -> float:
    # Affine-sigmoid map of mean joint speed into [1, 10]; exactly 1 at rest.
    return 1.0 + 9.0 * math.tanh(max(0.0, speed) / scale)


def mock_evaluate(
    clip: MotionClip,
    prompt: ActionPrompt | None,
    evaluator_id: str = "mock",
    speed_scale: float = 6.0,
) -> VlmFeedback:
    """Deterministic stand-in for a VLM evaluator.

    Difficulty rises monotonically with the clip's mean joint speed (the
    coarse physical difficulty proxy); alignment is Aligned exactly when the
    clip's generator tag matches the prompt, Partial otherwise.
    """
    speed = clip_mean_speed(clip) if clip.frame_count >= 2 else 0.0
    difficulty = _speed_to_difficulty(speed, speed_scale)
    if prompt is not None and clip.source_prompt_id == prompt.prompt_id:
        alignment = Alignment.ALIGNED
    else:
        alignment = Alignment.PARTIAL
    band = "low" if difficulty < 4.0 else ("moderate" if difficulty < 7.0 else "high")
    attributes = {
        "action_sequence": f"{clip.frame_count} frames of continuous whole-body motion",
        "technical_complexity": f"{band} complexity",
        "intensity": f"mean joint speed {speed:.2f} m/s",
        "balance": "stable root trajectory",
        "continuity": "no visible cuts between keyframes",
    }
    rationale = (
        f"Scored {difficulty:.2f}/10 from observed motion speed; "
        f"alignment {alignment.value} against the given prompt."
    )
    return VlmFeedback(
        evaluator_id=evaluator_id,
        difficulty=difficulty,
        alignment=alignment,
        attributes=attributes,
        rationale=rationale,
    )


class MockDualEvaluator:
    """Two mock evaluator roles with slightly different difficulty scales."""

    def __init__(self, first_scale: float = 6.0, second_scale: float = 5.0):
        self.first_scale = first_scale
        self.second_scale = second_scale

    def evaluate(self, clip: MotionClip, prompt: ActionPrompt | None) -> DualFeedback:
        return DualFeedback(
            first=mock_evaluate(clip, prompt, "gpt4o-role", self.first_scale),
            second=mock_evaluate(clip, prompt, "qwen-role", self.second_scale),
        )


# --- alignment gate ---

PERMISSIVE, STRICT = "permissive", "strict"


def check_alignment_gate(feedback: VlmFeedback, policy: str = PERMISSIVE) -> bool:
    """Permissive accepts Aligned and Partial; strict accepts only Aligned."""
    if policy == PERMISSIVE:
        return feedback.alignment in (Alignment.ALIGNED, Alignment.PARTIAL)
    if policy == STRICT:
        return feedback.alignment is Alignment.ALIGNED
    raise ValueError(f"unknown gate policy {policy!r}")
