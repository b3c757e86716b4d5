"""
Keyframe stitching and visual evaluation
========================================

Render a clip into the horizontally stitched keyframe strip that travels to
the visual evaluators, encode the request document, and inspect the
deterministic mock evaluator's feedback.
"""

import numpy as np

from motionloop import (
    MockDualEvaluator,
    MotionClip,
    RenderConfig,
    check_alignment_gate,
    mock_evaluate,
    stitch_keyframes,
    subsample_indices,
)
from motionloop.evaluation import encode_request, image_to_pgm
from motionloop.skeleton import rest_pose

# 180 frames at 30 fps; 60 keyframes at stride 3 end up in the strip.
indices = subsample_indices(180, 60)
print(f"keyframe indices: {indices[:5]} ... {indices[-3:]}")

t = np.arange(180)
frames = np.repeat(rest_pose(24, pelvis_height=0.92)[None], 180, axis=0)
frames[:, :, 0] += 0.5 * np.sin(2 * np.pi * 3 * t / 180)[:, None]
frames[:, 16:24, 2] += 0.25 * np.sin(2 * np.pi * 4 * t / 180)[:, None]  # arms swing
clip = MotionClip(frames=frames, fps=30.0, clip_id="demo-stitch")

image = stitch_keyframes(clip, RenderConfig())
print(f"stitched image: {image.width} x {image.height} px "
      f"({image.frame_count} tiles of {image.tile_width})")

document = encode_request(image, "The dancer sways with swinging arms.")
header = document.split("image_base64:")[0].strip().replace("\n", " | ")
print(f"request header: {header}")
print(f"payload: {len(image_to_pgm(image))} bytes before base64")

# The mock evaluator maps mean joint speed into a 1..10 difficulty and checks
# the generator tag for alignment.
feedback = mock_evaluate(clip, None)
print(f"\nmock difficulty {feedback.difficulty:.2f}/10, alignment {feedback.alignment.value}")
print(f"rationale: {feedback.rationale}")

dual = MockDualEvaluator().evaluate(clip, None)
print(f"dual roles: {dual.first.evaluator_id}={dual.first.difficulty:.2f} "
      f"{dual.second.evaluator_id}={dual.second.difficulty:.2f} "
      f"(gap {dual.agreement:.2f})")
print(f"permissive gate on partial alignment: "
      f"{check_alignment_gate(dual.second, 'permissive')}")
print(f"strict gate on partial alignment:     "
      f"{check_alignment_gate(dual.second, 'strict')}")
