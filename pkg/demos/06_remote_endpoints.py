"""
Pluggable service endpoints
===========================

Every loop component can live behind the wire protocol. This demo serves the
mocks on a local socket and drives them through the same remote wrappers an
external generator, evaluator pair, tracker, or scheduler LLM would use.
"""

import tempfile

from motionloop import MockGenerator, MockTracker, sample_batch, seed_library, seed_templates
from motionloop.evaluation import RenderConfig
from motionloop.scheduler import Observation, build_llm_messages
from motionloop.services import (
    RemoteEvaluator,
    RemoteGenerator,
    RemoteScheduler,
    RemoteTracker,
    make_mock_handler,
)
from motionloop.wire import SocketServer, SocketTransport

lib, templates = seed_library(), seed_templates()

server = SocketServer(
    make_mock_handler(lib, templates, MockGenerator(lib), MockTracker(seed=0)),
    host="127.0.0.1", port=0,
)
server.start_background()
print(f"mock services listening on {server.address}")

transport = SocketTransport(server.address)
prompt = sample_batch(lib, templates, "combat", 1, (3, 3), rng_seed=2)[0]

# generate: prompt text + seed in, clip document out
clip = RemoteGenerator(transport).generate(prompt, seed=5)
print(f"generate -> clip {clip.clip_id}: {clip.frame_count} frames, {clip.joint_count} joints")

# evaluate: stitched keyframes in, difficulty/alignment/attributes out
evaluator = RemoteEvaluator(transport, "vlm-demo", RenderConfig(tile_width=32, tile_height=32))
feedback = evaluator.evaluate_clip(clip, prompt.text)
print(f"evaluate -> difficulty {feedback.difficulty:.2f}, alignment {feedback.alignment.value}")

# train + rollout: manifests and clip documents over the wire
with tempfile.TemporaryDirectory() as workdir:
    tracker = RemoteTracker(transport, workdir=workdir)
    policy_id = tracker.train([clip])
    executed = tracker.rollout(policy_id, clip)
    print(f"train -> {policy_id}; rollout -> {executed.frame_count} frames back")

# schedule: the four-message chat script in, SET/A/B/C/D text out. The mock
# endpoint answers with the rule policy, so the loop behaves identically
# whether the scheduler is local or remote.
from motionloop.metrics import score_clip

report = score_clip(clip, executed, tau=0.5)
from motionloop.evaluation import DualFeedback
from motionloop.scheduler import SetRecord

dual = DualFeedback(first=feedback, second=feedback)
script = build_llm_messages(
    Observation(loop_index=1, sets=[SetRecord(prompt=prompt, report=report, feedback=dual)]),
    lib, templates,
)
raw = RemoteScheduler(transport)(script)
print("schedule ->")
for line in raw.splitlines():
    if line.startswith(("SET", "D:")):
        print("  " + line)

server.shutdown()
server.server_close()
