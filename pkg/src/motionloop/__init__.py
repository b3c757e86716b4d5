"""motionloop: closed-loop motion data curation and curriculum orchestration.

The package couples a motion-clip data model and tracking metrics with a
physics validity gate, a difficulty-aware prompt grammar, a visual
evaluation protocol, and an iterative orchestrator that co-evolves a
training dataset with a tracker. Deterministic mocks stand in for the
external generator/evaluator/tracker services so the whole loop runs at
desk scale; real systems plug in through the wire protocol in ``wire`` /
``services``.
"""

from .clips import (
    JointSeries,
    MotionClip,
    apply_offset_height,
    clip_mean_speed,
    expand_joints,
    finite_acceleration,
    finite_velocity,
    load_clip,
    resample,
    save_clip,
    standard_post_process,
)
from .evaluation import (
    Alignment,
    DualFeedback,
    MockDualEvaluator,
    RenderConfig,
    StitchedImage,
    VlmFeedback,
    check_alignment_gate,
    mock_evaluate,
    parse_eval_response,
    render_frame,
    stitch_keyframes,
    subsample_indices,
)
from .loop import (
    LoopArchive,
    LoopComponents,
    LoopConfig,
    LoopState,
    MotionSet,
    checkpoint,
    generate_and_filter,
    iterate_once,
    resume,
    run_loop,
    select_best_tracker,
)
from .metrics import (
    DatasetScore,
    MetricReport,
    acc_dist,
    clip_success_rate,
    dataset_success_rate,
    failure_rate_reduction,
    frame_errors,
    g_mpjpe,
    l_mpjpe,
    score_clip,
    vel_dist,
    weighted_average,
)
from .mocks import MockGenerator, MockTracker, MockTrackerModel, mock_tracker_train
from .physics import (
    FilterConfig,
    FilterVerdict,
    check_foot_penetration,
    check_root_height,
    gaussian_smooth_root,
    validate,
)
from .prompts import (
    ActionPrompt,
    TemplateSet,
    VariableLibrary,
    instantiate_prompt,
    load_library,
    load_templates,
    parse_prompt,
    random_baseline_prompts,
    sample_batch,
    seed_library,
    seed_templates,
    tiered_benchmark,
)
from .reports import (
    Histogram,
    TrendTable,
    report_benchmark_summary,
    report_trend,
    report_velocity_distribution,
)
from .scheduler import (
    ChatScript,
    LlmPolicy,
    MasteryClass,
    Observation,
    RulePolicy,
    SetRecord,
    Thresholds,
    build_llm_messages,
    build_observation,
    mastery_class,
    parse_llm_output,
    partition_sets,
    rule_policy_next,
)

__version__ = "0.1.0"
