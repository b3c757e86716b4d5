"""Command-line surface: metrics, filter, prompts, loop, and report verbs."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import loop as loop_mod
from .clips import load_clip, load_manifest_clips, read_manifest, save_clip, write_manifest
from .errors import MotionLoopError
from .evaluation import MockDualEvaluator, RenderConfig
from .loop import LoopComponents, LoopConfig
from .metrics import dataset_success_rate, score_clip
from .mocks import MockGenerator, MockTracker
from .physics import FilterConfig, check_foot_penetration, check_root_height, gaussian_smooth_root
from .prompts import (
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
    histogram_plot_svg,
    report_benchmark_summary,
    report_trend,
    report_velocity_distribution,
    trend_plot_svg,
)
from .scheduler import LlmPolicy, RulePolicy
from .services import (
    RemoteDualEvaluator,
    RemoteEvaluator,
    RemoteGenerator,
    RemoteScheduler,
    RemoteTracker,
)
from .wire import SocketTransport, SubprocessTransport

# Environment overrides for endpoint addresses.
ENV_GENERATOR = "MOTIONLOOP_GEN_URL"
ENV_VLM1 = "MOTIONLOOP_VLM1_URL"
ENV_VLM2 = "MOTIONLOOP_VLM2_URL"
ENV_TRACKER = "MOTIONLOOP_TRACKER_CMD"
ENV_LLM = "MOTIONLOOP_LLM_URL"


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit_index(out_dir, names):
    _write(os.path.join(out_dir, "index.txt"), "\n".join(names) + "\n")


# --- metrics ---

def cmd_metrics_score(args) -> int:
    gt_clips = load_manifest_clips(args.gt)
    pred_clips = load_manifest_clips(args.pred)
    if len(gt_clips) != len(pred_clips):
        raise MotionLoopError(
            f"manifest lengths differ: gt has {len(gt_clips)}, pred has {len(pred_clips)}"
        )
    reports = [score_clip(g, p, args.tau) for g, p in zip(gt_clips, pred_clips)]
    score = dataset_success_rate(reports)
    out = sys.stdout
    for report in reports:
        out.write(report.format_text())
        out.write("\n")
    out.write(score.format_text())
    return 0


# --- filter ---

def cmd_filter_run(args) -> int:
    cfg = FilterConfig.from_file(args.config) if args.config else FilterConfig()
    clip_dir = args.clip_dir or os.path.join(os.path.dirname(os.path.abspath(args.out)), "filtered")
    os.makedirs(clip_dir, exist_ok=True)
    accepted_paths = []
    verdict_lines = []
    base = os.path.dirname(os.path.abspath(args.inp))
    for clip_path, _tags in read_manifest(args.inp):
        resolved = clip_path if os.path.isabs(clip_path) else os.path.join(base, clip_path)
        clip = load_clip(resolved)
        smoothed = gaussian_smooth_root(clip, cfg)
        reasons = []
        reasons.extend(check_root_height(smoothed, cfg).reasons)
        reasons.extend(check_foot_penetration(smoothed, cfg).reasons)
        if reasons:
            details = "; ".join(
                f"{r.kind} frame={r.frame} value={r.value:.4f}" for r in reasons
            )
            verdict_lines.append(f"{clip.clip_id}\trejected\t{details}")
            continue
        out_path = os.path.join(clip_dir, f"{clip.clip_id}.clip")
        save_clip(smoothed, out_path)
        accepted_paths.append(out_path)
        verdict_lines.append(f"{clip.clip_id}\taccepted\t")
    write_manifest(accepted_paths, args.out)
    if args.rejects:
        _write(args.rejects, "\n".join(verdict_lines) + "\n")
    print(f"accepted {len(accepted_paths)} clips; verdicts for {len(verdict_lines)}")
    return 0


# --- prompts ---

def _load_grammar(args):
    lib = load_library(args.library) if args.library else seed_library()
    templates = load_templates(args.templates) if args.templates else seed_templates()
    return lib, templates


def cmd_prompts_sample(args) -> int:
    lib, templates = _load_grammar(args)
    batch = sample_batch(
        lib, templates, args.domain, args.n, (args.tier_min, args.tier_max), args.seed
    )
    for prompt in batch:
        print(f"{prompt.tier}\t{prompt.prompt_id}\t{prompt.text}")
    return 0


def cmd_prompts_benchmark(args) -> int:
    lib, templates = _load_grammar(args)
    tiers = tiered_benchmark(lib, templates, args.per_tier_n, args.seed)
    os.makedirs(args.out, exist_ok=True)
    names = []
    for tier_index, prompts in enumerate(tiers, start=1):
        name = f"tier-{tier_index}.txt"
        _write(
            os.path.join(args.out, name),
            "\n".join(f"{p.prompt_id}\t{p.text}" for p in prompts) + "\n",
        )
        names.append(name)
    _emit_index(args.out, names)
    print(f"wrote {sum(len(t) for t in tiers)} prompts across 5 tiers to {args.out}")
    return 0


def cmd_prompts_parse(args) -> int:
    lib, templates = _load_grammar(args)
    prompt = parse_prompt(lib, templates, args.text)
    print(json.dumps(prompt.to_record(), indent=2, sort_keys=True))
    return 0


def cmd_prompts_random_baseline(args) -> int:
    for line in random_baseline_prompts(args.n, rng_seed=args.seed):
        print(line)
    return 0


# --- loop ---

def _read_kv_config(path) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh.read().splitlines():
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if ":" not in stripped:
                raise MotionLoopError(f"{path}: bad config line {line!r}")
            key, value = stripped.split(":", 1)
            out[key.strip()] = value.strip()
    return out


def _transport_for(spec: str):
    kind, _, rest = spec.partition(" ")
    if kind == "socket":
        return SocketTransport(rest.strip())
    if kind == "subprocess":
        return SubprocessTransport(rest.strip().split())
    raise MotionLoopError(f"unknown endpoint spec {spec!r} (use 'mock', 'socket ...', 'subprocess ...')")


def _build_components(raw: dict[str, str], config: LoopConfig, workdir: str) -> LoopComponents:
    lib = load_library(raw["library"]) if raw.get("library") else seed_library()
    templates = load_templates(raw["templates"]) if raw.get("templates") else seed_templates()

    gen_spec = os.environ.get(ENV_GENERATOR) or raw.get("generator", "mock")
    gen_spec = gen_spec if gen_spec.startswith(("mock", "socket", "subprocess")) else f"socket {gen_spec}"
    if gen_spec == "mock":
        generator = MockGenerator(lib)
    else:
        generator = RemoteGenerator(_transport_for(gen_spec))

    vlm1 = os.environ.get(ENV_VLM1) or raw.get("evaluator1", "mock")
    vlm2 = os.environ.get(ENV_VLM2) or raw.get("evaluator2", "mock")
    if vlm1 == "mock" and vlm2 == "mock":
        evaluator = MockDualEvaluator()
    else:
        def remote(spec, role):
            spec = spec if spec.startswith(("socket", "subprocess")) else f"socket {spec}"
            return RemoteEvaluator(_transport_for(spec), role, RenderConfig())
        evaluator = RemoteDualEvaluator(remote(vlm1, "gpt4o-role"), remote(vlm2, "qwen-role"))

    trk_spec = os.environ.get(ENV_TRACKER) or raw.get("tracker", "mock")
    if trk_spec == "mock":
        tracker = MockTracker(seed=config.rng_seed)
    else:
        spec = trk_spec if trk_spec.startswith(("socket", "subprocess")) else f"subprocess {trk_spec}"
        tracker = RemoteTracker(_transport_for(spec), workdir=os.path.join(workdir, "tracker-io"))

    sched_spec = os.environ.get(ENV_LLM) or raw.get("scheduler", "rule")
    if sched_spec == "rule":
        policy = RulePolicy(config.thresholds)
    else:
        spec = sched_spec if sched_spec.startswith(("socket", "subprocess")) else f"socket {sched_spec}"
        policy = LlmPolicy(RemoteScheduler(_transport_for(spec)), config.thresholds)

    return LoopComponents(
        generator=generator, evaluator=evaluator, tracker=tracker, policy=policy,
        lib=lib, templates=templates,
    )


def _loop_config_from_raw(raw: dict[str, str], seed_override=None) -> LoopConfig:
    kwargs = {}
    if "seed" in raw:
        kwargs["rng_seed"] = int(raw["seed"])
    if seed_override is not None:
        kwargs["rng_seed"] = seed_override
    for key, cast in (
        ("prompts_per_loop", int), ("batch_size", int), ("tau", float),
        ("gate_policy", str), ("metrics_scope", str), ("max_concurrency", int),
        ("heldout_per_domain", int),
    ):
        if key in raw:
            kwargs[key] = cast(raw[key])
    if "initial_tier_min" in raw or "initial_tier_max" in raw:
        kwargs["initial_tier_range"] = (
            int(raw.get("initial_tier_min", 1)), int(raw.get("initial_tier_max", 1))
        )
    if "filter_config" in raw:
        kwargs["filter_cfg"] = FilterConfig.from_file(raw["filter_config"])
    return LoopConfig(**kwargs)


def cmd_loop_run(args) -> int:
    raw = _read_kv_config(args.config) if args.config else {}
    config = _loop_config_from_raw(raw, seed_override=args.seed)
    os.makedirs(args.out, exist_ok=True)
    components = _build_components(raw, config, args.out)
    archive = loop_mod.run_loop(
        config, components, iterations=args.iterations,
        checkpoint_dir=os.path.join(args.out, "checkpoints"),
    )
    state = archive.state
    loop_mod.checkpoint(state, os.path.join(args.out, "state.chk"))
    summary = [
        f"iterations: {state.k}",
        f"dataset clips: {len(state.dataset)}",
        f"best tracker: {archive.best_tracker_id}",
        f"archive hash: {state.archive_hash()}",
    ]
    summary.extend(f"warning: {w}" for w in state.warnings)
    _write(os.path.join(args.out, "run-summary.txt"), "\n".join(summary) + "\n")
    print("\n".join(summary))
    return 0


def cmd_loop_resume(args) -> int:
    state = loop_mod.resume(args.checkpoint)
    raw = _read_kv_config(args.config) if args.config else {}
    out_dir = args.out or os.path.dirname(os.path.abspath(args.checkpoint))
    components = _build_components(raw, state.config, out_dir)
    if "tracker" in state.component_state and hasattr(components.tracker, "load_state_dict"):
        components.tracker.load_state_dict(state.component_state["tracker"])
    iterations = args.iterations if args.iterations else state.k
    archive = loop_mod.run_loop(
        state.config, components, iterations=iterations,
        checkpoint_dir=os.path.join(out_dir, "checkpoints"), state=state,
    )
    loop_mod.checkpoint(archive.state, os.path.join(out_dir, "state.chk"))
    print(f"resumed to k={archive.state.k}; best tracker {archive.best_tracker_id}")
    print(f"archive hash: {archive.state.archive_hash()}")
    return 0


def cmd_loop_status(args) -> int:
    state = loop_mod.resume(args.checkpoint)
    print(f"k: {state.k}")
    print(f"dataset clips: {len(state.dataset)}")
    print(f"trackers: {', '.join(state.tracker_ids) or '(none)'}")
    for motion_set in state.archive:
        accepted = len(motion_set.pairs)
        total = len(motion_set.dispositions)
        print(f"loop {motion_set.loop_index}: accepted {accepted}/{total}")
    for warning in state.warnings:
        print(f"warning: {warning}")
    return 0


# --- reports ---

def cmd_report_trend(args) -> int:
    state = loop_mod.resume(args.checkpoint)
    tracker = MockTracker(seed=state.config.rng_seed)
    if "tracker" in state.component_state:
        tracker.load_state_dict(state.component_state["tracker"])
    policy_id = args.policy or (state.tracker_ids[0] if state.tracker_ids else None)
    if policy_id is None:
        raise MotionLoopError("archive has no trained trackers")
    table = report_trend(state, tracker, policy_id, tau=state.config.tau)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "trend.tsv"), table.format_text())
    names = ["trend.tsv"]
    try:
        _write(os.path.join(args.out, "trend.svg"), trend_plot_svg(table))
        names.append("trend.svg")
    except Exception as exc:  # noqa: BLE001 - plots are best-effort
        print(f"plot emission skipped: {exc}", file=sys.stderr)
    _emit_index(args.out, names)
    print(table.format_text(), end="")
    return 0


def cmd_report_veldist(args) -> int:
    corpora = {}
    for spec in args.corpus:
        if "=" not in spec:
            raise MotionLoopError(f"--corpus must be name=manifest, got {spec!r}")
        name, manifest = spec.split("=", 1)
        corpora[name] = load_manifest_clips(manifest)
    histograms = report_velocity_distribution(corpora, bins=args.bins)
    os.makedirs(args.out, exist_ok=True)
    names = []
    for name, hist in histograms.items():
        file_name = f"veldist-{name}.tsv"
        _write(os.path.join(args.out, file_name), hist.format_text())
        names.append(file_name)
    try:
        _write(os.path.join(args.out, "veldist.svg"), histogram_plot_svg(histograms))
        names.append("veldist.svg")
    except Exception as exc:  # noqa: BLE001
        print(f"plot emission skipped: {exc}", file=sys.stderr)
    _emit_index(args.out, names)
    for name, hist in histograms.items():
        print(f"{name}: total={hist.total} mean={hist.mean_speed():.3f} m/s")
    return 0


def cmd_report_summary(args) -> int:
    per_method: dict[str, list[tuple[str, float, int]]] = {}
    with open(args.scores, "r", encoding="utf-8") as fh:
        for line in fh.read().splitlines():
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            method, set_name, rate, count = stripped.split("\t")
            per_method.setdefault(method, []).append((set_name, float(rate), int(count)))
    summary = report_benchmark_summary(per_method, baseline=args.baseline)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "summary.tsv"), summary.format_text())
    _emit_index(args.out, ["summary.tsv"])
    print(summary.format_text(), end="")
    return 0


# --- parser wiring ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionloop", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    metrics = subs.add_parser("metrics", help="tracking metric scoring").add_subparsers(
        dest="verb", required=True
    )
    score = metrics.add_parser("score", help="score prediction manifests against references")
    score.add_argument("--gt", required=True)
    score.add_argument("--pred", required=True)
    score.add_argument("--tau", type=float, default=0.5)
    score.set_defaults(func=cmd_metrics_score)

    filt = subs.add_parser("filter", help="physical validity gate").add_subparsers(
        dest="verb", required=True
    )
    frun = filt.add_parser("run", help="smooth and validate a clip corpus")
    frun.add_argument("--config", default=None)
    frun.add_argument("--in", dest="inp", required=True)
    frun.add_argument("--out", required=True)
    frun.add_argument("--rejects", default=None)
    frun.add_argument("--clip-dir", default=None)
    frun.set_defaults(func=cmd_filter_run)

    prompts = subs.add_parser("prompts", help="prompt grammar tools").add_subparsers(
        dest="verb", required=True
    )
    sample = prompts.add_parser("sample")
    sample.add_argument("--domain", required=True)
    sample.add_argument("--n", type=int, default=10)
    sample.add_argument("--tier-min", type=int, default=1)
    sample.add_argument("--tier-max", type=int, default=5)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--library", default=None)
    sample.add_argument("--templates", default=None)
    sample.set_defaults(func=cmd_prompts_sample)
    bench = prompts.add_parser("benchmark")
    bench.add_argument("--per-tier-n", type=int, default=200)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True)
    bench.add_argument("--library", default=None)
    bench.add_argument("--templates", default=None)
    bench.set_defaults(func=cmd_prompts_benchmark)
    pparse = prompts.add_parser("parse")
    pparse.add_argument("--text", required=True)
    pparse.add_argument("--library", default=None)
    pparse.add_argument("--templates", default=None)
    pparse.set_defaults(func=cmd_prompts_parse)
    baseline = prompts.add_parser("random-baseline")
    baseline.add_argument("--n", type=int, default=200)
    baseline.add_argument("--seed", type=int, default=0)
    baseline.set_defaults(func=cmd_prompts_random_baseline)

    loop_cmd = subs.add_parser("loop", help="closed-loop orchestration").add_subparsers(
        dest="verb", required=True
    )
    lrun = loop_cmd.add_parser("run")
    lrun.add_argument("--config", default=None)
    lrun.add_argument("--iterations", type=int, required=True)
    lrun.add_argument("--seed", type=int, default=None)
    lrun.add_argument("--out", required=True)
    lrun.set_defaults(func=cmd_loop_run)
    lresume = loop_cmd.add_parser("resume")
    lresume.add_argument("--checkpoint", required=True)
    lresume.add_argument("--config", default=None)
    lresume.add_argument("--iterations", type=int, default=None)
    lresume.add_argument("--out", default=None)
    lresume.set_defaults(func=cmd_loop_resume)
    lstatus = loop_cmd.add_parser("status")
    lstatus.add_argument("--checkpoint", required=True)
    lstatus.set_defaults(func=cmd_loop_status)

    report = subs.add_parser("report", help="analysis reports").add_subparsers(
        dest="verb", required=True
    )
    rtrend = report.add_parser("trend")
    rtrend.add_argument("--checkpoint", required=True)
    rtrend.add_argument("--policy", default=None)
    rtrend.add_argument("--out", required=True)
    rtrend.set_defaults(func=cmd_report_trend)
    rvel = report.add_parser("veldist")
    rvel.add_argument("--corpus", action="append", required=True,
                      help="name=manifest (repeatable)")
    rvel.add_argument("--bins", type=int, default=40)
    rvel.add_argument("--out", required=True)
    rvel.set_defaults(func=cmd_report_veldist)
    rsum = report.add_parser("summary")
    rsum.add_argument("--scores", required=True,
                      help="TSV of method, set, success percent, clip count")
    rsum.add_argument("--baseline", required=True)
    rsum.add_argument("--out", required=True)
    rsum.set_defaults(func=cmd_report_summary)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MotionLoopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
