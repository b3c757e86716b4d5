"""
Difficulty-aware prompt grammar
===============================

Sample prompts from the five-domain variable library, parse them back to
their structured selections, build the tiered benchmark, and draw the
template-free baseline lines.
"""

from motionloop import (
    parse_prompt,
    random_baseline_prompts,
    sample_batch,
    seed_library,
    seed_templates,
    tiered_benchmark,
)

lib = seed_library()
templates = seed_templates()

print("domains:", ", ".join(lib.domains))
print("dance combo entries at tier 5:")
for entry in lib.eligible("dance", "combo_action", 5, 5):
    print(f"  {entry.tier} | {entry.phrase}")

# Sampling is seeded and tier-constrained: every slot of every prompt comes
# from the requested difficulty band.
print("\nthree tier-4 gymnastics prompts (seed 7):")
for prompt in sample_batch(lib, templates, "gymnastics", 3, (4, 4), rng_seed=7):
    print(f"  [{prompt.tier}] {prompt.text}")

# Parsing inverts rendering: the exact slot phrases come back out.
prompt = sample_batch(lib, templates, "martial_arts", 1, (3, 3), rng_seed=1)[0]
parsed = parse_prompt(lib, templates, prompt.text)
print("\nround trip:")
print("  text:     ", prompt.text)
print("  combo:    ", parsed.selection["combo_action"])
print("  rhythm:   ", parsed.selection["speed_rhythm"])
print("  identical:", parsed.selection == prompt.selection)

# Out-of-library sentences are refused, which is how scheduler output is
# validated before any clip gets generated from it.
try:
    parse_prompt(lib, templates, "The person jumps and spins in the air before landing.")
except Exception as exc:
    print(f"  free-form sentence -> {type(exc).__name__}")

# The five-tier compositional benchmark: 5 x per_tier_n prompts, balanced
# across domains, all slots pinned to the tier.
tiers = tiered_benchmark(lib, templates, per_tier_n=10, rng_seed=3)
print("\nbenchmark sizes per tier:", [len(t) for t in tiers])
print("a tier-1 line: ", tiers[0][0].text)
print("a tier-5 line: ", tiers[4][0].text)

print("\nrandom baseline (no library, no templates):")
for line in random_baseline_prompts(3, rng_seed=0):
    print(" ", line)
