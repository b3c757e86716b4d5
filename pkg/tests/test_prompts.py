import pytest

from motionloop import (
    instantiate_prompt,
    load_library,
    parse_prompt,
    random_baseline_prompts,
    sample_batch,
    tiered_benchmark,
)
from motionloop.errors import (
    DuplicateLine,
    EmptySlot,
    ForeignPhrase,
    MissingComponent,
    MissingDomain,
    NoEligibleEntries,
    NoTemplateMatch,
    SchemaViolation,
    UnknownPhrase,
)
from motionloop.prompts import DOMAINS, SLOTS, parse_library


def test_seed_library_has_five_domains_and_all_tiers(lib):
    assert tuple(lib.domains) == DOMAINS
    for domain in DOMAINS:
        for slot in SLOTS:
            entries = lib.entries(domain, slot)
            assert len(entries) >= 10
            tiers = {e.tier for e in entries}
            assert tiers == {1, 2, 3, 4, 5}


def test_seed_library_contains_taxonomy_phrases(lib):
    dance_combos = [e.phrase for e in lib.entries("dance", "combo_action")]
    assert "triple pirouette -> aerial cartwheel -> grand allegro" in dance_combos
    assert "saut de basque chain" in dance_combos
    dance_bases = [e.phrase for e in lib.entries("dance", "base_action")]
    assert "a grand allegro" in dance_bases


def test_library_missing_domain(tmp_path):
    source = (
        "motionloop-variable-library 1\n"
        "[martial_arts.base_action]\n1 | a kick\n"
        "[martial_arts.combo_action]\n1 | kick -> land\n"
        "[martial_arts.detail]\n1 | soft knees\n"
        "[martial_arts.speed_rhythm]\n1 | slow pace\n"
    )
    path = tmp_path / "lib.txt"
    path.write_text(source)
    with pytest.raises(MissingDomain):
        load_library(path)


def test_library_duplicate_phrase_rejected(lib):
    from motionloop.prompts import VariableLibrary

    domains = {d: {s: list(lib.entries(d, s)) for s in SLOTS} for d in DOMAINS}
    domains["combat"]["detail"] = domains["combat"]["detail"] + [
        domains["combat"]["detail"][0]
    ]
    with pytest.raises(SchemaViolation):
        VariableLibrary(domains)


def test_library_empty_slot_rejected(lib):
    from motionloop.prompts import VariableLibrary

    domains = {d: {s: list(lib.entries(d, s)) for s in SLOTS} for d in DOMAINS}
    domains["dance"]["detail"] = []
    with pytest.raises(EmptySlot):
        VariableLibrary(domains)


# --- instantiation ---

def full_selection(lib, domain, tier=2):
    return {slot: lib.eligible(domain, slot, tier, tier)[0].phrase for slot in SLOTS}


def test_instantiate_renders_all_slots(lib, templates):
    selection = full_selection(lib, "dance")
    prompt = instantiate_prompt(lib, templates, "dance", 0, selection)
    for phrase in selection.values():
        assert phrase in prompt.text
    assert prompt.tier == 2
    assert prompt.domain == "dance"


def test_instantiate_missing_component(lib, templates):
    selection = full_selection(lib, "dance")
    del selection["speed_rhythm"]
    with pytest.raises(MissingComponent):
        instantiate_prompt(lib, templates, "dance", 0, selection)


def test_instantiate_unknown_phrase(lib, templates):
    selection = full_selection(lib, "dance")
    selection["detail"] = "does a backflip off a wall"
    with pytest.raises(UnknownPhrase):
        instantiate_prompt(lib, templates, "dance", 0, selection)


def test_tier_is_max_of_selection(lib, templates):
    selection = {
        "base_action": lib.eligible("sport", "base_action", 1, 1)[0].phrase,
        "combo_action": lib.eligible("sport", "combo_action", 4, 4)[0].phrase,
        "detail": lib.eligible("sport", "detail", 2, 2)[0].phrase,
        "speed_rhythm": lib.eligible("sport", "speed_rhythm", 3, 3)[0].phrase,
    }
    prompt = instantiate_prompt(lib, templates, "sport", 0, selection)
    assert prompt.tier == 4


# --- parsing ---

def test_parse_inverts_instantiate(lib, templates):
    selection = full_selection(lib, "combat", tier=3)
    prompt = instantiate_prompt(lib, templates, "combat", 1, selection)
    parsed = parse_prompt(lib, templates, prompt.text)
    assert parsed.domain == "combat"
    assert parsed.template_index == 1
    assert parsed.selection == prompt.selection
    assert parsed.tier == prompt.tier
    assert parsed.text == prompt.text


def test_parse_foreign_phrase(lib, templates):
    text = (
        "The dancer performed does a backflip off a wall followed by "
        "saut de basque chain with maintained turnout from the hips, using soft syncopation."
    )
    with pytest.raises(ForeignPhrase):
        parse_prompt(lib, templates, text)


def test_parse_free_form_no_match(lib, templates):
    with pytest.raises(NoTemplateMatch):
        parse_prompt(lib, templates, "The person jumps and spins in the air before landing.")


def test_roundtrip_identity_over_random_instantiations(lib, templates):
    total = 0
    for domain in DOMAINS:
        batch = sample_batch(lib, templates, domain, 200, (1, 5), rng_seed=99)
        for prompt in batch:
            parsed = parse_prompt(lib, templates, prompt.text)
            assert parsed.selection == prompt.selection, prompt.text
            assert parsed.domain == prompt.domain
            assert parsed.template_index == prompt.template_index
            # re-instantiating the parsed selection reproduces the text
            again = instantiate_prompt(
                lib, templates, parsed.domain, parsed.template_index, parsed.selection
            )
            assert again.text == prompt.text
            total += 1
    assert total == 1000


# --- sampling ---

def test_sample_batch_exact_tier(lib, templates):
    batch = sample_batch(lib, templates, "gymnastics", 200, (3, 3), rng_seed=5)
    assert len(batch) == 200
    assert all(p.tier == 3 for p in batch)
    for prompt in batch:
        for slot in SLOTS:
            assert lib.tier_of("gymnastics", slot, prompt.selection[slot]) == 3


def test_sample_batch_deterministic(lib, templates):
    a = sample_batch(lib, templates, "sport", 50, (2, 4), rng_seed=7)
    b = sample_batch(lib, templates, "sport", 50, (2, 4), rng_seed=7)
    assert [p.to_record() for p in a] == [p.to_record() for p in b]


def test_sample_batch_different_seed_differs(lib, templates):
    a = sample_batch(lib, templates, "sport", 50, (1, 5), rng_seed=7)
    b = sample_batch(lib, templates, "sport", 50, (1, 5), rng_seed=8)
    assert [p.text for p in a] != [p.text for p in b]


def test_sample_batch_no_eligible_entries(lib, templates):
    from motionloop.prompts import Entry, VariableLibrary

    domains = {d: {s: list(lib.entries(d, s)) for s in SLOTS} for d in DOMAINS}
    domains["dance"]["detail"] = [Entry("soft arms only", 1)]
    crippled = VariableLibrary(domains)
    with pytest.raises(NoEligibleEntries):
        sample_batch(crippled, templates, "dance", 5, (5, 5), rng_seed=0)


# --- tiered benchmark ---

def test_tiered_benchmark_counts_and_tiers(lib, templates):
    tiers = tiered_benchmark(lib, templates, per_tier_n=200, rng_seed=11)
    assert len(tiers) == 5
    assert sum(len(t) for t in tiers) == 1000
    for tier_index, prompts in enumerate(tiers, start=1):
        assert len(prompts) == 200
        assert all(p.tier == tier_index for p in prompts)
        domains = [p.domain for p in prompts]
        for domain in DOMAINS:
            assert domains.count(domain) == 40


def test_tiered_benchmark_disjoint_ids(lib, templates):
    tiers = tiered_benchmark(lib, templates, per_tier_n=10, rng_seed=3)
    ids = [p.prompt_id for tier in tiers for p in tier]
    assert len(set(ids)) == len(ids)


def test_tiered_benchmark_deterministic(lib, templates):
    a = tiered_benchmark(lib, templates, per_tier_n=10, rng_seed=4)
    b = tiered_benchmark(lib, templates, per_tier_n=10, rng_seed=4)
    assert [[p.to_record() for p in tier] for tier in a] == [
        [p.to_record() for p in tier] for tier in b
    ]


# --- random baseline ---

def test_random_baseline_unique_and_prefixed():
    lines = random_baseline_prompts(200, rng_seed=0)
    assert len(lines) == 200
    assert len(set(lines)) == 200
    assert all(line.startswith("The person") for line in lines)


def test_random_baseline_single_line():
    lines = random_baseline_prompts(1, rng_seed=1)
    assert len(lines) == 1 and lines[0].startswith("The person")


def test_random_baseline_external_duplicates_rejected():
    def source(n):
        return ["The person jumps quickly."] * n

    with pytest.raises(DuplicateLine):
        random_baseline_prompts(3, external_source=source)


def test_random_baseline_external_bad_prefix_rejected():
    def source(n):
        return [f"A figure moves {i}" for i in range(n)]

    with pytest.raises(SchemaViolation):
        random_baseline_prompts(2, external_source=source)


def test_prompt_record_roundtrip(lib, templates):
    batch = sample_batch(lib, templates, "martial_arts", 3, (1, 5), rng_seed=0)
    from motionloop.prompts import ActionPrompt

    for prompt in batch:
        assert ActionPrompt.from_record(prompt.to_record()) == prompt
