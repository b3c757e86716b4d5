"""Difficulty-aware variable library, sentence templates, and prompt grammar.

The library holds five professional domains, each with four slots
(base_action, combo_action, detail, speed_rhythm) whose entries carry a
difficulty tier 1..5. Sentence templates render one phrase per slot into a
professional-style prompt; parsing inverts the rendering against the library,
so any conformant prompt round-trips exactly.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass
from importlib import resources

from .errors import (
    DuplicateLine,
    EmptySlot,
    ForeignPhrase,
    IoFailure,
    MissingComponent,
    MissingDomain,
    NoEligibleEntries,
    NoTemplateMatch,
    SchemaViolation,
    UnknownPhrase,
)

DOMAINS = ("martial_arts", "dance", "combat", "sport", "gymnastics")
SLOTS = ("base_action", "combo_action", "detail", "speed_rhythm")
MIN_TIER, MAX_TIER = 1, 5

_LIBRARY_MAGIC = "motionloop-variable-library 1"
_TEMPLATES_MAGIC = "motionloop-templates 1"
_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed derived from string parts (platform independent)."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class Entry:
    phrase: str
    tier: int


class VariableLibrary:
    """Five-domain, four-slot phrase bank with per-phrase difficulty tiers."""

    def __init__(self, domains: dict[str, dict[str, list[Entry]]]):
        missing = [d for d in DOMAINS if d not in domains]
        if missing:
            raise MissingDomain(f"library is missing domains: {missing}")
        extra = [d for d in domains if d not in DOMAINS]
        if extra:
            raise SchemaViolation(f"library has unknown domains: {extra}")
        for domain, slots in domains.items():
            for slot in SLOTS:
                entries = slots.get(slot, [])
                if not entries:
                    raise EmptySlot(f"{domain}.{slot} has no entries")
                phrases = [e.phrase for e in entries]
                if len(set(phrases)) != len(phrases):
                    raise SchemaViolation(f"duplicate phrase in {domain}.{slot}")
                for entry in entries:
                    if not MIN_TIER <= entry.tier <= MAX_TIER:
                        raise SchemaViolation(
                            f"{domain}.{slot}: tier {entry.tier} outside {MIN_TIER}..{MAX_TIER}"
                        )
        self.domains = domains

    def entries(self, domain: str, slot: str) -> list[Entry]:
        return self.domains[domain][slot]

    def tier_of(self, domain: str, slot: str, phrase: str) -> int:
        for entry in self.domains[domain][slot]:
            if entry.phrase == phrase:
                return entry.tier
        raise UnknownPhrase(f"{phrase!r} is not in {domain}.{slot}")

    def has_phrase(self, domain: str, slot: str, phrase: str) -> bool:
        return any(e.phrase == phrase for e in self.domains[domain][slot])

    def eligible(self, domain: str, slot: str, tier_lo: int, tier_hi: int) -> list[Entry]:
        return [e for e in self.domains[domain][slot] if tier_lo <= e.tier <= tier_hi]


class TemplateSet:
    """Per-domain sentence frames with {slot} placeholders."""

    def __init__(self, per_domain: dict[str, list[str]]):
        for domain, templates in per_domain.items():
            if domain not in DOMAINS:
                raise SchemaViolation(f"templates for unknown domain {domain!r}")
            for template in templates:
                placeholders = _PLACEHOLDER_RE.findall(template)
                if not placeholders:
                    raise SchemaViolation(f"template without placeholders: {template!r}")
                bad = [p for p in placeholders if p not in SLOTS]
                if bad:
                    raise SchemaViolation(f"template references unknown slots {bad}: {template!r}")
        self.per_domain = per_domain

    def templates(self, domain: str) -> list[str]:
        return self.per_domain.get(domain, [])

    @staticmethod
    def segments(template: str) -> list[tuple[str, str]]:
        """Split a template into ('lit', text) / ('slot', name) token pairs."""
        out = []
        pos = 0
        for match in _PLACEHOLDER_RE.finditer(template):
            if match.start() > pos:
                out.append(("lit", template[pos : match.start()]))
            out.append(("slot", match.group(1)))
            pos = match.end()
        if pos < len(template):
            out.append(("lit", template[pos:]))
        return out


@dataclass(frozen=True)
class Lineage:
    parent_prompt_id: str
    loop_index: int


@dataclass
class ActionPrompt:
    """A rendered prompt plus the structured selection that produced it.

    ``tier`` is the maximum tier among the selected entries; ``flagged``
    marks prompts whose escalation hit the tier-5 ceiling.
    """

    prompt_id: str
    domain: str
    text: str
    selection: dict[str, str]
    tier: int
    template_index: int
    lineage: Lineage | None = None
    flagged: bool = False

    def to_record(self) -> dict:
        record = {
            "prompt_id": self.prompt_id,
            "domain": self.domain,
            "text": self.text,
            "selection": dict(self.selection),
            "tier": self.tier,
            "template_index": self.template_index,
            "flagged": self.flagged,
        }
        if self.lineage is not None:
            record["lineage"] = {
                "parent_prompt_id": self.lineage.parent_prompt_id,
                "loop_index": self.lineage.loop_index,
            }
        return record

    @classmethod
    def from_record(cls, record: dict) -> "ActionPrompt":
        lineage = None
        if record.get("lineage"):
            lineage = Lineage(
                parent_prompt_id=record["lineage"]["parent_prompt_id"],
                loop_index=record["lineage"]["loop_index"],
            )
        return cls(
            prompt_id=record["prompt_id"],
            domain=record["domain"],
            text=record["text"],
            selection=dict(record["selection"]),
            tier=record["tier"],
            template_index=record["template_index"],
            lineage=lineage,
            flagged=record.get("flagged", False),
        )


# --- loading ---

def _read_lines(path) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def load_library(path) -> VariableLibrary:
    """Load a variable library file ([domain.slot] sections, 'tier | phrase' lines)."""
    lines = _read_lines(path)
    return parse_library("\n".join(lines), origin=str(path))


def parse_library(text: str, origin: str = "<library>") -> VariableLibrary:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _LIBRARY_MAGIC:
        raise SchemaViolation(f"{origin}: missing '{_LIBRARY_MAGIC}' header")
    domains: dict[str, dict[str, list[Entry]]] = {}
    section: tuple[str, str] | None = None
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if "." not in name:
                raise SchemaViolation(f"{origin}:{i}: section must be [domain.slot]")
            domain, slot = name.split(".", 1)
            if slot not in SLOTS:
                raise SchemaViolation(f"{origin}:{i}: unknown slot {slot!r}")
            domains.setdefault(domain, {slot_name: [] for slot_name in SLOTS})
            section = (domain, slot)
            continue
        if section is None:
            raise SchemaViolation(f"{origin}:{i}: entry before any section")
        if "|" not in line:
            raise SchemaViolation(f"{origin}:{i}: entry must be 'tier | phrase'")
        tier_text, phrase = (part.strip() for part in line.split("|", 1))
        try:
            tier = int(tier_text)
        except ValueError as exc:
            raise SchemaViolation(f"{origin}:{i}: bad tier {tier_text!r}") from exc
        if not phrase:
            raise SchemaViolation(f"{origin}:{i}: empty phrase")
        domains[section[0]][section[1]].append(Entry(phrase=phrase, tier=tier))
    return VariableLibrary(domains)


def load_templates(path) -> TemplateSet:
    lines = _read_lines(path)
    return parse_templates("\n".join(lines), origin=str(path))


def parse_templates(text: str, origin: str = "<templates>") -> TemplateSet:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _TEMPLATES_MAGIC:
        raise SchemaViolation(f"{origin}: missing '{_TEMPLATES_MAGIC}' header")
    per_domain: dict[str, list[str]] = {}
    domain: str | None = None
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            domain = line[1:-1]
            per_domain.setdefault(domain, [])
            continue
        if domain is None:
            raise SchemaViolation(f"{origin}:{i}: template before any [domain] section")
        per_domain[domain].append(line)
    return TemplateSet(per_domain)


def seed_library() -> VariableLibrary:
    """The variable library shipped with the package."""
    text = resources.files("motionloop.data").joinpath("variable_library.txt").read_text("utf-8")
    return parse_library(text, origin="motionloop.data/variable_library.txt")


def seed_templates() -> TemplateSet:
    """The sentence templates shipped with the package."""
    text = resources.files("motionloop.data").joinpath("templates.txt").read_text("utf-8")
    return parse_templates(text, origin="motionloop.data/templates.txt")


# --- instantiation and parsing ---

def instantiate_prompt(
    lib: VariableLibrary,
    templates: TemplateSet,
    domain: str,
    template_index: int,
    selection: dict[str, str],
    prompt_id: str | None = None,
    lineage: Lineage | None = None,
    flagged: bool = False,
) -> ActionPrompt:
    """Render one phrase per slot into the indexed template for ``domain``."""
    if domain not in DOMAINS:
        raise SchemaViolation(f"unknown domain {domain!r}")
    missing = [slot for slot in SLOTS if slot not in selection]
    if missing:
        raise MissingComponent(f"selection is missing components: {missing}")
    tiers = []
    for slot in SLOTS:
        phrase = selection[slot]
        if not lib.has_phrase(domain, slot, phrase):
            raise UnknownPhrase(f"{phrase!r} is not in {domain}.{slot}")
        tiers.append(lib.tier_of(domain, slot, phrase))
    domain_templates = templates.templates(domain)
    if not 0 <= template_index < len(domain_templates):
        raise SchemaViolation(f"template index {template_index} out of range for {domain}")
    text = domain_templates[template_index].format(**selection)
    if prompt_id is None:
        prompt_id = "p-" + hashlib.sha1(text.encode("utf-8")).hexdigest()[:10]
    return ActionPrompt(
        prompt_id=prompt_id,
        domain=domain,
        text=text,
        selection={slot: selection[slot] for slot in SLOTS},
        tier=max(tiers),
        template_index=template_index,
        lineage=lineage,
        flagged=flagged,
    )


def _match_template(segments, text, lib, domain) -> dict[str, str] | None:
    """Recursive-descent match with longest-phrase-first slot filling."""

    def descend(seg_idx: int, pos: int, bound: dict[str, str]):
        if seg_idx == len(segments):
            return bound if pos == len(text) else None
        kind, value = segments[seg_idx]
        if kind == "lit":
            if text.startswith(value, pos):
                return descend(seg_idx + 1, pos + len(value), bound)
            return None
        candidates = sorted(
            lib.entries(domain, value), key=lambda e: (-len(e.phrase), e.phrase)
        )
        for entry in candidates:
            if text.startswith(entry.phrase, pos):
                result = descend(
                    seg_idx + 1, pos + len(entry.phrase), {**bound, value: entry.phrase}
                )
                if result is not None:
                    return result
        return None

    return descend(0, 0, {})


def _structure_regex(template: str) -> re.Pattern:
    pattern = []
    for kind, value in TemplateSet.segments(template):
        pattern.append(re.escape(value) if kind == "lit" else r"(.+?)")
    return re.compile("^" + "".join(pattern) + "$")


def parse_prompt(lib: VariableLibrary, templates: TemplateSet, text: str) -> ActionPrompt:
    """Invert rendering: recover (domain, template, selection) from prompt text.

    Raises ForeignPhrase when the sentence shape matches a template but some
    slot content is not a library phrase, and NoTemplateMatch when no
    template's literal structure fits at all.
    """
    structural_hit = False
    for domain in DOMAINS:
        for template_index, template in enumerate(templates.templates(domain)):
            segments = TemplateSet.segments(template)
            selection = _match_template(segments, text, lib, domain)
            if selection is not None:
                if len(selection) < len(SLOTS):
                    # Template does not reference every slot; the selection
                    # covers only what the text carries.
                    missing = [s for s in SLOTS if s not in selection]
                    raise MissingComponent(
                        f"template covers only part of the components; missing {missing}"
                    )
                return instantiate_prompt(lib, templates, domain, template_index, selection)
            if _structure_regex(template).match(text):
                structural_hit = True
    if structural_hit:
        raise ForeignPhrase(f"prompt uses phrases outside the library: {text!r}")
    raise NoTemplateMatch(f"no template matches: {text!r}")


# --- sampling ---

def sample_batch(
    lib: VariableLibrary,
    templates: TemplateSet,
    domain: str,
    n: int,
    tier_range: tuple[int, int],
    rng_seed: int,
    id_prefix: str | None = None,
) -> list[ActionPrompt]:
    """Sample ``n`` prompts with every slot drawn uniformly from the tier range."""
    lo, hi = tier_range
    if not (MIN_TIER <= lo <= hi <= MAX_TIER):
        raise ValueError(f"tier_range must satisfy 1 <= lo <= hi <= 5, got {tier_range}")
    pools = {}
    for slot in SLOTS:
        pool = lib.eligible(domain, slot, lo, hi)
        if not pool:
            raise NoEligibleEntries(f"{domain}.{slot} has no entries in tiers {lo}..{hi}")
        pools[slot] = pool
    rng = random.Random(derive_seed("sample_batch", rng_seed, domain, lo, hi))
    domain_templates = templates.templates(domain)
    if not domain_templates:
        raise SchemaViolation(f"no templates for domain {domain!r}")
    prefix = id_prefix if id_prefix is not None else f"s{rng_seed}-{domain}"
    prompts = []
    for i in range(n):
        template_index = rng.randrange(len(domain_templates))
        selection = {slot: rng.choice(pools[slot]).phrase for slot in SLOTS}
        prompts.append(
            instantiate_prompt(
                lib, templates, domain, template_index, selection,
                prompt_id=f"{prefix}-{i:04d}",
            )
        )
    return prompts


def tiered_benchmark(
    lib: VariableLibrary,
    templates: TemplateSet,
    per_tier_n: int,
    rng_seed: int,
) -> list[list[ActionPrompt]]:
    """Five per-tier prompt lists, each balanced across the five domains."""
    if per_tier_n < 1:
        raise ValueError("per_tier_n must be >= 1")
    benchmark = []
    for tier in range(MIN_TIER, MAX_TIER + 1):
        tier_prompts: list[ActionPrompt] = []
        base, remainder = divmod(per_tier_n, len(DOMAINS))
        for d_idx, domain in enumerate(DOMAINS):
            count = base + (1 if d_idx < remainder else 0)
            if count == 0:
                continue
            tier_prompts.extend(
                sample_batch(
                    lib, templates, domain, count, (tier, tier),
                    rng_seed=derive_seed("benchmark", rng_seed, tier, domain),
                    id_prefix=f"bench-T{tier}-{domain}",
                )
            )
        benchmark.append(tier_prompts)
    return benchmark


# --- random baseline ---

_BASELINE_ACTIONS = (
    "jumps", "spins", "crouches", "sprints forward", "rolls sideways",
    "kicks high", "waves both arms", "leaps forward", "turns around",
    "balances on one leg", "stretches upward", "sways side to side",
    "claps overhead", "steps sideways", "ducks low", "lunges ahead",
    "hops in place", "swings the arms", "bends backward", "marches forward",
)
_BASELINE_MANNERS = (
    "quickly", "slowly", "gracefully", "energetically", "carefully",
    "smoothly", "abruptly", "steadily", "lightly", "forcefully",
)
_BASELINE_ENDINGS = (
    "before landing", "and then freezes", "while turning", "and recovers",
    "in a wide circle", "with arms extended", "and pauses briefly",
    "then repeats the motion", "and settles into a stance", "before walking away",
)


def random_baseline_prompts(n: int, external_source=None, rng_seed: int = 0) -> list[str]:
    """Template-free baseline prompts, every line starting "The person".

    Without an external source a seeded sampler composes the lines; an
    external source is a callable ``source(n) -> list[str]`` whose output is
    validated for uniqueness and the required prefix.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if external_source is not None:
        lines = list(external_source(n))
        if len(set(lines)) != len(lines):
            raise DuplicateLine("external source returned duplicate prompts")
        for line in lines:
            if not line.startswith("The person"):
                raise SchemaViolation(f"baseline prompt must start with 'The person': {line!r}")
        return lines
    rng = random.Random(derive_seed("random_baseline", rng_seed, n))
    seen: set[str] = set()
    lines = []
    attempts = 0
    while len(lines) < n:
        attempts += 1
        if attempts > n * 1000:
            raise DuplicateLine("sampler exhausted unique baseline prompts")
        first = rng.choice(_BASELINE_ACTIONS)
        second = rng.choice(_BASELINE_ACTIONS)
        if second == first:
            continue
        line = (
            f"The person {first} {rng.choice(_BASELINE_MANNERS)} and "
            f"{second} {rng.choice(_BASELINE_ENDINGS)}."
        )
        if line in seen:
            continue
        seen.add(line)
        lines.append(line)
    return lines
