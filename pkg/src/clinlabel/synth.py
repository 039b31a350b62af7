"""Synthetic doctor/patient conversations with gold annotations, plus noisy labelers.

Templates are turn lines such as::

    PT: I feel [{sym}](@;Experienced#a) [{freq}](Property:Frequency>a) .

``[surface](Tag;Status#id>ref)`` marks a gold span. ``@`` takes the tag from
the slot filler, ``#id`` names the span and ``>ref`` links it to a named
span of the same template. ``{slot}`` is replaced by a filler from the pool
of that name.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .corpus import AnnotationSet, Conversation, LabeledSpan, Speaker, Task, Turn
from .ontology import Ontology, default_ontology

GOLD = "GOLD"

MARKUP = re.compile(r"\[([^\]]+)\]\(([^)]*)\)")
SLOT = re.compile(r"\{(\w+)\}")


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    task: Task
    lines: tuple[str, ...]


@dataclass(frozen=True)
class Noise:
    p_miss: float = 0.0
    jitter: int = 0
    p_conf: float = 0.0
    p_flip: float = 0.0

    def __post_init__(self):
        for name in ("p_miss", "p_conf", "p_flip"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_train: int = 100
    n_dev: int = 10
    n_test: int = 10
    min_turns: int = 6
    max_turns: int = 14
    n_providers: int = 9
    templates: Optional[tuple[Template, ...]] = None
    noise: Noise = field(default_factory=Noise)

    @property
    def n_conversations(self) -> int:
        return self.n_train + self.n_dev + self.n_test


# ---------------------------------------------------------------------------
# template inventory

POOLS: dict[str, list[tuple[str, Optional[str]]]] = {
    "dur": [(s, "Property:Duration") for s in
            ["2 weeks", "three days", "a month", "about a week", "two months", "since monday", "a few days", "ten days"]],
    "freq": [(s, "Property:Frequency") for s in
             ["sometimes", "every day", "twice a day", "comes and goes", "at night", "every morning", "once a week"]],
    "loc": [(s, "Property:Location") for s in
            ["upper abdomen", "lower back", "left side", "right knee", "behind my eyes", "my chest", "both legs"]],
    "sev": [(s, "Property:Severity/Amount") for s in
            ["bad", "really bad", "mild", "severe", "terrible", "not too bad", "pretty intense"]],
    "allev": [(s, "Property:Alleviating Factor") for s in
              ["rest", "lie down", "take ibuprofen", "use ice", "sit still", "sleep"]],
    "prov": [(s, "Property:Provoking Factor") for s in
             ["climb stairs", "eat", "walk a lot", "bend over", "lift things", "cough"]],
    "dose": [(s, "Property:Dose") for s in ["1mg", "500 mg", "two tablets", "10 units", "20 mg", "one puff"]],
    "rxfreq": [(s, "Property:Frequency") for s in
               ["everyday", "twice a day", "every morning", "at bedtime", "as needed", "three times a day"]],
    "mode": [(s, "Property:Mode") for s in ["pill", "the shot", "injection", "inhaler", "patch", "liquid"]],
    "qty": [(s, "Property:Quantity") for s in ["90 day sample", "30 pills", "a bottle", "two refills"]],
    "rxdur": [(s, "Property:Duration") for s in ["six months", "a year", "two weeks", "a long time"]],
    "cond": [(s, None) for s in
             ["diabetes", "asthma", "high blood pressure", "copd", "gout", "arthritis", "hypothyroidism", "migraines"]],
    "onset": [(s, "Property:Onset/Diagnosis") for s in
              ["10 years ago", "last year", "early onset", "as a kid", "in 2015", "recently"]],
    "csev": [(s, "Property:Severity/Amount") for s in ["well-controlled", "mild", "severe", "under control"]],
    "relative": [(s, None) for s in ["brother", "mother", "father", "sister", "grandmother"]],
    "chat": [(s, None) for s in [
        "how are you doing today ?", "okay , let me pull up your chart .", "thanks for coming in .",
        "sure .", "alright .", "yeah .", "let me write that down .", "any other questions ?",
        "we will check some labs today .", "sounds good .", "mm-hmm .", "good to see you again ."]],
}

EXAMPLE_TEMPLATES: tuple[Template, ...] = (
    Template(Task.SYMPTOMS, (
        "PT: I've been having [stomach issues](GI:Other;Experienced#si) around here for the last "
        "[2 weeks](Property:Duration>si) . It's [bad](Property:Severity/Amount>si) .",
        "DR: Okay , in the [upper abdomen](Property:Location>si) . What does it feel like ?",
        "PT: It kind of [comes and goes](Property:Frequency>ap) and [hurts](GI:Abdominal Pain;Experienced#ap) . "
        "[Sometimes](Property:Frequency>nz) I feel [queasy](GI:Nausea;Experienced#nz) .",
    )),
    Template(Task.MEDICATIONS, (
        "DR: Are you taking any [diabetes medication](Drug#dm) ?",
        "PT: My kidney doc just changed the [pill](Property:Mode>gl) .",
        "DR: Oh , a [Sulfonylurea](Drug#su) . Like [Amaryl](Drug#am) ? The generic name is [glimepiride](Drug#gl) .",
        "PT: Yup , she started me on [1mg](Property:Dose>gl) [everyday](Property:Frequency>gl) .",
        "DR: Do you use [Insulin](Drug#in) ?",
        "PT: [The shot](Property:Mode>in) ? Only my brother has to .",
    )),
    Template(Task.CONDITIONS, (
        "DR: Any history of [diabetes](Condition:Patient;Experienced#d1) ?",
        "PT: I have [diabetes](Condition:Patient;Experienced#d2) .",
        "DR: When was that diagnosed ?",
        "PT: [10 years ago](Property:Onset/Diagnosis>d2) .",
        "DR: OK , and it seems to be [well-controlled](Property:Severity/Amount>d2) . Any history of "
        "[high blood pressure](Condition:Family History;Experienced#hb) in the family ?",
        "PT: My brother has [early onset](Property:Onset/Diagnosis>hb2) "
        "[high blood pressure](Condition:Family History;Experienced#hb2) .",
    )),
)

SLOT_TEMPLATES: tuple[Template, ...] = (
    Template(Task.SYMPTOMS, (
        "PT: I've been [{sym}](@;Experienced#a) for [{dur}](Property:Duration>a) .",
        "DR: Where exactly ?",
        "PT: Mostly in the [{loc}](Property:Location>a) , and it is [{sev}](Property:Severity/Amount>a) .",
    )),
    Template(Task.SYMPTOMS, (
        "DR: Any [{sym}](@;Not Experienced#a) ?",
        "PT: No , nothing like that .",
    )),
    Template(Task.SYMPTOMS, (
        "PT: I get [{sym}](@;Experienced#a) [{freq}](Property:Frequency>a) .",
        "DR: Does anything help ?",
        "PT: It gets better when I [{allev}](Property:Alleviating Factor>a) .",
    )),
    Template(Task.SYMPTOMS, (
        "PT: The [{sym}](@;Experienced#a) is worse when I [{prov}](Property:Provoking Factor>a) .",
        "DR: How long has that been going on ?",
        "PT: [{dur}](Property:Duration>a) maybe .",
    )),
    Template(Task.SYMPTOMS, (
        "DR: Have you had any [{sym}](@;Not Experienced#a) or [{sym}](@;Not Experienced#b) ?",
        "PT: No .",
    )),
    Template(Task.SYMPTOMS, (
        "PT: Also I have been feeling [{sym}](@;Experienced#a) , it's [{sev}](Property:Severity/Amount>a) "
        "[{freq}](Property:Frequency>a) .",
    )),
    Template(Task.MEDICATIONS, (
        "DR: Are you still taking the [{drug}](Drug#d) ?",
        "PT: Yes , [{dose}](Property:Dose>d) [{rxfreq}](Property:Frequency>d) .",
    )),
    Template(Task.MEDICATIONS, (
        "DR: I'll send in [{drug}](Drug#d) , it's a [{mode}](Property:Mode>d) you take "
        "[{rxfreq}](Property:Frequency>d) .",
        "PT: Okay .",
    )),
    Template(Task.MEDICATIONS, (
        "PT: I have been on [{drug}](Drug#d) for [{rxdur}](Property:Duration>d) .",
        "DR: And how much do you take ?",
        "PT: [{dose}](Property:Dose>d) .",
    )),
    Template(Task.MEDICATIONS, (
        "DR: I gave you a [{qty}](Property:Quantity>d) of [{drug}](Drug#d) .",
    )),
    Template(Task.CONDITIONS, (
        "DR: Any history of [{cond}](Condition:Patient;Not Experienced#c) ?",
        "PT: No , never .",
    )),
    Template(Task.CONDITIONS, (
        "PT: I have [{cond}](Condition:Patient;Experienced#c) , it was diagnosed [{onset}](Property:Onset/Diagnosis>c) .",
        "DR: And it is [{csev}](Property:Severity/Amount>c) now ?",
        "PT: Yes .",
    )),
    Template(Task.CONDITIONS, (
        "PT: My {relative} has [{cond}](Condition:Family History;Experienced#c) .",
    )),
)

DEFAULT_TEMPLATES = EXAMPLE_TEMPLATES + SLOT_TEMPLATES


def _pools(ontologies: dict[Task, Ontology]) -> dict[str, list[tuple[str, Optional[str]]]]:
    pools = dict(POOLS)
    sx = ontologies[Task.SYMPTOMS]
    pools["sym"] = [(alias, e.tag) for e in sx.entities for alias in e.aliases if not e.tag.endswith(":Other")]
    rx = ontologies[Task.MEDICATIONS]
    pools["drug"] = [(alias, e.tag) for e in rx.entities for alias in e.aliases]
    return pools


@dataclass
class Realized:
    turns: list[Turn]
    spans: list[LabeledSpan]
    relations: list[tuple[str, str]]


def realize(template: Template, rng: random.Random, pools=None, turn_offset: int = 0, prefix: str = "") -> Realized:
    """Fill slots and parse markup into turns, gold spans and relations."""
    pools = pools if pools is not None else _pools(_default_ontologies())
    turns: list[Turn] = []
    spans: list[LabeledSpan] = []
    named: dict[str, str] = {}
    links: list[tuple[str, str]] = []
    for ti, line in enumerate(template.lines):
        speaker, sep, body = line.partition(":")
        if not sep or speaker.strip() not in Speaker.__members__:
            raise TemplateError(f"line must start with a speaker tag: {line!r}")
        tokens: list[str] = []
        pos = 0
        for m in MARKUP.finditer(body):
            tokens += _fill(body[pos:m.start()], rng, pools).split()
            surface, spec = m.group(1), m.group(2)
            tag, status, sid, refs = _parse_spec(spec, line)
            if tag == "@":
                slot = SLOT.fullmatch(surface.strip())
                if slot is None:
                    raise TemplateError(f"'@' tag needs a lone slot surface: {line!r}")
                surface, tag = _pick(slot.group(1), rng, pools)
                if tag is None:
                    raise TemplateError(f"slot {slot.group(1)!r} has no tags")
            else:
                surface = _fill(surface, rng, pools)
            words = surface.split()
            if not words:
                raise TemplateError(f"empty span surface in {line!r}")
            span_id = f"{prefix}s{len(spans) + 1}"
            spans.append(LabeledSpan(span_id, turn_offset + ti, len(tokens), len(tokens) + len(words), tag, status))
            tokens += words
            if sid:
                named[sid] = span_id
            links += [(span_id, r) for r in refs]
            pos = m.end()
        tokens += _fill(body[pos:], rng, pools).split()
        if "[" in " ".join(tokens) or "](" in " ".join(tokens):
            raise TemplateError(f"unbalanced markup in {line!r}")
        turns.append(Turn(Speaker[speaker.strip()], tuple(tokens)))
    relations = []
    for span_id, ref in links:
        if ref not in named:
            raise TemplateError(f"relation target #{ref} undefined in template")
        relations.append((span_id, named[ref]))
    return Realized(turns, spans, relations)


def _parse_spec(spec: str, line: str):
    m = re.fullmatch(r"([^;#>]+)(?:;([^#>]+))?(?:#(\w+))?((?:>\w+)*)", spec.strip())
    if m is None:
        raise TemplateError(f"bad span markup ({spec!r}) in {line!r}")
    refs = [r for r in m.group(4).split(">") if r]
    return m.group(1).strip(), (m.group(2) or None), m.group(3), refs


def _pick(slot: str, rng: random.Random, pools):
    if slot not in pools:
        raise TemplateError(f"unknown slot {{{slot}}}")
    return rng.choice(pools[slot])


def _fill(text: str, rng: random.Random, pools) -> str:
    return SLOT.sub(lambda m: _pick(m.group(1), rng, pools)[0], text)


def _default_ontologies() -> dict[Task, Ontology]:
    return {t: default_ontology(t) for t in Task}


# ---------------------------------------------------------------------------
# corpus generation

@dataclass
class SynthCorpus:
    conversations: list[Conversation]
    gold: list[AnnotationSet]
    split: dict[str, list[str]]
    providers: dict[str, str]
    ontologies: dict[Task, Ontology]

    def manifest(self) -> dict:
        return {**self.split, "providers": self.providers}

    def subset(self, split: str) -> tuple[list[Conversation], list[AnnotationSet]]:
        ids = set(self.split[split])
        return ([c for c in self.conversations if c.id in ids],
                [a for a in self.gold if a.conversation_id in ids])


def generate_corpus(config: SynthConfig = SynthConfig(), ontologies=None) -> SynthCorpus:
    ontologies = ontologies or _default_ontologies()
    templates = config.templates or DEFAULT_TEMPLATES
    pools = _pools(ontologies)
    # validate every template once up front
    for tpl in templates:
        realize(tpl, random.Random(0), pools)

    n_prov = max(3, config.n_providers)
    providers_by_split = {
        "train": [f"P{i:02d}" for i in range(0, n_prov - 2 * (n_prov // 3))],
        "dev": [f"P{i:02d}" for i in range(n_prov - 2 * (n_prov // 3), n_prov - n_prov // 3)],
        "test": [f"P{i:02d}" for i in range(n_prov - n_prov // 3, n_prov)],
    }
    split: dict[str, list[str]] = {"train": [], "dev": [], "test": []}
    providers: dict[str, str] = {}
    conversations, gold = [], []
    idx = 0
    for name, n in (("train", config.n_train), ("dev", config.n_dev), ("test", config.n_test)):
        for _ in range(n):
            cid = f"conv{idx:05d}"
            idx += 1
            rng = random.Random(f"{config.seed}:{cid}")
            providers[cid] = rng.choice(providers_by_split[name])
            conv, anns = _generate_one(cid, rng, templates, pools, config)
            split[name].append(cid)
            conversations.append(conv)
            gold.extend(anns)
    return SynthCorpus(conversations, gold, split, providers, ontologies)


def _generate_one(cid, rng, templates, pools, config):
    target = rng.randint(config.min_turns, max(config.min_turns, config.max_turns))
    turns: list[Turn] = []
    spans: dict[Task, list[LabeledSpan]] = {t: [] for t in Task}
    rels: dict[Task, list[tuple[str, str]]] = {t: [] for t in Task}
    episode = 0
    while len(turns) < target:
        if rng.random() < 0.3:
            turns.append(Turn(rng.choice([Speaker.DR, Speaker.PT]), tuple(rng.choice(pools["chat"])[0].split())))
            continue
        tpl = rng.choice(templates)
        if len(turns) + len(tpl.lines) > config.max_turns and turns:
            break
        r = realize(tpl, rng, pools, turn_offset=len(turns), prefix=f"e{episode}")
        episode += 1
        turns += r.turns
        spans[tpl.task] += r.spans
        rels[tpl.task] += r.relations
    conv = Conversation(cid, tuple(turns))
    anns = [AnnotationSet(cid, GOLD, t, tuple(spans[t]), tuple(rels[t])) for t in Task]
    return conv, anns


def simulate_labeler(
    gold: AnnotationSet,
    conversation: Conversation,
    noise: Noise,
    labeler_seed,
    ontology: Optional[Ontology] = None,
    labeler_id: Optional[str] = None,
) -> AnnotationSet:
    """Corrupt a gold annotation the way a fallible labeler would.

    Per span, independently: drop it, jitter each boundary by up to
    ``noise.jitter`` tokens, swap the tag for another in the same organ
    system, flip the status. Jittered spans are clipped to the turn, kept
    non-empty and never pushed into a neighbouring span.
    """
    rng = random.Random(f"{labeler_seed}:{gold.conversation_id}:{gold.task.value}")
    lengths = conversation.turn_lengths
    kept = [s for s in gold.spans if not rng.random() < noise.p_miss]
    ordered = sorted(kept, key=lambda s: s.extent)
    out: list[LabeledSpan] = []
    for i, s in enumerate(ordered):
        lo = 0
        if out and out[-1].turn_index == s.turn_index:
            lo = out[-1].end
        hi = lengths[s.turn_index]
        if i + 1 < len(ordered) and ordered[i + 1].turn_index == s.turn_index:
            hi = ordered[i + 1].start
        start, end = s.start, s.end
        if noise.jitter:
            start = min(max(s.start + rng.randint(-noise.jitter, noise.jitter), lo), s.end - 1)
            end = max(min(s.end + rng.randint(-noise.jitter, noise.jitter), hi), start + 1)
        tag, status = s.tag, s.status
        if ontology is not None and noise.p_conf and rng.random() < noise.p_conf:
            alternatives = [t for t in ontology.same_system(tag) if t != tag]
            if alternatives:
                tag = rng.choice(alternatives)
        if status and noise.p_flip and rng.random() < noise.p_flip:
            others = [x for x in (ontology.statuses if ontology else ()) if x != status]
            if others:
                status = rng.choice(others)
        out.append(replace(s, start=start, end=end, tag=tag, status=status))
    ids = {s.span_id for s in out}
    relations = tuple(r for r in gold.relations if r[0] in ids and r[1] in ids)
    by_id = {s.span_id: s for s in out}
    spans = tuple(by_id[s.span_id] for s in gold.spans if s.span_id in by_id)
    return replace(gold, labeler_id=labeler_id or f"SIM{labeler_seed}", spans=spans, relations=relations)


def dumps_manifest(corpus: SynthCorpus) -> str:
    return json.dumps(corpus.manifest(), indent=1, sort_keys=True) + "\n"
