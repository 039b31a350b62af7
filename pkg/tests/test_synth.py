import random

import pytest

from clinlabel.adjudicate import build_voted_reference
from clinlabel.corpus import Task, annotation_to_record, conversation_to_record, cross_validate
from clinlabel.synth import (
    EXAMPLE_TEMPLATES, Noise, SynthConfig, Template, TemplateError, dumps_manifest, generate_corpus, realize,
    simulate_labeler,
)

from helpers import ann, conv, span


def serialize(corpus):
    return ([conversation_to_record(c) for c in corpus.conversations],
            [annotation_to_record(a) for a in corpus.gold], dumps_manifest(corpus))


def test_deterministic():
    cfg = SynthConfig(seed=11, n_train=15, n_dev=3, n_test=3)
    assert serialize(generate_corpus(cfg)) == serialize(generate_corpus(cfg))
    assert serialize(generate_corpus(cfg)) != serialize(generate_corpus(SynthConfig(seed=12, n_train=15, n_dev=3,
                                                                                      n_test=3)))


def test_split_sizes_and_disjoint_providers():
    corpus = generate_corpus(SynthConfig(seed=0, n_train=100, n_dev=10, n_test=10))
    assert [len(corpus.split[k]) for k in ("train", "dev", "test")] == [100, 10, 10]
    provs = {k: {corpus.providers[c] for c in corpus.split[k]} for k in corpus.split}
    assert not provs["dev"] & provs["test"]
    assert not provs["train"] & (provs["dev"] | provs["test"])
    assert len(corpus.conversations) == 120
    assert len(corpus.gold) == 120 * len(Task)


def test_turn_range_respected():
    corpus = generate_corpus(SynthConfig(seed=1, n_train=40, n_dev=0, n_test=0, min_turns=6, max_turns=14))
    assert all(1 <= len(c.turns) <= 14 for c in corpus.conversations)


SYMPTOM_EXAMPLE_ROWS = [
    ("stomach issues", "GI:Other", "Experienced"),
    ("2 weeks", "Property:Duration", None),
    ("bad", "Property:Severity/Amount", None),
    ("upper abdomen", "Property:Location", None),
    ("comes and goes", "Property:Frequency", None),
    ("hurts", "GI:Abdominal Pain", "Experienced"),
    ("Sometimes", "Property:Frequency", None),
    ("queasy", "GI:Nausea", "Experienced"),
]


def test_symptom_example_spans():
    r = realize(EXAMPLE_TEMPLATES[0], random.Random(0))
    got = [(" ".join(r.turns[s.turn_index].tokens[s.start:s.end]), s.tag, s.status) for s in r.spans]
    assert got == SYMPTOM_EXAMPLE_ROWS
    ids = {s.span_id: s.tag for s in r.spans}
    linked = {(ids[a], ids[b]) for a, b in r.relations}
    assert ("Property:Location", "GI:Other") in linked
    assert ("Property:Frequency", "GI:Nausea") in linked


def test_medication_template_has_the_shot():
    r = realize(EXAMPLE_TEMPLATES[1], random.Random(0))
    surf = {(" ".join(r.turns[s.turn_index].tokens[s.start:s.end]), s.tag) for s in r.spans}
    assert ("The shot", "Property:Mode") in surf
    assert ("glimepiride", "Drug") in surf


@pytest.mark.parametrize("line", [
    "I forgot the speaker",
    "PT: [unclosed](GI:Nausea",
    "PT: [x](Property:Duration>missing) .",
    "PT: {nopool} here",
])
def test_bad_markup(line):
    with pytest.raises(TemplateError):
        realize(Template(Task.SYMPTOMS, (line,)), random.Random(0))


def test_bad_template_rejected_by_generator():
    with pytest.raises(TemplateError):
        generate_corpus(SynthConfig(templates=(Template(Task.SYMPTOMS, ("oops",)),)))


def test_gold_cross_validates():
    corpus = generate_corpus(SynthConfig(seed=5, n_train=50, n_dev=5, n_test=5))
    for task in Task:
        anns = [a for a in corpus.gold if a.task is task]
        assert cross_validate(anns, corpus.conversations, corpus.ontologies[task]) == []


def test_noise_validation():
    with pytest.raises(ValueError):
        Noise(p_miss=1.5)
    with pytest.raises(ValueError):
        Noise(jitter=-1)


@pytest.fixture(scope="module")
def small():
    corpus = generate_corpus(SynthConfig(seed=8, n_train=40, n_dev=0, n_test=0))
    return corpus, {c.id: c for c in corpus.conversations}


def test_zero_noise_is_identity(small):
    corpus, convs = small
    for g in corpus.gold:
        out = simulate_labeler(g, convs[g.conversation_id], Noise(), 3, corpus.ontologies[g.task])
        assert (out.spans, out.relations) == (g.spans, g.relations)


def test_full_miss_is_empty(small):
    corpus, convs = small
    for g in corpus.gold:
        out = simulate_labeler(g, convs[g.conversation_id], Noise(p_miss=1.0), 3, corpus.ontologies[g.task])
        assert out.spans == () and out.relations == ()


def test_noisy_labelers_cross_validate(small):
    corpus, convs = small
    noise = Noise(0.2, 2, 0.3, 0.3)
    for seed in range(3):
        for task in Task:
            labs = [simulate_labeler(g, convs[g.conversation_id], noise, seed, corpus.ontologies[task])
                    for g in corpus.gold if g.task is task]
            assert cross_validate(labs, corpus.conversations, corpus.ontologies[task]) == []


def test_confusion_stays_in_system(small):
    corpus, convs = small
    sx = corpus.ontologies[Task.SYMPTOMS]
    for g in corpus.gold:
        if g.task is not Task.SYMPTOMS:
            continue
        out = simulate_labeler(g, convs[g.conversation_id], Noise(p_conf=1.0), 1, sx)
        for a, b in zip(g.spans, out.spans):
            assert sx.system_of(a.tag) == sx.system_of(b.tag)


def test_status_flip(small):
    corpus, convs = small
    sx = corpus.ontologies[Task.SYMPTOMS]
    g = next(g for g in corpus.gold if g.task is Task.SYMPTOMS and any(s.status for s in g.spans))
    out = simulate_labeler(g, convs[g.conversation_id], Noise(p_flip=1.0), 1, sx)
    for a, b in zip(g.spans, out.spans):
        if a.status:
            assert b.status != a.status


# seed found by searching labeler seeds "<base>:<k>" for the boundary pattern below
BOUNDARY_BASE_SEED = 274


def test_jitter_reproduces_boundary_disagreement_triple():
    c = conv(3)
    gold = ann([span("d", 0, 1, 3, "Drug")])
    labs = [simulate_labeler(gold, c, Noise(jitter=1), f"{BOUNDARY_BASE_SEED}:{k}", labeler_id=f"L{k}")
            for k in range(3)]
    assert [(a.spans[0].start, a.spans[0].end) for a in labs] == [(0, 2), (1, 3), (2, 3)]
    (voted,) = build_voted_reference(labs, [c])
    assert [(s.start, s.end) for s in voted.spans] == [(1, 3)]
