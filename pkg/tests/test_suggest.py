import pytest

from clinlabel.corpus import Task
from clinlabel.suggest import Lexicon, SplitError, read_lexicon, recall_experiment, suggest, write_lexicon
from clinlabel.synth import SynthConfig, generate_corpus

from helpers import ann, conv_from_text, span


def test_diabetes_example():
    c = conv_from_text("DR: Any history of diabetes ?")
    out = suggest(c, Lexicon.from_pairs([("diabetes", "Condition:Patient")]))
    assert [(s.turn_index, s.start, s.end, s.tag, s.status) for s in out] == [(0, 3, 4, "Condition:Patient", None)]


def test_longest_match_wins():
    lex = Lexicon.from_pairs([("high blood", "X"), ("high blood pressure", "Condition:Patient")])
    out = suggest(conv_from_text("PT: my High Blood Pressure again"), lex)
    assert [(s.start, s.end, s.tag) for s in out] == [(1, 4, "Condition:Patient")]


def test_matches_do_not_overlap():
    lex = Lexicon.from_pairs([("a b", "X"), ("b c", "Y")])
    out = suggest(conv_from_text("PT: a b c"), lex)
    assert [(s.start, s.end) for s in out] == [(0, 2)]


def test_empty_lexicon():
    assert suggest(conv_from_text("PT: anything at all"), Lexicon({})) == []


def test_empty_surface_rejected():
    with pytest.raises(ValueError):
        Lexicon({(): "X"})


def test_split_refusal():
    c = conv_from_text("PT: diabetes", cid="dev1")
    lex = Lexicon.from_pairs([("diabetes", "Condition:Patient")])
    with pytest.raises(SplitError):
        suggest(c, lex, train_ids=["tr1"])
    assert len(suggest(c, lex, train_ids=["dev1"])) == 1


def test_lexicon_file_round_trip(tmp_path):
    lex = Lexicon.from_pairs([("High blood pressure", "Condition:Patient"), ("asthma", "Condition:Patient")])
    write_lexicon(tmp_path / "l.jsonl", lex)
    assert read_lexicon(tmp_path / "l.jsonl") == lex


@pytest.fixture(scope="module")
def conditions():
    corpus = generate_corpus(SynthConfig(seed=3, n_train=60, n_dev=0, n_test=0))
    gold = [a for a in corpus.gold if a.task is Task.CONDITIONS]
    return corpus.conversations, gold, Lexicon.from_ontology(corpus.ontologies[Task.CONDITIONS])


@pytest.mark.parametrize("p,q", [(0.0, 1.0), (0.0, 0.5), (0.3, 0.0), (1.0, 0.0)])
def test_experiment_no_gain_cases(conditions, p, q):
    convs, gold, lex = conditions
    assert recall_experiment(gold, convs, lex, p, q, seed=1)["delta"] == 0.0


def test_experiment_never_hurts(conditions):
    convs, gold, lex = conditions
    for seed in range(10):
        res = recall_experiment(gold, convs, lex, 0.3, 0.7, seed=seed)
        assert res["recall_with"] >= res["recall_without"]


def test_experiment_deterministic(conditions):
    convs, gold, lex = conditions
    assert recall_experiment(gold, convs, lex, 0.3, 1.0, 5) == recall_experiment(gold, convs, lex, 0.3, 1.0, 5)


def test_experiment_full_recovery():
    c = conv_from_text("PT: I have asthma")
    g = ann([span("a", 0, 2, 3, "Condition:Patient", "Experienced")], task=Task.CONDITIONS)
    lex = Lexicon.from_pairs([("asthma", "Condition:Patient")])
    res = recall_experiment([g], [c], lex, 1.0, 1.0, seed=0)
    assert res == {"recall_without": 0.0, "recall_with": 1.0, "delta": 1.0}


def test_rates_validated(conditions):
    convs, gold, lex = conditions
    with pytest.raises(ValueError):
        recall_experiment(gold, convs, lex, 1.5, 0.5)
