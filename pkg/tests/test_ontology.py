import itertools
import random

import pytest

from clinlabel.corpus import CorpusError, Task
from clinlabel.ontology import (
    AttributeDef, EntityDef, Ontology, apply_remap, default_ontology, prune, read_ontology, resolve_preference,
    write_ontology,
)
from clinlabel.validate import validate_annotation

from helpers import ann, span

MEDS = default_ontology("medications")


@pytest.mark.parametrize("cands,expected", [
    ({"Property:Duration", "Property:Quantity"}, "Property:Quantity"),
    ({"Property:Dose"}, "Property:Dose"),
    ({"Property:Mode", "Property:Dose"}, "Property:Dose"),
])
def test_resolve_preference(cands, expected):
    assert resolve_preference(cands, MEDS) == expected


def test_resolve_preference_order_independent():
    tags = sorted(MEDS.attribute_tags)
    for r in range(1, len(tags) + 1):
        for combo in itertools.combinations(tags, r):
            results = {resolve_preference(list(p), MEDS) for p in itertools.permutations(combo)}
            assert len(results) == 1


def test_resolve_preference_unlisted_rank_last():
    o = Ontology(Task.MEDICATIONS, (), (AttributeDef("A"), AttributeDef("Z"), AttributeDef("M")),
                 preference_order=("M",))
    assert resolve_preference({"A", "Z", "M"}, o) == "M"
    assert resolve_preference({"Z", "A"}, o) == "A"


def test_resolve_preference_empty():
    with pytest.raises(ValueError):
        resolve_preference(set(), MEDS)


def test_default_ontologies_load():
    sx = default_ontology("symptoms")
    assert sx.status_required and set(sx.statuses) == {"Experienced", "Not Experienced"}
    assert {"Const:Fever", "GI:Vomiting", "Neuro:Seizure", "GI:Nausea"} <= sx.entity_tags
    assert len({e.system for e in sx.entities}) == 14
    assert not default_ontology("medications").status_required
    assert "Property:Onset/Diagnosis" in default_ontology("conditions").attribute_tags


def test_ontology_invariants():
    with pytest.raises(CorpusError):
        Ontology(Task.SYMPTOMS, (EntityDef("X"),), (AttributeDef("X"),))
    with pytest.raises(CorpusError):
        Ontology(Task.MEDICATIONS, (), (AttributeDef("A"),), preference_order=("B",))
    with pytest.raises(CorpusError):
        Ontology(Task.SYMPTOMS, (), (), status_required=True)


def test_ontology_file_round_trip(tmp_path):
    sx = default_ontology("symptoms")
    write_ontology(tmp_path / "o.json", sx)
    assert read_ontology(tmp_path / "o.json") == sx


def _kept(o):
    return {e.tag for e in o.entities}


def test_prune_low_count_goes_to_system_other():
    sx = default_ontology("symptoms")
    counts = {e.tag: 100 for e in sx.entities}
    kappas = {e.tag: 0.9 for e in sx.entities}
    counts["GI:Vomiting"] = 2
    pruned, remap = prune(sx, counts, kappas, min_count=10, min_kappa=0.5)
    assert remap["GI:Vomiting"] == "GI:Other"
    assert "GI:Vomiting" not in _kept(pruned)
    assert "GI:Other" in _kept(pruned)
    assert pruned.attributes == sx.attributes


def test_prune_low_kappa():
    sx = default_ontology("symptoms")
    counts = {e.tag: 100 for e in sx.entities}
    kappas = {e.tag: 0.9 for e in sx.entities}
    kappas["Neuro:Seizure"] = 0.1
    _, remap = prune(sx, counts, kappas, min_count=10, min_kappa=0.5)
    assert remap["Neuro:Seizure"] == "Neuro:Other"


def test_prune_identity():
    sx = default_ontology("symptoms")
    pruned, remap = prune(sx, {e.tag: 50 for e in sx.entities}, {e.tag: 1.0 for e in sx.entities}, 10, 0.5)
    assert pruned == sx
    assert all(remap[t] == t for t in remap)


def test_prune_without_system_removes_tag():
    pruned, remap = prune(MEDS, {"Drug": 0}, {"Drug": 0.0}, 1, 0.5)
    assert remap["Drug"] is None
    assert pruned.entities == ()


def test_prune_creates_missing_other_tag():
    o = Ontology(Task.SYMPTOMS, (EntityDef("GI:A", "Gastro"), EntityDef("GI:B", "Gastro")), (),
                 ("Experienced",), True)
    pruned, remap = prune(o, {"GI:A": 0, "GI:B": 9}, {"GI:A": 1.0, "GI:B": 1.0}, 5, 0.0)
    assert remap == {"GI:A": "GI:Other", "GI:B": "GI:B"}
    assert _kept(pruned) == {"GI:B", "GI:Other"}
    assert pruned.system_of("GI:Other") == "Gastro"


def test_prune_186_to_88():
    # 186 entities over 14 systems, as in the full symptom ontology; counts/kappas synthetic
    rng = random.Random(5)
    systems = [f"S{i}" for i in range(14)]
    entities = [EntityDef(f"{s}:Other", s) for s in systems]
    entities += [EntityDef(f"{systems[i % 14]}:E{i}", systems[i % 14]) for i in range(186 - 14)]
    o = Ontology(Task.SYMPTOMS, tuple(entities), (), ("Experienced", "Not Experienced"), True)
    counts = {e.tag: rng.randint(0, 5000) for e in entities}
    kappas = {e.tag: 0.8 for e in entities}
    named = sorted((counts[e.tag] for e in entities if not e.tag.endswith(":Other")), reverse=True)
    # keep 88 in total: the 14 Other tags plus the 74 most frequent named tags
    threshold = named[73]
    assert named[74] < threshold
    pruned, remap = prune(o, counts, kappas, min_count=threshold, min_kappa=0.5)
    assert len(pruned.entities) == 88


def test_remapped_annotations_validate_against_pruned_ontology():
    sx = default_ontology("symptoms")
    counts = {e.tag: 100 for e in sx.entities}
    counts["GI:Nausea"] = 0
    pruned, remap = prune(sx, counts, {e.tag: 1.0 for e in sx.entities}, 10, 0.5)
    a = ann([span("s1", 0, 0, 1, "GI:Nausea", "Experienced"), span("s2", 0, 1, 2, "Property:Frequency")],
            [("s2", "s1")], task=Task.SYMPTOMS)
    out = apply_remap(a, remap)
    assert out.spans[0].tag == "GI:Other"
    assert validate_annotation(out, pruned) == []
