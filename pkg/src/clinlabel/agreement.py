"""Inter-labeler agreement, QA scores against a reference set, reviewer choice."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import AnnotationSet, Conversation
from .ontology import Ontology
from .scoring import Key, Mode, project_tokens, relation_keys, score_corpus

CATEGORIES = ("entities", "attributes", "relations")


@dataclass(frozen=True)
class Kappa:
    kappa: float
    p_o: float
    p_e: float
    n: int


def cohen_kappa(a: Sequence[str], b: Sequence[str]) -> Kappa:
    """Cohen's kappa for two aligned categorical sequences.

    When chance agreement is 1 (both raters used one shared category) kappa
    is 1 if they agree everywhere, else 0.
    """
    if len(a) != len(b):
        raise ValueError(f"sequence lengths differ ({len(a)} vs {len(b)})")
    n = len(a)
    if n == 0:
        return Kappa(1.0, 1.0, 1.0, 0)
    p_o = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    p_e = sum(ca[c] * cb[c] for c in ca.keys() & cb.keys()) / (n * n)
    if p_e >= 1.0:
        return Kappa(1.0 if p_o == 1.0 else 0.0, p_o, p_e, n)
    return Kappa((p_o - p_e) / (1 - p_e), p_o, p_e, n)


def token_tags(ann: AnnotationSet, conv: Conversation, keep=None) -> list[str]:
    """Composed tag per token of ``conv`` (``O`` outside spans), in reading order."""
    spans = ann.spans if keep is None else tuple(s for s in ann.spans if keep(s.tag))
    proj = project_tokens(AnnotationSet(ann.conversation_id, ann.labeler_id, ann.task, spans), Key.TAG_PLUS_STATUS)
    return [proj.get((ti, t), "O") for ti, n in enumerate(conv.turn_lengths) for t in range(n)]


def pairwise_kappa(a: AnnotationSet, b: AnnotationSet, conv: Conversation, keep=None) -> Kappa:
    if (a.conversation_id, a.task) != (b.conversation_id, b.task):
        raise ValueError("annotations belong to different conversations or tasks")
    return cohen_kappa(token_tags(a, conv, keep), token_tags(b, conv, keep))


def span_agreement(a: AnnotationSet, b: AnnotationSet) -> float:
    """Strict span match rate: identical extent and composed tag, over the union."""
    ka = {(s.extent, s.composed_tag) for s in a.spans}
    kb = {(s.extent, s.composed_tag) for s in b.spans}
    union = ka | kb
    return len(ka & kb) / len(union) if union else 1.0


def relation_agreement(a: AnnotationSet, b: AnnotationSet) -> Optional[float]:
    """Share of links (keyed by exact endpoint extent+tag) present in both sets."""
    ra, rb = relation_keys(a), relation_keys(b)
    union = ra | rb
    return len(ra & rb) / len(union) if union else None


@dataclass
class AgreementReport:
    per_pair: dict[str, dict[tuple[str, str], Optional[float]]] = field(default_factory=dict)
    mean_kappa: dict[str, Optional[float]] = field(default_factory=dict)
    p_o: dict[str, Optional[float]] = field(default_factory=dict)
    p_e: dict[str, Optional[float]] = field(default_factory=dict)

    def rows(self, task: str = "") -> list[tuple[str, str, str, Optional[float]]]:
        out = []
        for cat in CATEGORIES:
            for (x, y), k in sorted(self.per_pair.get(cat, {}).items()):
                out.append((task, cat, f"{x}~{y}", k))
            out.append((task, cat, "mean", self.mean_kappa.get(cat)))
        return out


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def agreement_matrix(
    annotations: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    ontology: Ontology,
    categories: Sequence[str] = CATEGORIES,
) -> AgreementReport:
    """Mean pairwise agreement per category over a conversation set.

    Token-level kappa is pooled over every conversation a labeler pair shares.
    A category with no spans from any labeler is reported as ``None``.
    """
    convs = {c.id: c for c in conversations}
    by_conv: dict[tuple, dict[str, AnnotationSet]] = defaultdict(dict)
    for ann in annotations:
        by_conv[(ann.conversation_id, ann.task)][ann.labeler_id] = ann
    pairs = sorted({p for labs in by_conv.values() for p in combinations(sorted(labs), 2)})
    keeps = {"entities": ontology.is_entity, "attributes": ontology.is_attribute}
    report = AgreementReport()
    for cat in categories:
        per_pair: dict[tuple[str, str], Optional[float]] = {}
        p_os, p_es = [], []
        for x, y in pairs:
            shared = [labs for labs in by_conv.values() if x in labs and y in labs]
            if cat == "relations":
                vals = [relation_agreement(labs[x], labs[y]) for labs in shared]
                per_pair[(x, y)] = _mean(vals)
                continue
            keep = keeps[cat]
            seq_a, seq_b = [], []
            for labs in shared:
                conv = convs[labs[x].conversation_id]
                seq_a += token_tags(labs[x], conv, keep)
                seq_b += token_tags(labs[y], conv, keep)
            if all(t == "O" for t in seq_a) and all(t == "O" for t in seq_b):
                per_pair[(x, y)] = None
                continue
            k = cohen_kappa(seq_a, seq_b)
            per_pair[(x, y)] = k.kappa
            p_os.append(k.p_o)
            p_es.append(k.p_e)
        report.per_pair[cat] = per_pair
        report.mean_kappa[cat] = _mean(per_pair.values())
        report.p_o[cat] = _mean(p_os)
        report.p_e[cat] = _mean(p_es)
    return report


def qa_score(labeler: Iterable[AnnotationSet], reference: Iterable[AnnotationSet]) -> float:
    """Mean per-conversation relaxed F1 of a labeler against the reference set."""
    refs = {(a.conversation_id, a.task): a for a in reference}
    scores = []
    for ann in labeler:
        ref = refs.get((ann.conversation_id, ann.task))
        if ref is None:
            raise KeyError(f"no reference for conversation {ann.conversation_id!r} ({ann.task.value})")
        scores.append(score_corpus([ref], [ann], Mode.RELAXED).overall.f1)
    if not scores:
        raise ValueError("labeler has no annotations")
    return sum(scores) / len(scores)


def select_reviewers(scores: Mapping[str, float], k: int) -> list[str]:
    if k > len(scores):
        raise ValueError(f"asked for {k} reviewers but only {len(scores)} labelers scored")
    return sorted(scores, key=lambda lab: (-scores[lab], lab))[:k]


def tag_kappas(
    annotations: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    tags: Iterable[str],
) -> dict[str, float]:
    """Per-tag kappa (tag vs. anything else, per token), averaged over labeler pairs.

    Tags never used by a labeler pair, or without any labeler pairs, get 0.
    """
    convs = {c.id: c for c in conversations}
    by_conv: dict[tuple, dict[str, AnnotationSet]] = defaultdict(dict)
    for ann in annotations:
        by_conv[(ann.conversation_id, ann.task)][ann.labeler_id] = ann
    pairs = sorted({p for labs in by_conv.values() for p in combinations(sorted(labs), 2)})
    seqs: dict[tuple[str, str], tuple[list[str], list[str]]] = {}
    for x, y in pairs:
        a_seq, b_seq = [], []
        for labs in by_conv.values():
            if x in labs and y in labs:
                conv = convs[labs[x].conversation_id]
                a_seq += [t.split("|", 1)[0] for t in token_tags(labs[x], conv)]
                b_seq += [t.split("|", 1)[0] for t in token_tags(labs[y], conv)]
        seqs[(x, y)] = (a_seq, b_seq)
    out = {}
    for tag in tags:
        vals = []
        for a_seq, b_seq in seqs.values():
            ia = [t == tag for t in a_seq]
            ib = [t == tag for t in b_seq]
            if any(ia) or any(ib):
                vals.append(cohen_kappa(ia, ib).kappa)
        out[tag] = sum(vals) / len(vals) if vals else 0.0
    return out
