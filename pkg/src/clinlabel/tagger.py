"""Averaged structured perceptron with constrained Viterbi decoding.

Labels are composed tags crossed with B/I, plus O. Among equally scoring
label sequences the decoder returns the lexicographically first one under the
label order ``O < sorted(others)``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .bio import decode_bio, encode_bio
from .corpus import AnnotationSet, Conversation, Task, TokenLabel, Turn

MODEL = "MODEL"
MODEL_VERSION = 1
NEG_INF = -np.inf


def token_features(turn: Turn, t: int) -> list[str]:
    tokens = turn.tokens
    w = tokens[t].lower()
    return [
        "bias",
        "w=" + w,
        "p1=" + w[:1], "p2=" + w[:2], "p3=" + w[:3],
        "s1=" + w[-1:], "s2=" + w[-2:], "s3=" + w[-3:],
        "prev=" + (tokens[t - 1].lower() if t > 0 else "<s>"),
        "next=" + (tokens[t + 1].lower() if t + 1 < len(tokens) else "</s>"),
        "spk=" + turn.speaker.value,
        "digit=" + str(tokens[t].isdigit()),
    ]


def label_name(lab: TokenLabel) -> str:
    return str(lab)


def make_labels(tags: Iterable[str]) -> list[str]:
    rest = sorted({f"{t}_{m}" for t in tags for m in ("B", "I")})
    return ["O"] + rest


def transition_mask(labels: Sequence[str]) -> np.ndarray:
    """Allowed transitions; row ``len(labels)`` is the sequence start."""
    n = len(labels)
    mask = np.ones((n + 1, n), dtype=bool)
    for j, lab in enumerate(labels):
        if lab.endswith("_I"):
            tag = lab[:-2]
            for i in range(n + 1):
                mask[i, j] = i < n and labels[i] in (tag + "_B", tag + "_I")
    return mask


def viterbi(emissions: np.ndarray, transitions: np.ndarray) -> list[int]:
    """Best label index sequence for one turn.

    ``emissions`` is (T, L); ``transitions`` is (L + 1, L) with -inf for
    forbidden moves and the start state in the last row. Suffix scores are
    computed backwards, then labels are chosen forwards taking the lowest
    index among ties, which yields the first optimal sequence in label order.
    """
    T, L = emissions.shape
    if T == 0:
        return []
    beta = np.empty((T, L))
    beta[T - 1] = emissions[T - 1]
    inner = transitions[:L]
    for t in range(T - 2, -1, -1):
        beta[t] = emissions[t] + np.max(inner + beta[t + 1][None, :], axis=1)
    path = [int(np.argmax(transitions[L] + beta[0]))]
    for t in range(1, T):
        path.append(int(np.argmax(inner[path[-1]] + beta[t])))
    return path


def sequence_score(path: Sequence[int], emissions: np.ndarray, transitions: np.ndarray) -> float:
    L = emissions.shape[1]
    total, prev = 0.0, L
    for t, y in enumerate(path):
        total += transitions[prev, y] + emissions[t, y]
        prev = y
    return total


@dataclass
class TaggerModel:
    task: Task
    labels: list[str]
    features: dict[str, int]
    weights: np.ndarray           # (F + 1, L); last row stays zero for unseen features
    transitions: np.ndarray       # (L + 1, L) learned scores, start state last
    epochs: int = 0
    seed: int = 0
    mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.mask = transition_mask(self.labels)

    def feature_index(self, turn: Turn) -> np.ndarray:
        unk = len(self.features)
        return np.array([[self.features.get(f, unk) for f in token_features(turn, t)]
                         for t in range(len(turn.tokens))], dtype=np.int64)

    def emissions(self, turn: Turn) -> np.ndarray:
        return self.weights[self.feature_index(turn)].sum(axis=1)

    def constrained_transitions(self) -> np.ndarray:
        return np.where(self.mask, self.transitions, NEG_INF)

    def decode_turn(self, turn: Turn) -> list[TokenLabel]:
        path = viterbi(self.emissions(turn), self.constrained_transitions())
        return [_to_token_label(self.labels[y]) for y in path]

    # -- persistence -----------------------------------------------------

    def to_json(self) -> str:
        feats = sorted(self.features, key=self.features.get)
        weights = {}
        for f in feats:
            row = self.weights[self.features[f]]
            nz = {self.labels[j]: float(row[j]) for j in np.flatnonzero(row)}
            if nz:
                weights[f] = nz
        trans = {}
        names = self.labels + ["<start>"]
        for i, src in enumerate(names):
            nz = {self.labels[j]: float(self.transitions[i, j]) for j in np.flatnonzero(self.transitions[i])}
            if nz:
                trans[src] = nz
        doc = {
            "version": MODEL_VERSION,
            "task": self.task.value,
            "labels": self.labels,
            "features": feats,
            "weights": weights,
            "transitions": trans,
            "meta": {"epochs": self.epochs, "seed": self.seed},
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TaggerModel":
        doc = json.loads(text)
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        labels = doc["labels"]
        lidx = {lab: j for j, lab in enumerate(labels)}
        features = {f: i for i, f in enumerate(doc["features"])}
        W = np.zeros((len(features) + 1, len(labels)))
        for f, row in doc["weights"].items():
            for lab, w in row.items():
                W[features[f], lidx[lab]] = w
        Tr = np.zeros((len(labels) + 1, len(labels)))
        names = labels + ["<start>"]
        for src, row in doc["transitions"].items():
            for lab, w in row.items():
                Tr[names.index(src), lidx[lab]] = w
        meta = doc.get("meta", {})
        return cls(Task.parse(doc["task"]), labels, features, W, Tr, meta.get("epochs", 0), meta.get("seed", 0))


def _to_token_label(name: str) -> TokenLabel:
    if name == "O":
        return TokenLabel()
    return TokenLabel(name[:-2], name[-1])


def training_examples(
    annotations: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    task: Optional[Task] = None,
    keep: Optional[Callable[[str], bool]] = None,
) -> list[tuple[Turn, list[str]]]:
    convs = {c.id: c for c in conversations}
    out = []
    for ann in annotations:
        if task is not None and ann.task != task:
            continue
        conv = convs[ann.conversation_id]
        spans = [s for s in ann.spans if keep is None or keep(s.tag)]
        seqs = encode_bio(spans, conv.turn_lengths, compose_status=True)
        for turn, seq in zip(conv.turns, seqs):
            out.append((turn, [label_name(lab) for lab in seq]))
    return out


def train(
    annotations: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    task: Task,
    epochs: int = 10,
    seed: int = 0,
    keep: Optional[Callable[[str], bool]] = None,
) -> TaggerModel:
    """Averaged perceptron over turns of ``task`` annotations.

    ``keep`` filters span tags (e.g. attributes only). Turns are visited in a
    seeded shuffle each epoch, so the model is a function of seed and input.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    task = Task.parse(task) if isinstance(task, str) else task
    examples = training_examples(annotations, conversations, task, keep)
    if not examples:
        raise ValueError("no training examples")
    tags = {lab[:-2] for _, seq in examples for lab in seq if lab != "O"}
    labels = make_labels(tags)
    lidx = {lab: j for j, lab in enumerate(labels)}
    features: dict[str, int] = {}
    encoded = []
    for turn, seq in examples:
        rows = []
        for t in range(len(turn.tokens)):
            rows.append([features.setdefault(f, len(features)) for f in token_features(turn, t)])
        encoded.append((np.array(rows, dtype=np.int64), np.array([lidx[lab] for lab in seq], dtype=np.int64)))

    L, F = len(labels), len(features)
    W = np.zeros((F + 1, L))
    Wu = np.zeros((F + 1, L))
    Tr = np.zeros((L + 1, L))
    Tu = np.zeros((L + 1, L))
    mask = transition_mask(labels)
    c = 1
    rng = random.Random(seed)
    order = list(range(len(encoded)))
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            feats, gold = encoded[k]
            emis = W[feats].sum(axis=1)
            pred = np.array(viterbi(emis, np.where(mask, Tr, NEG_INF)), dtype=np.int64)
            if not np.array_equal(pred, gold):
                for ys, sign in ((gold, 1.0), (pred, -1.0)):
                    cols = np.repeat(ys, feats.shape[1])
                    np.add.at(W, (feats.ravel(), cols), sign)
                    np.add.at(Wu, (feats.ravel(), cols), sign * c)
                    prev = np.concatenate(([L], ys[:-1]))
                    np.add.at(Tr, (prev, ys), sign)
                    np.add.at(Tu, (prev, ys), sign * c)
            c += 1
    avg_W = W - Wu / c
    avg_T = Tr - Tu / c
    avg_W[F] = 0.0
    return TaggerModel(task, labels, features, avg_W, avg_T, epochs, seed)


def predict(model: TaggerModel, conversation: Conversation) -> AnnotationSet:
    seqs = [model.decode_turn(turn) for turn in conversation.turns]
    spans = decode_bio(seqs, decompose_status=True, id_prefix="m")
    return AnnotationSet(conversation.id, MODEL, model.task, tuple(spans))
