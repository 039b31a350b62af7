"""Turn-level attribute detection: does this speaker turn mention attribute c?"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import AnnotationSet, Conversation, Task, Turn
from .scoring import f1

CLASSES = ("Frequency", "Duration", "Location", "Severity", "Alleviating Factor", "Provoking Factor")


def attribute_class(tag: str) -> Optional[str]:
    """Map an attribute tag like ``Property:Severity/Amount`` to its turn class."""
    name = tag.split(":", 1)[-1].split("/", 1)[0].strip()
    return name if name in CLASSES else None


def turn_features(turn: Turn) -> list[str]:
    words = [w.lower() for w in turn.tokens]
    feats = ["bias"] + ["u=" + w for w in words]
    feats += ["b=" + a + "_" + b for a, b in zip(["<s>"] + words, words + ["</s>"])]
    return feats


def turn_labels(annotations: Iterable[AnnotationSet], conv: Conversation) -> list[set[str]]:
    """Classes present in each turn of ``conv`` according to ``annotations``."""
    out: list[set[str]] = [set() for _ in conv.turns]
    for ann in annotations:
        for s in ann.spans:
            cls = attribute_class(s.tag)
            if cls is not None and 0 <= s.turn_index < len(out):
                out[s.turn_index].add(cls)
    return out


@dataclass
class TurnModel:
    weights: dict[str, dict[str, float]]
    thresholds: dict[str, float] = field(default_factory=lambda: {c: 0.0 for c in CLASSES})
    merge: str = "all_tasks"
    task: Optional[str] = None

    def scores(self, turn: Turn) -> dict[str, float]:
        feats = turn_features(turn)
        return {c: sum(self.weights.get(c, {}).get(f, 0.0) for f in feats) for c in CLASSES}

    def predict_turn(self, turn: Turn) -> set[str]:
        return {c for c, s in self.scores(turn).items() if s >= self.thresholds.get(c, 0.0)}

    def to_json(self) -> str:
        doc = {"version": 1, "classes": list(CLASSES), "merge": self.merge, "task": self.task,
               "thresholds": self.thresholds,
               "weights": {c: {f: w for f, w in sorted(ws.items()) if w != 0.0} for c, ws in self.weights.items()}}
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TurnModel":
        doc = json.loads(text)
        return cls(doc["weights"], doc["thresholds"], doc.get("merge", "all_tasks"), doc.get("task"))


def train_turns(
    annotations: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    epochs: int = 10,
    seed: int = 0,
    merge: str = "all_tasks",
    task: Optional[Task] = None,
) -> TurnModel:
    """One-vs-rest averaged perceptron per class over turn n-grams.

    With ``merge="per_task"`` only annotations of ``task`` provide labels.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if merge not in ("all_tasks", "per_task"):
        raise ValueError(f"unknown merge mode {merge!r}")
    if merge == "per_task":
        if task is None:
            raise ValueError("per_task merge needs a task")
        task = Task.parse(task) if isinstance(task, str) else task
    by_conv: dict[str, list[AnnotationSet]] = defaultdict(list)
    for ann in annotations:
        if merge == "per_task" and ann.task != task:
            continue
        by_conv[ann.conversation_id].append(ann)
    examples = []
    for conv in conversations:
        labels = turn_labels(by_conv.get(conv.id, ()), conv)
        for turn, labs in zip(conv.turns, labels):
            examples.append((turn_features(turn), labs))
    if not examples:
        raise ValueError("no training turns")

    vocab: dict[str, int] = {}
    rows = [np.array([vocab.setdefault(f, len(vocab)) for f in feats]) for feats, _ in examples]
    Y = np.array([[1.0 if c in labs else -1.0 for c in CLASSES] for _, labs in examples])
    W = np.zeros((len(vocab), len(CLASSES)))
    U = np.zeros_like(W)
    c = 1
    rng = random.Random(seed)
    order = list(range(len(examples)))
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            idx = rows[k]
            s = W[idx].sum(axis=0)
            pred = np.where(s >= 0.0, 1.0, -1.0)
            wrong = pred != Y[k]
            if wrong.any():
                delta = np.where(wrong, Y[k], 0.0)
                np.add.at(W, idx, delta)
                np.add.at(U, idx, delta * c)
            c += 1
    avg = W - U / c
    names = sorted(vocab, key=vocab.get)
    weights = {cls: {f: float(avg[vocab[f], j]) for f in names if avg[vocab[f], j] != 0.0}
               for j, cls in enumerate(CLASSES)}
    return TurnModel(weights, merge=merge, task=task.value if task is not None else None)


def predict_turns(model: TurnModel, conversation: Conversation) -> list[set[str]]:
    return [model.predict_turn(t) for t in conversation.turns]


def project_spans(annotation_sets: Iterable[AnnotationSet], conv: Conversation) -> list[set[str]]:
    """Turn-level classes implied by span predictions."""
    return turn_labels(annotation_sets, conv)


@dataclass
class TurnEval:
    precision: float
    recall: float
    f1: float
    support: int
    predicted: int


def eval_turns(
    predictions: Mapping[str, Sequence[set[str]]],
    gold: Mapping[str, Sequence[set[str]]],
) -> dict[str, TurnEval]:
    """Per-class turn-level P/R/F1; inputs map conversation id -> per-turn class sets.

    A class with no gold and no predicted turns scores 1/1/1.
    """
    out = {}
    for cls in CLASSES:
        tp = fp = fn = 0
        for cid, gold_turns in gold.items():
            pred_turns = predictions.get(cid, [set()] * len(gold_turns))
            if len(pred_turns) != len(gold_turns):
                raise ValueError(f"turn count mismatch in {cid!r}")
            for p, g in zip(pred_turns, gold_turns):
                tp += cls in p and cls in g
                fp += cls in p and cls not in g
                fn += cls not in p and cls in g
        prec = tp / (tp + fp) if tp + fp else 1.0
        rec = tp / (tp + fn) if tp + fn else 1.0
        f = 1.0 if tp + fp + fn == 0 else f1(prec, rec)
        out[cls] = TurnEval(prec, rec, f, tp + fn, tp + fp)
    return out
