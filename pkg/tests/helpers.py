"""Builders and independent oracles shared by the test modules."""

import itertools
import random

from clinlabel.corpus import AnnotationSet, Conversation, LabeledSpan, Speaker, Task, TokenLabel, Turn


def conv(*lengths, cid="c1"):
    turns = tuple(
        Turn(Speaker.DR if i % 2 == 0 else Speaker.PT, tuple(f"w{i}_{t}" for t in range(n)))
        for i, n in enumerate(lengths)
    )
    return Conversation(cid, turns)


def conv_from_text(*lines, cid="c1"):
    turns = []
    for line in lines:
        spk, _, text = line.partition(":")
        turns.append(Turn(Speaker[spk.strip()], tuple(text.split())))
    return Conversation(cid, tuple(turns))


def span(sid, turn, start, end, tag, status=None):
    return LabeledSpan(sid, turn, start, end, tag, status)


def ann(spans=(), relations=(), labeler="A", task=Task.MEDICATIONS, cid="c1"):
    return AnnotationSet(cid, labeler, task, tuple(spans), tuple(relations))


def lab(text):
    if text == "O":
        return TokenLabel()
    tag, _, bio = text.rpartition("_")
    return TokenLabel(tag, bio)


def seq(*texts):
    return [lab(t) for t in texts]


THREE_LABELERS = [
    [seq("Drug_B", "Drug_I", "O")],
    [seq("O", "Drug_B", "Drug_I")],
    [seq("O", "O", "Drug_B")],
]


def random_spans(rng: random.Random, lengths, tags, max_spans=6, statuses=(None,)):
    """Non-overlapping random spans over turns of the given lengths."""
    spans = []
    for _ in range(rng.randint(0, max_spans)):
        ti = rng.randrange(len(lengths))
        n = lengths[ti]
        s = rng.randrange(n)
        e = rng.randint(s + 1, min(n, s + 3))
        if any(x.turn_index == ti and x.start < e and s < x.end for x in spans):
            continue
        spans.append(LabeledSpan(f"r{len(spans)}", ti, s, e, rng.choice(tags), rng.choice(statuses)))
    return spans


# ---------------------------------------------------------------------------
# brute-force span scorer: materialize per-token tag arrays and loop


def brute_force_scores(ref_spans, pred_spans, lengths, strict, with_status=True):
    def arrays(spans):
        arr = [["O"] * n for n in lengths]
        for s in spans:
            label = f"{s.tag}|{s.status}" if (with_status and s.status) else s.tag
            for t in range(s.start, s.end):
                arr[s.turn_index][t] = label
        return arr

    Y = arrays(ref_spans)
    Yhat = arrays(pred_spans)

    def credits(spans, other):
        out = []
        for s in spans:
            label = f"{s.tag}|{s.status}" if (with_status and s.status) else s.tag
            ind = [1.0 if other[s.turn_index][t] == label else 0.0 for t in range(s.start, s.end)]
            if strict:
                prod = 1.0
                for x in ind:
                    prod *= x
                out.append(prod)
            else:
                out.append(sum(ind) / len(ind))
        return out

    rc = credits(ref_spans, Yhat)
    pc = credits(pred_spans, Y)
    R = sum(rc) / len(rc) if rc else 1.0
    P = sum(pc) / len(pc) if pc else 1.0
    if not rc and not pc:
        F = 1.0
    else:
        F = 2 * P * R / (P + R) if P + R > 0 else 0.0
    return P, R, F


# ---------------------------------------------------------------------------
# exhaustive sequence decoder


def brute_force_decode(emissions, transitions, labels):
    """First (in label order) highest-scoring sequence obeying BIO constraints."""
    T, L = emissions.shape
    best, best_path = None, None
    for path in itertools.product(range(L), repeat=T):
        ok = True
        prev = None
        for y in path:
            name = labels[y]
            if name.endswith("_I"):
                tag = name[:-2]
                if prev is None or labels[prev] not in (tag + "_B", tag + "_I"):
                    ok = False
                    break
            prev = y
        if not ok:
            continue
        score = 0.0
        prev = L
        for t, y in enumerate(path):
            score += transitions[prev, y] + emissions[t, y]
            prev = y
        if best is None or score > best:
            best, best_path = score, list(path)
    return best_path, best
