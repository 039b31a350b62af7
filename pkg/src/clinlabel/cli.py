"""Command line entry point: ``clinlabel <subcommand> ...``.

Exit status is 0 on success, 1 when validation finds errors and 2 for usage
or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from . import agreement, errors, ontology as onto_mod, scoring, stats, suggest as sugg, synth, tagger, turns
from .adjudicate import build_voted_reference
from .corpus import (
    CorpusError, Task, annotation_to_record, cross_validate, dumps_jsonl, read_annotations, read_conversations,
    write_annotations, write_conversations,
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers

def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    return "NA" if x is None else f"{x:.4f}"


def _ontologies(paths) -> dict[Task, onto_mod.Ontology]:
    out = {t: onto_mod.default_ontology(t) for t in Task}
    for p in paths or ():
        o = onto_mod.read_ontology(p)
        out[o.task] = o
    return out


def _map(fn, items, workers: int):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    noise = synth.Noise(args.p_miss, args.jitter, args.p_conf, args.p_flip)
    cfg = synth.SynthConfig(seed=args.seed, n_train=args.n_train, n_dev=args.n_dev, n_test=args.n_test,
                            min_turns=args.min_turns, max_turns=args.max_turns, noise=noise)
    corpus = synth.generate_corpus(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_conversations(out / "conversations.jsonl", corpus.conversations)
    write_annotations(out / "gold.jsonl", corpus.gold)
    (out / "split.json").write_text(synth.dumps_manifest(corpus), encoding="utf-8")
    for task, o in corpus.ontologies.items():
        onto_mod.write_ontology(out / f"{task.value}.ontology.json", o)
    if args.labelers:
        convs = {c.id: c for c in corpus.conversations}
        sims = [
            synth.simulate_labeler(g, convs[g.conversation_id], noise, f"{args.seed}:{k}",
                                   corpus.ontologies[g.task], labeler_id=f"L{k + 1}")
            for g in corpus.gold for k in range(args.labelers)
        ]
        write_annotations(out / "labelers.jsonl", sims)
    print(f"wrote {len(corpus.conversations)} conversations to {out}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    anns = read_annotations(args.annotations)
    ontos = _ontologies(args.ontology)
    from .validate import has_errors, validate_annotation
    records, failed = [], False
    if args.conversations:
        convs = read_conversations(args.conversations)
        for task in Task:
            task_anns = [a for a in anns if a.task == task]
            for v in cross_validate(task_anns, convs, ontos[task]):
                if v.kind == "unknown-tag":
                    continue  # reported as R4 below
                failed = True
                records.append({"rule_id": v.kind, "conversation_id": v.conversation_id,
                                "labeler_id": v.labeler_id, "message": v.message, "severity": "error",
                                "span_id": v.ref})
    for ann in anns:
        vs = validate_annotation(ann, ontos[ann.task])
        failed = failed or has_errors(vs)
        records.extend(v.to_dict() for v in vs)
    _emit(dumps_jsonl(records), args.out)
    return 1 if failed else 0


def _vote_one(item):
    anns, conv, stats_, relations_from = item
    return build_voted_reference(anns, [conv], stats_, relations_from)


def cmd_vote(args) -> int:
    from .adjudicate import estimate_transition_stats
    anns = read_annotations(args.annotations)
    convs = read_conversations(args.conversations)
    by_id = {c.id: c for c in convs}
    problems = cross_validate(anns, convs)
    if problems:
        raise CorpusError(f"annotations do not match conversations: {problems[0].message}")
    stats_ = estimate_transition_stats(anns, convs)
    grouped = defaultdict(list)
    for a in anns:
        grouped[a.conversation_id].append(a)
    items = [(grouped[cid], by_id[cid], stats_, args.relations_from) for cid in sorted(grouped)]
    voted = [v for chunk in _map(_vote_one, items, args.workers) for v in chunk]
    _emit(dumps_jsonl(annotation_to_record(v) for v in voted), args.out)
    return 0


SCORE_COLUMNS = ("Entities", "Entities+Status", "Attributes")


def _score_table(refs, preds, ontos, mode, granularity):
    reports: dict[str, dict[str, Optional[scoring.ScoreReport]]] = {}
    for task in Task:
        r = [a for a in refs if a.task == task]
        p = [a for a in preds if a.task == task]
        if not r and not p:
            continue
        o = ontos[task]
        row: dict[str, Optional[scoring.ScoreReport]] = {}
        if granularity == "relation":
            row["Relations"] = scoring.score_relations(r, p)
        else:
            for col, key, tags in (("Entities", scoring.Key.TAG, o.entity_tags),
                                   ("Entities+Status", scoring.Key.TAG_PLUS_STATUS, o.entity_tags),
                                   ("Attributes", scoring.Key.TAG, o.attribute_tags)):
                if col == "Entities+Status" and not o.statuses:
                    row[col] = None
                elif granularity == "conversation_set":
                    row[col] = scoring.score_conversation_set(r, p, key, tags)
                else:
                    row[col] = scoring.score_corpus(r, p, mode, key, tags)
        reports[task.value.capitalize()] = row
    return reports


def cmd_score(args) -> int:
    refs = read_annotations(args.ref)
    preds = read_annotations(args.pred)
    ontos = _ontologies(args.ontology)
    reports = _score_table(refs, preds, ontos, args.mode, args.granularity)
    columns = ["Relations"] if args.granularity == "relation" else list(SCORE_COLUMNS)
    doc = {task: {col: (None if rep is None else rep.to_dict()) for col, rep in row.items()}
           for task, row in reports.items()}
    json_text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.json_out:
        Path(args.json_out).write_text(json_text, encoding="utf-8")
    if args.format == "json":
        text = json_text
    elif args.format == "csv":
        rows = [(task, col, _fmt(rep.overall.precision), _fmt(rep.overall.recall), _fmt(rep.overall.f1),
                 rep.overall.n, rep.overall.m)
                for task, row in reports.items() for col, rep in row.items() if rep is not None]
        text = _csv(rows, ["task", "column", "precision", "recall", "f1", "n", "m"])
    else:
        cells = {task: {col: (rep.overall if rep else None) for col, rep in row.items()}
                 for task, row in reports.items()}
        text = scoring.format_table(cells, columns)
    _emit(text, args.out)
    return 0


def cmd_kappa(args) -> int:
    anns = read_annotations(args.annotations)
    convs = read_conversations(args.conversations)
    ontos = _ontologies(args.ontology)
    rows = []
    means = {}
    for task in Task:
        task_anns = [a for a in anns if a.task == task]
        if not task_anns:
            continue
        rep = agreement.agreement_matrix(task_anns, convs, ontos[task])
        means[task.value] = rep.mean_kappa
        rows += [(t, c, p, _fmt(k)) for t, c, p, k in rep.rows(task.value)]
    if args.format == "json":
        text = json.dumps(means, indent=1, sort_keys=True) + "\n"
    else:
        text = _csv(rows, ["task", "category", "pair", "kappa"])
    _emit(text, args.out)
    if args.plot:
        from .plotting import grouped_bars
        tasks = sorted(means)
        grouped_bars(args.plot, tasks, {c: [means[t].get(c) for t in tasks] for c in agreement.CATEGORIES},
                     title="Inter-labeler agreement", ylabel="kappa", ylim=(0, 1))
    return 0


def cmd_qa(args) -> int:
    anns = read_annotations(args.annotations)
    refs = read_annotations(args.reference)
    by_lab = defaultdict(list)
    for a in anns:
        by_lab[a.labeler_id].append(a)
    scores = {lab: agreement.qa_score(v, refs) for lab, v in sorted(by_lab.items())}
    reviewers = agreement.select_reviewers(scores, min(args.k, len(scores))) if scores else []
    if args.format == "json":
        text = json.dumps({"scores": scores, "reviewers": reviewers}, indent=1, sort_keys=True) + "\n"
    else:
        text = _csv([(lab, _fmt(s), int(lab in reviewers)) for lab, s in scores.items()],
                    ["labeler", "qa_score", "reviewer"])
    _emit(text, args.out)
    return 0


def cmd_prune(args) -> int:
    if not args.ontology or len(args.ontology) != 1:
        raise UsageError("prune needs exactly one --ontology file")
    o = onto_mod.read_ontology(args.ontology[0])
    anns = [a for a in read_annotations(args.annotations) if a.task == o.task]
    convs = read_conversations(args.conversations)
    counts = defaultdict(int)
    for a in anns:
        for s in a.spans:
            counts[s.tag] += 1
    kappas = agreement.tag_kappas(anns, convs, [e.tag for e in o.entities])
    pruned, remap = onto_mod.prune(o, {e.tag: counts[e.tag] for e in o.entities}, kappas,
                                   args.min_count, args.min_kappa)
    onto_mod.write_ontology(args.out, pruned)
    if args.remap_out:
        Path(args.remap_out).write_text(json.dumps(remap, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if args.annotations_out:
        write_annotations(args.annotations_out, [onto_mod.apply_remap(a, remap) for a in anns])
    print(f"kept {len(pruned.entities)} of {len(o.entities)} entity tags", file=sys.stderr)
    return 0


def cmd_suggest(args) -> int:
    convs = read_conversations(args.conversations)
    lexicon = sugg.read_lexicon(args.lexicon) if args.lexicon else sugg.Lexicon.from_ontology(
        _ontologies(args.ontology)[Task.parse(args.task)])
    train_ids = None
    if args.split:
        train_ids = json.loads(Path(args.split).read_text())["train"]
    if args.experiment:
        gold = [a for a in read_annotations(args.gold) if a.task == Task.parse(args.task)]
        res = sugg.recall_experiment(gold, convs, lexicon, args.miss_rate, args.accept_rate, args.seed)
        _emit(json.dumps(res, indent=1, sort_keys=True) + "\n", args.out)
        return 0
    out = []
    for c in convs:
        if train_ids is not None and c.id not in set(train_ids):
            continue
        spans = sugg.suggest(c, lexicon, train_ids)
        from .corpus import AnnotationSet
        out.append(AnnotationSet(c.id, "SUGGEST", Task.parse(args.task), tuple(spans)))
    _emit(dumps_jsonl(annotation_to_record(a) for a in out), args.out)
    return 0


def _keep_filter(which: str, o: onto_mod.Ontology):
    if which == "entities":
        return o.is_entity
    if which == "attributes":
        return o.is_attribute
    return None


def cmd_train_tagger(args) -> int:
    task = Task.parse(args.task)
    anns = read_annotations(args.annotations)
    convs = read_conversations(args.conversations)
    keep = _keep_filter(args.task_filter, _ontologies(args.ontology)[task])
    model = tagger.train(anns, convs, task, args.epochs, args.seed, keep)
    Path(args.out).write_text(model.to_json(), encoding="utf-8")
    return 0


_MODEL_CACHE: dict = {}


def _tag_one(item):
    model_text, conv = item
    model = _MODEL_CACHE.get(model_text)
    if model is None:
        model = _MODEL_CACHE.setdefault(model_text, tagger.TaggerModel.from_json(model_text))
    return tagger.predict(model, conv)


def cmd_tag(args) -> int:
    convs = read_conversations(args.conversations)
    out = []
    for path in args.model:
        text = Path(path).read_text(encoding="utf-8")
        out += _map(_tag_one, [(text, c) for c in convs], args.workers)
    _emit(dumps_jsonl(annotation_to_record(a) for a in out), args.out)
    return 0


def cmd_train_turns(args) -> int:
    anns = read_annotations(args.annotations)
    convs = read_conversations(args.conversations)
    model = turns.train_turns(anns, convs, args.epochs, args.seed, args.merge,
                              Task.parse(args.task) if args.task else None)
    Path(args.out).write_text(model.to_json(), encoding="utf-8")
    return 0


def cmd_detect_turns(args) -> int:
    model = turns.TurnModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    convs = read_conversations(args.conversations)
    preds = {c.id: turns.predict_turns(model, c) for c in convs}
    records = [{"conversation_id": cid, "turns": [sorted(s) for s in p]} for cid, p in preds.items()]
    _emit(dumps_jsonl(records), args.out)
    if not args.gold:
        return 0
    task = Task.parse(args.task) if args.task else None
    gold_anns = [a for a in read_annotations(args.gold) if task is None or a.task == task]
    by_conv = defaultdict(list)
    for a in gold_anns:
        by_conv[a.conversation_id].append(a)
    gold = {c.id: turns.turn_labels(by_conv.get(c.id, ()), c) for c in convs}
    tables = {"turn": turns.eval_turns(preds, gold)}
    if args.compare:
        span_anns = [a for a in read_annotations(args.compare) if task is None or a.task == task]
        sp = defaultdict(list)
        for a in span_anns:
            sp[a.conversation_id].append(a)
        tables["span"] = turns.eval_turns({c.id: turns.project_spans(sp.get(c.id, ()), c) for c in convs}, gold)
    label = task.value if task else "all"
    rows = [(label, cls, name, _fmt(t[cls].precision), _fmt(t[cls].recall), _fmt(t[cls].f1))
            for name, t in tables.items() for cls in turns.CLASSES]
    eval_text = _csv(rows, ["task", "class", "model", "precision", "recall", "f1"])
    if args.eval_out:
        Path(args.eval_out).write_text(eval_text, encoding="utf-8")
    else:
        sys.stderr.write(eval_text)
    if args.plot:
        from .plotting import grouped_bars
        grouped_bars(args.plot, list(turns.CLASSES),
                     {f"{name} {m}": [getattr(t[c], m) for c in turns.CLASSES]
                      for name, t in tables.items() for m in ("precision", "recall")},
                     title="Attribute detection", ylim=(0, 1))
    return 0


def cmd_errors_align(args) -> int:
    refs = {(a.conversation_id, a.task): a for a in read_annotations(args.ref)}
    preds = {(a.conversation_id, a.task): a for a in read_annotations(args.pred)}
    convs = {c.id: c for c in read_conversations(args.conversations)} if args.conversations else {}
    records = []
    from .corpus import AnnotationSet
    for key in sorted(set(refs) | set(preds), key=lambda k: (k[0], k[1].value)):
        cid, task = key
        ref = refs.get(key) or AnnotationSet(cid, "REF", task)
        pred = preds.get(key) or AnnotationSet(cid, "PRED", task)
        records += errors.align_errors(ref, pred, convs.get(cid))
    errors.ErrorStore(records).save(args.out)
    return 0


def cmd_errors_annotate(args) -> int:
    store = errors.ErrorStore.load(args.records)
    updates = []
    if args.batch:
        with open(args.batch, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                updates.append((row["record_id"], row["error_cause"], row["clinical_relevance"],
                                row.get("rater_id") or args.rater))
    else:
        if not (args.id and args.cause and args.relevance and args.rater):
            raise UsageError("--id, --cause, --relevance and --rater are required without --batch")
        updates.append((args.id, args.cause, args.relevance, args.rater))
    for rid, cause, rel, rater in updates:
        store.record_category(rid, cause, rel, rater, args.timestamp)
    store.save(args.out or args.records)
    return 0


def cmd_errors_report(args) -> int:
    store = errors.ErrorStore.load(args.records)
    rep = errors.aggregate_report(store.records.values())
    if args.format == "json":
        text = json.dumps(rep, indent=1, sort_keys=True) + "\n"
    else:
        rows = [("error_type", k, v) for k, v in rep.get("counts_by_type", {}).items()]
        rows += [("cause", k, _fmt(v)) for k, v in rep.get("proportion_by_cause", {}).items()]
        rows += [("relevance", k, _fmt(v)) for k, v in rep.get("proportion_by_relevance", {}).items()]
        rows += [("records", k, rep.get(k, 0)) for k in ("categorized", "uncategorized", "total")]
        text = _csv(rows, ["group", "name", "value"])
    _emit(text, args.out)
    if args.plot and rep:
        from .plotting import grouped_bars
        base = Path(args.plot)
        causes = [c.value for c in errors.ErrorCause]
        grouped_bars(base.with_name(base.stem + "_cause" + base.suffix), causes,
                     {"share": [rep["proportion_by_cause"].get(c, 0.0) for c in causes]},
                     title="Errors by cause", ylim=(0, 1))
        rels = [c.value for c in errors.ClinicalRelevance]
        grouped_bars(base.with_name(base.stem + "_relevance" + base.suffix), rels,
                     {"share": [rep["proportion_by_relevance"].get(c, 0.0) for c in rels]},
                     title="Errors by clinical relevance", ylim=(0, 1))
    return 0


def cmd_stats(args) -> int:
    anns = read_annotations(args.annotations)
    conv_path = args.conversations
    if conv_path is None and args.unique:
        # synth writes both files into one directory
        sibling = Path(args.annotations).with_name("conversations.jsonl")
        if not sibling.exists():
            raise UsageError("--unique needs --conversations (no conversations.jsonl next to the annotations)")
        conv_path = sibling
    convs = read_conversations(conv_path) if conv_path else None
    st = stats.label_stats(anns, convs)
    if args.format == "json":
        text = json.dumps(st, indent=1, sort_keys=True) + "\n"
    else:
        header = ["task", "conversations", "spans", "relations", "spans_per_conversation",
                  "relations_per_conversation"] + (["unique_spans", "unique_per_conversation"] if args.unique else [])
        rows = [[task] + [row[h] if isinstance(row[h], int) else f"{row[h]:.4f}" for h in header[1:]]
                for task, row in st.items()]
        text = _csv(rows, header)
    _emit(text, args.out)
    if args.plot:
        from .plotting import grouped_bars
        tasks = list(st)
        series = {"labels": [st[t]["spans_per_conversation"] for t in tasks],
                  "relations": [st[t]["relations_per_conversation"] for t in tasks]}
        if args.unique:
            series["unique"] = [st[t]["unique_per_conversation"] for t in tasks]
        grouped_bars(args.plot, tasks, series, title="Per conversation", ylabel="count")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clinlabel", description="Annotation adjudication and scoring toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["json", "csv", "table"], default=None)
    common.add_argument("--ontology", action="append", help="ontology JSON (repeatable; defaults are bundled)")
    common.add_argument("--workers", type=int, default=1)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    s = add("synth", cmd_synth, "generate a synthetic corpus")
    s.add_argument("--n-train", type=int, default=100)
    s.add_argument("--n-dev", type=int, default=10)
    s.add_argument("--n-test", type=int, default=10)
    s.add_argument("--min-turns", type=int, default=6)
    s.add_argument("--max-turns", type=int, default=14)
    s.add_argument("--labelers", type=int, default=0, help="also simulate this many noisy labelers")
    s.add_argument("--p-miss", type=float, default=0.1)
    s.add_argument("--jitter", type=int, default=1)
    s.add_argument("--p-conf", type=float, default=0.05)
    s.add_argument("--p-flip", type=float, default=0.0)

    s = add("validate", cmd_validate, "run validation rules")
    s.add_argument("--annotations", required=True)
    s.add_argument("--conversations")

    s = add("vote", cmd_vote, "build the voted reference")
    s.add_argument("--annotations", required=True)
    s.add_argument("--conversations", required=True)
    s.add_argument("--relations-from", help="labeler whose relations are carried over")

    s = add("score", cmd_score, "score predictions against a reference")
    s.add_argument("--ref", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--mode", choices=[m.value for m in scoring.Mode], default="relaxed")
    s.add_argument("--granularity", choices=["span", "conversation_set", "relation"], default="span")
    s.add_argument("--json-out", help="also write the JSON report here")

    s = add("kappa", cmd_kappa, "inter-labeler agreement")
    s.add_argument("--annotations", required=True)
    s.add_argument("--conversations", required=True)
    s.add_argument("--plot", help="write a bar chart (png/pdf/svg)")

    s = add("qa", cmd_qa, "score labelers against a reference set and pick reviewers")
    s.add_argument("--annotations", required=True)
    s.add_argument("--reference", required=True)
    s.add_argument("-k", type=int, default=1)

    s = add("prune", cmd_prune, "prune rare/unreliable entity tags")
    s.add_argument("--annotations", required=True)
    s.add_argument("--conversations", required=True)
    s.add_argument("--min-count", type=int, required=True)
    s.add_argument("--min-kappa", type=float, required=True)
    s.add_argument("--remap-out")
    s.add_argument("--annotations-out")

    s = add("suggest", cmd_suggest, "lexicon suggestions / recall experiment")
    s.add_argument("--conversations", required=True)
    s.add_argument("--lexicon")
    s.add_argument("--task", default="conditions")
    s.add_argument("--split", help="split manifest; only train conversations get suggestions")
    s.add_argument("--experiment", action="store_true")
    s.add_argument("--gold")
    s.add_argument("--miss-rate", type=float, default=0.3)
    s.add_argument("--accept-rate", type=float, default=1.0)

    s = add("train-tagger", cmd_train_tagger, "train the perceptron span tagger")
    s.add_argument("--annotations", required=True)
    s.add_argument("--conversations", required=True)
    s.add_argument("--task", required=True)
    s.add_argument("--epochs", type=int, default=10)
    s.add_argument("--task-filter", choices=["all", "entities", "attributes"], default="all")

    s = add("tag", cmd_tag, "tag conversations with trained models")
    s.add_argument("--model", action="append", required=True)
    s.add_argument("--conversations", required=True)

    s = add("train-turns", cmd_train_turns, "train the turn-level attribute detector")
    s.add_argument("--annotations", required=True)
    s.add_argument("--conversations", required=True)
    s.add_argument("--merge", choices=["all_tasks", "per_task"], default="all_tasks")
    s.add_argument("--task")
    s.add_argument("--epochs", type=int, default=10)

    s = add("detect-turns", cmd_detect_turns, "predict attribute classes per turn")
    s.add_argument("--model", required=True)
    s.add_argument("--conversations", required=True)
    s.add_argument("--gold", help="gold annotations for evaluation")
    s.add_argument("--task", help="restrict evaluation to one task's annotations")
    s.add_argument("--compare", help="span predictions to project to turns for comparison")
    s.add_argument("--eval-out")
    s.add_argument("--plot")

    e = sub.add_parser("errors", help="error alignment and categorization")
    esub = e.add_subparsers(dest="errors_command", required=True)
    s = esub.add_parser("align", parents=[common])
    s.set_defaults(fn=cmd_errors_align)
    s.add_argument("--ref", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--conversations")
    s = esub.add_parser("annotate", parents=[common])
    s.set_defaults(fn=cmd_errors_annotate)
    s.add_argument("--records", required=True)
    s.add_argument("--id")
    s.add_argument("--cause", choices=[c.value for c in errors.ErrorCause])
    s.add_argument("--relevance", choices=[c.value for c in errors.ClinicalRelevance])
    s.add_argument("--rater")
    s.add_argument("--batch", help="CSV with record_id,error_cause,clinical_relevance[,rater_id]")
    s.add_argument("--timestamp", help="audit timestamp (default: now, UTC)")
    s = esub.add_parser("report", parents=[common])
    s.set_defaults(fn=cmd_errors_report)
    s.add_argument("--records", required=True)
    s.add_argument("--plot", help="figure path; _cause and _relevance suffixes are added")

    s = add("stats", cmd_stats, "label counts per conversation")
    s.add_argument("--annotations", required=True)
    s.add_argument("--conversations")
    s.add_argument("--unique", action="store_true")
    s.add_argument("--plot")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "table" if args.command == "score" else "csv"
    try:
        return args.fn(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (CorpusError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"clinlabel: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
