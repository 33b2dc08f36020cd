"""End-to-end acceptance checks, one per criterion.

Each test records a PASS/FAIL line; the lines are printed both inline and in
the terminal summary (see ``conftest.pytest_terminal_summary``).
"""

import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import random_instance
from denotex.cli import main
from denotex.data import SyntheticSpec, generate_synthetic, load_dataset
from denotex.evaluation import EvalReport, PredictionRecord, binomial_ci_halfwidth, evaluate
from denotex.kb import load_kb
from denotex.linker import LinkerConfig, disambiguate_relation_max
from denotex.neural import NeuralModel, TrainingConfig, Vocabulary, accuracy, encode_pair, train
from denotex.pipeline import identify_rules, link_dataset, prediction_records, training_triples
from denotex.rules import train_ngram_priors
from oracles import exhaustive_max, finite_difference, relative_error

RESULTS: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _synthetic(tmp_path, **kw):
    paths = generate_synthetic(SyntheticSpec(**kw), tmp_path)
    return paths, load_kb(paths["kb_triples"], paths["kb_lexicon"])


def test_criterion_1_relation_max_matches_exhaustive():
    rng = random.Random(2024)
    start = time.perf_counter()
    agree = 0
    for _ in range(200):
        kb, cands, ctx = random_instance(rng, max_candidates=4, max_matches=4)
        top = disambiguate_relation_max(kb, cands, ctx, 1)[0]
        agree += top.objective == exhaustive_max(kb.triples, [[e for e, _ in c.matches] for c in cands], ctx)
    elapsed = time.perf_counter() - start
    record(1, agree == 200 and elapsed < 10, f"{agree}/200 agree with exhaustive search in {elapsed:.2f}s (< 10s)")


def test_criterion_2_gradient_check():
    from denotex.linker import Link, LinkedUtterance, Utterance

    q = LinkedUtterance(Utterance("who wrote p", ("who", "wrote", "p")), (Link((2, 3), "p"),))
    a = LinkedUtterance(Utterance("p wrote w", ("p", "wrote", "w")), (Link((0, 1), "p"), Link((2, 3), "w")))
    vocab = Vocabulary.build([(q, a)], entity_min_count=1)
    seq = encode_pair(vocab, q, a, "w")
    start = time.perf_counter()
    worst = 0.0
    for seed in range(5):
        model = NeuralModel(vocab, seed=seed)
        rng = np.random.default_rng(seed)
        for name in model.params:  # move away from the near-zero init so every tensor matters
            model.params[name] = rng.uniform(-0.5, 0.5, model.params[name].shape)
        grads = model.backward(seq)
        for name in model.params:
            worst = max(worst, relative_error(grads[name], finite_difference(model, seq, name)))
    elapsed = time.perf_counter() - start
    ok = len(seq) == 6 and worst < 1e-4 and elapsed < 30
    record(2, ok, f"max relative error {worst:.2e} (< 1e-4) over 5 seeds x length {len(seq)} in {elapsed:.2f}s")


def test_criterion_3_overfit(tmp_path):
    paths, kb = _synthetic(tmp_path, kb_size=20, dialogue_count=60, extra_entity_rate=0.5,
                           enumeration_rate=0.2, seed=11)
    linked = [p for p in link_dataset(kb, load_dataset(paths["train"]), LinkerConfig())
              if p.gold in p.top_answer.entity_ids][:20]
    vocab = Vocabulary.build([(p.question, p.top_answer) for p in linked])
    seqs = [encode_pair(vocab, p.question, p.top_answer, p.gold) for p in linked]
    start = time.perf_counter()
    result = train(seqs, seqs, vocab, TrainingConfig(epochs=50, seed=0))
    elapsed = time.perf_counter() - start
    acc = accuracy(result.model, seqs)
    first = next((r.epoch for r in result.history if r.train_accuracy == 1.0), None)
    ok = len(seqs) == 20 and acc == 1.0 and elapsed < 60
    record(3, ok, f"train accuracy {acc:.3f} on {len(seqs)} pairs (first perfect epoch {first}) in {elapsed:.2f}s")


def test_criterion_4_metric_arithmetic():
    recs = []
    for i in range(132):
        gold = f"g{i}"
        if i < 82:
            nbest, chosen = [[gold]], gold if i < 63 else f"x{i}"
        elif i < 83:
            nbest, chosen = [[f"x{i}"], [gold]], f"x{i}"
        else:
            nbest, chosen = [[f"x{i}"]], None
        recs.append(PredictionRecord(str(i), gold, nbest, chosen))
    rep = EvalReport.from_text(evaluate(recs).to_text())
    got = (round(rep.linking_accuracy[5], 4), round(rep.identification_accuracy, 4), round(rep.extraction_accuracy, 4))
    ci = binomial_ci_halfwidth(0.5, 132)
    ok = got == (0.6288, 0.7683, 0.4773) and abs(ci - 0.0853) <= 1e-4 and round(ci, 2) == 0.09
    record(4, ok, f"linking@5/identification/extraction = {got}, CI half-width(0.5, 132) = {ci:.4f}")


def test_criterion_5_noise_free_pipeline(tmp_path):
    paths, kb = _synthetic(tmp_path, kb_size=40, dialogue_count=351, seed=5)
    cfg = LinkerConfig()
    train_pairs = link_dataset(kb, load_dataset(paths["train"]), cfg)
    priors = train_ngram_priors(training_triples(train_pairs), 3)
    test_pairs = link_dataset(kb, load_dataset(paths["test"]), cfg)
    rep = evaluate(prediction_records(test_pairs, identify_rules(kb, test_pairs, "priors", priors)))
    got = (rep.linking_accuracy[1], rep.identification_accuracy, rep.extraction_accuracy)
    record(5, got == (1.0, 1.0, 1.0), "linking@1/identification/extraction = %.3f/%.3f/%.3f" % got)


def test_criterion_6_ambiguity(tmp_path):
    paths, kb = _synthetic(tmp_path, kb_size=40, dialogue_count=351, ambiguity_rate=1.0, seed=6)
    pairs = load_dataset(paths["test"])
    cfg = LinkerConfig()
    rel = evaluate(prediction_records(link_dataset(kb, pairs, cfg, "relation_max"), [None] * len(pairs)))
    pop_linked = link_dataset(kb, pairs, cfg, "popularity")
    pop = evaluate(prediction_records(pop_linked, [None] * len(pairs)))
    needs_context = sum(p.gold not in p.top_answer.entity_ids for p in pop_linked) / len(pairs)
    gap = rel.linking_accuracy[1] - pop.linking_accuracy[1]
    ok = gap >= 0.3 and needs_context >= 0.5
    record(6, ok, f"relation-max@1 {rel.linking_accuracy[1]:.3f} - popularity@1 {pop.linking_accuracy[1]:.3f}"
                  f" = {gap:.3f} (>= 0.3); context needed on {needs_context:.2f} of fixtures")


QDD_DIR = os.environ.get("DENOTEX_QDD_DIR")


def test_criterion_7_qdd_reproduction(tmp_path):
    if not QDD_DIR:
        RESULTS.append("N/A  criterion 7: QDD data not available (set DENOTEX_QDD_DIR); criteria 1-6 stand")
        pytest.skip("QDD data not available; set DENOTEX_QDD_DIR to a converted dataset directory")
    d = Path(QDD_DIR)
    kb = ["--kb-triples", str(d / "kb_triples.tsv"), "--kb-lexicon", str(d / "kb_lexicon.tsv")]
    assert main(["link", *kb, "--dataset", str(d / "test.tsv"), "--out", str(tmp_path / "l.jsonl")]) == 0
    assert main(["train", *kb, "--dataset", str(d / "train.tsv"), "--identifier", "priors",
                 "--out", str(tmp_path / "p.tsv")]) == 0
    assert main(["evaluate", *kb, "--dataset", str(d / "test.tsv"), "--identifier", "priors",
                 "--priors", str(tmp_path / "p.tsv"), "--out", str(tmp_path / "r")]) == 0
    rep = EvalReport.from_text((tmp_path / "r.report.txt").read_text())
    targets = {"linking@1": (rep.linking_accuracy[1], 0.628),
               "identification": (rep.identification_accuracy, 0.780),
               "extraction": (rep.extraction_accuracy, 0.485)}
    ok = all(abs(got - want) <= 0.09 for got, want in targets.values())
    record(7, ok, ", ".join(f"{k} {g:.3f} vs {w:.3f}" for k, (g, w) in targets.items()) + " (tolerance 0.09)")


def test_criterion_8_determinism(tmp_path):
    spec = SyntheticSpec(kb_size=20, dialogue_count=80, extra_entity_rate=0.3, misspelling_rate=0.1, seed=8)
    a = generate_synthetic(spec, tmp_path / "a")
    b = generate_synthetic(spec, tmp_path / "b")
    data_same = all(a[k].read_bytes() == b[k].read_bytes() for k in a)
    kb = ["--kb-triples", str(a["kb_triples"]), "--kb-lexicon", str(a["kb_lexicon"])]
    for name in ("m1.json", "m2.json"):
        assert main(["train", *kb, "--dataset", str(a["train"]), "--val-dataset", str(a["val"]),
                     "--identifier", "neural", "--epochs", "5", "--seed", "3", "--out", str(tmp_path / name)]) == 0
    ckpt_same = (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()
    record(8, data_same and ckpt_same,
           f"synthetic files identical: {data_same}; neural checkpoints identical: {ckpt_same}")
