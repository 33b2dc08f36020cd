import json
from collections import Counter

import pytest

from denotex.data import (
    DatasetFormatError,
    DialoguePair,
    SyntheticSpec,
    convert_jsonl,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from denotex.kb import load_kb
from denotex.linker import LinkerConfig
from denotex.pipeline import link_dataset


def test_load_three_lines(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_text(
        "1\tWhere was X born?\tX was born in Y.\tm.y\n"
        "2\tWhat did Z write?\tZ wrote W.\tm.w\n"
        "3\tIs A male or female?\tfemale\tm.female\n",
        encoding="utf-8",
    )
    pairs = load_dataset(path)
    assert [p.id for p in pairs] == ["1", "2", "3"]
    assert pairs[2].gold_denotation == "m.female"


def test_wrong_field_count_names_line(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_text("1\tq\ta\tg\n2\tq\ta\n", encoding="utf-8")
    with pytest.raises(DatasetFormatError, match="d.tsv:2"):
        load_dataset(path)


def test_empty_field_rejected():
    with pytest.raises(DatasetFormatError):
        DialoguePair("1", "", "a", "g")


def test_save_load_roundtrip(tmp_path):
    pairs = [DialoguePair("a", "q one", "a one", "g1"), DialoguePair("b", "q two", "a two", "g2")]
    save_dataset(pairs, tmp_path / "d.tsv")
    assert load_dataset(tmp_path / "d.tsv") == pairs


def test_convert_jsonl(tmp_path):
    src = tmp_path / "in.jsonl"
    rows = [
        {"id": 1, "question": "q1", "answer_hint": "a1", "denotation": "g1"},
        {"id": 2, "question": "q2"},  # incomplete, skipped
        {"id": 3, "question": "q3", "answer_hint": "a3", "denotation": "g3"},
    ]
    src.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    n = convert_jsonl(src, tmp_path / "out.tsv")
    assert n == 2
    assert [p.id for p in load_dataset(tmp_path / "out.tsv")] == ["1", "3"]


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(kb_size=4)
    with pytest.raises(ValueError):
        SyntheticSpec(misspelling_rate=1.5)


def test_generate_is_byte_identical(tmp_path):
    spec = SyntheticSpec(kb_size=20, dialogue_count=40, extra_entity_rate=0.3, misspelling_rate=0.2, seed=4)
    a = generate_synthetic(spec, tmp_path / "a")
    b = generate_synthetic(spec, tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes(), key
    c = generate_synthetic(SyntheticSpec(kb_size=20, dialogue_count=40, seed=5), tmp_path / "c")
    assert c["train"].read_bytes() != a["train"].read_bytes()


def test_generate_splits_and_gold(tmp_path):
    paths = generate_synthetic(SyntheticSpec(kb_size=20, dialogue_count=351, seed=1), tmp_path)
    kb = load_kb(paths["kb_triples"], paths["kb_lexicon"])
    sizes = [len(load_dataset(paths[s])) for s in ("train", "val", "test")]
    assert sizes == [176, 43, 132]
    for split in ("train", "val", "test"):
        assert all(p.gold_denotation in kb.entities for p in load_dataset(paths[split]))


def test_ambiguity_creates_same_name_entities(tmp_path):
    paths = generate_synthetic(SyntheticSpec(kb_size=20, dialogue_count=60, ambiguity_rate=1.0), tmp_path)
    kb = load_kb(paths["kb_triples"], paths["kb_lexicon"])
    names = Counter(e.canonical_name for e in kb.entities.values())
    for p in load_dataset(paths["test"]):
        assert names[kb.entities[p.gold_denotation].canonical_name] >= 2


def test_full_misspelling_defeats_exact_linker(tmp_path):
    spec = SyntheticSpec(kb_size=20, dialogue_count=40, misspelling_rate=1.0, ambiguity_rate=0.0)
    paths = generate_synthetic(spec, tmp_path)
    kb = load_kb(paths["kb_triples"], paths["kb_lexicon"])
    pairs = load_dataset(paths["test"])
    exact = link_dataset(kb, pairs, LinkerConfig(max_normalized_distance=0.0))
    assert all(p.gold not in p.top_answer.entity_ids for p in exact)
    fuzzy = link_dataset(kb, pairs, LinkerConfig())
    assert sum(p.gold in p.top_answer.entity_ids for p in fuzzy) > len(pairs) // 2
