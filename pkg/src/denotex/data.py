"""Dialogue-pair datasets: loading, conversion and a synthetic generator."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .kb import Entity, KnowledgeBase, Triple, normalized_distance, write_kb


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DialoguePair:
    id: str
    question: str
    answer_hint: str
    gold_denotation: str

    def __post_init__(self) -> None:
        for name in ("id", "question", "answer_hint", "gold_denotation"):
            if not getattr(self, name).strip():
                raise DatasetFormatError(f"empty {name} in pair {self.id!r}")


def load_dataset(path: str | Path) -> list[DialoguePair]:
    """Read ``id<TAB>question<TAB>answer_hint<TAB>gold_entity_id`` lines."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DatasetFormatError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            try:
                pairs.append(DialoguePair(*(p.strip() for p in parts)))
            except DatasetFormatError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from exc
    return pairs


def save_dataset(pairs: Iterable[DialoguePair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fields = (p.id, p.question, p.answer_hint, p.gold_denotation)
            if any("\t" in f or "\n" in f for f in fields):
                raise DatasetFormatError(f"pair {p.id!r} contains a tab or newline")
            fh.write("\t".join(fields) + "\n")


def convert_jsonl(
    src: str | Path,
    dst: str | Path,
    id_field: str = "id",
    question_field: str = "question",
    answer_field: str = "answer_hint",
    gold_field: str = "denotation",
) -> int:
    """Convert JSON-lines dialogue records into the dataset TSV format.

    The field names default to a plain flat layout; point them at whatever an
    exported QDD dump uses. Records lacking any field are skipped. Returns the
    number of pairs written.
    """
    pairs = []
    with open(src, encoding="utf-8") as fh:
        for n, line in enumerate(fh):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                values = [str(rec[f]).replace("\t", " ").replace("\n", " ") for f in
                          (id_field, question_field, answer_field, gold_field)]
                pairs.append(DialoguePair(*values))
            except (KeyError, DatasetFormatError):
                continue
    save_dataset(pairs, dst)
    return len(pairs)


# ---------------------------------------------------------------------------
# synthetic data

@dataclass(frozen=True)
class SyntheticSpec:
    """``kb_size`` is the number of person entities; places, works and
    occupations scale with it."""

    kb_size: int = 60
    dialogue_count: int = 120
    misspelling_rate: float = 0.0
    extra_entity_rate: float = 0.0
    enumeration_rate: float = 0.0
    ambiguity_rate: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kb_size < 5:
            raise ValueError("kb_size must be >= 5")
        if self.dialogue_count < 1:
            raise ValueError("dialogue_count must be >= 1")
        for name in ("misspelling_rate", "extra_entity_rate", "enumeration_rate", "ambiguity_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


SPLIT_RATIO = (176, 43, 132)

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "kl", "st", "tr", "gr"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ea"]
_CODAS = ["", "", "n", "r", "s", "l", "th", "x"]

_TEMPLATE_WORDS = {
    "where", "was", "born", "in", "what", "is", "the", "nationality", "of", "a", "citizen",
    "does", "do", "for", "living", "works", "as", "work", "did", "write", "wrote", "novel",
    "called", "from", "i", "think", "it", "or", "male", "female", "s",
}

QUESTION_TYPES = ("birthplace", "nationality", "profession", "work")


class _Namer:
    """Pseudo-words kept far apart in edit distance from each other and from
    template vocabulary, so linking ambiguity only comes from deliberate decoys."""

    def __init__(self, rng: random.Random, min_distance: float = 0.5):
        self.rng = rng
        self.min_distance = min_distance
        self.used: list[str] = sorted(_TEMPLATE_WORDS)

    def word(self, syllables: tuple[int, int] = (2, 3)) -> str:
        for _ in range(10_000):
            n = self.rng.randint(*syllables)
            w = "".join(
                self.rng.choice(_ONSETS) + self.rng.choice(_VOWELS) + self.rng.choice(_CODAS)
                for _ in range(n)
            )
            if len(w) < 5:
                continue
            if all(normalized_distance(w, u) >= self.min_distance for u in self.used):
                self.used.append(w)
                return w.capitalize()
        raise RuntimeError("name space exhausted; lower kb_size")


def _misspell(rng: random.Random, name: str) -> str:
    """One character substitution inside the longest word."""
    words = name.split(" ")
    k = max(range(len(words)), key=lambda i: len(words[i]))
    w = words[k]
    pos = rng.randrange(len(w))
    choices = [c for c in "abcdefghijklmnopqrstuvwxyz" if c != w[pos].lower()]
    repl = rng.choice(choices)
    if w[pos].isupper():
        repl = repl.upper()
    words[k] = w[:pos] + repl + w[pos + 1 :]
    return " ".join(words)


def generate_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> dict[str, Path]:
    """Write a synthetic KB plus train/val/test dialogue files into ``out_dir``.

    Every gold denotation is related in the KB to the question's person, so a
    relation-aware linker can always recover it. Decoys share a gold entity's
    name, are more popular, and are unrelated to the question's person.
    """
    rng = random.Random(spec.seed)
    namer = _Namer(rng)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    entities: dict[str, Entity] = {}
    triples: list[Triple] = []

    def add(eid: str, name: str, aliases: tuple[str, ...] = ()) -> str:
        entities[eid] = Entity(eid, name, aliases)
        return eid

    n_person = spec.kb_size
    genders = [add("m.male", "male"), add("m.female", "female")]
    occupations = [add(f"m.occ{i:03d}", namer.word()) for i in range(max(2, n_person // 12))]
    countries = [add(f"m.cty{i:03d}", namer.word()) for i in range(max(2, n_person // 10))]
    cities = []
    for i in range(max(3, n_person // 4)):
        cid = add(f"m.city{i:03d}", namer.word())
        cities.append(cid)
        triples.append(Triple(cid, "located_in", countries[i % len(countries)]))
    works = []
    for i in range(max(3, n_person // 3)):
        core = namer.word()
        works.append(add(f"m.work{i:03d}", f"The {core}", (core,)))

    persons = []
    facts: dict[str, dict[str, str]] = {}
    country_of = {t.subject: t.object for t in triples if t.relation == "located_in"}
    unwritten = list(works)
    rng.shuffle(unwritten)
    for i in range(n_person):
        pid = add(f"m.p{i:04d}", f"{namer.word((1, 2))} {namer.word((2, 2))}")
        persons.append(pid)
        city = rng.choice(cities)
        f = {
            "birthplace": city,
            "nationality": country_of[city],
            "profession": rng.choice(occupations),
            "gender": rng.choice(genders),
        }
        if unwritten:
            f["work"] = unwritten.pop()
        facts[pid] = f
        triples.append(Triple(pid, "born_in", city))
        triples.append(Triple(pid, "nationality", f["nationality"]))
        triples.append(Triple(pid, "profession", f["profession"]))
        triples.append(Triple(pid, "gender", f["gender"]))
        if "work" in f:
            triples.append(Triple(pid, "wrote", f["work"]))

    def name(eid: str) -> str:
        return entities[eid].canonical_name

    pop: dict[str, int] = {}
    for t in triples:
        pop[t.subject] = pop.get(t.subject, 0) + 1
        pop[t.object] = pop.get(t.object, 0) + 1

    decoys: dict[str, str] = {}

    def make_decoy(gold: str, person: str, relation: str) -> None:
        if gold in decoys:
            return
        did = add(f"{gold}.alt", name(gold), entities[gold].aliases)
        decoys[gold] = did
        others = [p for p in persons if p != person and gold not in facts[p].values()]
        rng.shuffle(others)
        # strictly more popular than the gold entity
        for p in others[: pop.get(gold, 0) + 1 + rng.randint(0, 2)]:
            triples.append(Triple(p, relation, did))

    relation_of = {"birthplace": "born_in", "nationality": "nationality", "profession": "profession", "work": "wrote"}
    pairs: list[DialoguePair] = []
    for k in range(spec.dialogue_count):
        pid = rng.choice(persons)
        f = facts[pid]
        p_name = name(pid)
        did = f"d{k:05d}"
        if rng.random() < spec.enumeration_rate:
            gold = f["gender"]
            question = f"Is {p_name} male or female?"
            g_text = _misspell(rng, name(gold)) if rng.random() < spec.misspelling_rate else name(gold)
            if rng.random() < 0.5:
                answer = f"I think it is {g_text}."
            else:
                answer = f"{p_name} is {g_text}."
            pairs.append(DialoguePair(did, question, answer, gold))
            continue

        qtype = rng.choice([q for q in QUESTION_TYPES if q in f])
        gold = f[qtype]
        if rng.random() < spec.ambiguity_rate:
            make_decoy(gold, pid, relation_of[qtype])
        g_text = name(gold)
        if rng.random() < spec.misspelling_rate:
            g_text = _misspell(rng, g_text)
        extra = rng.random() < spec.extra_entity_rate
        occ = name(f["profession"])
        if qtype == "birthplace":
            question = f"Where was {p_name} born?"
            answer = f"{p_name} was a {occ} born in {g_text}." if extra else f"{p_name} was born in {g_text}."
        elif qtype == "nationality":
            question = f"What is {p_name}'s nationality?"
            answer = (f"{p_name} was a {occ} and a citizen of {g_text}." if extra
                      else f"{p_name} is a citizen of {g_text}.")
        elif qtype == "profession":
            question = f"What does {p_name} do for a living?"
            answer = (f"{p_name} from {name(f['nationality'])} works as a {g_text}." if extra
                      else f"{p_name} works as a {g_text}.")
        else:
            question = f"What work did {p_name} write?"
            answer = (f"{p_name} was a {occ} and wrote a novel called {g_text}." if extra
                      else f"{p_name} wrote a novel called {g_text}.")
        pairs.append(DialoguePair(did, question, answer, gold))

    kb = KnowledgeBase(entities, triples)
    paths = {
        "kb_triples": out / "kb_triples.tsv",
        "kb_lexicon": out / "kb_lexicon.tsv",
        "train": out / "train.tsv",
        "val": out / "val.tsv",
        "test": out / "test.tsv",
    }
    write_kb(kb, paths["kb_triples"], paths["kb_lexicon"])
    total = sum(SPLIT_RATIO)
    n_train = round(len(pairs) * SPLIT_RATIO[0] / total)
    n_val = round(len(pairs) * SPLIT_RATIO[1] / total)
    save_dataset(pairs[:n_train], paths["train"])
    save_dataset(pairs[n_train : n_train + n_val], paths["val"])
    save_dataset(pairs[n_train + n_val :], paths["test"])
    return paths
