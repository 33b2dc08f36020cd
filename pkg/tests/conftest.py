from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from denotex.kb import Entity, KnowledgeBase, Triple, load_kb  # noqa: E402
from denotex.linker import EntityCandidate  # noqa: E402


def write_kb_files(tmp_path: Path, lexicon: list[str], triples: list[str]) -> tuple[Path, Path]:
    lex = tmp_path / "lexicon.tsv"
    tri = tmp_path / "triples.tsv"
    lex.write_text("".join(l + "\n" for l in lexicon), encoding="utf-8")
    tri.write_text("".join(t + "\n" for t in triples), encoding="utf-8")
    return tri, lex


APPRENTICE_LEXICON = [
    "m.libby\tScooter Libby\tLewis Libby",
    "m.novel_app\tThe Apprentice\t",
    "m.tv_app\tThe Apprentice\t",
    "m.album_app\tThe Apprentice\t",
    "m.trump\tDonald Trump\t",
    "m.nbc\tNBC\t",
    "m.novel\tnovel\t",
    "m.band\tThe Rockers\t",
]
APPRENTICE_TRIPLES = [
    "m.libby\twrote\tm.novel_app",
    "m.novel_app\tinstance_of\tm.novel",
    "m.trump\tpresented\tm.tv_app",
    "m.tv_app\tbroadcast_on\tm.nbc",
    "m.trump\tappeared_on\tm.tv_app",
    "m.band\treleased\tm.album_app",
    "m.album_app\tproduced_by\tm.band",
]

CALCRAFT_LEXICON = [
    "m.calcraft\tSharon Calcraft\t",
    "m.australian\tAustralian\t",
    "m.composer\tComposer\t",
    "m.1955\t1955\t",
    "m.sydney\tSydney\t",
    "m.nsw\tNew South Wales\tNSW",
    "m.australia\tAustralia\t",
    "m.melbourne\tMelbourne\t",
    "m.perth\tPerth\t",
    "m.other_sydney\tSydney\t",
]
CALCRAFT_TRIPLES = [
    "m.calcraft\tnationality\tm.australia",
    "m.calcraft\tprofession\tm.composer",
    "m.calcraft\tborn_in\tm.sydney",
    "m.calcraft\tborn_year\tm.1955",
    "m.sydney\tlocated_in\tm.nsw",
    "m.nsw\tlocated_in\tm.australia",
    "m.sydney\tlocated_in\tm.australia",
    "m.melbourne\tlocated_in\tm.australia",
    "m.perth\tlocated_in\tm.australia",
    "m.australian\tdemonym_of\tm.australia",
]


@pytest.fixture
def apprentice_kb(tmp_path) -> KnowledgeBase:
    return load_kb(*write_kb_files(tmp_path, APPRENTICE_LEXICON, APPRENTICE_TRIPLES))


@pytest.fixture
def calcraft_kb(tmp_path) -> KnowledgeBase:
    return load_kb(*write_kb_files(tmp_path, CALCRAFT_LEXICON, CALCRAFT_TRIPLES))


def random_instance(rng: random.Random, max_candidates: int = 4, max_matches: int = 4, n_entities: int = 12):
    """A random KB with candidates drawing matches from its entities."""
    ids = [f"e{i}" for i in range(n_entities)]
    entities = {e: Entity(e, e) for e in ids}
    triples = []
    for _ in range(rng.randint(0, 3 * n_entities)):
        a, b = rng.choice(ids), rng.choice(ids)
        triples.append(Triple(a, f"r{rng.randint(0, 2)}", b))
    kb = KnowledgeBase(entities, triples)
    cands = []
    for k in range(rng.randint(1, max_candidates)):
        chosen = rng.sample(ids, rng.randint(1, max_matches))
        matches = tuple(sorted(((e, rng.choice([0.0, 0.1, 0.2])) for e in chosen),
                               key=lambda m: (m[1], -kb.popularity(m[0]), m[0])))
        cands.append(EntityCandidate((k, k + 1), f"c{k}", matches))
    context = rng.sample(ids, rng.randint(0, 3))
    return kb, cands, context


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
