"""Linking, identification and extraction accuracy with binomial intervals."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from scipy.stats import beta

Z95 = 1.96
DEFAULT_AT = (1, 2, 5)


@dataclass
class PredictionRecord:
    """What the harness needs per pair: gold, answer n-best entity ids, choice."""

    id: str
    gold: str
    answer_nbest: list[list[str]]
    chosen: str | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "gold": self.gold, "answer_nbest": self.answer_nbest, "chosen": self.chosen}

    @classmethod
    def from_dict(cls, d: dict) -> "PredictionRecord":
        return cls(str(d["id"]), str(d["gold"]), [list(x) for x in d["answer_nbest"]], d.get("chosen"))


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(PredictionRecord.from_dict(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad prediction record ({exc})") from exc
    return out


def write_predictions(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def _linked_at(record: PredictionRecord, n: int) -> bool:
    return any(record.gold in hyp for hyp in record.answer_nbest[:n])


def linking_accuracy(records: Sequence[PredictionRecord], n: int = 1) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not records:
        raise ValueError("empty dataset")
    return sum(_linked_at(r, n) for r in records) / len(records)


def _identified(r: PredictionRecord) -> bool:
    return _linked_at(r, 1) and r.chosen == r.gold


def identification_accuracy(records: Sequence[PredictionRecord]) -> tuple[float, bool]:
    """Accuracy over pairs linked correctly at @1; the flag is set when there are none."""
    linked = sum(_linked_at(r, 1) for r in records)
    if linked == 0:
        return 0.0, True
    return sum(_identified(r) for r in records) / linked, False


def extraction_accuracy(records: Sequence[PredictionRecord]) -> float:
    if not records:
        raise ValueError("empty dataset")
    return sum(_identified(r) for r in records) / len(records)


def binomial_ci_halfwidth(p: float, n: int) -> float:
    """Normal-approximation 95% half-width."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return Z95 * math.sqrt(p * (1.0 - p) / n)


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


@dataclass
class EvalReport:
    total_pairs: int
    correctly_linked: dict[int, int]
    correctly_identified: int
    linking_accuracy: dict[int, float]
    identification_accuracy: float
    extraction_accuracy: float
    identification_undefined: bool = False
    ci_halfwidth: dict[str, float] = field(default_factory=dict)
    label: str = ""

    @property
    def decomposition_holds(self) -> bool:
        """extraction == identification x linking@1 (same counts, float rounding only)."""
        linked = self.correctly_linked.get(1, 0)
        if linked == 0:
            return self.correctly_identified == 0
        return math.isclose(
            self.extraction_accuracy,
            self.identification_accuracy * self.linking_accuracy[1],
            rel_tol=1e-12,
        )

    def to_text(self) -> str:
        lines = [f"label: {self.label}", f"total_pairs: {self.total_pairs}"]
        for n in sorted(self.correctly_linked):
            lines.append(f"correctly_linked@{n}: {self.correctly_linked[n]}")
        lines.append(f"correctly_identified: {self.correctly_identified}")
        for n in sorted(self.linking_accuracy):
            lines.append(f"linking_accuracy@{n}: {self.linking_accuracy[n]!r}")
        lines.append(f"identification_accuracy: {self.identification_accuracy!r}")
        lines.append(f"identification_undefined: {str(self.identification_undefined).lower()}")
        lines.append(f"extraction_accuracy: {self.extraction_accuracy!r}")
        for k in sorted(self.ci_halfwidth):
            lines.append(f"ci_halfwidth.{k}: {self.ci_halfwidth[k]!r}")
        lines.append(f"decomposition_holds: {str(self.decomposition_holds).lower()}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        kv = {}
        for line in text.splitlines():
            if line.strip():
                k, _, v = line.partition(": ")
                kv[k] = v
        linked, lacc, ci = {}, {}, {}
        for k, v in kv.items():
            if k.startswith("correctly_linked@"):
                linked[int(k.split("@")[1])] = int(v)
            elif k.startswith("linking_accuracy@"):
                lacc[int(k.split("@")[1])] = float(v)
            elif k.startswith("ci_halfwidth."):
                ci[k.split(".", 1)[1]] = float(v)
        return cls(
            total_pairs=int(kv["total_pairs"]),
            correctly_linked=linked,
            correctly_identified=int(kv["correctly_identified"]),
            linking_accuracy=lacc,
            identification_accuracy=float(kv["identification_accuracy"]),
            extraction_accuracy=float(kv["extraction_accuracy"]),
            identification_undefined=kv.get("identification_undefined") == "true",
            ci_halfwidth=ci,
            label=kv.get("label", ""),
        )

    def table_rows(self) -> list[tuple[str, str, str]]:
        """Rows shaped like the published tables: (row, column, value)."""
        rows = [(f"{self.label} @{n}", "linking_accuracy", f"{a:.3f}") for n, a in sorted(self.linking_accuracy.items())]
        rows.append((self.label, "accuracy_di", f"{self.identification_accuracy:.3f}"))
        rows.append((self.label, "accuracy_de", f"{self.extraction_accuracy:.3f}"))
        return rows

    def to_tsv(self) -> str:
        out = ["row\tcolumn\tvalue"]
        out += ["\t".join(r) for r in self.table_rows()]
        return "\n".join(out) + "\n"


def evaluate(
    records: Sequence[PredictionRecord], at: Iterable[int] = DEFAULT_AT, label: str = ""
) -> EvalReport:
    if not records:
        raise ValueError("empty dataset")
    at = sorted(set(at) | {1})
    total = len(records)
    linked = {n: sum(_linked_at(r, n) for r in records) for n in at}
    identified = sum(_identified(r) for r in records)
    ident, undefined = identification_accuracy(records)
    lacc = {n: linked[n] / total for n in at}
    extr = identified / total
    ci = {f"linking@{n}": binomial_ci_halfwidth(lacc[n], total) for n in at}
    ci["identification"] = binomial_ci_halfwidth(ident, linked[1]) if linked[1] else 0.0
    ci["extraction"] = binomial_ci_halfwidth(extr, total)
    return EvalReport(total, linked, identified, lacc, ident, extr, undefined, ci, label)
